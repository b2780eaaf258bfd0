#pragma once

// Invariant sets of the pendulum: fixed points, rotating limit cycles with
// their Floquet multipliers, Lyapunov exponents, saddle manifolds and the
// homoclinic gap that locates u_c(k).

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "diffgeo/integrate.hpp"
#include "diffgeo/model.hpp"
#include "diffgeo/trajectory.hpp"

namespace diffgeo {

enum class FixedPointClass { StableNode, StableFocus, Saddle, UnstableNode, UnstableFocus, Center, Degenerate };

std::string_view to_string(FixedPointClass c);

/// Trace/determinant classification of a planar linearization.
FixedPointClass classify_jacobian(const Mat2 &A);

struct FixedPoint {
  CylinderPoint point{};
  std::complex<double> lambda1{};
  std::complex<double> lambda2{};
  FixedPointClass classification{FixedPointClass::Degenerate};

  bool stable() const {
    return classification == FixedPointClass::StableNode ||
           classification == FixedPointClass::StableFocus;
  }
};

/// Equilibria of the pendulum under a constant torque. Throws
/// InvalidArgument for non-constant inputs.
std::vector<FixedPoint> find_fixed_points(const PendulumParams &params);

struct CycleOptions {
  /// Angle of the Poincare section.
  double section{0.0};
  /// Velocity at the section to start from; the sign picks the rotation
  /// direction. Defaults to u / k for constant inputs.
  std::optional<double> guess;
  /// Return-map iterations used to settle onto the attractor before Newton.
  int max_settle{400};
  int max_newton{50};
  /// Shooting residual |P(v) - v| accepted as converged.
  double tol{1e-10};
  /// Time budget for one revolution.
  double max_period{1e4};
};

struct LimitCycle {
  CylinderPoint anchor{};
  double period{0.0};
  /// +1 or -1 for rotations.
  std::int64_t winding{0};
  /// Floquet multipliers, rho1 nearest to 1.
  std::complex<double> rho1{};
  std::complex<double> rho2{};
  Mat2 monodromy{};
  double log_det_monodromy{0.0};
  /// One period from the anchor, with the fundamental matrix.
  Trajectory samples;
  /// Wrapped distance between the flowed anchor and the anchor.
  double closure{0.0};
  double residual{0.0};
  int newton_steps{0};
};

/// Rotating limit cycle by scalar shooting on the section theta = section.
/// Throws NoCycle when the orbit falls towards an equilibrium or a
/// revolution exceeds the time budget, NoConvergence when Newton stalls.
LimitCycle find_limit_cycle(const PlanarSystem &sys, const PendulumParams &params,
                            const IntegratorConfig &cfg, const CycleOptions &opt = {});

/// Eigenvalues of Phi(T) around the cycle, the one nearest 1 first.
std::pair<std::complex<double>, std::complex<double>> floquet_multipliers(
    const LimitCycle &cycle, const PlanarSystem &sys, const IntegratorConfig &cfg);

/// Orders a multiplier pair: nearest to 1 first, ties by larger modulus.
std::pair<std::complex<double>, std::complex<double>> sort_multipliers(
    std::pair<std::complex<double>, std::complex<double>> rho);

struct LyapunovOptions {
  double horizon{1000.0};
  double renorm_interval{1.0};
  Tangent d0{1.0, 0.0};
};

struct LyapunovEstimate {
  double exponent{0.0};
  /// max |lambda(t) - exponent| over the second half of the series.
  double band{0.0};
  std::vector<double> times;
  std::vector<double> series;
};

LyapunovEstimate max_lyapunov_exponent(const PlanarSystem &sys, const CylinderPoint &x0,
                                       const IntegratorConfig &cfg,
                                       const LyapunovOptions &opt = {});

enum class BranchKind { Stable, Unstable };

struct ManifoldBranch {
  BranchKind kind{BranchKind::Unstable};
  int sign{1};
  std::vector<CylinderPoint> points;
  std::vector<std::int64_t> winding;
  std::vector<double> arclength;
};

struct ManifoldOptions {
  double epsilon{1e-6};
  double arclength_budget{20.0};
  double v_max{10.0};
  double t_max{200.0};
};

/// Unstable branches forward, stable branches backward in time, in the order
/// (unstable +, unstable -, stable +, stable -). Throws NotASaddle.
std::array<ManifoldBranch, 4> saddle_manifolds(const FixedPoint &fp, const PlanarSystem &sys,
                                               const IntegratorConfig &cfg,
                                               const ManifoldOptions &opt = {});

struct GapOptions {
  double epsilon{1e-6};
  /// Time allowed per branch; 0 picks a budget from the saddle eigenvalues.
  double t_budget{0.0};
  double v_escape{1e6};
};

struct HomoclinicGap {
  double gap{0.0};
  /// Velocity at the section, or minus the angle still missing when the
  /// branch turned around before reaching it.
  double unstable_value{0.0};
  double stable_value{0.0};
  bool unstable_reached{false};
  bool stable_reached{false};
  double saddle_theta{0.0};
};

/// Signed mismatch between the forward unstable branch (leaving the saddle
/// with v > 0) and the backward stable branch (arriving with v > 0), both
/// measured half a revolution from the saddle. Positive when the unstable
/// branch passes above the stable one, i.e. when the orbit leaving the
/// saddle keeps rotating. Throws InvalidArgument unless |u| < 1 and the input
/// is constant; BranchEscaped when a branch runs away or out of time.
HomoclinicGap homoclinic_gap(const PendulumParams &params, const IntegratorConfig &cfg,
                             const GapOptions &opt = {});

}  // namespace diffgeo
