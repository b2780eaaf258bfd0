#pragma once

// Differential positivity: invariance of a cone field under the linearized
// flow, the Perron-Frobenius direction field it induces, the omega-limit
// dichotomy, the limit-cycle certificate for the pendulum with |u| > 1, and
// the homoclinic obstruction diagnostic.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diffgeo/geometry.hpp"
#include "diffgeo/integrate.hpp"
#include "diffgeo/model.hpp"
#include "diffgeo/orbits.hpp"

namespace diffgeo {

struct StateGrid {
  double theta_lo{-kPi};
  double theta_hi{kPi};
  /// theta_hi is excluded when the interval spans the whole circle.
  std::size_t n_theta{72};
  double v_lo{-3.0};
  double v_hi{3.0};
  std::size_t n_v{13};

  std::vector<CylinderPoint> points() const;
};

enum class InvarianceVerdict { StrictlyInvariant, MarginallyInvariant, Violated };

std::string_view to_string(InvarianceVerdict v);

/// Finite-time interior margin required for strict invariance.
inline constexpr double kStrictMargin = 1e-6;

struct ConeWitness {
  CylinderPoint x{};
  /// Boundary ray at x.
  Tangent d{};
  double t{0.0};
  CylinderPoint target{};
  /// d pushed through the linearized flow to `target`.
  Tangent pushed{};
  double margin{0.0};
};

struct PointMargins {
  CylinderPoint x{};
  /// d/dt a_i . d along the prolonged flow on boundary ray i, the ray
  /// scaled so that the other functional equals 1 on it.
  double infinitesimal[2]{0.0, 0.0};
  /// Cone margin of each ray pushed for time tau.
  double finite[2]{0.0, 0.0};
};

struct InvarianceReport {
  StateGrid grid{};
  double tau{1.0};
  std::vector<PointMargins> points;
  double min_infinitesimal{0.0};
  PointMargins argmin_infinitesimal{};
  std::size_t argmin_ray{0};
  double min_finite{0.0};
  InvarianceVerdict verdict{InvarianceVerdict::Violated};
  std::optional<ConeWitness> witness;
};

/// Two-level check: the infinitesimal inward derivative of each active
/// functional on each boundary ray, and boundary rays pushed through the
/// linearized flow for time tau. Strict needs an infinitesimal margin above
/// the cone tolerance and a finite-time margin of at least kStrictMargin;
/// Violated needs a concrete witness found along the pushes.
InvarianceReport verify_cone_invariance(const PlanarSystem &sys, const ConeFieldSpec &cone,
                                        const StateGrid &grid, double tau,
                                        const IntegratorConfig &cfg, unsigned jobs = 1);

struct PFOptions {
  double push_time{1.0};
  int max_pushes{200};
  /// Projective step below which the iteration has converged.
  double tol{1e-8};
  /// Backward trajectories beyond this speed count as escaped.
  double v_escape{50.0};
};

struct PFPoint {
  /// Point the direction is attached to: the grid point itself, or the end
  /// of the forward trajectory when the backward seeding escaped.
  CylinderPoint x{};
  CylinderPoint grid_point{};
  Vec2 w{};
  double residual{0.0};
  int pushes{0};
  bool converged{false};
  bool forward_fallback{false};
};

struct PFField {
  StateGrid grid{};
  std::vector<PFPoint> points;

  bool converged() const;
};

/// Projective iteration at one point. Seeds are the cone-interior direction
/// at psi_{-n tau}(x), carried forward to x by the linearized flow; the
/// direction is renormalized every push and the angle between successive
/// iterates is the residual.
PFPoint pf_vector_at(const PlanarSystem &sys, const ConeFieldSpec &cone, const CylinderPoint &x,
                     const IntegratorConfig &cfg, const PFOptions &opt = {});

/// Points that miss the tolerance after max_pushes keep converged = false.
PFField pf_vector_field(const PlanarSystem &sys, const ConeFieldSpec &cone, const StateGrid &grid,
                        const IntegratorConfig &cfg, const PFOptions &opt = {}, unsigned jobs = 1);

struct AlignmentPoint {
  CylinderPoint x{};
  /// |sin| of the angle between f(x) and w(x); NaN where f vanishes.
  double sine{0.0};
  bool defined{false};
};

std::vector<AlignmentPoint> vector_field_alignment(const PlanarSystem &sys, const PFField &pf);

struct AlignmentSeries {
  std::vector<double> times;
  /// |sin| of the angle between f and a cone-interior tangent carried along
  /// the trajectory, which converges projectively to w; NaN where f = 0.
  std::vector<double> sine;
};

AlignmentSeries alignment_along(const PlanarSystem &sys, const ConeFieldSpec &cone,
                                const CylinderPoint &x0, const IntegratorConfig &cfg,
                                double horizon, double sample_dt);

struct Corollary2Options {
  /// Inflation of the trapping band |v| <= rho (|u| + 1) / k.
  double rho{1.1};
  double tau{1.0};
  std::size_t n_theta{72};
  std::size_t n_v{13};
  double transient{60.0};
  double sample_horizon{30.0};
};

struct Corollary2Result {
  bool certified{false};
  std::string reason;
  double v_bound{0.0};
  std::optional<InvarianceReport> invariance;
  /// Smallest cone margin of +-f over the sampled attractor.
  double min_field_margin{0.0};
  std::optional<LimitCycle> cycle;
};

/// Checks, in order: no fixed points (|u| > 1); the band
/// |v| <= rho (|u| + 1) / k is forward invariant; the cone field is strictly
/// invariant on it; the field points into the cone interior after a
/// transient. When all hold, the certified cycle is located by shooting.
Corollary2Result certify_corollary2(const PlanarSystem &sys, const PendulumParams &params,
                                    const ConeFieldSpec &cone, const IntegratorConfig &cfg,
                                    const Corollary2Options &opt = {}, unsigned jobs = 1);

enum class DichotomyCase { FixedPoint, Cycle, FixedPointsAndArcs, CaseII };

std::string_view to_string(DichotomyCase c);

struct DichotomyOptions {
  double horizon{300.0};
  /// Tail window examined for recurrence and alignment.
  double window{60.0};
  double speed_tol{1e-6};
  double recurrence_tol{1e-6};
  double alignment_tol{1e-3};
  /// Growth of the carried tangent (per unit time, log scale) reported as
  /// unbounded in the case (ii) diagnostics.
  double growth_threshold{1.0};
};

struct DichotomyResult {
  DichotomyCase kind{DichotomyCase::CaseII};
  CylinderPoint limit_point{};
  double period{0.0};
  /// Final |sin| between f and the carried tangent (cycles only).
  double misalignment{0.0};
  /// Mean log growth rate of the carried tangent over the window.
  double tangent_growth{0.0};
  double min_speed{0.0};
  bool growth_unbounded{false};
};

/// Throws Inconclusive when neither convergence nor recurrence is seen.
DichotomyResult dichotomy_classify(const PlanarSystem &sys, const ConeFieldSpec &cone,
                                   const CylinderPoint &x0, const IntegratorConfig &cfg,
                                   const DichotomyOptions &opt = {});

struct ObstructionReport {
  HomoclinicGap gap{};
  bool homoclinic{false};
  /// Angle between the unstable eigenvector and the PF direction at the
  /// saddle.
  double pf_tangency_angle{0.0};
  InvarianceVerdict verdict{InvarianceVerdict::Violated};
  /// A homoclinic loop tangent to the PF field under strict invariance is
  /// the excluded configuration.
  bool obstruction{false};
};

ObstructionReport homoclinic_obstruction_check(const PendulumParams &params,
                                               const IntegratorConfig &cfg,
                                               double gap_tol = 1e-4, unsigned jobs = 1);

}  // namespace diffgeo
