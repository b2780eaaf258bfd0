#pragma once

// Contraction certificates and experiments: pointwise Finsler-Lyapunov decay
// scans, convergence of trajectory pairs, the differentially passive
// interconnection of two overdamped pendulums, and transversal contraction
// along a limit cycle.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "diffgeo/geometry.hpp"
#include "diffgeo/integrate.hpp"
#include "diffgeo/model.hpp"
#include "diffgeo/orbits.hpp"

namespace diffgeo {

struct DecayGrid {
  double theta_lo{-kPi / 2.0};
  double theta_hi{kPi / 2.0};
  std::size_t n_theta{720};
  double v_lo{0.0};
  double v_hi{0.0};
  std::size_t n_v{1};
  /// Unit tangent directions per point; 0 picks 64 for two-dimensional
  /// systems and +-1 for systems on the circle.
  std::size_t n_dirs{0};
  double t{0.0};
};

struct DecaySample {
  double theta{0.0};
  double v{0.0};
  Tangent d{};
  double vdot{0.0};
};

struct DecayReport {
  DecayGrid grid{};
  std::size_t samples{0};
  double min_vdot{0.0};
  double max_vdot{0.0};
  DecaySample argmin{};
  DecaySample argmax{};
  std::size_t violation_count{0};
  /// The first few violations in grid order.
  std::vector<DecaySample> violations;
  /// Every violation has dV/dt = 0 exactly (within 1e-14): decay is only
  /// non-strict.
  bool non_strict{false};

  bool certified() const { return violation_count == 0; }
};

/// Evaluates analytic_Vdot on unit tangents over the grid (projected first
/// when a projection is given). A sample violates decay when dV/dt >= 0
/// while V > 0; tangents the metric does not see (V = 0) or that the
/// projection annihilates are skipped.
DecayReport scan_decay(const FinslerLyapunov &V, const PlanarSystem &sys, const DecayGrid &grid,
                       std::optional<Projection> projection = std::nullopt, unsigned jobs = 1);

/// dV/dt + dtheta^2 for the weighted angle on the overdamped pendulum.
double residual_w(double theta, double dtheta, const InputLaw &input, double t = 0.0);
double residual_w(double theta, double dtheta, double u);

/// Scalar metric condition 2 J(theta) P(theta) + P'(theta) f(theta) for a
/// system on the circle; negative where the metric P certifies contraction.
double scalar_metric_condition(const PlanarSystem &sys, const std::function<double(double)> &P,
                               const std::function<double(double)> &dP, double theta, double t);

struct PairOptions {
  double horizon{40.0};
  double output_dt{0.05};
  /// Fraction of the horizon treated as transient.
  double transient_fraction{0.1};
};

struct PairConvergence {
  std::vector<double> times;
  std::vector<double> distance;
  /// Least-squares slope of ln d over the tail half of the horizon (NaN when
  /// the distance vanishes there).
  double rate{0.0};
  double terminal{0.0};
  bool eventually_decreasing{false};
};

/// Distance between two points under the metric: the geodesic distance on
/// the circle for the angular metrics, sqrt(D^T P D) with the wrapped
/// increment D for constant quadratics.
double metric_distance(const FinslerLyapunov &V, const CylinderPoint &a, const CylinderPoint &b);

/// Throws LeftRegion when either trajectory leaves |theta| <= pi - eta under
/// the weighted-angle metric.
PairConvergence verify_pair_contraction(const PlanarSystem &sys, const CylinderPoint &x0,
                                        const CylinderPoint &z0, const FinslerLyapunov &V,
                                        const IntegratorConfig &cfg, const PairOptions &opt = {});

/// Two overdamped pendulums with half-angle gains in feedback,
/// r1 = -y2 + q1, r2 = y1 + q2, as a planar system in (theta1, theta2).
PlanarSystem make_passive_interconnection(const InputLaw &q1, const InputLaw &q2);

struct InterconnectResult {
  std::vector<double> times;
  std::vector<double> theta1;
  std::vector<double> theta2;
};

/// Throws DomainError if either angle reaches +-pi.
InterconnectResult interconnect_passive(const InputLaw &q1, const InputLaw &q2, double theta1_0,
                                        double theta2_0, const IntegratorConfig &cfg,
                                        double horizon, double output_dt = 0.05);

struct StorageCheck {
  /// max over samples of dV1/dt - dr1 dy1, with dV1/dt by central
  /// differences of the sampled storage.
  double max_excess{0.0};
  std::size_t samples{0};
};

/// Differential passivity of pendulum 1 inside the interconnection, along
/// the prolonged coupled flow from (theta1_0, theta2_0) with tangent d0.
StorageCheck check_storage_inequality(const InputLaw &q1, const InputLaw &q2, double theta1_0,
                                      double theta2_0, Tangent d0, const IntegratorConfig &cfg,
                                      double horizon, double output_dt = 1e-3);

struct HorizontalContraction {
  /// |beta(T)| / |beta(0)| for the transversal component beta.
  double factor{0.0};
  std::vector<double> times;
  std::vector<double> log_factor;
};

/// Propagates a unit tangent normal to the flow around one period,
/// re-projecting onto the normal of f at each of `samples` equally spaced
/// times. `sign` picks the initial normal orientation.
HorizontalContraction horizontal_contraction_near_cycle(const LimitCycle &cycle,
                                                        const PlanarSystem &sys,
                                                        const IntegratorConfig &cfg,
                                                        std::size_t samples = 1000, int sign = 1);

}  // namespace diffgeo
