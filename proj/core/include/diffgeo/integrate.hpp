#pragma once

// Deterministic explicit Runge-Kutta integration of a PlanarSystem, jointly
// with its linearization (a tangent vector or the full fundamental matrix),
// plus Poincare-section event location.
//
// Each step integrates the state together with the step propagator S of the
// variational equation (started from the identity); tangents and fundamental
// matrices are carried as d <- S d and Phi <- S Phi. Step-size control sees
// only the state and S, so the carried quantities stay exactly linear in
// their initial data.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "diffgeo/model.hpp"
#include "diffgeo/trajectory.hpp"

namespace diffgeo {

struct FixedStepRK4 {
  double h{0.01};
};

/// Dormand-Prince 5(4).
struct AdaptiveRK45 {
  double rel_tol{1e-9};
  double abs_tol{1e-9};
  double h_min{1e-12};
  double h_max{0.1};
};

struct IntegratorConfig {
  std::variant<FixedStepRK4, AdaptiveRK45> method{AdaptiveRK45{}};
  /// Longest span a single integration or event search may cover.
  double max_time{1e4};
  /// When positive, trajectories are sampled exactly on t0 + n * output_dt
  /// (steps are clamped to land on the grid); otherwise every accepted step
  /// is recorded.
  double output_dt{0.0};

  void validate() const;
  /// Same method with tolerances scaled by `factor` (or h for RK4).
  IntegratorConfig tightened(double factor) const;
};

struct TimeSpan {
  double t0{0.0};
  double t1{0.0};
};

enum class Channel { State, Prolonged, Fundamental };

/// Full integrator state at one instant. Only the channels requested from
/// Flow are meaningful.
struct FlowState {
  double t{0.0};
  CylinderPoint x{};
  std::int64_t winding{0};
  Vec2 rate{};
  Tangent tangent{};
  Mat2 phi{Mat2::identity()};
  /// ln det phi, accumulated from the per-step propagators so that it stays
  /// accurate when phi itself is nearly singular.
  double log_det{0.0};
  /// Adaptive step size to try next; carried across calls so that chained
  /// integrations do not restart step control.
  double step_hint{0.0};

  double lifted_theta() const { return x.theta() + kTwoPi * static_cast<double>(winding); }
};

/// Scalar event along the flow: lifted theta or v reaching `level`.
/// With `periodic`, an angle event fires at every level + 2 pi m.
struct Event {
  enum class Kind { Angle, Velocity };
  Kind kind{Kind::Angle};
  double level{0.0};
  /// +1: only increasing crossings, -1: only decreasing, 0: both.
  int direction{0};
  bool periodic{false};
};

struct EventHit {
  std::size_t index{0};
  FlowState state{};
};

/// Streaming integrator over one system and channel selection.
class Flow {
 public:
  /// Called after every accepted step; return false to stop.
  using Observer = std::function<bool(const FlowState &prev, const FlowState &next)>;

  Flow(const PlanarSystem &sys, IntegratorConfig cfg, Channel channel);
  /// The system is held by reference and must outlive the flow.
  Flow(PlanarSystem &&, IntegratorConfig, Channel) = delete;

  /// Initial state at time t: winding 0, identity fundamental.
  FlowState start(const CylinderPoint &x0, double t, Tangent d0 = {}) const;

  /// Integrates to t_end (forward or backward in time) and returns the
  /// state there. Stops early, returning the last accepted state, when the
  /// observer returns false.
  FlowState advance(const FlowState &from, double t_end, const Observer &observer = {}) const;

  /// Integrates until the first of `events` fires or t_limit is reached.
  /// The returned hit is refined to a residual of at most 1e-10.
  std::optional<EventHit> advance_until(const FlowState &from, double t_limit,
                                        std::span<const Event> events,
                                        FlowState *end_state = nullptr,
                                        const Observer &observer = {}) const;

  /// One exact Runge-Kutta step from `from` to time t (used for event
  /// polishing and for sampling between accepted steps).
  FlowState step_to(const FlowState &from, double t) const;

  const PlanarSystem &system() const { return *sys_; }
  const IntegratorConfig &config() const { return cfg_; }
  Channel channel() const { return channel_; }

 private:
  const PlanarSystem *sys_;
  IntegratorConfig cfg_;
  Channel channel_;
};

Trajectory integrate_state(const PlanarSystem &sys, const CylinderPoint &x0,
                           const IntegratorConfig &cfg, TimeSpan span);

/// Jointly integrates x' = f(x, t) and d' = J(x, t) d.
Trajectory integrate_prolonged(const PlanarSystem &sys, const CylinderPoint &x0, Tangent d0,
                               const IntegratorConfig &cfg, TimeSpan span);

/// Jointly integrates x' = f(x, t) and Phi' = J(x, t) Phi with Phi(t0) = I.
Trajectory integrate_fundamental(const PlanarSystem &sys, const CylinderPoint &x0,
                                 const IntegratorConfig &cfg, TimeSpan span);

struct SectionSpec {
  enum class Kind { AngleCrossing, VelocityCrossing };
  Kind kind{Kind::AngleCrossing};
  double level{0.0};
  int direction{0};
};

struct Crossing {
  double t{0.0};
  CylinderPoint x{};
  std::int64_t winding{0};
  /// Value of the section function after refinement.
  double residual{0.0};
};

struct SectionEvent {
  SectionSpec section{};
  std::vector<Crossing> crossings;
};

/// Crossings of a stored trajectory, refined by bisection on the cubic
/// Hermite dense output.
SectionEvent detect_crossings(const Trajectory &traj, const SectionSpec &section);

/// Crossings found during a live integration over `span`, refined with
/// exact sub-steps. Stops after max_crossings when that is nonzero.
SectionEvent detect_crossings(const PlanarSystem &sys, const CylinderPoint &x0,
                              const IntegratorConfig &cfg, TimeSpan span,
                              const SectionSpec &section, std::size_t max_crossings = 0);

}  // namespace diffgeo
