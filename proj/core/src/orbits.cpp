#include "diffgeo/orbits.hpp"

#include <algorithm>
#include <cmath>

#include "diffgeo/error.hpp"

namespace diffgeo {

std::string_view to_string(FixedPointClass c) {
  switch (c) {
    case FixedPointClass::StableNode: return "StableNode";
    case FixedPointClass::StableFocus: return "StableFocus";
    case FixedPointClass::Saddle: return "Saddle";
    case FixedPointClass::UnstableNode: return "UnstableNode";
    case FixedPointClass::UnstableFocus: return "UnstableFocus";
    case FixedPointClass::Center: return "Center";
    case FixedPointClass::Degenerate: return "Degenerate";
  }
  return "Unknown";
}

FixedPointClass classify_jacobian(const Mat2 &A) {
  constexpr double tol = 1e-12;
  const double tr = A.trace();
  const double det = A.det();
  if (det < -tol) return FixedPointClass::Saddle;
  if (std::abs(det) <= tol) return FixedPointClass::Degenerate;
  if (std::abs(tr) <= tol) return FixedPointClass::Center;
  const bool real = tr * tr - 4.0 * det >= 0.0;
  if (tr < 0.0) return real ? FixedPointClass::StableNode : FixedPointClass::StableFocus;
  return real ? FixedPointClass::UnstableNode : FixedPointClass::UnstableFocus;
}

namespace {

double constant_input(const PendulumParams &params) {
  const auto u = params.input.constant_value();
  if (!u) throw Error(ErrorKind::InvalidArgument, "analysis requires a constant torque");
  return *u;
}

FixedPoint make_fixed_point(const CylinderPoint &p, const PendulumParams &params) {
  const Mat2 A = pendulum_jacobian(p, params);
  const auto [l1, l2] = eigenvalues(A);
  return {p, l1, l2, classify_jacobian(A)};
}

}  // namespace

std::vector<FixedPoint> find_fixed_points(const PendulumParams &params) {
  params.validate();
  const double u = constant_input(params);
  const double au = std::abs(u);
  if (std::abs(au - 1.0) <= 1e-12) {
    FixedPoint fp = make_fixed_point(CylinderPoint(std::copysign(kPi / 2.0, u), 0.0), params);
    fp.classification = FixedPointClass::Degenerate;
    return {fp};
  }
  if (au > 1.0) return {};
  const double s = std::asin(u);
  return {make_fixed_point(CylinderPoint(s, 0.0), params),
          make_fixed_point(CylinderPoint(kPi - s, 0.0), params)};
}

std::pair<std::complex<double>, std::complex<double>> sort_multipliers(
    std::pair<std::complex<double>, std::complex<double>> rho) {
  const double d1 = std::abs(rho.first - 1.0);
  const double d2 = std::abs(rho.second - 1.0);
  const bool tie = std::abs(d1 - d2) <= 1e-15;
  if ((!tie && d2 < d1) || (tie && std::abs(rho.second) > std::abs(rho.first))) {
    std::swap(rho.first, rho.second);
  }
  return rho;
}

namespace {

// One revolution from (section, v) to the next crossing of the lifted
// section, or nothing if the orbit turns back before completing it.
std::optional<FlowState> revolve(const Flow &flow, double section, double v, double t_limit) {
  const int dir = v >= 0.0 ? 1 : -1;
  const FlowState s = flow.start(CylinderPoint(section, v), 0.0);
  const std::array<Event, 2> events{
      Event{Event::Kind::Angle, s.lifted_theta() + dir * kTwoPi, dir, false},
      Event{Event::Kind::Velocity, 0.0, -dir, false},
  };
  const auto hit = flow.advance_until(s, t_limit, events);
  if (!hit || hit->index != 0) return std::nullopt;
  return hit->state;
}

}  // namespace

LimitCycle find_limit_cycle(const PlanarSystem &sys, const PendulumParams &params,
                            const IntegratorConfig &cfg, const CycleOptions &opt) {
  params.validate();
  if (!params.input.is_autonomous()) {
    throw Error(ErrorKind::InvalidArgument, "limit-cycle shooting needs an autonomous input");
  }
  double v = 1.0;
  if (opt.guess) {
    v = *opt.guess;
  } else if (const auto u = params.input.constant_value(); u && params.k > 0.0 && *u != 0.0) {
    v = *u / params.k;
  }
  if (v == 0.0 || !std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "guess must be nonzero");
  const double t_limit = std::min(opt.max_period, cfg.max_time);

  const Flow state_flow(sys, cfg, Channel::State);
  for (int i = 0; i < opt.max_settle; ++i) {
    const auto r = revolve(state_flow, opt.section, v, t_limit);
    if (!r) throw Error(ErrorKind::NoCycle, "orbit does not complete a revolution");
    const double next = r->x.v();
    const bool settled = std::abs(next - v) < 1e-6;
    v = next;
    if (settled) break;
  }

  // Damped Newton on g(v) = P(v) - v with
  // P'(v) = Phi22 - f_v Phi12 / f_theta at the return point.
  const Flow flow(sys, cfg, Channel::Fundamental);
  auto r = revolve(flow, opt.section, v, t_limit);
  if (!r) throw Error(ErrorKind::NoCycle, "orbit does not complete a revolution");
  double g = r->x.v() - v;
  int steps = 0;
  while (std::abs(g) > opt.tol) {
    if (steps >= opt.max_newton) {
      throw Error(ErrorKind::NoConvergence,
                  "shooting residual " + std::to_string(std::abs(g)) + " after Newton budget");
    }
    const Vec2 f = sys.field(r->x, r->t);
    const double dP = r->phi.d - f.y * r->phi.b / f.x;
    const double dv = -g / (dP - 1.0);
    bool accepted = false;
    double lambda = 1.0;
    for (int h = 0; h < 12 && !accepted; ++h, lambda *= 0.5) {
      const double vt = v + lambda * dv;
      const auto rt = revolve(flow, opt.section, vt, t_limit);
      if (!rt) continue;
      const double gt = rt->x.v() - vt;
      if (std::abs(gt) < std::abs(g)) {
        v = vt;
        r = rt;
        g = gt;
        accepted = true;
      }
    }
    ++steps;
    if (!accepted) {
      throw Error(ErrorKind::NoConvergence,
                  "shooting stalled at residual " + std::to_string(std::abs(g)));
    }
  }

  LimitCycle cycle;
  cycle.anchor = CylinderPoint(opt.section, v);
  cycle.period = r->t;
  cycle.residual = std::abs(g);
  cycle.newton_steps = steps;
  cycle.samples = integrate_fundamental(sys, cycle.anchor, cfg, {0.0, cycle.period});
  cycle.monodromy = cycle.samples.fundamental->back();
  cycle.log_det_monodromy = cycle.samples.log_det->back();
  cycle.winding = cycle.samples.winding.back();
  const CylinderPoint &end = cycle.samples.back();
  cycle.closure = std::hypot(angle_diff(end.theta(), cycle.anchor.theta()), end.v() - v);
  const auto rho =
      sort_multipliers(eigenvalues(cycle.monodromy, std::exp(cycle.log_det_monodromy)));
  cycle.rho1 = rho.first;
  cycle.rho2 = rho.second;
  return cycle;
}

std::pair<std::complex<double>, std::complex<double>> floquet_multipliers(
    const LimitCycle &cycle, const PlanarSystem &sys, const IntegratorConfig &cfg) {
  if (!(cycle.period > 0.0)) throw Error(ErrorKind::InvalidArgument, "cycle period must be > 0");
  const Trajectory traj = integrate_fundamental(sys, cycle.anchor, cfg, {0.0, cycle.period});
  return sort_multipliers(
      eigenvalues(traj.fundamental->back(), std::exp(traj.log_det->back())));
}

LyapunovEstimate max_lyapunov_exponent(const PlanarSystem &sys, const CylinderPoint &x0,
                                       const IntegratorConfig &cfg, const LyapunovOptions &opt) {
  if (!(opt.renorm_interval > 0.0) || !(opt.horizon >= opt.renorm_interval)) {
    throw Error(ErrorKind::InvalidArgument, "need 0 < renorm_interval <= horizon");
  }
  const double n0 = norm(opt.d0.vec());
  if (n0 == 0.0) throw Error(ErrorKind::ZeroTangent, "initial tangent is zero");
  const Flow flow(sys, cfg, Channel::Prolonged);
  FlowState s = flow.start(x0, 0.0, Tangent::from((1.0 / n0) * opt.d0.vec()));
  LyapunovEstimate out;
  double sum = 0.0;
  const auto n = static_cast<std::int64_t>(std::ceil(opt.horizon / opt.renorm_interval - 1e-9));
  for (std::int64_t i = 1; i <= n; ++i) {
    const double t = std::min(opt.horizon, static_cast<double>(i) * opt.renorm_interval);
    s = flow.advance(s, t);
    const double growth = norm(s.tangent.vec());
    if (!(growth > 0.0) || !std::isfinite(growth)) {
      throw Error(ErrorKind::NonFiniteState, "tangent growth left the floating-point range");
    }
    sum += std::log(growth);
    s.tangent = Tangent::from((1.0 / growth) * s.tangent.vec());
    out.times.push_back(t);
    out.series.push_back(sum / t);
  }
  out.exponent = out.series.back();
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    if (out.times[i] >= 0.5 * opt.horizon) {
      out.band = std::max(out.band, std::abs(out.series[i] - out.exponent));
    }
  }
  return out;
}

std::array<ManifoldBranch, 4> saddle_manifolds(const FixedPoint &fp, const PlanarSystem &sys,
                                               const IntegratorConfig &cfg,
                                               const ManifoldOptions &opt) {
  if (fp.classification != FixedPointClass::Saddle) {
    throw Error(ErrorKind::NotASaddle, "manifolds need a saddle");
  }
  const Mat2 A = sys.jacobian(fp.point, 0.0);
  const auto [lp, lm] = eigenvalues(A);
  const Vec2 eu = eigenvector(A, lp.real());
  const Vec2 es = eigenvector(A, lm.real());
  const Flow flow(sys, cfg, Channel::State);

  auto trace = [&](BranchKind kind, int sign) {
    ManifoldBranch b;
    b.kind = kind;
    b.sign = sign;
    const Vec2 e = kind == BranchKind::Unstable ? eu : es;
    const Vec2 x = fp.point.coords() + (sign * opt.epsilon) * e;
    const FlowState s = flow.start(CylinderPoint(x.x, x.y), 0.0);
    b.points.push_back(s.x);
    b.winding.push_back(s.winding);
    b.arclength.push_back(0.0);
    const double t_end = kind == BranchKind::Unstable ? opt.t_max : -opt.t_max;
    flow.advance(s, t_end, [&](const FlowState &prev, const FlowState &next) {
      const double ds = std::hypot(next.lifted_theta() - prev.lifted_theta(), next.x.v() - prev.x.v());
      b.points.push_back(next.x);
      b.winding.push_back(next.winding);
      b.arclength.push_back(b.arclength.back() + ds);
      return b.arclength.back() < opt.arclength_budget && std::abs(next.x.v()) <= opt.v_max;
    });
    return b;
  };
  return {trace(BranchKind::Unstable, 1), trace(BranchKind::Unstable, -1),
          trace(BranchKind::Stable, 1), trace(BranchKind::Stable, -1)};
}

namespace {

struct BranchEnd {
  double value{0.0};
  bool reached{false};
};

// Follows one branch from `start` until the lifted angle reaches `level`, the
// velocity drops to zero, or the branch stalls at an equilibrium short of
// the section. dir = +1 integrates forward, -1 backward.
BranchEnd follow_branch(const PlanarSystem &sys, const IntegratorConfig &cfg, const Vec2 &start,
                        double level_offset, int dir, double budget, double v_escape) {
  constexpr double kStallSpeed = 1e-6;
  constexpr double kStallDistance = 0.5;
  const Flow flow(sys, cfg, Channel::State);
  const FlowState s = flow.start(CylinderPoint(start.x, start.y), 0.0);
  // Lifted coordinates start at the wrapped angle; shift the section with it.
  const double level = s.lifted_theta() + level_offset;
  const std::array<Event, 2> events{
      Event{Event::Kind::Angle, level, dir, false},
      Event{Event::Kind::Velocity, 0.0, -1, false},
  };
  bool escaped = false;
  bool stalled = false;
  FlowState end;
  const auto hit = flow.advance_until(s, dir * budget, events, &end,
                                      [&](const FlowState &, const FlowState &next) {
                                        escaped = std::abs(next.x.v()) > v_escape;
                                        stalled = norm(next.rate) < kStallSpeed &&
                                                  std::abs(next.lifted_theta() - s.lifted_theta()) >
                                                      kStallDistance;
                                        return !escaped && !stalled;
                                      });
  if (hit && hit->index == 0) return {hit->state.x.v(), true};
  const FlowState &last = hit ? hit->state : end;
  if (escaped || (!hit && !stalled)) {
    throw Error(ErrorKind::BranchEscaped, "manifold branch did not reach the section");
  }
  return {-dir * (level - last.lifted_theta()), false};
}

}  // namespace

HomoclinicGap homoclinic_gap(const PendulumParams &params, const IntegratorConfig &cfg,
                             const GapOptions &opt) {
  params.validate();
  const double u = constant_input(params);
  if (!(std::abs(u) < 1.0)) throw Error(ErrorKind::InvalidArgument, "homoclinic gap needs |u| < 1");
  // (theta, v, u) -> (-theta, -v, -u) is a symmetry; work with u >= 0.
  const double ua = std::abs(u);
  const PlanarSystem sys = make_pendulum({params.k, InputLaw::constant(ua)});
  const double ts = kPi - std::asin(ua);
  const double c = std::cos(ts);
  const double root = std::sqrt(params.k * params.k - 4.0 * c);
  const double lp = 0.5 * (-params.k + root);
  const double lm = 0.5 * (-params.k - root);
  const Vec2 eu = normalized({1.0, lp});
  const Vec2 es = normalized({1.0, lm});
  const double budget = std::min(
      cfg.max_time,
      opt.t_budget > 0.0 ? opt.t_budget : 100.0 + 4.0 * std::log(1.0 / opt.epsilon) / lp);

  const Vec2 saddle{ts, 0.0};
  const Vec2 su = saddle + opt.epsilon * eu;
  const Vec2 ss = saddle - opt.epsilon * es;
  const BranchEnd bu = follow_branch(sys, cfg, su, kPi - opt.epsilon * eu.x, 1, budget, opt.v_escape);
  const BranchEnd bs = follow_branch(sys, cfg, ss, -kPi + opt.epsilon * es.x, -1, budget, opt.v_escape);

  HomoclinicGap out;
  out.unstable_value = bu.value;
  out.stable_value = bs.value;
  out.unstable_reached = bu.reached;
  out.stable_reached = bs.reached;
  out.gap = bu.value - bs.value;
  out.saddle_theta = wrap_angle(kPi - std::asin(u));
  return out;
}

}  // namespace diffgeo
