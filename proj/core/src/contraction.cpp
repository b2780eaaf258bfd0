#include "diffgeo/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "diffgeo/error.hpp"
#include "diffgeo/parallel.hpp"

namespace diffgeo {

namespace {

double grid_value(double lo, double hi, std::size_t n, std::size_t i) {
  return n <= 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

constexpr std::size_t kKeptViolations = 16;
constexpr double kZeroRate = 1e-14;

struct RowScan {
  std::size_t samples{0};
  std::optional<DecaySample> min, max;
  std::size_t violations{0};
  std::size_t zero_violations{0};
  std::vector<DecaySample> kept;
};

}  // namespace

DecayReport scan_decay(const FinslerLyapunov &V, const PlanarSystem &sys, const DecayGrid &grid,
                       std::optional<Projection> projection, unsigned jobs) {
  if (grid.n_theta == 0 || grid.n_v == 0) throw Error(ErrorKind::InvalidArgument, "empty decay grid");
  std::vector<Vec2> dirs;
  if (sys.dimension() == 1 && grid.n_dirs == 0) {
    dirs = {{1.0, 0.0}, {-1.0, 0.0}};
  } else {
    const std::size_t n = grid.n_dirs == 0 ? 64 : grid.n_dirs;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
      dirs.push_back({std::cos(a), std::sin(a)});
    }
  }

  std::vector<RowScan> rows(grid.n_theta);
  parallel_for(grid.n_theta, jobs, [&](std::size_t i) {
    RowScan &row = rows[i];
    const double theta = grid_value(grid.theta_lo, grid.theta_hi, grid.n_theta, i);
    for (std::size_t j = 0; j < grid.n_v; ++j) {
      const CylinderPoint p(theta, grid_value(grid.v_lo, grid.v_hi, grid.n_v, j));
      const Mat2 pi = projection ? projection->at(sys, p, grid.t) : Mat2::identity();
      for (const Vec2 &e : dirs) {
        const Vec2 pe = pi * e;
        if (norm(pe) < 1e-9) continue;
        const Tangent d = Tangent::from(pe);
        if (eval_V(V, p, d) <= kZeroRate) continue;
        const DecaySample s{p.theta(), p.v(), d, analytic_Vdot(V, sys, p, d, grid.t)};
        ++row.samples;
        if (!row.min || s.vdot < row.min->vdot) row.min = s;
        if (!row.max || s.vdot > row.max->vdot) row.max = s;
        if (s.vdot >= 0.0) {
          ++row.violations;
          if (s.vdot <= kZeroRate) ++row.zero_violations;
          if (row.kept.size() < kKeptViolations) row.kept.push_back(s);
        }
      }
    }
  });

  DecayReport out;
  out.grid = grid;
  out.min_vdot = std::numeric_limits<double>::infinity();
  out.max_vdot = -std::numeric_limits<double>::infinity();
  std::size_t zero = 0;
  for (const RowScan &row : rows) {
    out.samples += row.samples;
    if (row.min && row.min->vdot < out.min_vdot) {
      out.min_vdot = row.min->vdot;
      out.argmin = *row.min;
    }
    if (row.max && row.max->vdot > out.max_vdot) {
      out.max_vdot = row.max->vdot;
      out.argmax = *row.max;
    }
    out.violation_count += row.violations;
    zero += row.zero_violations;
    for (const auto &s : row.kept) {
      if (out.violations.size() < kKeptViolations) out.violations.push_back(s);
    }
  }
  if (out.samples == 0) throw Error(ErrorKind::InvalidArgument, "decay grid has no measurable tangents");
  out.non_strict = out.violation_count > 0 && zero == out.violation_count;
  return out;
}

double residual_w(double theta, double dtheta, const InputLaw &input, double t) {
  return weighted_angle_residual(theta, dtheta, input, t);
}

double residual_w(double theta, double dtheta, double u) {
  return weighted_angle_residual(theta, dtheta, u);
}

double scalar_metric_condition(const PlanarSystem &sys, const std::function<double(double)> &P,
                               const std::function<double(double)> &dP, double theta, double t) {
  if (sys.dimension() != 1) throw Error(ErrorKind::InvalidArgument, "scalar condition needs a system on the circle");
  const Vec2 x{theta, 0.0};
  const double J = sys.jacobian(x, t).a;
  const double f = sys.field(x, t).x;
  return 2.0 * J * P(theta) + dP(theta) * f;
}

double metric_distance(const FinslerLyapunov &V, const CylinderPoint &a, const CylinderPoint &b) {
  if (const auto *q = std::get_if<FinslerLyapunov::ConstantQuadratic>(&V.kind())) {
    const Vec2 d{angle_diff(b.theta(), a.theta()), b.v() - a.v()};
    return std::sqrt(dot(d, q->P * d));
  }
  return geodesic_distance(V, a.theta(), b.theta());
}

PairConvergence verify_pair_contraction(const PlanarSystem &sys, const CylinderPoint &x0,
                                        const CylinderPoint &z0, const FinslerLyapunov &V,
                                        const IntegratorConfig &cfg, const PairOptions &opt) {
  if (!(opt.horizon > 0.0) || !(opt.output_dt > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "pair horizon and output_dt must be > 0");
  }
  IntegratorConfig grid_cfg = cfg;
  grid_cfg.output_dt = opt.output_dt;
  const Trajectory a = integrate_state(sys, x0, grid_cfg, {0.0, opt.horizon});
  const Trajectory b = integrate_state(sys, z0, grid_cfg, {0.0, opt.horizon});
  if (a.size() != b.size()) throw Error(ErrorKind::MismatchedGrids, "pair trajectories differ in length");

  const double edge = V.domain_half_width();
  const bool guarded = std::holds_alternative<FinslerLyapunov::WeightedAngle>(V.kind());
  PairConvergence out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    // Lifted angles: a rotation can jump over pi between samples.
    if (guarded && (std::abs(a.lifted_theta(i)) > edge || std::abs(b.lifted_theta(i)) > edge)) {
      throw Error(ErrorKind::LeftRegion, "trajectory left the certified domain at t = " +
                                             std::to_string(a.times[i]));
    }
    out.times.push_back(a.times[i]);
    out.distance.push_back(metric_distance(V, a.states[i], b.states[i]));
  }
  out.terminal = out.distance.back();

  // Least squares on ln d over the tail half.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  bool vanished = false;
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    if (out.times[i] < 0.5 * opt.horizon) continue;
    if (!(out.distance[i] > 0.0)) {
      vanished = true;
      continue;
    }
    const double x = out.times[i];
    const double y = std::log(out.distance[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double den = static_cast<double>(n) * sxx - sx * sx;
  out.rate = (!vanished && n >= 2 && den > 0.0) ? (static_cast<double>(n) * sxy - sx * sy) / den
                                                : std::numeric_limits<double>::quiet_NaN();

  out.eventually_decreasing = true;
  for (std::size_t i = 1; i < out.times.size(); ++i) {
    if (out.times[i - 1] < opt.transient_fraction * opt.horizon) continue;
    if (out.distance[i] > out.distance[i - 1] + 1e-12) {
      out.eventually_decreasing = false;
      break;
    }
  }
  return out;
}

PlanarSystem make_passive_interconnection(const InputLaw &q1, const InputLaw &q2) {
  auto field = [q1, q2](const Vec2 &x, double t) {
    const double y1 = passivating_output(x.x);
    const double y2 = passivating_output(x.y);
    return Vec2{-std::sin(x.x) + std::cos(x.x / 2.0) * (-y2 + q1(x.x, 0.0, t)),
                -std::sin(x.y) + std::cos(x.y / 2.0) * (y1 + q2(x.y, 0.0, t))};
  };
  auto jacobian = [q1, q2](const Vec2 &x, double t) {
    const double y1 = passivating_output(x.x);
    const double y2 = passivating_output(x.y);
    const InputValue a = q1.evaluate(x.x, 0.0, t);
    const InputValue b = q2.evaluate(x.y, 0.0, t);
    const double c1 = std::cos(x.x / 2.0);
    const double c2 = std::cos(x.y / 2.0);
    const double r1 = -y2 + a.u;
    const double r2 = y1 + b.u;
    return Mat2{-std::cos(x.x) - 0.5 * std::sin(x.x / 2.0) * r1 + c1 * a.du_dtheta, -c1 / c2,
                c2 / c1, -std::cos(x.y) - 0.5 * std::sin(x.y / 2.0) * r2 + c2 * b.du_dtheta};
  };
  return PlanarSystem("passive-interconnection", StateSpace::Plane, field, jacobian);
}

InterconnectResult interconnect_passive(const InputLaw &q1, const InputLaw &q2, double theta1_0,
                                        double theta2_0, const IntegratorConfig &cfg,
                                        double horizon, double output_dt) {
  if (!(std::abs(theta1_0) < kPi) || !(std::abs(theta2_0) < kPi)) {
    throw Error(ErrorKind::DomainError, "initial angles must lie in (-pi, pi)");
  }
  const PlanarSystem sys = make_passive_interconnection(q1, q2);
  IntegratorConfig grid_cfg = cfg;
  grid_cfg.output_dt = output_dt;
  const Trajectory traj = integrate_state(sys, CylinderPoint(theta1_0, theta2_0), grid_cfg, {0.0, horizon});
  InterconnectResult out;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out.times.push_back(traj.times[i]);
    out.theta1.push_back(traj.lifted_theta(i));
    out.theta2.push_back(traj.states[i].v());
  }
  return out;
}

StorageCheck check_storage_inequality(const InputLaw &q1, const InputLaw &q2, double theta1_0,
                                      double theta2_0, Tangent d0, const IntegratorConfig &cfg,
                                      double horizon, double output_dt) {
  const PlanarSystem sys = make_passive_interconnection(q1, q2);
  IntegratorConfig grid_cfg = cfg;
  grid_cfg.output_dt = output_dt;
  const Trajectory traj =
      integrate_prolonged(sys, CylinderPoint(theta1_0, theta2_0), d0, grid_cfg, {0.0, horizon});
  const auto &tan = *traj.tangents;
  auto storage = [&](std::size_t i) {
    const double th = traj.lifted_theta(i);
    return tan[i].dtheta * tan[i].dtheta / (1.0 + std::cos(th));
  };
  StorageCheck out;
  out.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    const double h = traj.times[i + 1] - traj.times[i - 1];
    const double vdot = (storage(i + 1) - storage(i - 1)) / h;
    const double th1 = traj.lifted_theta(i);
    const double th2 = traj.states[i].v();
    // Pendulum 1 sees r1 = -y2 + q1, so dr1 = -sec(theta2 / 2) dtheta2.
    const double dr1 = -tan[i].dv / std::cos(th2 / 2.0);
    const double dy1 = tan[i].dtheta / std::cos(th1 / 2.0);
    out.max_excess = std::max(out.max_excess, vdot - dr1 * dy1);
    ++out.samples;
  }
  return out;
}

HorizontalContraction horizontal_contraction_near_cycle(const LimitCycle &cycle,
                                                        const PlanarSystem &sys,
                                                        const IntegratorConfig &cfg,
                                                        std::size_t samples, int sign) {
  if (!(cycle.period > 0.0) || samples == 0) {
    throw Error(ErrorKind::InvalidArgument, "need a cycle with positive period and samples > 0");
  }
  const Flow flow(sys, cfg, Channel::Prolonged);
  auto normal = [&](const FlowState &s) {
    const Vec2 f = s.rate;
    if (norm(f) < 1e-12) throw Error(ErrorKind::EquilibriumPoint, "cycle passes an equilibrium");
    return normalized(Vec2{-f.y, f.x});
  };
  FlowState s = flow.start(cycle.anchor, 0.0);
  s.tangent = Tangent::from((sign >= 0 ? 1.0 : -1.0) * normal(s));
  HorizontalContraction out;
  double log_factor = 0.0;
  out.times.push_back(0.0);
  out.log_factor.push_back(0.0);
  for (std::size_t i = 1; i <= samples; ++i) {
    const double t = cycle.period * static_cast<double>(i) / static_cast<double>(samples);
    s = flow.advance(s, t);
    // Keep only the component normal to the flow.
    const Vec2 projected = transversal_projection(sys, s.x, s.t) * s.tangent.vec();
    const double beta = norm(projected);
    log_factor += std::log(beta);
    s.tangent = Tangent::from((1.0 / beta) * projected);
    out.times.push_back(t);
    out.log_factor.push_back(log_factor);
  }
  out.factor = std::exp(log_factor);
  return out;
}

}  // namespace diffgeo
