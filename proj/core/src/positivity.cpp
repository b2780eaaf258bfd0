#include "diffgeo/positivity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "diffgeo/error.hpp"
#include "diffgeo/parallel.hpp"

namespace diffgeo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double grid_value(double lo, double hi, std::size_t n, std::size_t i, bool periodic) {
  if (n <= 1) return lo;
  const double den = static_cast<double>(periodic ? n : n - 1);
  return lo + (hi - lo) * static_cast<double>(i) / den;
}

// Adjugate: the inverse up to the positive factor det (flow maps always have
// det > 0), which is all a projective iteration needs.
Mat2 adjugate(const Mat2 &m) { return {m.d, -m.b, -m.c, m.a}; }

Mat2 scaled_to_unit(const Mat2 &m) {
  const double n = norm(m);
  return n > 0.0 ? (1.0 / n) * m : m;
}

double inward_rate(const PlanarSystem &sys, const ConeFieldSpec &cone, std::size_t i,
                   const CylinderPoint &p, const Vec2 &ray) {
  const Vec2 f = sys.field(p, 0.0);
  const Vec2 a = cone.functional(i, p);
  const Vec2 da = cone.functional_theta_derivative(i, p);
  return f.x * dot(da, ray) + dot(a, sys.jacobian(p, 0.0) * ray);
}

struct PushResult {
  double final_margin{0.0};
  std::optional<ConeWitness> worst;
};

// Pushes `ray` from p for time tau and tracks the most negative cone margin
// along the way.
PushResult push_ray(const Flow &flow, const ConeFieldSpec &cone, const CylinderPoint &p,
                    const Vec2 &ray, double tau) {
  PushResult out;
  double worst = -kConeTolerance;
  const auto observe = [&](const FlowState &, const FlowState &next) {
    const Vec2 d = next.tangent.vec();
    if (norm(d) == 0.0) return true;
    const double m = cone.margin(next.x, d);
    if (m < worst) {
      worst = m;
      out.worst = ConeWitness{p, Tangent::from(ray), next.t, next.x, next.tangent, m};
    }
    return true;
  };
  const FlowState end = flow.advance(flow.start(p, 0.0, Tangent::from(ray)), tau, observe);
  out.final_margin = cone.margin(end.x, end.tangent.vec());
  return out;
}

}  // namespace

std::vector<CylinderPoint> StateGrid::points() const {
  if (n_theta == 0 || n_v == 0) throw Error(ErrorKind::InvalidArgument, "empty state grid");
  const bool periodic = std::abs(theta_hi - theta_lo - kTwoPi) < 1e-12;
  std::vector<CylinderPoint> out;
  out.reserve(n_theta * n_v);
  for (std::size_t i = 0; i < n_theta; ++i) {
    const double th = grid_value(theta_lo, theta_hi, n_theta, i, periodic);
    for (std::size_t j = 0; j < n_v; ++j) out.emplace_back(th, grid_value(v_lo, v_hi, n_v, j, false));
  }
  return out;
}

std::string_view to_string(InvarianceVerdict v) {
  switch (v) {
    case InvarianceVerdict::StrictlyInvariant: return "StrictlyInvariant";
    case InvarianceVerdict::MarginallyInvariant: return "MarginallyInvariant";
    case InvarianceVerdict::Violated: return "Violated";
  }
  return "?";
}

InvarianceReport verify_cone_invariance(const PlanarSystem &sys, const ConeFieldSpec &cone,
                                        const StateGrid &grid, double tau,
                                        const IntegratorConfig &cfg, unsigned jobs) {
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "push time must be positive");
  if (sys.dimension() != 2) throw Error(ErrorKind::InvalidArgument, "cone fields need a planar system");
  cfg.validate();
  const std::vector<CylinderPoint> pts = grid.points();
  for (const CylinderPoint &p : pts) cone.validate_at(p);

  const Flow flow(sys, cfg, Channel::Prolonged);
  std::vector<PointMargins> margins(pts.size());
  std::vector<std::optional<ConeWitness>> worst(pts.size());
  parallel_for(pts.size(), jobs, [&](std::size_t n) {
    const CylinderPoint &p = pts[n];
    const std::array<Vec2, 2> rays = cone.boundary_rays(p);
    PointMargins &m = margins[n];
    m.x = p;
    for (std::size_t i = 0; i < 2; ++i) {
      m.infinitesimal[i] = inward_rate(sys, cone, i, p, rays[i]);
      PushResult r = push_ray(flow, cone, p, rays[i], tau);
      m.finite[i] = r.final_margin;
      if (r.worst && (!worst[n] || r.worst->margin < worst[n]->margin)) worst[n] = r.worst;
    }
  });

  InvarianceReport out;
  out.grid = grid;
  out.tau = tau;
  out.min_infinitesimal = kInf;
  out.min_finite = kInf;
  for (std::size_t n = 0; n < pts.size(); ++n) {
    const PointMargins &m = margins[n];
    for (std::size_t i = 0; i < 2; ++i) {
      if (m.infinitesimal[i] < out.min_infinitesimal) {
        out.min_infinitesimal = m.infinitesimal[i];
        out.argmin_infinitesimal = m;
        out.argmin_ray = i;
      }
      out.min_finite = std::min(out.min_finite, m.finite[i]);
    }
    if (worst[n] && (!out.witness || worst[n]->margin < out.witness->margin)) out.witness = worst[n];
  }
  out.points = std::move(margins);

  if (!out.witness && out.min_infinitesimal < -kConeTolerance) {
    // An inward rate below zero pushes the ray out immediately; a short
    // push exhibits it.
    const CylinderPoint p = out.argmin_infinitesimal.x;
    const Vec2 ray = cone.boundary_rays(p)[out.argmin_ray];
    for (double h = std::min(tau, 1e-2); h >= 1e-6 && !out.witness; h /= 10.0) {
      out.witness = push_ray(flow, cone, p, ray, h).worst;
    }
  }

  if (out.witness) {
    out.verdict = InvarianceVerdict::Violated;
  } else if (out.min_infinitesimal > kConeTolerance && out.min_finite >= kStrictMargin) {
    out.verdict = InvarianceVerdict::StrictlyInvariant;
  } else {
    out.verdict = InvarianceVerdict::MarginallyInvariant;
  }
  return out;
}

PFPoint pf_vector_at(const PlanarSystem &sys, const ConeFieldSpec &cone, const CylinderPoint &x,
                     const IntegratorConfig &cfg, const PFOptions &opt) {
  if (!(opt.push_time > 0.0) || opt.max_pushes < 1) {
    throw Error(ErrorKind::InvalidArgument, "PF iteration needs a positive push time and count");
  }
  PFPoint out;
  out.x = x;
  out.grid_point = x;
  const Vec2 inside = cone.interior_seed(x);
  const auto oriented = [&](Vec2 w, const CylinderPoint &at) {
    w = normalized(w);
    return dot(w, cone.interior_seed(at)) < 0.0 ? -w : w;
  };

  // Backward seeding: P maps the tangent space at psi_{-n tau}(x) to x.
  const Flow back(sys, cfg, Channel::Fundamental);
  FlowState s = back.start(x, 0.0);
  Mat2 P = Mat2::identity();
  bool escaped = false;
  for (int n = 1; n <= opt.max_pushes; ++n) {
    const double t1 = -opt.push_time * n;
    FlowState e;
    try {
      bool runaway = false;
      e = back.advance(back.start(s.x, s.t), t1, [&](const FlowState &, const FlowState &next) {
        runaway = std::abs(next.x.v()) > opt.v_escape;
        return !runaway;
      });
      escaped = runaway || e.t != t1;
    } catch (const Error &) {
      escaped = true;
    }
    if (escaped) break;
    P = scaled_to_unit(P * adjugate(e.phi));
    s = e;
    const std::array<Vec2, 2> rays = cone.boundary_rays(s.x);
    out.w = oriented(P * cone.interior_seed(s.x), x);
    out.residual = line_angle(P * rays[0], P * rays[1]);
    out.pushes = n;
    if (out.residual < opt.tol) {
      out.converged = true;
      return out;
    }
  }
  if (!escaped) return out;

  // Forward pushing of the two extreme rays; the direction is then attached
  // to the end of the forward trajectory.
  out.forward_fallback = true;
  const Flow fwd(sys, cfg, Channel::Fundamental);
  FlowState f = fwd.start(x, 0.0);
  const std::array<Vec2, 2> rays = cone.boundary_rays(x);
  Mat2 Q = Mat2::identity();
  for (int n = 1; n <= opt.max_pushes; ++n) {
    f = fwd.advance(fwd.start(f.x, f.t), opt.push_time * n);
    Q = scaled_to_unit(f.phi * Q);
    out.x = f.x;
    out.w = oriented(Q * inside, f.x);
    out.residual = line_angle(Q * rays[0], Q * rays[1]);
    out.pushes = n;
    if (out.residual < opt.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

bool PFField::converged() const {
  return std::all_of(points.begin(), points.end(), [](const PFPoint &p) { return p.converged; });
}

PFField pf_vector_field(const PlanarSystem &sys, const ConeFieldSpec &cone, const StateGrid &grid,
                        const IntegratorConfig &cfg, const PFOptions &opt, unsigned jobs) {
  cfg.validate();
  const std::vector<CylinderPoint> pts = grid.points();
  PFField out;
  out.grid = grid;
  out.points.resize(pts.size());
  parallel_for(pts.size(), jobs,
               [&](std::size_t n) { out.points[n] = pf_vector_at(sys, cone, pts[n], cfg, opt); });
  return out;
}

std::vector<AlignmentPoint> vector_field_alignment(const PlanarSystem &sys, const PFField &pf) {
  std::vector<AlignmentPoint> out;
  out.reserve(pf.points.size());
  for (const PFPoint &p : pf.points) {
    const Vec2 f = sys.field(p.x, 0.0);
    AlignmentPoint a{p.x, std::numeric_limits<double>::quiet_NaN(), false};
    if (norm(f) >= 1e-12) {
      a.sine = line_sine(f, p.w);
      a.defined = true;
    }
    out.push_back(a);
  }
  return out;
}

AlignmentSeries alignment_along(const PlanarSystem &sys, const ConeFieldSpec &cone,
                                const CylinderPoint &x0, const IntegratorConfig &cfg,
                                double horizon, double sample_dt) {
  if (!(horizon > 0.0) || !(sample_dt > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "alignment needs positive horizon and sample step");
  }
  const Flow flow(sys, cfg, Channel::Prolonged);
  FlowState s = flow.start(x0, 0.0, Tangent::from(cone.interior_seed(x0)));
  AlignmentSeries out;
  const auto n = static_cast<std::size_t>(std::floor(horizon / sample_dt + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) {
    if (i > 0) s = flow.advance(s, sample_dt * static_cast<double>(i));
    s.tangent = Tangent::from(normalized(s.tangent.vec()));
    const Vec2 f = sys.field(s.x, s.t);
    out.times.push_back(s.t);
    out.sine.push_back(norm(f) < 1e-12 ? std::numeric_limits<double>::quiet_NaN()
                                       : line_sine(f, s.tangent.vec()));
  }
  return out;
}

Corollary2Result certify_corollary2(const PlanarSystem &sys, const PendulumParams &params,
                                    const ConeFieldSpec &cone, const IntegratorConfig &cfg,
                                    const Corollary2Options &opt, unsigned jobs) {
  params.validate();
  const auto u = params.input.constant_value();
  if (!u) throw Error(ErrorKind::InvalidArgument, "the certificate needs a constant torque");
  if (!(params.k > 0.0)) throw Error(ErrorKind::InvalidArgument, "the certificate needs k > 0");
  if (!(opt.rho > 1.0)) throw Error(ErrorKind::InvalidArgument, "rho must exceed 1");

  Corollary2Result out;
  if (std::abs(*u) <= 1.0) {
    out.reason = "fixed points exist for |u| <= 1";
    return out;
  }

  out.v_bound = opt.rho * (std::abs(*u) + 1.0) / params.k;
  for (std::size_t i = 0; i < 720; ++i) {
    const double th = -kPi + kTwoPi * static_cast<double>(i) / 720.0;
    const double top = pendulum_field(CylinderPoint(th, out.v_bound), params, 0.0).dv;
    const double bottom = pendulum_field(CylinderPoint(th, -out.v_bound), params, 0.0).dv;
    if (!(top < 0.0) || !(bottom > 0.0)) {
      out.reason = "velocity band is not forward invariant";
      return out;
    }
  }

  const StateGrid grid{-kPi, kPi, opt.n_theta, -out.v_bound, out.v_bound, opt.n_v};
  out.invariance = verify_cone_invariance(sys, cone, grid, opt.tau, cfg, jobs);
  if (out.invariance->verdict != InvarianceVerdict::StrictlyInvariant) {
    out.reason = "cone field is not strictly invariant (" +
                 std::string(to_string(out.invariance->verdict)) + ")";
    return out;
  }

  // Rotation direction follows the torque; the cone contains f or -f.
  const double orient = *u > 0.0 ? 1.0 : -1.0;
  out.min_field_margin = kInf;
  const std::array<double, 4> thetas{-kPi, -kPi / 2.0, 0.0, kPi / 2.0};
  const std::array<double, 2> vs{-out.v_bound / 2.0, out.v_bound / 2.0};
  IntegratorConfig sampled = cfg;
  sampled.output_dt = 0.05;
  for (double th : thetas) {
    for (double v : vs) {
      const Trajectory settle =
          integrate_state(sys, CylinderPoint(th, v), cfg, {0.0, opt.transient});
      const Trajectory tail = integrate_state(sys, settle.back(), sampled, {0.0, opt.sample_horizon});
      for (const CylinderPoint &p : tail.states) {
        out.min_field_margin =
            std::min(out.min_field_margin, cone.margin(p, orient * sys.field(p, 0.0)));
      }
    }
  }
  if (!(out.min_field_margin > kConeTolerance)) {
    out.reason = "vector field does not enter the cone interior on the attractor";
    return out;
  }

  LimitCycle cycle = find_limit_cycle(sys, params, cfg);
  if (!(std::abs(cycle.rho2) < 1.0)) {
    out.reason = "located cycle is not transversally contracting";
    return out;
  }
  out.cycle = std::move(cycle);
  out.certified = true;
  out.reason = "certified";
  return out;
}

std::string_view to_string(DichotomyCase c) {
  switch (c) {
    case DichotomyCase::FixedPoint: return "FixedPoint";
    case DichotomyCase::Cycle: return "Cycle";
    case DichotomyCase::FixedPointsAndArcs: return "FixedPointsAndArcs";
    case DichotomyCase::CaseII: return "CaseII";
  }
  return "?";
}

DichotomyResult dichotomy_classify(const PlanarSystem &sys, const ConeFieldSpec &cone,
                                   const CylinderPoint &x0, const IntegratorConfig &cfg,
                                   const DichotomyOptions &opt) {
  if (!(opt.horizon > 0.0) || !(opt.window > 0.0) || opt.window > opt.horizon) {
    throw Error(ErrorKind::InvalidArgument, "window must lie inside a positive horizon");
  }
  DichotomyResult out;
  if (norm(sys.field(x0, 0.0)) < opt.speed_tol) {
    out.kind = DichotomyCase::FixedPoint;
    out.limit_point = x0;
    out.min_speed = norm(sys.field(x0, 0.0));
    return out;
  }

  const Flow flow(sys, cfg, Channel::Prolonged);
  FlowState s = flow.start(x0, 0.0, Tangent::from(cone.interior_seed(x0)));
  const double t_window = opt.horizon - opt.window;
  double log_growth = 0.0;
  out.min_speed = kInf;
  const auto track = [&](const FlowState &, const FlowState &next) {
    if (next.t >= t_window) out.min_speed = std::min(out.min_speed, norm(next.rate));
    return true;
  };
  for (double t = 1.0;; t += 1.0) {
    const double t1 = std::min(t, opt.horizon);
    s = flow.advance(s, t1, track);
    const double g = norm(s.tangent.vec());
    if (t1 > t_window) log_growth += std::log(g);
    s.tangent = Tangent::from(s.tangent.vec() * (1.0 / g));
    if (t1 >= opt.horizon) break;
  }
  out.tangent_growth = log_growth / opt.window;
  out.limit_point = s.x;
  const Vec2 f = sys.field(s.x, s.t);
  out.misalignment = norm(f) < 1e-12 ? 0.0 : line_sine(f, s.tangent.vec());

  if (norm(f) < opt.speed_tol) {
    out.kind = DichotomyCase::FixedPoint;
    return out;
  }

  // First return to the current angle, travelling the same way.
  const int dir = s.x.v() >= 0.0 ? 1 : -1;
  const std::array<Event, 1> ev{Event{Event::Kind::Angle, s.lifted_theta(), dir, sys.wraps()}};
  const auto hit = flow.advance_until(s, s.t + opt.window, ev);
  if (hit && std::abs(hit->state.x.v() - s.x.v()) < opt.recurrence_tol) {
    out.kind = DichotomyCase::Cycle;
    out.period = hit->state.t - s.t;
    return out;
  }
  if (out.min_speed < 1e-3) {
    out.kind = DichotomyCase::FixedPointsAndArcs;
    return out;
  }
  if (out.misalignment > opt.alignment_tol) {
    out.kind = DichotomyCase::CaseII;
    out.growth_unbounded = out.tangent_growth > opt.growth_threshold;
    return out;
  }
  throw Error(ErrorKind::Inconclusive, "no convergence or recurrence within the horizon");
}

ObstructionReport homoclinic_obstruction_check(const PendulumParams &params,
                                               const IntegratorConfig &cfg, double gap_tol,
                                               unsigned jobs) {
  ObstructionReport out;
  out.gap = homoclinic_gap(params, cfg);
  out.homoclinic = std::abs(out.gap.gap) <= gap_tol;

  const std::vector<FixedPoint> fps = find_fixed_points(params);
  const auto saddle = std::find_if(fps.begin(), fps.end(), [](const FixedPoint &fp) {
    return fp.classification == FixedPointClass::Saddle;
  });
  if (saddle == fps.end()) throw Error(ErrorKind::NotASaddle, "no saddle equilibrium");

  const PlanarSystem sys = make_pendulum(params);
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const Mat2 A = pendulum_jacobian(saddle->point, params);
  const Vec2 eu = eigenvector(A, saddle->lambda1.real());
  const PFPoint pf = pf_vector_at(sys, cone, saddle->point, cfg);
  out.pf_tangency_angle = line_angle(eu, pf.w);

  out.verdict = verify_cone_invariance(sys, cone, StateGrid{}, 1.0, cfg, jobs).verdict;
  out.obstruction = out.homoclinic && out.verdict == InvarianceVerdict::StrictlyInvariant;
  return out;
}

}  // namespace diffgeo
