#include "diffgeo/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "diffgeo/error.hpp"

namespace diffgeo {

void IntegratorConfig::validate() const {
  if (const auto *rk4 = std::get_if<FixedStepRK4>(&method)) {
    if (!(rk4->h > 0.0)) throw Error(ErrorKind::InvalidArgument, "RK4 step h must be > 0");
  } else {
    const auto &a = std::get<AdaptiveRK45>(method);
    if (!(a.rel_tol > 0.0) || !(a.abs_tol > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "tolerances must be > 0");
    }
    if (!(a.h_min > 0.0) || !(a.h_min <= a.h_max)) {
      throw Error(ErrorKind::InvalidArgument, "need 0 < h_min <= h_max");
    }
  }
  if (!(max_time > 0.0)) throw Error(ErrorKind::InvalidArgument, "max_time must be > 0");
  if (!(output_dt >= 0.0)) throw Error(ErrorKind::InvalidArgument, "output_dt must be >= 0");
}

IntegratorConfig IntegratorConfig::tightened(double factor) const {
  IntegratorConfig out = *this;
  if (auto *rk4 = std::get_if<FixedStepRK4>(&out.method)) {
    rk4->h *= factor;
  } else {
    auto &a = std::get<AdaptiveRK45>(out.method);
    a.rel_tol *= factor;
    a.abs_tol *= factor;
  }
  return out;
}

namespace {

using Packed = std::array<double, 6>;

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

class Engine {
 public:
  Engine(const PlanarSystem &sys, Channel channel) : sys_(sys), channel_(channel) {}

  Packed rhs(double t, const Packed &y) const {
    Packed dy{};
    const Vec2 x{y[0], y[1]};
    const Vec2 f = sys_.field(x, t);
    dy[0] = f.x;
    dy[1] = f.y;
    if (channel_ != Channel::State) {
      const Mat2 p = sys_.jacobian(x, t) * Mat2{y[2], y[3], y[4], y[5]};
      dy[2] = p.a;
      dy[3] = p.b;
      dy[4] = p.c;
      dy[5] = p.d;
    }
    return dy;
  }

  std::size_t width() const {
    return channel_ == Channel::State ? 2 : 6;
  }

  struct DopriResult {
    Packed y;
    Packed k7;
    double err;
  };

  DopriResult dopri(double t, const Packed &y, const Packed &k1, double h, const AdaptiveRK45 *ctl) const {
    const std::size_t n = width();
    auto comb = [&](std::initializer_list<std::pair<double, const Packed *>> terms) {
      Packed out = y;
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (const auto &[c, k] : terms) s += c * (*k)[i];
        out[i] += h * s;
      }
      return out;
    };
    const Packed k2 = rhs(t + c2 * h, comb({{a21, &k1}}));
    const Packed k3 = rhs(t + c3 * h, comb({{a31, &k1}, {a32, &k2}}));
    const Packed k4 = rhs(t + c4 * h, comb({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const Packed k5 = rhs(t + c5 * h, comb({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const Packed k6 =
        rhs(t + h, comb({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const Packed y5 = comb({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const Packed k7 = rhs(t + h, y5);
    double err = 0.0;
    if (ctl != nullptr) {
      // The norm covers the state and the step propagator, neither of which
      // depends on the tangent data being transported.
      for (std::size_t i = 0; i < n; ++i) {
        const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                              e7 * k7[i]);
        const double sc = ctl->abs_tol + ctl->rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
        err += (e / sc) * (e / sc);
      }
      err = std::sqrt(err / static_cast<double>(n));
    }
    return {y5, k7, err};
  }

  Packed rk4(double t, const Packed &y, const Packed &k1, double h) const {
    const std::size_t n = width();
    auto axpy = [&](const Packed &k, double s) {
      Packed out = y;
      for (std::size_t i = 0; i < n; ++i) out[i] += s * k[i];
      return out;
    };
    const Packed k2 = rhs(t + 0.5 * h, axpy(k1, 0.5 * h));
    const Packed k3 = rhs(t + 0.5 * h, axpy(k2, 0.5 * h));
    const Packed k4 = rhs(t + h, axpy(k3, h));
    Packed out = y;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
  }

 private:
  const PlanarSystem &sys_;
  Channel channel_;
};

Packed pack(const PlanarSystem &sys, Channel channel, const FlowState &s) {
  Packed y{};
  y[0] = sys.wraps() ? s.x.theta() : s.lifted_theta();
  y[1] = s.x.v();
  if (channel != Channel::State) {
    // Each step propagates the identity; unpack applies the resulting step
    // propagator to the carried tangent or fundamental matrix.
    y[2] = 1.0;
    y[5] = 1.0;
  }
  return y;
}

FlowState unpack(const PlanarSystem &sys, Channel channel, const FlowState &base, double t,
                 const Packed &y, const Vec2 &rate) {
  FlowState s = base;
  s.t = t;
  const double w = wrap_angle(y[0]);
  const auto turns = static_cast<std::int64_t>(std::llround((y[0] - w) / kTwoPi));
  s.x = CylinderPoint(w, y[1]);
  s.winding = (sys.wraps() ? base.winding : 0) + turns;
  s.rate = rate;
  if (channel != Channel::State) {
    const Mat2 step{y[2], y[3], y[4], y[5]};
    s.log_det = base.log_det + std::log(std::abs(step.det()));
    if (channel == Channel::Prolonged) {
      s.tangent = Tangent::from(step * base.tangent.vec());
    } else {
      s.phi = step * base.phi;
    }
  }
  return s;
}

bool finite(const Packed &y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

double initial_step(const IntegratorConfig &cfg) {
  if (const auto *rk4 = std::get_if<FixedStepRK4>(&cfg.method)) return rk4->h;
  const auto &a = std::get<AdaptiveRK45>(cfg.method);
  return std::clamp(1e-3, a.h_min, a.h_max);
}

// Quantity tracked by an event, read off a FlowState.
double event_value(const Event &ev, const FlowState &s) {
  return ev.kind == Event::Kind::Angle ? s.lifted_theta() : s.x.v();
}

double event_rate(const Event &ev, const FlowState &s) {
  return ev.kind == Event::Kind::Angle ? s.rate.x : s.rate.y;
}

// Cubic Hermite interpolant of (lifted theta, v) across one step.
struct Hermite {
  double t0, h;
  Vec2 y0, y1, m0, m1;

  Hermite(const FlowState &a, const FlowState &b)
      : t0(a.t),
        h(b.t - a.t),
        y0{a.lifted_theta(), a.x.v()},
        y1{b.lifted_theta(), b.x.v()},
        m0(a.rate),
        m1(b.rate) {}

  Vec2 value(double t) const {
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y0 + (h10 * h) * m0 + h01 * y1 + (h11 * h) * m1;
  }

  Vec2 derivative(double t) const {
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double d00 = (6 * s2 - 6 * s) / h;
    const double d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / h;
    const double d11 = 3 * s2 - 2 * s;
    return d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1;
  }
};

double component(const Event &ev, const Vec2 &y) { return ev.kind == Event::Kind::Angle ? y.x : y.y; }

// Candidate levels crossed between a and b (values of the tracked quantity at
// the step ends), honoring the direction filter. Levels exactly at `a` are
// not crossings of this step.
std::vector<double> crossed_levels(const Event &ev, double a, double b) {
  std::vector<double> out;
  const bool up = b > a;
  if (a == b) return out;
  if (ev.direction > 0 && !up) return out;
  if (ev.direction < 0 && up) return out;
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  if (!ev.periodic || ev.kind != Event::Kind::Angle) {
    if (up ? (a < ev.level && ev.level <= b) : (a > ev.level && ev.level >= b)) out.push_back(ev.level);
    return out;
  }
  const auto m_lo = static_cast<std::int64_t>(std::floor((lo - ev.level) / kTwoPi)) - 1;
  const auto m_hi = static_cast<std::int64_t>(std::ceil((hi - ev.level) / kTwoPi)) + 1;
  for (std::int64_t m = m_lo; m <= m_hi; ++m) {
    const double level = ev.level + kTwoPi * static_cast<double>(m);
    if (up ? (a < level && level <= b) : (a > level && level >= b)) out.push_back(level);
  }
  if (!up) std::reverse(out.begin(), out.end());
  return out;
}

// Bisection on the Hermite interpolant for g(t) = q(t) - level.
double hermite_root(const Hermite &hm, const Event &ev, double level, double ta, double tb) {
  double ga = component(ev, hm.y0) - level;
  for (int it = 0; it < 60; ++it) {
    const double tm = 0.5 * (ta + tb);
    const double gm = component(ev, hm.value(tm)) - level;
    if (gm == 0.0) return tm;
    if ((gm < 0.0) == (ga < 0.0)) {
      ta = tm;
      ga = gm;
    } else {
      tb = tm;
    }
  }
  return 0.5 * (ta + tb);
}

constexpr double kTransversality = 1e-8;

}  // namespace

Flow::Flow(const PlanarSystem &sys, IntegratorConfig cfg, Channel channel)
    : sys_(&sys), cfg_(std::move(cfg)), channel_(channel) {
  cfg_.validate();
}

FlowState Flow::start(const CylinderPoint &x0, double t, Tangent d0) const {
  FlowState s;
  s.t = t;
  s.x = x0;
  s.winding = 0;
  s.rate = sys_->field(x0, t);
  s.tangent = d0;
  s.phi = Mat2::identity();
  return s;
}

FlowState Flow::step_to(const FlowState &from, double t) const {
  const Engine eng(*sys_, channel_);
  const Packed y = pack(*sys_, channel_, from);
  const double h = t - from.t;
  if (h == 0.0) return from;
  const Packed k1 = eng.rhs(from.t, y);
  Packed y1;
  if (std::holds_alternative<FixedStepRK4>(cfg_.method)) {
    y1 = eng.rk4(from.t, y, k1, h);
  } else {
    y1 = eng.dopri(from.t, y, k1, h, nullptr).y;
  }
  const Vec2 rate = sys_->field(Vec2{y1[0], y1[1]}, t);
  return unpack(*sys_, channel_, from, t, y1, rate);
}

namespace {

// Shared stepping loop. `on_step` sees every accepted step and returns false
// to stop.
FlowState march(const PlanarSystem &sys, const IntegratorConfig &cfg, Channel channel,
                const FlowState &from, double t_end,
                const std::function<bool(const FlowState &, const FlowState &)> &on_step) {
  const Engine eng(sys, channel);
  const double dir = t_end >= from.t ? 1.0 : -1.0;
  if (std::abs(t_end - from.t) > cfg.max_time * (1.0 + 1e-12)) {
    throw Error(ErrorKind::InvalidArgument, "integration span exceeds max_time");
  }
  FlowState cur = from;
  Packed y = pack(sys, channel, cur);
  Packed k1 = eng.rhs(cur.t, y);
  const auto *ctl = std::get_if<AdaptiveRK45>(&cfg.method);
  double step = initial_step(cfg);
  if (ctl != nullptr && from.step_hint > 0.0) step = std::clamp(from.step_hint, ctl->h_min, ctl->h_max);
  while (dir * (t_end - cur.t) > 0.0) {
    const double remaining = std::abs(t_end - cur.t);
    bool last = false;
    double hs = step;
    if (hs >= remaining * (1.0 - 1e-12)) {
      hs = remaining;
      last = true;
    }
    const double hsigned = dir * hs;
    Packed y1;
    Packed k7;
    if (ctl == nullptr) {
      y1 = eng.rk4(cur.t, y, k1, hsigned);
      k7 = eng.rhs(cur.t + hsigned, y1);
    } else {
      const auto r = eng.dopri(cur.t, y, k1, hsigned, ctl);
      if (!finite(r.y) || !(r.err <= 1.0)) {
        const double fac = std::isfinite(r.err) ? std::max(0.2, 0.9 * std::pow(r.err, -0.2)) : 0.2;
        const double next = hs * std::min(1.0, fac);
        if (next < ctl->h_min) {
          if (!finite(r.y)) throw Error(ErrorKind::NonFiniteState, "state overflow");
          throw Error(ErrorKind::StepSizeUnderflow, "adaptive step fell below h_min");
        }
        step = next;
        continue;
      }
      y1 = r.y;
      k7 = r.k7;
      const double fac =
          r.err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(r.err, -0.2), 0.2, 5.0);
      if (!last) step = std::min(ctl->h_max, hs * fac);
    }
    if (!finite(y1)) throw Error(ErrorKind::NonFiniteState, "state became non-finite");
    const double t_next = last ? t_end : cur.t + hsigned;
    FlowState next = unpack(sys, channel, cur, t_next, y1, Vec2{k7[0], k7[1]});
    next.step_hint = step;
    const bool go_on = !on_step || on_step(cur, next);
    cur = next;
    y = pack(sys, channel, cur);
    // First-same-as-last; the field is 2 pi periodic, so re-wrapping the
    // angle does not change it. The propagator channel restarts from the
    // identity and needs a fresh first stage.
    if (channel != Channel::State) {
      k1 = eng.rhs(cur.t, y);
    } else {
      k1 = k7;
    }
    if (!go_on) break;
  }
  return cur;
}

}  // namespace

FlowState Flow::advance(const FlowState &from, double t_end, const Observer &observer) const {
  return march(*sys_, cfg_, channel_, from, t_end, observer);
}

std::optional<EventHit> Flow::advance_until(const FlowState &from, double t_limit,
                                            std::span<const Event> events, FlowState *end_state,
                                            const Observer &observer) const {
  std::optional<EventHit> hit;
  bool first = true;
  const FlowState end = march(*sys_, cfg_, channel_, from, t_limit,
                              [&](const FlowState &prev, const FlowState &next) {
    const Hermite hm(prev, next);
    double best_t = std::numeric_limits<double>::quiet_NaN();
    std::size_t best_i = 0;
    double best_level = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const Event &ev = events[i];
      const double a = event_value(ev, prev);
      const double b = event_value(ev, next);
      for (const double level : crossed_levels(ev, a, b)) {
        // A search that starts on the event surface ignores that crossing.
        if (first && std::abs(a - level) <= 1e-9) continue;
        const double tr = hermite_root(hm, ev, level, prev.t, next.t);
        if (std::isnan(best_t) || (next.t - prev.t) * (tr - best_t) < 0.0) {
          best_t = tr;
          best_i = i;
          best_level = level;
        }
        break;
      }
    }
    first = false;
    if (std::isnan(best_t)) return !observer || observer(prev, next);

    // Safeguarded Newton on exact sub-steps from `prev`.
    const Event &ev = events[best_i];
    double lo = prev.t;
    double hi = next.t;
    const double g_lo = event_value(ev, prev) - best_level;
    double tau = best_t;
    FlowState s = step_to(prev, tau);
    double g = event_value(ev, s) - best_level;
    for (int it = 0; it < 100 && std::abs(g) > 1e-13; ++it) {
      if ((g < 0.0) == (g_lo < 0.0)) lo = tau; else hi = tau;
      const double rate = event_rate(ev, s);
      double cand = rate != 0.0 ? tau - g / rate : 0.5 * (lo + hi);
      if (!((cand - lo) * (cand - hi) < 0.0)) cand = 0.5 * (lo + hi);
      if (cand == tau) break;
      tau = cand;
      s = step_to(prev, tau);
      g = event_value(ev, s) - best_level;
    }
    if (std::abs(event_rate(ev, s)) <= kTransversality) {
      throw Error(ErrorKind::TangentialCrossing, "section is not transversal at the crossing");
    }
    s.step_hint = next.step_hint;
    hit = EventHit{best_i, s};
    return false;
  });
  if (end_state != nullptr) *end_state = hit ? hit->state : end;
  return hit;
}

namespace {

void record(Trajectory &traj, Channel channel, const FlowState &s) {
  traj.times.push_back(s.t);
  traj.states.push_back(s.x);
  traj.winding.push_back(s.winding);
  traj.rates.push_back(s.rate);
  if (channel == Channel::Prolonged) traj.tangents->push_back(s.tangent);
  if (channel == Channel::Fundamental) {
    traj.fundamental->push_back(s.phi);
    traj.log_det->push_back(s.log_det);
  }
}

Trajectory run(const PlanarSystem &sys, const CylinderPoint &x0, Tangent d0,
               const IntegratorConfig &cfg, TimeSpan span, Channel channel) {
  if (!(span.t1 > span.t0) || !std::isfinite(span.t0) || !std::isfinite(span.t1)) {
    throw Error(ErrorKind::InvalidArgument, "time span must be finite with t1 > t0");
  }
  const Flow flow(sys, cfg, channel);
  Trajectory traj;
  if (channel == Channel::Prolonged) traj.tangents.emplace();
  if (channel == Channel::Fundamental) {
    traj.fundamental.emplace();
    traj.log_det.emplace();
  }
  FlowState s = flow.start(x0, span.t0, d0);
  record(traj, channel, s);
  if (cfg.output_dt > 0.0) {
    for (std::int64_t n = 1;; ++n) {
      const double t = std::min(span.t1, span.t0 + static_cast<double>(n) * cfg.output_dt);
      s = flow.advance(s, t);
      record(traj, channel, s);
      if (t >= span.t1) break;
    }
  } else {
    flow.advance(s, span.t1, [&](const FlowState &, const FlowState &next) {
      record(traj, channel, next);
      return true;
    });
  }
  return traj;
}

}  // namespace

Trajectory integrate_state(const PlanarSystem &sys, const CylinderPoint &x0,
                           const IntegratorConfig &cfg, TimeSpan span) {
  return run(sys, x0, {}, cfg, span, Channel::State);
}

Trajectory integrate_prolonged(const PlanarSystem &sys, const CylinderPoint &x0, Tangent d0,
                               const IntegratorConfig &cfg, TimeSpan span) {
  return run(sys, x0, d0, cfg, span, Channel::Prolonged);
}

Trajectory integrate_fundamental(const PlanarSystem &sys, const CylinderPoint &x0,
                                 const IntegratorConfig &cfg, TimeSpan span) {
  return run(sys, x0, {}, cfg, span, Channel::Fundamental);
}

namespace {

Event to_event(const SectionSpec &section) {
  Event ev;
  ev.kind = section.kind == SectionSpec::Kind::AngleCrossing ? Event::Kind::Angle
                                                             : Event::Kind::Velocity;
  ev.level = section.level;
  ev.direction = section.direction;
  ev.periodic = section.kind == SectionSpec::Kind::AngleCrossing;
  return ev;
}

}  // namespace

SectionEvent detect_crossings(const Trajectory &traj, const SectionSpec &section) {
  traj.validate();
  SectionEvent out{section, {}};
  const Event ev = to_event(section);
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    FlowState a;
    a.t = traj.times[i];
    a.x = traj.states[i];
    a.winding = traj.winding[i];
    a.rate = traj.rates[i];
    FlowState b;
    b.t = traj.times[i + 1];
    b.x = traj.states[i + 1];
    b.winding = traj.winding[i + 1];
    b.rate = traj.rates[i + 1];
    const Hermite hm(a, b);
    for (const double level : crossed_levels(ev, event_value(ev, a), event_value(ev, b))) {
      const double tr = hermite_root(hm, ev, level, a.t, b.t);
      const Vec2 y = hm.value(tr);
      const Vec2 dy = hm.derivative(tr);
      if (std::abs(component(ev, dy)) <= kTransversality) {
        throw Error(ErrorKind::TangentialCrossing, "section is not transversal at the crossing");
      }
      Crossing c;
      c.t = tr;
      c.x = CylinderPoint(y.x, y.y);
      c.winding = static_cast<std::int64_t>(std::llround((y.x - c.x.theta()) / kTwoPi));
      c.residual = component(ev, y) - level;
      out.crossings.push_back(c);
    }
  }
  return out;
}

SectionEvent detect_crossings(const PlanarSystem &sys, const CylinderPoint &x0,
                              const IntegratorConfig &cfg, TimeSpan span,
                              const SectionSpec &section, std::size_t max_crossings) {
  if (!(span.t1 > span.t0)) throw Error(ErrorKind::InvalidArgument, "time span must have t1 > t0");
  const Flow flow(sys, cfg, Channel::State);
  const Event ev = to_event(section);
  SectionEvent out{section, {}};
  FlowState s = flow.start(x0, span.t0);
  while (s.t < span.t1) {
    FlowState end;
    const auto hit = flow.advance_until(s, span.t1, std::span<const Event>(&ev, 1), &end);
    if (!hit) break;
    Crossing c;
    c.t = hit->state.t;
    c.x = hit->state.x;
    c.winding = hit->state.winding;
    const double value = event_value(ev, hit->state);
    c.residual = ev.kind == Event::Kind::Angle ? angle_diff(value, ev.level) : value - ev.level;
    out.crossings.push_back(c);
    if (max_crossings != 0 && out.crossings.size() >= max_crossings) break;
    s = hit->state;
  }
  return out;
}

}  // namespace diffgeo
