// One line per criterion: "criterion N: PASS|FAIL (elapsed s, budget s) detail".
// Exit status is non-zero when any criterion fails or overruns its budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

#include "diffgeo/atlas.hpp"
#include "diffgeo/contraction.hpp"
#include "diffgeo/geometry.hpp"
#include "diffgeo/integrate.hpp"
#include "diffgeo/model.hpp"
#include "diffgeo/orbits.hpp"
#include "diffgeo/positivity.hpp"

using namespace diffgeo;
using test::uniform;

namespace {

struct Outcome {
  bool pass{true};
  std::ostringstream detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  double budget;
  std::function<void(Outcome &)> body;
};

// ---------------------------------------------------------------------------

/// Overdamped free pendulum in half-angle coordinates s = tan(theta / 2):
/// s(t) = s0 e^{-t}, and the tangent obeys dtheta(t) = dtheta0 e^{-t} (1 + s0^2) / (1 + s^2),
/// so V = dtheta^2 / (1 + cos theta) = dtheta0^2 e^{-2t} (1 + s0^2)^2 / (2 (1 + s^2)).
/// Free of the cancellation in 1 + cos theta near pi.
double exact_weighted_V(double theta0, double dtheta0, double t) {
  const double s0 = std::tan(theta0 / 2.0);
  const double s = s0 * std::exp(-t);
  const double a = 1.0 + s0 * s0;
  return dtheta0 * dtheta0 * std::exp(-2.0 * t) * a * a / (2.0 * (1.0 + s * s));
}

void weighted_identity(Outcome &o) {
  const PlanarSystem free = make_overdamped(InputLaw::constant(0.0));
  const FinslerLyapunov W = FinslerLyapunov::weighted_angle();
  auto g = test::rng(101);
  const double edge = kPi - 1e-3;
  double identity = 0.0;
  double exact_fd = 0.0;
  const double h = 1e-4;
  for (int i = 0; i < 1000; ++i) {
    const double th = uniform(g, -edge, edge);
    const double d = uniform(g, -1.0, 1.0);
    const double vdot = analytic_Vdot(W, free, {th, 0.0}, {d, 0.0}, uniform(g, 0.0, 5.0));
    identity = std::max(identity, std::abs(vdot + d * d));
    const double fd = (exact_weighted_V(th, d, h) - exact_weighted_V(th, d, -h)) / (2.0 * h);
    exact_fd = std::max(exact_fd, std::abs(vdot - fd));
  }
  // Differences of the integrated prolonged flow, where the double-precision
  // angle still resolves 1 + cos theta.
  const Flow flow(free, test::tight_cfg(1e-13), Channel::Prolonged);
  double flow_fd = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double th = uniform(g, -3.0, 3.0);
    const Tangent d{uniform(g, -1.0, 1.0), 0.0};
    const FlowState s0 = flow.start({th, 0.0}, 0.0, d);
    const FlowState fwd = flow.advance(s0, h);
    const FlowState bwd = flow.advance(s0, -h);
    const double fd = (eval_V(W, fwd.x, fwd.tangent) - eval_V(W, bwd.x, bwd.tangent)) / (2.0 * h);
    flow_fd = std::max(flow_fd, std::abs(analytic_Vdot(W, free, {th, 0.0}, d, 0.0) - fd));
  }
  o.detail << "max|Vdot+dtheta^2|=" << identity << " exact-flow fd=" << exact_fd
           << " integrated fd=" << flow_fd;
  o.require(identity <= 1e-12, "identity");
  o.require(exact_fd <= 1e-5, "exact-flow difference");
  o.require(flow_fd <= 1e-5, "integrated difference");
}

void uniform_contraction(Outcome &o) {
  auto g = test::rng(102);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double th = uniform(g, -(kPi - 1e-3), kPi - 1e-3);
    const double d = uniform(g, -3.0, 3.0);
    const double r = uniform(g, -10.0, 10.0);
    worst = std::max(worst, std::abs(residual_w(th, d, InputLaw::half_angle_gain(InputLaw::constant(r)))));
  }
  o.detail << "max|residual|=" << worst;
  o.require(worst <= 1e-12, "residual");
}

void floquet_structure(Outcome &o) {
  const IntegratorConfig cfg;
  for (const auto [u, k] : {std::pair{1.5, 0.5}, std::pair{1.2, 3.0}, std::pair{1.05, 3.0}}) {
    const PendulumParams p{k, InputLaw::constant(u)};
    const LimitCycle c = find_limit_cycle(make_pendulum(p), p, cfg);
    const double expected = std::exp(-k * c.period);
    const double product_err = std::abs(c.rho1 * c.rho2 - expected) / expected;
    o.detail << " (u=" << u << ",k=" << k << ") T=" << c.period << " |rho1-1|=" << std::abs(c.rho1 - 1.0)
             << " rel(rho1 rho2)=" << product_err << " |rho2|=" << std::abs(c.rho2);
    o.require(std::abs(c.rho1 - 1.0) <= 1e-4, "rho1");
    o.require(product_err <= 1e-6, "product");
    o.require(std::abs(c.rho2) < 1.0, "rho2");
  }
}

void abel_liouville(Outcome &o) {
  IntegratorConfig cfg = test::tight_cfg(1e-10);
  cfg.output_dt = 0.1;
  auto g = test::rng(104);
  double worst = 0.0;
  for (double k : {0.0, 0.5, 2.0, 3.0}) {
    for (int i = 0; i < 5; ++i) {
      const PlanarSystem sys = test::pendulum(k, uniform(g, -1.5, 1.5));
      const CylinderPoint x0{uniform(g, -kPi, kPi), uniform(g, -2.0, 2.0)};
      const Trajectory tr = integrate_fundamental(sys, x0, cfg, {0.0, 20.0});
      for (std::size_t j = 0; j < tr.size(); ++j) {
        const double expected = std::exp(-k * tr.times[j]);
        worst = std::max(worst, std::abs(std::exp((*tr.log_det)[j]) - expected) / expected);
      }
    }
  }
  o.detail << "max rel|det Phi - e^{-kt}|=" << worst;
  o.require(worst <= 1e-6, "determinant");
}

void cone_margins(Outcome &o) {
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const IntegratorConfig cfg;
  const StateGrid grid;
  for (double k : {4.0, 3.0, 2.5}) {
    const InvarianceReport r = verify_cone_invariance(test::pendulum(k, 0.0), cone, grid, 1.0, cfg);
    o.detail << " k=" << k << ":" << to_string(r.verdict);
    o.require(r.verdict == InvarianceVerdict::StrictlyInvariant, "strict");
  }
  const InvarianceReport m = verify_cone_invariance(test::pendulum(2.0, 0.0), cone, grid, 1.0, cfg);
  o.detail << " k=2:" << to_string(m.verdict) << " min=" << m.min_infinitesimal
           << " at theta=" << m.argmin_infinitesimal.x.theta();
  o.require(m.verdict == InvarianceVerdict::MarginallyInvariant, "marginal");
  o.require(std::abs(m.min_infinitesimal) <= 1e-9, "marginal coefficient");
  o.require(m.argmin_infinitesimal.x.theta() == 0.0, "marginal location");

  const PlanarSystem weak = test::pendulum(1.0, 0.0);
  const InvarianceReport v = verify_cone_invariance(weak, cone, grid, 1.0, cfg);
  o.detail << " k=1:" << to_string(v.verdict);
  o.require(v.verdict == InvarianceVerdict::Violated, "violated");
  o.require(v.witness.has_value(), "witness");
  if (v.witness) {
    const ConeWitness &w = *v.witness;
    const Flow flow(weak, test::tight_cfg(), Channel::Prolonged);
    const FlowState end = flow.advance(flow.start(w.x, 0.0, w.d), w.t);
    const double margin = cone.margin(end.x, end.tangent.vec());
    o.detail << " witness margin=" << margin;
    o.require(cone_membership(cone, w.x, w.d).kind != Membership::Outside, "witness starts in cone");
    o.require(margin < -kConeTolerance, "witness leaves cone");
  }
}

void pf_equilibria(Outcome &o) {
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const PlanarSystem sys = test::pendulum(3.0, 0.0);
  const IntegratorConfig cfg;
  // A = [[0, 1], [-cos theta*, -3]]: eigenvector (1, l) with l^2 + 3 l + cos theta* = 0.
  const double node_slope = test::char_roots(3.0, 1.0).first;
  const double saddle_slope = test::char_roots(3.0, -1.0).first;
  const PFPoint node = pf_vector_at(sys, cone, CylinderPoint(0.0, 0.0), cfg);
  const PFPoint saddle = pf_vector_at(sys, cone, CylinderPoint(kPi, 0.0), cfg);
  const double e_node = test::line_error(node.w, {1.0, node_slope});
  const double e_saddle = test::line_error(saddle.w, {1.0, saddle_slope});
  o.detail << "node angle=" << e_node << " saddle angle=" << e_saddle;
  o.require(node.converged && saddle.converged, "converged");
  o.require(e_node <= 1e-4, "node");
  o.require(e_saddle <= 1e-4, "saddle");
}

void corollary2(Outcome &o) {
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const IntegratorConfig cfg;
  Corollary2Options opt;
  opt.rho = 1.1;
  const PendulumParams rot{3.0, InputLaw::constant(1.2)};
  const Corollary2Result a = certify_corollary2(make_pendulum(rot), rot, cone, cfg, opt);
  o.detail << "(1.2,3):" << (a.certified ? "Certified" : "NotCertified");
  o.require(a.certified, "certified");
  o.require(a.cycle.has_value() && std::abs(a.cycle->rho2) < 1.0, "attractive cycle");

  const PendulumParams fp{3.0, InputLaw::constant(0.5)};
  const Corollary2Result b = certify_corollary2(make_pendulum(fp), fp, cone, cfg, opt);
  o.detail << " (0.5,3):" << b.reason;
  o.require(!b.certified && b.reason.find("fixed point") != std::string::npos, "fixed points");

  const PendulumParams weak{1.0, InputLaw::constant(1.2)};
  const Corollary2Result c = certify_corollary2(make_pendulum(weak), weak, cone, cfg, opt);
  o.detail << " (1.2,1):" << c.reason;
  o.require(!c.certified && c.reason.find("cone") != std::string::npos, "cone");
}

void regimes(Outcome &o) {
  const IntegratorConfig cfg;
  const Regime a = classify_cell(3.0, 0.5, cfg).regime;
  const Regime b = classify_cell(3.0, 1.5, cfg).regime;
  const Regime c = classify_cell(0.2, 0.95, cfg).regime;
  o.detail << to_string(a) << " " << to_string(b) << " " << to_string(c);
  o.require(a == Regime::FixedPointOnly, "(3, 0.5)");
  o.require(b == Regime::LimitCycleOnly, "(3, 1.5)");
  o.require(c == Regime::Bistable, "(0.2, 0.95)");
}

/// Energy lost along the undamped separatrix, k * integral v^2 dt = 8 k,
/// balanced against the torque work 2 pi u.
double melnikov_uc(double k) { return 4.0 * k / kPi; }

void homoclinic(Outcome &o) {
  const auto curve = homoclinic_curve({0.05, 0.1, 0.2}, IntegratorConfig{});
  for (const CurvePoint &p : curve) o.detail << " u_c(" << p.k << ")=" << p.u_c;
  o.require(curve.size() == 3, "size");
  if (curve.size() != 3) return;
  for (std::size_t i = 0; i < 2; ++i) {
    const double rel = std::abs(curve[i].u_c / melnikov_uc(curve[i].k) - 1.0);
    o.detail << " rel" << i << "=" << rel;
    o.require(rel <= 0.15, "melnikov");
  }
  o.require(curve[0].u_c < curve[1].u_c && curve[1].u_c < curve[2].u_c, "monotone");
}

void pair_contraction(Outcome &o) {
  const IntegratorConfig cfg;
  const FinslerLyapunov W = FinslerLyapunov::weighted_angle();
  for (double gamma : {0.1, 0.9}) {
    const PlanarSystem sys = make_overdamped(InputLaw::half_angle_gain(InputLaw::sinusoidal(1.0, gamma, kPi)));
    const PairConvergence r = verify_pair_contraction(sys, {0.3, 0.0}, {-2.0, 0.0}, W, cfg);
    o.detail << " gamma=" << gamma << " d(40)=" << r.terminal;
    o.require(std::abs(r.times.back() - 40.0) <= 1e-9 && r.terminal < 1e-3, "entrainment");
  }
  const InputLaw q1 = InputLaw::sinusoidal(1.0, 0.5, kPi);
  const InputLaw zero = InputLaw::constant(0.0);
  const InterconnectResult a = interconnect_passive(q1, zero, 0.5, 0.0, cfg, 40.0);
  const InterconnectResult b = interconnect_passive(q1, zero, -1.5, 0.0, cfg, 40.0);
  const double gap = geodesic_distance(W, a.theta1.back(), b.theta1.back());
  o.detail << " interconnect d(40)=" << gap;
  o.require(std::abs(a.times.back() - 40.0) <= 1e-9 && gap < 1e-3, "interconnection");
}

void lyapunov(Outcome &o) {
  const IntegratorConfig cfg;
  const double node = max_lyapunov_exponent(test::pendulum(3.0, 0.0), {0.1, 0.0}, cfg).exponent;
  const PendulumParams p{0.5, InputLaw::constant(1.5)};
  const PlanarSystem sys = make_pendulum(p);
  const LimitCycle c = find_limit_cycle(sys, p, cfg);
  const double cycle = max_lyapunov_exponent(sys, c.anchor, cfg).exponent;
  o.detail << "node=" << node << " cycle=" << cycle;
  o.require(std::abs(node - (-0.381966)) <= 1e-3, "node");
  o.require(std::abs(cycle) <= 1e-2, "cycle");
}

void dissipation(Outcome &o) {
  IntegratorConfig cfg = test::tight_cfg(1e-12);
  const double dt = 1e-3;
  cfg.output_dt = dt;
  auto g = test::rng(112);
  double worst = -1e300;
  for (int i = 0; i < 20; ++i) {
    const double k = uniform(g, 0.1, 3.0);
    const InputLaw law = InputLaw::sinusoidal(uniform(g, -1.5, 1.5), uniform(g, 0.0, 1.5), uniform(g, 0.2, 3.0));
    const PlanarSystem sys = make_pendulum({k, law});
    const CylinderPoint x0{uniform(g, -kPi, kPi), uniform(g, -2.0, 2.0)};
    const Trajectory tr = integrate_state(sys, x0, cfg, {0.0, 10.0});
    std::vector<double> E(tr.size());
    for (std::size_t j = 0; j < tr.size(); ++j) E[j] = energy(tr.states[j]);
    for (std::size_t j = 2; j + 2 < tr.size(); ++j) {
      // Five-point central difference.
      const double dE = (E[j - 2] - 8.0 * E[j - 1] + 8.0 * E[j + 1] - E[j + 2]) / (12.0 * dt);
      const CylinderPoint &x = tr.states[j];
      worst = std::max(worst, dE - law(x.theta(), x.v(), tr.times[j]) * x.v());
    }
  }
  const PlanarSystem conservative = test::pendulum(0.0, 0.0);
  IntegratorConfig fine = test::tight_cfg(1e-13);
  fine.output_dt = 0.1;
  double drift = 0.0;
  for (int i = 0; i < 5; ++i) {
    const CylinderPoint x0{uniform(g, -kPi, kPi), uniform(g, -2.0, 2.0)};
    const Trajectory tr = integrate_state(conservative, x0, fine, {0.0, 100.0});
    for (const CylinderPoint &x : tr.states) drift = std::max(drift, std::abs(energy(x) - energy(x0)));
  }
  o.detail << "max(dE/dt - u v)=" << worst << " undamped drift=" << drift;
  o.require(worst <= 1e-6, "dissipation");
  o.require(drift <= 1e-6, "drift");
}

void horizontal(Outcome &o) {
  const PendulumParams p{0.5, InputLaw::constant(1.5)};
  const PlanarSystem sys = make_pendulum(p);
  const IntegratorConfig cfg;
  const LimitCycle c = find_limit_cycle(sys, p, cfg);
  const double factor = horizontal_contraction_near_cycle(c, sys, cfg).factor;
  const double rel = std::abs(factor / std::abs(c.rho2) - 1.0);
  o.detail << "factor=" << factor << " |rho2|=" << std::abs(c.rho2) << " rel=" << rel;
  o.require(rel <= 0.05, "factor");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, 1.0, weighted_identity},   {2, 1.0, uniform_contraction}, {3, 30.0, floquet_structure},
      {4, 10.0, abel_liouville},     {5, 20.0, cone_margins},       {6, 5.0, pf_equilibria},
      {7, 30.0, corollary2},         {8, 60.0, regimes},            {9, 120.0, homoclinic},
      {10, 20.0, pair_contraction},  {11, 30.0, lyapunov},          {12, 20.0, dissipation},
      {13, 10.0, horizontal},
  };
  int failures = 0;
  for (const Criterion &c : criteria) {
    Outcome o;
    o.detail.precision(6);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (elapsed > c.budget) {
      o.pass = false;
      o.detail << " [over budget]";
    }
    if (!o.pass) ++failures;
    std::printf("criterion %d: %s (%.2f s, budget %.0f s) %s\n", c.id, o.pass ? "PASS" : "FAIL", elapsed,
                c.budget, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
