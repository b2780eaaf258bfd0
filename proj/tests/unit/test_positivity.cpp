#include <algorithm>
#include <cmath>
#include <functional>

#include "doctest.h"
#include "test_support.hpp"

#include "diffgeo/error.hpp"
#include "diffgeo/positivity.hpp"

using namespace diffgeo;
using diffgeo::test::line_error;

namespace {

ErrorKind kind_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

PendulumParams constant(double k, double u) { return {k, InputLaw::constant(u)}; }

/// Lowest inward derivative over the grid: the ray (0, 1) gains 1, the ray
/// (1, -1) gains k - 1 - cos theta.
double margin_oracle(double k, const StateGrid &grid) {
  double m = 1.0;
  for (const CylinderPoint &p : grid.points()) m = std::min(m, k - 1.0 - std::cos(p.theta()));
  return m;
}

Vec2 push(const PlanarSystem &sys, const CylinderPoint &x, const Vec2 &d, double tau) {
  const Flow flow(sys, IntegratorConfig{}, Channel::Prolonged);
  return normalized(flow.advance(flow.start(x, 0.0, Tangent::from(d)), tau).tangent.vec());
}

}  // namespace

TEST_CASE("state grids") {
  StateGrid g;
  g.n_theta = 4;
  g.n_v = 3;
  const auto pts = g.points();
  REQUIRE(pts.size() == 12);
  // The whole circle is covered once: -pi and pi are the same point.
  CHECK(std::abs(std::abs(pts.front().theta()) - kPi) <= 1e-12);
  CHECK(std::count_if(pts.begin(), pts.end(), [](const CylinderPoint &p) {
          return std::abs(std::abs(p.theta()) - kPi) <= 1e-12;
        }) == 3);
  CHECK(std::count_if(pts.begin(), pts.end(), [](const CylinderPoint &p) { return p.theta() == 0.0; }) == 3);
}

TEST_CASE("cone invariance verdicts") {
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const IntegratorConfig cfg;
  const StateGrid grid;
  double previous = -1e300;
  for (double k : {2.0, 2.5, 3.0, 4.0}) {
    const InvarianceReport r = verify_cone_invariance(test::pendulum(k, 0.0), cone, grid, 1.0, cfg);
    CHECK(r.min_infinitesimal == doctest::Approx(margin_oracle(k, grid)).epsilon(1e-12).scale(1.0));
    CHECK(r.min_infinitesimal >= previous);
    previous = r.min_infinitesimal;
    CHECK_FALSE(r.witness.has_value());
    if (k == 2.0) {
      CHECK(r.verdict == InvarianceVerdict::MarginallyInvariant);
      CHECK(std::abs(r.min_infinitesimal) <= 1e-9);
      CHECK(r.argmin_infinitesimal.x.theta() == 0.0);
      CHECK(r.argmin_ray == 1);
    } else {
      CHECK(r.verdict == InvarianceVerdict::StrictlyInvariant);
      CHECK(r.min_finite >= kStrictMargin);
    }
  }
  SUBCASE("violation below k = 2 carries a witness") {
    const InvarianceReport r = verify_cone_invariance(test::pendulum(1.0, 0.0), cone, grid, 1.0, cfg);
    CHECK(r.verdict == InvarianceVerdict::Violated);
    CHECK(r.min_infinitesimal == doctest::Approx(-1.0));
    REQUIRE(r.witness.has_value());
    const ConeWitness &w = *r.witness;
    CHECK(std::abs(w.x.theta()) <= 0.5);
    CHECK(w.t > 0.0);
    CHECK(w.t <= 1.0 + 1e-12);
    CHECK(w.margin < -kConeTolerance);
    // Re-push the witness ray independently and confirm it leaves the cone.
    const PlanarSystem weak = test::pendulum(1.0, 0.0);
    const Flow flow(weak, test::tight_cfg(), Channel::Prolonged);
    const FlowState end = flow.advance(flow.start(w.x, 0.0, w.d), w.t);
    CHECK(angle_diff(end.x.theta(), w.target.theta()) == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    CHECK(cone.margin(end.x, end.tangent.vec()) < -kConeTolerance);
    CHECK(cone_membership(cone, w.x, w.d).kind != Membership::Outside);
  }
  CHECK(to_string(InvarianceVerdict::StrictlyInvariant) != to_string(InvarianceVerdict::Violated));
}

TEST_CASE("Perron-Frobenius directions at equilibria") {
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const IntegratorConfig cfg;
  const PlanarSystem sys = test::pendulum(3.0, 0.0);
  const auto [node_slope, fast] = test::char_roots(3.0, 1.0);
  const auto [saddle_slope, stable] = test::char_roots(3.0, -1.0);
  const PFPoint node = pf_vector_at(sys, cone, CylinderPoint(0.0, 0.0), cfg);
  const PFPoint saddle = pf_vector_at(sys, cone, CylinderPoint(kPi, 0.0), cfg);
  CHECK(node.converged);
  CHECK(saddle.converged);
  CHECK(line_error(node.w, {1.0, node_slope}) <= 1e-4);
  CHECK(line_error(saddle.w, {1.0, saddle_slope}) <= 1e-4);
  CHECK(node.w.x > 0.0);
  CHECK(saddle.w.x > 0.0);
  CHECK(norm(node.w) == doctest::Approx(1.0));
}

TEST_CASE("Perron-Frobenius field properties") {
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const IntegratorConfig cfg;
  const PlanarSystem sys = test::pendulum(3.0, 0.5);
  StateGrid grid;
  grid.n_theta = 8;
  grid.n_v = 3;
  grid.v_lo = -1.0;
  grid.v_hi = 1.0;
  const PFField field = pf_vector_field(sys, cone, grid, cfg);
  REQUIRE(field.points.size() == 24);
  CHECK(field.converged());
  for (const PFPoint &p : field.points) {
    CHECK(p.residual <= PFOptions{}.tol);
    CHECK(p.w.x >= -kConeTolerance);
    CHECK(p.w.x + p.w.y >= -kConeTolerance);
    CHECK(cone_membership(cone, p.x, Tangent::from(p.w)).kind != Membership::Outside);
    // One more push lands on the direction attached to the image point.
    const Flow flow(sys, cfg, Channel::State);
    const CylinderPoint image = flow.advance(flow.start(p.x, 0.0), 1.0).x;
    const PFPoint there = pf_vector_at(sys, cone, image, cfg);
    CHECK(line_error(push(sys, p.x, p.w, 1.0), there.w) <= 1e-6);
  }
  SUBCASE("serial and parallel extraction agree") {
    const PFField other = pf_vector_field(sys, cone, grid, cfg, {}, 2);
    for (std::size_t i = 0; i < field.points.size(); ++i) {
      CHECK(other.points[i].w.x == field.points[i].w.x);
      CHECK(other.points[i].w.y == field.points[i].w.y);
    }
  }
}

TEST_CASE("projective contraction of interior seeds") {
  const PlanarSystem sys = test::pendulum(3.0, 0.0);
  CylinderPoint x(0.5, 0.3);
  Vec2 a{1.0, 0.0};
  Vec2 b{1.0, -0.5};
  double gap = line_error(a, b);
  const Flow flow(sys, IntegratorConfig{}, Channel::State);
  for (int n = 0; n < 12 && gap > 1e-12; ++n) {
    a = push(sys, x, a, 1.0);
    b = push(sys, x, b, 1.0);
    x = flow.advance(flow.start(x, 0.0), 1.0).x;
    const double next = line_error(a, b);
    CHECK(next < gap);
    gap = next;
  }
  CHECK(gap < 1e-3);
}

TEST_CASE("alignment of the vector field") {
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const IntegratorConfig cfg;
  SUBCASE("undefined at an equilibrium") {
    const PlanarSystem sys = test::pendulum(3.0, 0.0);
    StateGrid grid;
    grid.theta_lo = 0.0;
    grid.theta_hi = 0.0;
    grid.n_theta = 1;
    grid.v_lo = 0.0;
    grid.v_hi = 0.5;
    grid.n_v = 2;
    const auto al = vector_field_alignment(sys, pf_vector_field(sys, cone, grid, cfg));
    REQUIRE(al.size() == 2);
    CHECK_FALSE(al[0].defined);
    CHECK(std::isnan(al[0].sine));
    CHECK(al[1].defined);
    CHECK(al[1].sine >= 0.0);
    CHECK(al[1].sine <= 1.0);
  }
  SUBCASE("along the attracting cycle") {
    const AlignmentSeries s = alignment_along(test::pendulum(3.0, 1.5), cone, CylinderPoint(0.0, 0.0), cfg, 60.0, 0.1);
    REQUIRE(s.times.size() == s.sine.size());
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      if (s.times[i] >= 30.0) CHECK(s.sine[i] <= 1e-3);
    }
  }
  SUBCASE("along a trajectory converging to the node") {
    const AlignmentSeries s = alignment_along(test::pendulum(3.0, 0.0), cone, CylinderPoint(0.5, 0.0), cfg, 40.0, 0.5);
    CHECK(s.sine.back() <= 1e-3);
    CHECK(s.sine.front() > s.sine.back());
  }
}

TEST_CASE("limit-cycle certificate") {
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const IntegratorConfig cfg;
  SUBCASE("certified rotation") {
    const PendulumParams p = constant(3.0, 1.2);
    const Corollary2Result r = certify_corollary2(make_pendulum(p), p, cone, cfg);
    CHECK(r.certified);
    CHECK(r.v_bound == doctest::Approx(1.1 * 2.2 / 3.0));
    REQUIRE(r.cycle.has_value());
    CHECK(std::abs(r.cycle->rho2) < 1.0);
    CHECK(std::abs(r.cycle->rho1 - 1.0) <= 1e-4);
    CHECK(r.min_field_margin > 0.0);
    REQUIRE(r.invariance.has_value());
    CHECK(r.invariance->verdict == InvarianceVerdict::StrictlyInvariant);
  }
  SUBCASE("fixed points block the certificate") {
    const PendulumParams p = constant(3.0, 0.5);
    const Corollary2Result r = certify_corollary2(make_pendulum(p), p, cone, cfg);
    CHECK_FALSE(r.certified);
    CHECK(r.reason.find("fixed point") != std::string::npos);
    CHECK_FALSE(r.cycle.has_value());
  }
  SUBCASE("weak damping loses the cone") {
    const PendulumParams p = constant(1.0, 1.2);
    const Corollary2Result r = certify_corollary2(make_pendulum(p), p, cone, cfg);
    CHECK_FALSE(r.certified);
    CHECK(r.reason.find("cone") != std::string::npos);
    REQUIRE(r.invariance.has_value());
    CHECK(r.invariance->verdict != InvarianceVerdict::StrictlyInvariant);
  }
}

TEST_CASE("omega-limit dichotomy") {
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const IntegratorConfig cfg;
  SUBCASE("convergence to the node") {
    const DichotomyResult r = dichotomy_classify(test::pendulum(3.0, 0.0), cone, CylinderPoint(0.5, 0.0), cfg);
    CHECK(r.kind == DichotomyCase::FixedPoint);
    CHECK(std::abs(r.limit_point.theta()) <= 1e-6);
    CHECK(std::abs(r.limit_point.v()) <= 1e-6);
  }
  SUBCASE("rotation") {
    for (const CylinderPoint &x0 : {CylinderPoint(0.0, 0.0), CylinderPoint(2.0, -1.0)}) {
      const DichotomyResult r = dichotomy_classify(test::pendulum(3.0, 1.5), cone, x0, cfg);
      CHECK(r.kind == DichotomyCase::Cycle);
      CHECK(r.period > 0.0);
      CHECK(r.misalignment <= 1e-3);
    }
  }
  SUBCASE("starting on the saddle") {
    const DichotomyResult r = dichotomy_classify(test::pendulum(3.0, 0.0), cone, CylinderPoint(kPi, 0.0), cfg);
    CHECK(r.kind == DichotomyCase::FixedPoint);
    CHECK(std::abs(std::abs(r.limit_point.theta()) - kPi) <= 1e-9);
  }
  SUBCASE("a short horizon with persistent misalignment") {
    DichotomyOptions opt;
    opt.horizon = 5.0;
    opt.window = 2.0;
    const DichotomyResult r = dichotomy_classify(test::pendulum(0.1, 0.0), cone, CylinderPoint(1.0, 0.0), cfg, opt);
    CHECK(r.kind == DichotomyCase::CaseII);
    CHECK(r.misalignment > opt.alignment_tol);
  }
  SUBCASE("aligned drift without recurrence is inconclusive") {
    const PlanarSystem drift("drift", StateSpace::Plane, [](const Vec2 &, double) { return Vec2{1.0, 0.0}; },
                             [](const Vec2 &, double) { return Mat2{}; });
    const ConeFieldSpec wedge = ConeFieldSpec::constant({1.0, 1.0}, {1.0, -1.0});
    CHECK(kind_of([&] { dichotomy_classify(drift, wedge, CylinderPoint(0.0, 0.0), cfg); }) == ErrorKind::Inconclusive);
  }
}

TEST_CASE("homoclinic obstruction diagnostic") {
  const IntegratorConfig cfg;
  SUBCASE("strong damping") {
    const ObstructionReport r = homoclinic_obstruction_check(constant(3.0, 0.5), cfg);
    CHECK_FALSE(r.homoclinic);
    CHECK(std::abs(r.gap.gap) > 0.1);
    CHECK(r.verdict == InvarianceVerdict::StrictlyInvariant);
    CHECK_FALSE(r.obstruction);
    CHECK(r.pf_tangency_angle <= 1e-3);
  }
  SUBCASE("conservative loop") {
    const ObstructionReport r = homoclinic_obstruction_check(constant(0.0, 0.0), cfg);
    CHECK(r.homoclinic);
    CHECK(std::abs(r.gap.gap) <= 1e-4);
    CHECK(r.verdict == InvarianceVerdict::Violated);
    CHECK_FALSE(r.obstruction);
  }
  SUBCASE("weak damping at the homoclinic torque") {
    // Bisect the sign change of the gap directly.
    double lo = 0.1;
    double hi = 0.5;
    for (int i = 0; i < 30; ++i) {
      const double mid = 0.5 * (lo + hi);
      (homoclinic_gap(constant(0.2, mid), cfg).gap < 0.0 ? lo : hi) = mid;
    }
    const ObstructionReport r = homoclinic_obstruction_check(constant(0.2, 0.5 * (lo + hi)), cfg);
    CHECK(r.homoclinic);
    CHECK(r.verdict == InvarianceVerdict::Violated);
    CHECK_FALSE(r.obstruction);
  }
}
