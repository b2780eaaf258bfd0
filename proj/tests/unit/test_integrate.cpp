#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "test_support.hpp"

#include "diffgeo/csv.hpp"
#include "diffgeo/error.hpp"
#include "diffgeo/integrate.hpp"

using namespace diffgeo;
using diffgeo::test::rng;
using diffgeo::test::uniform;

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

}  // namespace

TEST_CASE("configuration validation") {
  IntegratorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.method = FixedStepRK4{0.0};
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::InvalidArgument);
  cfg.method = AdaptiveRK45{1e-9, 0.0, 1e-12, 0.1};
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::InvalidArgument);
  cfg.method = AdaptiveRK45{1e-9, 1e-9, 0.2, 0.1};
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { integrate_state(test::pendulum(1, 0), {0, 0}, {}, {1.0, 1.0}); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("equilibria stay put") {
  const Trajectory tr = integrate_state(test::pendulum(1.0, 0.0), {0.0, 0.0}, {}, {0.0, 50.0});
  CHECK_NOTHROW(tr.validate());
  for (const auto &s : tr.states) {
    CHECK(s.theta() == 0.0);
    CHECK(s.v() == 0.0);
  }
}

TEST_CASE("decay to the stable node at large damping") {
  const auto sys = test::pendulum(3.0, 0.0);
  const Trajectory tr = integrate_state(sys, {0.1, 0.0}, {}, {0.0, 10.0});
  // Linearized solution from (0.1, 0): 0.1 (l2 e^{l1 t} - l1 e^{l2 t}) / (l2 - l1) along (1, l).
  const auto [l1, l2] = test::char_roots(3.0, 1.0);
  const double a = 0.1 * l2 / (l2 - l1);
  const double b = -0.1 * l1 / (l2 - l1);
  const double th = a * std::exp(10.0 * l1) + b * std::exp(10.0 * l2);
  const double v = a * l1 * std::exp(10.0 * l1) + b * l2 * std::exp(10.0 * l2);
  CHECK(std::abs(tr.back().theta()) + std::abs(tr.back().v()) <= 4e-3);
  CHECK(tr.back().theta() == doctest::Approx(th).epsilon(0.01));
  CHECK(tr.back().v() == doctest::Approx(v).epsilon(0.01));
  const Trajectory ref = integrate_state(sys, {0.1, 0.0}, IntegratorConfig{}.tightened(0.1), {0.0, 10.0});
  CHECK(std::abs(tr.back().theta() - ref.back().theta()) < 1e-8);
  CHECK(std::abs(tr.back().v() - ref.back().v()) < 1e-8);
}

TEST_CASE("undamped energy is conserved") {
  const Trajectory tr = integrate_state(test::pendulum(0.0, 0.0), {1.0, 0.0}, {}, {0.0, 100.0});
  const double e0 = energy(tr.states.front());
  double drift = 0.0;
  for (const auto &s : tr.states) drift = std::max(drift, std::abs(energy(s) - e0));
  CHECK(drift <= 1e-6);

  auto drift_at = [](double tol) {
    IntegratorConfig cfg;
    cfg.method = AdaptiveRK45{tol, tol, 1e-14, 0.1};
    const Trajectory t = integrate_state(test::pendulum(0.0, 0.0), {1.0, 0.0}, cfg, {0.0, 100.0});
    double d = 0.0;
    for (const auto &s : t.states) d = std::max(d, std::abs(energy(s) - energy(t.states.front())));
    return d;
  };
  // Global error is proportional to the tolerance.
  CHECK(drift_at(1e-11) < drift_at(1e-9) / 50.0);
}

TEST_CASE("rotations are tracked by the winding count") {
  const Trajectory tr = integrate_state(test::pendulum(0.5, 1.5), {0.0, 3.0}, {}, {0.0, 50.0});
  CHECK(tr.winding.back() > 3);
  for (std::size_t i = 1; i < tr.size(); ++i) {
    CHECK(std::abs(tr.lifted_theta(i) - tr.lifted_theta(i - 1)) < 1.0);
    CHECK(tr.states[i].theta() >= -kPi);
    CHECK(tr.states[i].theta() < kPi);
  }
}

TEST_CASE("output grid sampling") {
  IntegratorConfig cfg;
  cfg.output_dt = 0.25;
  const Trajectory tr = integrate_state(test::pendulum(0.5, 0.2), {1.0, 0.0}, cfg, {1.0, 3.0});
  REQUIRE(tr.size() == 9);
  for (std::size_t i = 0; i < tr.size(); ++i) CHECK(tr.times[i] == doctest::Approx(1.0 + 0.25 * i).epsilon(1e-15));
}

TEST_CASE("prolonged system") {
  const auto sys = test::pendulum(3.0, 0.0);
  SUBCASE("zero tangent stays zero") {
    const Trajectory tr = integrate_prolonged(test::pendulum(0.5, 1.2), {1.0, 0.5}, {0.0, 0.0}, {}, {0.0, 10.0});
    for (const auto &d : *tr.tangents) CHECK(d == Tangent{0.0, 0.0});
  }
  SUBCASE("at the equilibrium the tangent follows the matrix exponential") {
    const Trajectory tr = integrate_prolonged(sys, {0.0, 0.0}, {1.0, 0.0}, {}, {0.0, 1.0});
    const Vec2 want = test::expm({0.0, 1.0, -1.0, -3.0}, 1.0) * Vec2{1.0, 0.0};
    CHECK(std::abs(tr.tangents->back().dtheta - want.x) <= 1e-6);
    CHECK(std::abs(tr.tangents->back().dv - want.y) <= 1e-6);
  }
  SUBCASE("the tangent channel is linear") {
    auto g = rng(20);
    const auto forced = make_pendulum({0.4, InputLaw::sinusoidal(0.8, 0.5, 1.1)});
    for (int i = 0; i < 20; ++i) {
      const CylinderPoint x0{uniform(g, -kPi, kPi), uniform(g, -2.0, 2.0)};
      const Tangent d0{uniform(g, -1.0, 1.0), uniform(g, -1.0, 1.0)};
      const double lambda = uniform(g, -10.0, 10.0);
      const Trajectory a = integrate_prolonged(forced, x0, d0, {}, {0.0, 10.0});
      const Trajectory b = integrate_prolonged(forced, x0, {lambda * d0.dtheta, lambda * d0.dv}, {}, {0.0, 10.0});
      REQUIRE(a.size() == b.size());
      for (std::size_t j = 0; j < a.size(); ++j) {
        const Vec2 da = (*a.tangents)[j].vec();
        const Vec2 db = (*b.tangents)[j].vec();
        CHECK(norm(db - lambda * da) <= 1e-12 * std::max(1.0, norm(lambda * da)));
      }
    }
  }
}

TEST_CASE("fundamental matrix") {
  SUBCASE("starts at the identity") {
    const Trajectory tr = integrate_fundamental(test::pendulum(1.0, 0.3), {0.5, 0.5}, {}, {0.0, 1.0});
    CHECK(tr.fundamental->front() == Mat2::identity());
  }
  SUBCASE("determinant after unit time") {
    const Trajectory tr = integrate_fundamental(test::pendulum(2.0, 0.0), {1.0, 0.5}, {}, {0.0, 1.0});
    CHECK(tr.fundamental->back().det() == doctest::Approx(std::exp(-2.0)).epsilon(1e-6));
  }
  SUBCASE("frozen linearization at the equilibrium") {
    const Trajectory tr = integrate_fundamental(test::pendulum(3.0, 0.0), {0.0, 0.0}, {}, {0.0, 1.0});
    CHECK(max_abs_diff(tr.fundamental->back(), test::expm({0.0, 1.0, -1.0, -3.0}, 1.0)) <= 1e-6);
  }
  SUBCASE("columns are prolonged solutions") {
    const auto sys = make_pendulum({0.7, InputLaw::sinusoidal(0.5, 0.4, 2.0)});
    const Trajectory phi = integrate_fundamental(sys, {0.3, -0.4}, {}, {0.0, 5.0});
    const Trajectory col = integrate_prolonged(sys, {0.3, -0.4}, {0.0, 1.0}, {}, {0.0, 5.0});
    CHECK(norm(phi.fundamental->back().col1() - col.tangents->back().vec()) < 1e-12);
  }
  SUBCASE("Abel-Liouville along random trajectories") {
    auto g = rng(21);
    IntegratorConfig cfg;
    cfg.output_dt = 0.5;
    for (double k : {0.0, 0.5, 2.0, 3.0}) {
      for (int i = 0; i < 3; ++i) {
        const auto sys = test::pendulum(k, uniform(g, -1.5, 1.5));
        const Trajectory tr =
            integrate_fundamental(sys, {uniform(g, -kPi, kPi), uniform(g, -2.0, 2.0)}, cfg, {0.0, 20.0});
        for (std::size_t j = 0; j < tr.size(); ++j) {
          // ad - bc cancels once det is far below the entries; the
          // accumulated log det does not.
          const double det = std::exp((*tr.log_det)[j]);
          CHECK(det * std::exp(k * tr.times[j]) == doctest::Approx(1.0).epsilon(1e-6));
          if (tr.times[j] <= 2.0) {
            CHECK((*tr.fundamental)[j].det() > 0.0);
            CHECK((*tr.fundamental)[j].det() == doctest::Approx(det).epsilon(1e-8));
          }
        }
      }
    }
  }
}

TEST_CASE("determinism") {
  const auto sys = make_pendulum({0.3, InputLaw::sinusoidal(0.2, 1.2, 0.7)});
  const Trajectory a = integrate_fundamental(sys, {2.0, 1.0}, {}, {0.0, 30.0});
  const Trajectory b = integrate_fundamental(sys, {2.0, 1.0}, {}, {0.0, 30.0});
  std::ostringstream sa;
  std::ostringstream sb;
  write_csv(sa, a);
  write_csv(sb, b);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("fixed-step RK4 is fourth order") {
  const auto sys = test::pendulum(0.5, 0.8);
  const CylinderPoint x0{1.0, 0.5};
  const Trajectory ref = integrate_state(sys, x0, test::tight_cfg(1e-13), {0.0, 4.0});
  auto error = [&](double h) {
    IntegratorConfig cfg;
    cfg.method = FixedStepRK4{h};
    const Trajectory tr = integrate_state(sys, x0, cfg, {0.0, 4.0});
    return std::hypot(angle_diff(tr.back().theta(), ref.back().theta()), tr.back().v() - ref.back().v());
  };
  for (double h : {0.2, 0.1, 0.05}) {
    CAPTURE(h);
    CHECK(error(h) / error(h / 2.0) >= 8.0);
  }
}

TEST_CASE("integration failures") {
  const PlanarSystem blowup(
      "blowup", StateSpace::Plane, [](const Vec2 &x, double) { return Vec2{x.x * x.x, 0.0}; },
      [](const Vec2 &x, double) { return Mat2{2.0 * x.x, 0.0, 0.0, 0.0}; });
  IntegratorConfig adaptive;
  CHECK(kind_of([&] { integrate_state(blowup, {1.0, 0.0}, adaptive, {0.0, 2.0}); }) ==
        ErrorKind::StepSizeUnderflow);
  IntegratorConfig rk4;
  rk4.method = FixedStepRK4{0.1};
  CHECK(kind_of([&] { integrate_state(blowup, {1.0, 0.0}, rk4, {0.0, 5.0}); }) == ErrorKind::NonFiniteState);
}

TEST_CASE("section crossings") {
  SUBCASE("a constant trajectory crosses nothing") {
    const Trajectory tr = integrate_state(test::pendulum(1.0, 0.0), {0.0, 0.0}, {}, {0.0, 10.0});
    CHECK(detect_crossings(tr, {SectionSpec::Kind::AngleCrossing, 1.0, 0}).crossings.empty());
    CHECK(detect_crossings(tr, {SectionSpec::Kind::VelocityCrossing, 0.5, 0}).crossings.empty());
  }
  SUBCASE("the rotating attractor returns with a constant period") {
    const auto sys = test::pendulum(0.5, 1.5);
    const SectionSpec sec{SectionSpec::Kind::AngleCrossing, 0.0, +1};
    const SectionEvent ev = detect_crossings(sys, {0.0, 3.0}, {}, {0.0, 300.0}, sec);
    REQUIRE(ev.crossings.size() > 20);
    std::vector<double> periods;
    for (std::size_t i = ev.crossings.size() - 10; i < ev.crossings.size(); ++i) {
      periods.push_back(ev.crossings[i].t - ev.crossings[i - 1].t);
    }
    const auto [lo, hi] = std::minmax_element(periods.begin(), periods.end());
    CHECK(*hi - *lo <= 1e-6);
    for (const Crossing &c : ev.crossings) CHECK(std::abs(c.residual) <= 1e-10);
    const Trajectory tr = integrate_state(sys, {0.0, 3.0}, {}, {0.0, 300.0});
    const SectionEvent stored = detect_crossings(tr, sec);
    REQUIRE(stored.crossings.size() == ev.crossings.size());
    CHECK(stored.crossings.back().t == doctest::Approx(ev.crossings.back().t).epsilon(1e-8));
  }
  SUBCASE("small oscillations have period 2 pi") {
    const auto sys = test::pendulum(0.0, 0.0);
    const SectionSpec up{SectionSpec::Kind::VelocityCrossing, 0.0, +1};
    const SectionEvent ev = detect_crossings(sys, {1e-3, 0.0}, {}, {0.0, 40.0}, up);
    REQUIRE(ev.crossings.size() >= 3);
    const double T = (ev.crossings.back().t - ev.crossings.front().t) / double(ev.crossings.size() - 1);
    CHECK(T == doctest::Approx(kTwoPi).epsilon(0.01));
  }
  SUBCASE("direction filter") {
    const auto sys = test::pendulum(0.0, 0.0);
    const Trajectory tr = integrate_state(sys, {1.0, 0.0}, {}, {0.0, 30.0});
    const auto both = detect_crossings(tr, {SectionSpec::Kind::AngleCrossing, 0.0, 0}).crossings;
    const auto rising = detect_crossings(tr, {SectionSpec::Kind::AngleCrossing, 0.0, +1}).crossings;
    const auto falling = detect_crossings(tr, {SectionSpec::Kind::AngleCrossing, 0.0, -1}).crossings;
    CHECK(both.size() == rising.size() + falling.size());
    CHECK(!rising.empty());
    for (const auto &c : rising) CHECK(c.x.v() > 0.0);
    for (const auto &c : falling) CHECK(c.x.v() < 0.0);
  }
  SUBCASE("live search stops after the requested count") {
    const auto ev = detect_crossings(test::pendulum(0.5, 1.5), {0.0, 3.0}, {}, {0.0, 300.0},
                                     {SectionSpec::Kind::AngleCrossing, 0.0, +1}, 3);
    CHECK(ev.crossings.size() == 3);
  }
}

TEST_CASE("trajectory CSV") {
  IntegratorConfig cfg;
  cfg.output_dt = 0.5;
  const Trajectory tr = integrate_fundamental(test::pendulum(1.0, 0.0), {1.0, 0.0}, cfg, {0.0, 1.0});
  std::ostringstream os;
  write_csv(os, tr);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,theta,v,winding,phi11,phi12,phi21,phi22");
  std::string row;
  std::getline(is, row);
  CHECK(row == "0,1,0,0,1,0,0,1");
  CHECK(os.str().find('\r') == std::string::npos);
  CHECK(csv::format(0.1) == "0.10000000000000001");
  CHECK(std::stod(csv::format(kPi)) == kPi);

  const Trajectory pro = integrate_prolonged(test::pendulum(1.0, 0.0), {1.0, 0.0}, {1.0, 0.0}, cfg, {0.0, 1.0});
  std::ostringstream ps;
  write_csv(ps, pro);
  CHECK(ps.str().rfind("t,theta,v,winding,dtheta,dv\n", 0) == 0);
}
