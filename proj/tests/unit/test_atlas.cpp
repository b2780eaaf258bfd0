#include <cmath>
#include <functional>
#include <sstream>
#include <string>

#include "doctest.h"
#include "test_support.hpp"

#include "diffgeo/atlas.hpp"
#include "diffgeo/error.hpp"

using namespace diffgeo;

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

/// First-order Melnikov balance for small damping: the energy lost along the
/// undamped separatrix, k * integral v^2 dt = 8k, equals the work of the
/// torque, u * 2 pi.
double melnikov_uc(double k) { return 4.0 * k / kPi; }

std::string first_line(const std::string &s) { return s.substr(0, s.find('\n')); }

AtlasGrid small_grid() {
  AtlasGrid g;
  g.k_lo = 0.2;
  g.k_hi = 3.0;
  g.n_k = 4;
  g.u_lo = 0.3;
  g.u_hi = 1.5;
  g.n_u = 5;
  return g;
}

}  // namespace

TEST_CASE("regime of single cells") {
  const IntegratorConfig cfg;
  const AtlasCell fp = classify_cell(3.0, 0.5, cfg);
  CHECK(fp.regime == Regime::FixedPointOnly);
  CHECK(fp.has_stable_fp);
  CHECK_FALSE(fp.has_cycle);
  CHECK_FALSE(fp.period.has_value());
  CHECK(fp.probes_fp == 8);

  const AtlasCell lc = classify_cell(3.0, 1.5, cfg);
  CHECK(lc.regime == Regime::LimitCycleOnly);
  CHECK(lc.has_cycle);
  CHECK_FALSE(lc.has_stable_fp);
  REQUIRE(lc.period.has_value());
  CHECK(*lc.period > 0.0);
  CHECK(lc.probes_cycle == 4);

  const AtlasCell bi = classify_cell(0.2, 0.95, cfg);
  CHECK(bi.regime == Regime::Bistable);
  CHECK(bi.has_cycle);
  CHECK(bi.has_stable_fp);
  CHECK(bi.probes_fp > 0);
  CHECK(bi.probes_cycle > 0);
  CHECK(bi.probes_undecided == 0);

  CHECK(kind_of([&] { classify_cell(0.0, 0.5, cfg); }) == ErrorKind::InvalidArgument);
  CHECK(to_string(Regime::Bistable) != to_string(Regime::Boundary));
}

TEST_CASE("grid axes") {
  AtlasGrid g;
  const auto ks = g.ks();
  const auto us = g.us();
  REQUIRE(ks.size() == 40);
  REQUIRE(us.size() == 60);
  CHECK(ks.front() == doctest::Approx(0.05));
  CHECK(ks.back() == doctest::Approx(4.0));
  // Log spacing: constant ratio.
  CHECK(ks[1] / ks[0] == doctest::Approx(ks[39] / ks[38]));
  CHECK(us[1] - us[0] == doctest::Approx(1.5 / 59.0));
  g.log_k = false;
  const auto lin = g.ks();
  CHECK(lin[1] - lin[0] == doctest::Approx(lin[39] - lin[38]));
}

TEST_CASE("sweep invariants and determinism") {
  const IntegratorConfig cfg;
  const AtlasGrid grid = small_grid();
  const auto cells = sweep(grid, cfg);
  REQUIRE(cells.size() == 20);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const AtlasCell &c = cells[i];
    CHECK(c.k == doctest::Approx(grid.ks()[i / grid.n_u]));
    CHECK(c.u == doctest::Approx(grid.us()[i % grid.n_u]));
    if (std::abs(c.u) > 1.0) CHECK(c.regime == Regime::LimitCycleOnly);
    if (c.k >= 2.5 && std::abs(c.u) < 1.0) CHECK(c.regime != Regime::Bistable);
    if (c.regime == Regime::Bistable) {
      CHECK(c.has_cycle);
      CHECK(c.has_stable_fp);
    }
  }
  std::ostringstream serial;
  std::ostringstream parallel;
  write_atlas_csv(serial, cells);
  write_atlas_csv(parallel, sweep(grid, cfg, {}, 2));
  CHECK(serial.str() == parallel.str());
  CHECK(first_line(serial.str()) == "k,u,regime,has_cycle,has_stable_fp,period");
}

TEST_CASE("homoclinic bifurcation curve") {
  const IntegratorConfig cfg;
  const auto curve = homoclinic_curve({0.05, 0.1, 0.2}, cfg);
  REQUIRE(curve.size() == 3);
  for (const CurvePoint &p : curve) CHECK(std::abs(p.gap) <= 1e-6);
  CHECK(std::abs(curve[0].u_c / melnikov_uc(0.05) - 1.0) <= 0.15);
  CHECK(std::abs(curve[1].u_c / melnikov_uc(0.1) - 1.0) <= 0.15);
  CHECK(curve[0].u_c < curve[1].u_c);
  CHECK(curve[1].u_c < curve[2].u_c);
  // The gap changes sign across the curve.
  CHECK(homoclinic_gap({0.1, InputLaw::constant(curve[1].u_c - 1e-3)}, cfg).gap < 0.0);
  CHECK(homoclinic_gap({0.1, InputLaw::constant(curve[1].u_c + 1e-3)}, cfg).gap > 0.0);

  SUBCASE("bistable above the curve") {
    for (const CurvePoint &p : {curve[1], curve[2]}) {
      for (double u : {p.u_c + 0.03, 0.5 * (p.u_c + 1.0), 0.97}) {
        CHECK(classify_cell(p.k, u, cfg).regime == Regime::Bistable);
      }
    }
  }
  SUBCASE("parallel evaluation") {
    const auto again = homoclinic_curve({0.05, 0.1, 0.2}, cfg, {}, 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(again[i].u_c == curve[i].u_c);
  }
  SUBCASE("csv") {
    std::ostringstream os;
    write_curve_csv(os, curve);
    CHECK(first_line(os.str()) == "k,u_c");
  }
}

TEST_CASE("no homoclinic orbit at strong damping") {
  CHECK(kind_of([] { homoclinic_curve({3.0}, IntegratorConfig{}); }) == ErrorKind::NoSignChange);
}

TEST_CASE("critical damping") {
  const IntegratorConfig cfg;
  const KcEstimate e = estimate_kc(cfg);
  CHECK(e.converged);
  CHECK(e.k_c > 0.2);
  CHECK(e.k_c < 3.0);
  CHECK(e.lo <= e.k_c);
  CHECK(e.k_c <= e.hi);
  CHECK(e.hi - e.lo <= 1e-3);
  // The band exists just below and is gone just above.
  const double u_top = 1.0 - 1e-5;
  CHECK(homoclinic_gap({e.lo, InputLaw::constant(u_top)}, cfg).gap > 0.0);
  CHECK(homoclinic_gap({e.hi, InputLaw::constant(u_top)}, cfg).gap < 0.0);
  KcOptions bad;
  bad.k_lo = 2.0;
  CHECK(kind_of([&] { estimate_kc(cfg, bad); }) == ErrorKind::NoSignChange);
}
