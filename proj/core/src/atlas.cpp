#include "diffgeo/atlas.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "diffgeo/csv.hpp"
#include "diffgeo/error.hpp"
#include "diffgeo/parallel.hpp"

namespace diffgeo {

namespace {

enum class Fate { FixedPoint, Cycle, Undecided };

constexpr double kProbeChunk = 20.0;

double point_distance(const CylinderPoint &a, const CylinderPoint &b) {
  return std::hypot(angle_diff(a.theta(), b.theta()), a.v() - b.v());
}

Fate run_probe(const Flow &flow, const CylinderPoint &x0, const std::optional<FixedPoint> &fp,
               const std::optional<LimitCycle> &cycle, double budget, const CellOptions &opt) {
  FlowState s = flow.start(x0, 0.0);
  const int dir = cycle ? static_cast<int>(cycle->winding) : 0;
  while (s.t < budget) {
    s = flow.advance(s, std::min(s.t + kProbeChunk, budget));
    if (fp && point_distance(s.x, fp->point) < opt.fp_tol) return Fate::FixedPoint;
    if (cycle && s.x.v() * dir > 0.0) {
      const std::array<Event, 1> ev{
          Event{Event::Kind::Angle, cycle->anchor.theta(), dir, true}};
      FlowState end;
      const double limit = std::min(s.t + 2.0 * cycle->period + 1.0, budget);
      const auto hit = flow.advance_until(s, limit, ev, &end);
      if (!hit) {
        s = end;
        continue;
      }
      s = hit->state;
      if (std::abs(s.x.v() - cycle->anchor.v()) < opt.cycle_tol) return Fate::Cycle;
    }
  }
  return Fate::Undecided;
}

double log_or_linear(double lo, double hi, std::size_t n, std::size_t i, bool log_scale) {
  if (n <= 1) return lo;
  const double s = static_cast<double>(i) / static_cast<double>(n - 1);
  if (i + 1 == n) return hi;
  return log_scale ? lo * std::pow(hi / lo, s) : lo + (hi - lo) * s;
}

double gap_at(double k, double u, const IntegratorConfig &cfg) {
  return homoclinic_gap(PendulumParams{k, InputLaw::constant(u)}, cfg).gap;
}

CurvePoint bisect_curve(double k, const IntegratorConfig &cfg, const CurveOptions &opt) {
  double lo = 0.0;
  double hi = opt.u_hi;
  double g_lo = gap_at(k, lo, cfg);
  double g_hi = gap_at(k, hi, cfg);
  if (g_lo == 0.0) return {k, lo, g_lo};
  if (g_hi == 0.0) return {k, hi, g_hi};
  if ((g_lo > 0.0) == (g_hi > 0.0)) {
    throw Error(ErrorKind::NoSignChange,
                "homoclinic gap keeps one sign over u in (0, 1) at k=" + csv::format(k));
  }
  CurvePoint best{k, std::abs(g_lo) < std::abs(g_hi) ? lo : hi,
                  std::abs(g_lo) < std::abs(g_hi) ? g_lo : g_hi};
  for (int i = 0; i < opt.max_bisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double g = gap_at(k, mid, cfg);
    if (std::abs(g) < std::abs(best.gap)) best = {k, mid, g};
    if (std::abs(g) <= opt.gap_tol) return {k, mid, g};
    if ((g > 0.0) == (g_lo > 0.0)) {
      lo = mid;
      g_lo = g;
    } else {
      hi = mid;
    }
  }
  if (std::abs(best.gap) > opt.gap_tol) {
    throw Error(ErrorKind::NoConvergence,
                "homoclinic gap bisection stalled at k=" + csv::format(k) +
                    " with |gap|=" + csv::format(std::abs(best.gap)));
  }
  return best;
}

}  // namespace

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::FixedPointOnly: return "FixedPointOnly";
    case Regime::LimitCycleOnly: return "LimitCycleOnly";
    case Regime::Bistable: return "Bistable";
    case Regime::Boundary: return "Boundary";
  }
  return "?";
}

AtlasCell classify_cell(double k, double u, const IntegratorConfig &cfg, const CellOptions &opt) {
  if (!(k > 0.0) || !std::isfinite(u)) {
    throw Error(ErrorKind::InvalidArgument, "cells need k > 0 and a finite torque");
  }
  const PendulumParams params{k, InputLaw::constant(u)};
  const PlanarSystem sys = make_pendulum(params);
  AtlasCell cell;
  cell.k = k;
  cell.u = u;

  const double au = std::abs(u);
  const double budget =
      std::min(opt.max_time, 200.0 * std::max(1.0, 1.0 / k) / std::sqrt(std::abs(1.0 - au)));
  IntegratorConfig run = cfg;
  run.max_time = std::max(cfg.max_time, budget + 1.0);

  std::optional<FixedPoint> stable;
  for (const FixedPoint &fp : find_fixed_points(params)) {
    if (fp.stable()) stable = fp;
  }
  cell.has_stable_fp = stable.has_value();

  const double v_seed = 1.5 * (au + 1.0) / k;
  const double dir = u >= 0.0 ? 1.0 : -1.0;
  std::optional<LimitCycle> cycle;
  try {
    CycleOptions co;
    co.guess = dir * v_seed;
    co.max_period = budget;
    LimitCycle c = find_limit_cycle(sys, params, run, co);
    if (std::abs(c.rho2) < 1.0) cycle = std::move(c);
  } catch (const Error &e) {
    if (e.kind() != ErrorKind::NoCycle && e.kind() != ErrorKind::NoConvergence) throw;
  }
  cell.has_cycle = cycle.has_value();
  if (cycle) cell.period = cycle->period;

  std::vector<CylinderPoint> probes;
  if (stable) {
    const CylinderPoint &p = stable->point;
    probes.emplace_back(p.theta() + 0.1, p.v());
    probes.emplace_back(p.theta() - 0.1, p.v());
    probes.emplace_back(p.theta(), p.v() + 0.1);
    probes.emplace_back(p.theta(), p.v() - 0.1);
  }
  for (double th : {0.0, kPi}) {
    probes.emplace_back(th, v_seed);
    probes.emplace_back(th, -v_seed);
  }
  const Flow flow(sys, run, Channel::State);
  for (const CylinderPoint &x0 : probes) {
    switch (run_probe(flow, x0, stable, cycle, budget, opt)) {
      case Fate::FixedPoint: ++cell.probes_fp; break;
      case Fate::Cycle: ++cell.probes_cycle; break;
      case Fate::Undecided: ++cell.probes_undecided; break;
    }
  }

  const bool agree = cell.probes_undecided == 0;
  if (cell.has_stable_fp && cell.has_cycle) {
    cell.regime = agree && cell.probes_fp > 0 && cell.probes_cycle > 0 ? Regime::Bistable
                                                                      : Regime::Boundary;
  } else if (cell.has_stable_fp) {
    cell.regime = agree ? Regime::FixedPointOnly : Regime::Boundary;
  } else if (cell.has_cycle) {
    cell.regime = agree ? Regime::LimitCycleOnly : Regime::Boundary;
  } else {
    cell.regime = Regime::Boundary;
  }
  return cell;
}

std::vector<double> AtlasGrid::ks() const {
  if (n_k == 0 || !(k_lo > 0.0) || k_hi < k_lo) {
    throw Error(ErrorKind::InvalidArgument, "atlas k range must be positive and ordered");
  }
  std::vector<double> out(n_k);
  for (std::size_t i = 0; i < n_k; ++i) out[i] = log_or_linear(k_lo, k_hi, n_k, i, log_k);
  return out;
}

std::vector<double> AtlasGrid::us() const {
  if (n_u == 0 || u_hi < u_lo) throw Error(ErrorKind::InvalidArgument, "atlas u range must be ordered");
  std::vector<double> out(n_u);
  for (std::size_t i = 0; i < n_u; ++i) out[i] = log_or_linear(u_lo, u_hi, n_u, i, false);
  return out;
}

std::vector<AtlasCell> sweep(const AtlasGrid &grid, const IntegratorConfig &cfg,
                             const CellOptions &opt, unsigned jobs) {
  cfg.validate();
  const std::vector<double> ks = grid.ks();
  const std::vector<double> us = grid.us();
  std::vector<AtlasCell> cells(ks.size() * us.size());
  parallel_for(cells.size(), jobs, [&](std::size_t n) {
    cells[n] = classify_cell(ks[n / us.size()], us[n % us.size()], cfg, opt);
  });
  return cells;
}

void write_atlas_csv(std::ostream &os, const std::vector<AtlasCell> &cells) {
  csv::write_row(os, {"k", "u", "regime", "has_cycle", "has_stable_fp", "period"});
  for (const AtlasCell &c : cells) {
    csv::write_row(os, {csv::format(c.k), csv::format(c.u), std::string(to_string(c.regime)),
                        c.has_cycle ? "1" : "0", c.has_stable_fp ? "1" : "0",
                        c.period ? csv::format(*c.period) : ""});
  }
}

std::vector<CurvePoint> homoclinic_curve(const std::vector<double> &ks, const IntegratorConfig &cfg,
                                         const CurveOptions &opt, unsigned jobs) {
  for (double k : ks) {
    if (!(k > 0.0)) throw Error(ErrorKind::InvalidArgument, "homoclinic curve needs k > 0");
  }
  if (!(opt.u_hi > 0.0 && opt.u_hi < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "u bracket must lie in (0, 1)");
  }
  std::vector<CurvePoint> out(ks.size());
  parallel_for(ks.size(), jobs, [&](std::size_t i) { out[i] = bisect_curve(ks[i], cfg, opt); });
  return out;
}

void write_curve_csv(std::ostream &os, const std::vector<CurvePoint> &curve) {
  csv::write_row(os, {"k", "u_c"});
  for (const CurvePoint &p : curve) csv::write_row(os, {csv::format(p.k), csv::format(p.u_c)});
}

KcEstimate estimate_kc(const IntegratorConfig &cfg, const KcOptions &opt) {
  if (!(opt.k_lo > 0.0) || !(opt.k_hi > opt.k_lo) || !(opt.tol > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "k_c bracket must be positive and ordered");
  }
  const auto band = [&](double k) { return gap_at(k, opt.u_hi, cfg) > 0.0; };
  KcEstimate out;
  out.lo = opt.k_lo;
  out.hi = opt.k_hi;
  if (!band(out.lo) || band(out.hi)) {
    throw Error(ErrorKind::NoSignChange, "bistable band does not close inside the k bracket");
  }
  while (out.hi - out.lo > opt.tol && out.bisections < opt.max_bisections) {
    const double mid = 0.5 * (out.lo + out.hi);
    (band(mid) ? out.lo : out.hi) = mid;
    ++out.bisections;
  }
  out.converged = out.hi - out.lo <= opt.tol;
  out.k_c = 0.5 * (out.lo + out.hi);
  return out;
}

}  // namespace diffgeo
