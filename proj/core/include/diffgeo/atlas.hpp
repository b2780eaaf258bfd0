#pragma once

// The (k, u) behaviour map of the pendulum: regime classification per cell,
// grid sweeps, the homoclinic bifurcation curve u_c(k) and the critical
// damping k_c above which the bistable band disappears.

#include <cstddef>
#include <optional>
#include <ostream>
#include <string_view>
#include <utility>
#include <vector>

#include "diffgeo/integrate.hpp"
#include "diffgeo/orbits.hpp"

namespace diffgeo {

enum class Regime { FixedPointOnly, LimitCycleOnly, Bistable, Boundary };

std::string_view to_string(Regime r);

struct AtlasCell {
  double k{0.0};
  double u{0.0};
  Regime regime{Regime::Boundary};
  /// An attractive rotating cycle was located by shooting.
  bool has_cycle{false};
  bool has_stable_fp{false};
  std::optional<double> period;
  /// Basin probes that settled on the stable fixed point, on the cycle, or
  /// on neither within the time budget.
  int probes_fp{0};
  int probes_cycle{0};
  int probes_undecided{0};
};

struct CellOptions {
  /// Time budget cap; the budget is min(cap, 200 max(1, 1/k) / sqrt|1 - |u||),
  /// since both the period near |u| = 1 and the decay time near k = 0 diverge.
  double max_time{1e4};
  /// Wrapped distance to the stable fixed point counted as arrival.
  double fp_tol{1e-3};
  /// Velocity mismatch at the cycle's section counted as arrival.
  double cycle_tol{1e-4};
};

/// Eight deterministic basin probes: four at distance 0.1 around the stable
/// fixed point (when it exists) and four at |v| = 1.5 (|u| + 1) / k on
/// theta in {0, pi}. Bistable needs both attractors located and reached;
/// probes that disagree with the located attractors give Boundary.
/// Throws InvalidArgument unless k > 0.
AtlasCell classify_cell(double k, double u, const IntegratorConfig &cfg,
                        const CellOptions &opt = {});

struct AtlasGrid {
  double k_lo{0.05};
  double k_hi{4.0};
  std::size_t n_k{40};
  bool log_k{true};
  double u_lo{0.0};
  double u_hi{1.5};
  std::size_t n_u{60};

  std::vector<double> ks() const;
  std::vector<double> us() const;
};

/// Cells in k-major order; the output does not depend on `jobs`.
std::vector<AtlasCell> sweep(const AtlasGrid &grid, const IntegratorConfig &cfg,
                             const CellOptions &opt = {}, unsigned jobs = 1);

/// k,u,regime,has_cycle,has_stable_fp,period (period empty without a cycle).
void write_atlas_csv(std::ostream &os, const std::vector<AtlasCell> &cells);

struct CurveOptions {
  double gap_tol{1e-6};
  /// Upper end of the bracket in u; the gap is undefined at u = 1.
  double u_hi{1.0 - 1e-5};
  int max_bisections{200};
};

struct CurvePoint {
  double k{0.0};
  double u_c{0.0};
  double gap{0.0};
};

/// Bisection of the homoclinic gap in u over (0, u_hi) for each k. Throws
/// NoSignChange when the gap keeps one sign (no homoclinic orbit).
std::vector<CurvePoint> homoclinic_curve(const std::vector<double> &ks, const IntegratorConfig &cfg,
                                         const CurveOptions &opt = {}, unsigned jobs = 1);

/// k,u_c
void write_curve_csv(std::ostream &os, const std::vector<CurvePoint> &curve);

struct KcOptions {
  double k_lo{0.2};
  double k_hi{3.0};
  double tol{1e-3};
  double u_hi{1.0 - 1e-5};
  int max_bisections{60};
};

struct KcEstimate {
  double k_c{0.0};
  /// Final bracket: the band exists at lo and not at hi.
  double lo{0.0};
  double hi{0.0};
  int bisections{0};
  /// False when the bisection budget ran out before the tolerance.
  bool converged{false};
};

/// Largest k for which the bistable band (u_c(k), 1) is nonempty, from the
/// sign of the homoclinic gap just below u = 1. Throws NoSignChange when the
/// initial bracket does not straddle k_c.
KcEstimate estimate_kc(const IntegratorConfig &cfg, const KcOptions &opt = {});

}  // namespace diffgeo
