#include <cmath>
#include <fstream>
#include <sstream>

#include "diffgeo/atlas.hpp"
#include "diffgeo/contraction.hpp"
#include "diffgeo/csv.hpp"
#include "diffgeo/error.hpp"
#include "diffgeo/orbits.hpp"
#include "diffgeo/positivity.hpp"
#include "diffgeo_lab/cli.hpp"

namespace diffgeo::lab {

namespace {

using csv::format;

json complex_json(std::complex<double> c) { return json::array({c.real(), c.imag()}); }
json point_json(const CylinderPoint &p) { return json::array({p.theta(), p.v()}); }
json vec_json(const Vec2 &v) { return json::array({v.x, v.y}); }
json mat_json(const Mat2 &m) { return json::array({json::array({m.a, m.b}), json::array({m.c, m.d})}); }

double num(const json &a, const char *key) { return a.at(key).get<double>(); }
std::size_t count(const json &a, const char *key) { return a.at(key).get<std::size_t>(); }

void say(const Context &ctx, const std::string &name, const std::string &status) {
  if (ctx.log) *ctx.log << name << ": " << status << "\n";
}

std::string trajectory_text(const Trajectory &t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

PlanarSystem pendulum_only(const json &s, const char *what) {
  if (s.at("system").get<std::string>() != "pendulum") {
    throw ScenarioError(std::string(what) + " needs \"system\": \"pendulum\"");
  }
  return system_from_scenario(s);
}

// Field tables shared by several subcommands.

const Field kX0{"x0", FieldKind::Reals, json::array({1.0, 0.0}), {}, 2};
const Field kT0{"t0", FieldKind::Real, 0.0};
const Field kT1{"t1", FieldKind::Real, 10.0};
const Field kCone{"cone", FieldKind::Cone, "pendulum-default"};

std::vector<Field> cycle_fields() {
  return {{"section", FieldKind::Real, 0.0},
          {"guess", FieldKind::OptionalReal, nullptr},
          {"max_settle", FieldKind::Count, 400},
          {"max_newton", FieldKind::Count, 50},
          {"tol", FieldKind::Real, 1e-10},
          {"max_period", FieldKind::Real, 1e4}};
}

std::vector<Field> grid_fields(std::size_t n_theta, std::size_t n_v) {
  return {{"theta_lo", FieldKind::Real, -kPi}, {"theta_hi", FieldKind::Real, kPi},
          {"n_theta", FieldKind::Count, n_theta}, {"v_lo", FieldKind::Real, -3.0},
          {"v_hi", FieldKind::Real, 3.0},         {"n_v", FieldKind::Count, n_v}};
}

template <typename... Parts>
std::vector<Field> join(Parts &&...parts) {
  std::vector<Field> out;
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

CycleOptions cycle_options(const json &a) {
  CycleOptions o;
  o.section = num(a, "section");
  if (!a.at("guess").is_null()) o.guess = num(a, "guess");
  o.max_settle = static_cast<int>(count(a, "max_settle"));
  o.max_newton = static_cast<int>(count(a, "max_newton"));
  o.tol = num(a, "tol");
  o.max_period = num(a, "max_period");
  return o;
}

StateGrid state_grid(const json &a) {
  return {num(a, "theta_lo"), num(a, "theta_hi"), count(a, "n_theta"),
          num(a, "v_lo"),     num(a, "v_hi"),     count(a, "n_v")};
}

LimitCycle cycle_for(const Context &ctx, const PlanarSystem &sys, IntegratorConfig cfg) {
  return find_limit_cycle(sys, params_from_scenario(ctx.scenario), cfg, cycle_options(ctx.analysis()));
}

json sample_json(const DecaySample &s) {
  return {{"theta", s.theta}, {"v", s.v}, {"dtheta", s.d.dtheta}, {"dv", s.d.dv}, {"vdot", s.vdot}};
}

std::string pair_text(const PairConvergence &p) {
  std::ostringstream os;
  csv::write_row(os, {"t", "distance"});
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    csv::write_row(os, {format(p.times[i]), format(p.distance[i])});
  }
  return os.str();
}

json pair_json(const PairConvergence &p) {
  return {{"rate", p.rate}, {"terminal", p.terminal}, {"eventually_decreasing", p.eventually_decreasing}};
}

// Subcommands.

int simulate(const Context &ctx) {
  const json &a = ctx.analysis();
  const Trajectory t = integrate_state(system_from_scenario(ctx.scenario), point_from_json(a.at("x0")),
                                       config_from_json(ctx.scenario.at("integrator")),
                                       {num(a, "t0"), num(a, "t1")});
  ctx.write("trajectory.csv", trajectory_text(t));
  say(ctx, "simulate", std::to_string(t.size()) + " samples");
  return kExitOk;
}

int prolonged(const Context &ctx) {
  const json &a = ctx.analysis();
  const Trajectory t = integrate_prolonged(
      system_from_scenario(ctx.scenario), point_from_json(a.at("x0")), tangent_from_json(a.at("d0")),
      config_from_json(ctx.scenario.at("integrator")), {num(a, "t0"), num(a, "t1")});
  ctx.write("trajectory.csv", trajectory_text(t));
  say(ctx, "prolonged", std::to_string(t.size()) + " samples");
  return kExitOk;
}

int fundamental(const Context &ctx) {
  const json &a = ctx.analysis();
  const Trajectory t = integrate_fundamental(system_from_scenario(ctx.scenario),
                                             point_from_json(a.at("x0")),
                                             config_from_json(ctx.scenario.at("integrator")),
                                             {num(a, "t0"), num(a, "t1")});
  ctx.write("trajectory.csv", trajectory_text(t));
  say(ctx, "fundamental", std::to_string(t.size()) + " samples");
  return kExitOk;
}

int fixed_points(const Context &ctx) {
  json list = json::array();
  const auto fps = find_fixed_points(params_from_scenario(ctx.scenario));
  for (const FixedPoint &fp : fps) {
    list.push_back({{"point", point_json(fp.point)},
                    {"lambda1", complex_json(fp.lambda1)},
                    {"lambda2", complex_json(fp.lambda2)},
                    {"classification", to_string(fp.classification)},
                    {"stable", fp.stable()}});
  }
  ctx.write_json("fixed_points.json", {{"fixed_points", list}});
  say(ctx, "fixed-points", std::to_string(fps.size()) + " found");
  return kExitOk;
}

int limit_cycle(const Context &ctx) {
  const PlanarSystem sys = pendulum_only(ctx.scenario, "limit-cycle");
  const LimitCycle c = cycle_for(ctx, sys, config_from_json(ctx.scenario.at("integrator")));
  ctx.write_json("limit_cycle.json", {{"anchor", point_json(c.anchor)},
                                      {"period", c.period},
                                      {"winding", c.winding},
                                      {"rho1", complex_json(c.rho1)},
                                      {"rho2", complex_json(c.rho2)},
                                      {"monodromy", mat_json(c.monodromy)},
                                      {"log_det_monodromy", c.log_det_monodromy},
                                      {"closure", c.closure},
                                      {"residual", c.residual},
                                      {"newton_steps", c.newton_steps}});
  ctx.write("cycle.csv", trajectory_text(c.samples));
  say(ctx, "limit-cycle", "period " + format(c.period));
  return kExitOk;
}

int floquet(const Context &ctx) {
  const PlanarSystem sys = pendulum_only(ctx.scenario, "floquet");
  const IntegratorConfig cfg = config_from_json(ctx.scenario.at("integrator"));
  const LimitCycle c = cycle_for(ctx, sys, cfg);
  const double k = num(ctx.scenario, "k");
  ctx.write_json("floquet.json", {{"period", c.period},
                                  {"rho1", complex_json(c.rho1)},
                                  {"rho2", complex_json(c.rho2)},
                                  {"abs_rho2", std::abs(c.rho2)},
                                  {"product", (c.rho1 * c.rho2).real()},
                                  {"exp_minus_kT", std::exp(-k * c.period)},
                                  {"attractive", std::abs(c.rho2) < 1.0}});
  say(ctx, "floquet", "rho2 " + format(std::abs(c.rho2)));
  return std::abs(c.rho2) < 1.0 ? kExitOk : kExitNegative;
}

int horizontal(const Context &ctx) {
  const json &a = ctx.analysis();
  const double sign = num(a, "sign");
  if (sign != 1.0 && sign != -1.0) throw ScenarioError("analysis.sign: expected 1 or -1");
  const PlanarSystem sys = pendulum_only(ctx.scenario, "horizontal");
  const IntegratorConfig cfg = config_from_json(ctx.scenario.at("integrator"));
  const LimitCycle c = cycle_for(ctx, sys, cfg);
  const HorizontalContraction h =
      horizontal_contraction_near_cycle(c, sys, cfg, count(a, "samples"), static_cast<int>(sign));
  std::ostringstream os;
  csv::write_row(os, {"t", "log_factor"});
  for (std::size_t i = 0; i < h.times.size(); ++i) {
    csv::write_row(os, {format(h.times[i]), format(h.log_factor[i])});
  }
  ctx.write("horizontal.csv", os.str());
  ctx.write_json("horizontal.json", {{"period", c.period},
                                     {"factor", h.factor},
                                     {"abs_rho2", std::abs(c.rho2)},
                                     {"relative_difference",
                                      std::abs(h.factor - std::abs(c.rho2)) / std::abs(c.rho2)}});
  say(ctx, "horizontal", "factor " + format(h.factor));
  return h.factor < 1.0 ? kExitOk : kExitNegative;
}

int lyapunov(const Context &ctx) {
  const json &a = ctx.analysis();
  LyapunovOptions o;
  o.horizon = num(a, "horizon");
  o.renorm_interval = num(a, "renorm_interval");
  o.d0 = tangent_from_json(a.at("d0"));
  const LyapunovEstimate e =
      max_lyapunov_exponent(system_from_scenario(ctx.scenario), point_from_json(a.at("x0")),
                            config_from_json(ctx.scenario.at("integrator")), o);
  std::ostringstream os;
  csv::write_row(os, {"t", "lambda"});
  for (std::size_t i = 0; i < e.times.size(); ++i) {
    csv::write_row(os, {format(e.times[i]), format(e.series[i])});
  }
  ctx.write("lyapunov.csv", os.str());
  ctx.write_json("lyapunov.json", {{"exponent", e.exponent}, {"band", e.band}});
  say(ctx, "lyapunov", "exponent " + format(e.exponent));
  return kExitOk;
}

int decay_scan(const Context &ctx) {
  const json &a = ctx.analysis();
  const FinslerLyapunov V = metric_from_json(a.at("metric"), num(a, "eta"));
  DecayGrid g;
  g.theta_lo = num(a, "theta_lo");
  g.theta_hi = num(a, "theta_hi");
  g.n_theta = count(a, "n_theta");
  g.v_lo = num(a, "v_lo");
  g.v_hi = num(a, "v_hi");
  g.n_v = count(a, "n_v");
  g.n_dirs = count(a, "n_dirs");
  g.t = num(a, "t");
  std::optional<Projection> proj;
  if (a.at("projection").get<std::string>() == "transversal") {
    proj = Projection{Projection::Kind::TransversalToFlow};
  }
  const DecayReport r = scan_decay(V, system_from_scenario(ctx.scenario), g, proj, ctx.jobs);
  json violations = json::array();
  for (const DecaySample &s : r.violations) violations.push_back(sample_json(s));
  ctx.write_json("decay.json", {{"metric", V.name()},
                                {"certified", r.certified()},
                                {"samples", r.samples},
                                {"min_vdot", r.min_vdot},
                                {"max_vdot", r.max_vdot},
                                {"argmin", sample_json(r.argmin)},
                                {"argmax", sample_json(r.argmax)},
                                {"violation_count", r.violation_count},
                                {"non_strict", r.non_strict},
                                {"violations", violations}});
  say(ctx, "decay-scan", r.certified() ? "certified" : "not certified");
  return r.certified() ? kExitOk : kExitNegative;
}

PairOptions pair_options(const json &a) {
  PairOptions o;
  o.horizon = num(a, "horizon");
  o.output_dt = num(a, "output_dt");
  o.transient_fraction = num(a, "transient_fraction");
  return o;
}

int pair_contraction(const Context &ctx) {
  const json &a = ctx.analysis();
  const PairConvergence p = verify_pair_contraction(
      system_from_scenario(ctx.scenario), point_from_json(a.at("x0")), point_from_json(a.at("z0")),
      metric_from_json(a.at("metric"), num(a, "eta")), config_from_json(ctx.scenario.at("integrator")),
      pair_options(a));
  ctx.write("pair.csv", pair_text(p));
  ctx.write_json("pair.json", pair_json(p));
  say(ctx, "pair-contraction", "terminal distance " + format(p.terminal));
  return p.eventually_decreasing ? kExitOk : kExitNegative;
}

int entrain(const Context &ctx) {
  const json &a = ctx.analysis();
  if (ctx.scenario.at("system").get<std::string>() != "overdamped") {
    throw ScenarioError("entrain needs \"system\": \"overdamped\"");
  }
  const PlanarSystem sys = system_from_scenario(ctx.scenario);
  const IntegratorConfig cfg = config_from_json(ctx.scenario.at("integrator"));
  const CylinderPoint x0(a.at("theta0")[0].get<double>(), 0.0);
  const CylinderPoint z0(a.at("theta0")[1].get<double>(), 0.0);
  const PairOptions o = pair_options(a);
  const PairConvergence p =
      verify_pair_contraction(sys, x0, z0, FinslerLyapunov::weighted_angle(num(a, "eta")), cfg, o);
  IntegratorConfig sampled = cfg;
  sampled.output_dt = o.output_dt;
  const Trajectory ta = integrate_state(sys, x0, sampled, {0.0, o.horizon});
  const Trajectory tb = integrate_state(sys, z0, sampled, {0.0, o.horizon});
  std::ostringstream os;
  csv::write_row(os, {"t", "theta_a", "theta_b", "distance"});
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    csv::write_row(os, {format(p.times[i]), format(ta.states[i].theta()), format(tb.states[i].theta()),
                        format(p.distance[i])});
  }
  ctx.write("entrain.csv", os.str());
  ctx.write_json("entrain.json", pair_json(p));
  say(ctx, "entrain", "terminal distance " + format(p.terminal));
  return p.eventually_decreasing ? kExitOk : kExitNegative;
}

int interconnect(const Context &ctx) {
  const json &a = ctx.analysis();
  const InputLaw q1 = input_from_json(a.at("q1"));
  const InputLaw q2 = input_from_json(a.at("q2"));
  const IntegratorConfig cfg = config_from_json(ctx.scenario.at("integrator"));
  const double horizon = num(a, "horizon");
  const double dt = num(a, "output_dt");
  const auto &x0 = a.at("x0");
  const auto &z0 = a.at("z0");
  const InterconnectResult ra =
      interconnect_passive(q1, q2, x0[0].get<double>(), x0[1].get<double>(), cfg, horizon, dt);
  const InterconnectResult rb =
      interconnect_passive(q1, q2, z0[0].get<double>(), z0[1].get<double>(), cfg, horizon, dt);
  const FinslerLyapunov V = FinslerLyapunov::weighted_angle();
  std::ostringstream os;
  csv::write_row(os, {"t", "theta1_a", "theta2_a", "theta1_b", "theta2_b", "distance1"});
  double terminal = 0.0;
  for (std::size_t i = 0; i < ra.times.size(); ++i) {
    terminal = geodesic_distance(V, ra.theta1[i], rb.theta1[i]);
    csv::write_row(os, {format(ra.times[i]), format(ra.theta1[i]), format(ra.theta2[i]),
                        format(rb.theta1[i]), format(rb.theta2[i]), format(terminal)});
  }
  ctx.write("interconnect.csv", os.str());
  ctx.write_json("interconnect.json", {{"terminal_distance1", terminal}});
  say(ctx, "interconnect", "terminal distance " + format(terminal));
  return kExitOk;
}

json invariance_json(const InvarianceReport &r) {
  json witness = nullptr;
  if (r.witness) {
    const ConeWitness &w = *r.witness;
    witness = {{"x", point_json(w.x)},
               {"d", vec_json(w.d.vec())},
               {"t", w.t},
               {"target", point_json(w.target)},
               {"pushed", vec_json(w.pushed.vec())},
               {"margin", w.margin}};
  }
  return {{"verdict", to_string(r.verdict)},
          {"tau", r.tau},
          {"points", r.points.size()},
          {"min_infinitesimal", r.min_infinitesimal},
          {"argmin_infinitesimal",
           {{"x", point_json(r.argmin_infinitesimal.x)}, {"ray", r.argmin_ray}}},
          {"min_finite", r.min_finite},
          {"witness", witness}};
}

int cone_verify(const Context &ctx) {
  const json &a = ctx.analysis();
  const InvarianceReport r = verify_cone_invariance(
      pendulum_only(ctx.scenario, "cone-verify"), cone_from_json(a.at("cone")), state_grid(a),
      num(a, "tau"), config_from_json(ctx.scenario.at("integrator")), ctx.jobs);
  ctx.write_json("invariance.json", invariance_json(r));
  say(ctx, "cone-verify", std::string(to_string(r.verdict)));
  return r.verdict == InvarianceVerdict::StrictlyInvariant ? kExitOk : kExitNegative;
}

int pf_field(const Context &ctx) {
  const json &a = ctx.analysis();
  PFOptions o;
  o.push_time = num(a, "push_time");
  o.max_pushes = static_cast<int>(count(a, "max_pushes"));
  o.tol = num(a, "tol");
  o.v_escape = num(a, "v_escape");
  const PFField f =
      pf_vector_field(pendulum_only(ctx.scenario, "pf-field"), cone_from_json(a.at("cone")),
                      state_grid(a), config_from_json(ctx.scenario.at("integrator")), o, ctx.jobs);
  std::ostringstream os;
  csv::write_row(os, {"theta", "v", "w_theta", "w_v", "residual"});
  std::size_t missed = 0;
  for (const PFPoint &p : f.points) {
    csv::write_row(os, {format(p.x.theta()), format(p.x.v()), format(p.w.x), format(p.w.y),
                        format(p.residual)});
    if (!p.converged) ++missed;
  }
  ctx.write("pf_field.csv", os.str());
  say(ctx, "pf-field", missed == 0 ? "converged" : std::to_string(missed) + " points unconverged");
  return missed == 0 ? kExitOk : kExitNegative;
}

int corollary2(const Context &ctx) {
  const json &a = ctx.analysis();
  Corollary2Options o;
  o.rho = num(a, "rho");
  o.tau = num(a, "tau");
  o.n_theta = count(a, "n_theta");
  o.n_v = count(a, "n_v");
  o.transient = num(a, "transient");
  o.sample_horizon = num(a, "sample_horizon");
  const PlanarSystem sys = pendulum_only(ctx.scenario, "corollary2");
  const Corollary2Result r =
      certify_corollary2(sys, params_from_scenario(ctx.scenario), cone_from_json(a.at("cone")),
                         config_from_json(ctx.scenario.at("integrator")), o, ctx.jobs);
  json cycle = nullptr;
  if (r.cycle) {
    cycle = {{"anchor", point_json(r.cycle->anchor)},
             {"period", r.cycle->period},
             {"rho1", complex_json(r.cycle->rho1)},
             {"rho2", complex_json(r.cycle->rho2)}};
  }
  ctx.write_json("corollary2.json",
                 {{"certified", r.certified},
                  {"reason", r.reason},
                  {"v_bound", r.v_bound},
                  {"invariance", r.invariance ? invariance_json(*r.invariance) : json(nullptr)},
                  {"min_field_margin", r.min_field_margin},
                  {"cycle", cycle}});
  say(ctx, "corollary2", r.certified ? "certified" : "not certified: " + r.reason);
  return r.certified ? kExitOk : kExitNegative;
}

int dichotomy(const Context &ctx) {
  const json &a = ctx.analysis();
  DichotomyOptions o;
  o.horizon = num(a, "horizon");
  o.window = num(a, "window");
  o.speed_tol = num(a, "speed_tol");
  o.recurrence_tol = num(a, "recurrence_tol");
  o.alignment_tol = num(a, "alignment_tol");
  o.growth_threshold = num(a, "growth_threshold");
  const DichotomyResult r = dichotomy_classify(
      pendulum_only(ctx.scenario, "dichotomy"), cone_from_json(a.at("cone")),
      point_from_json(a.at("x0")), config_from_json(ctx.scenario.at("integrator")), o);
  ctx.write_json("dichotomy.json", {{"case", to_string(r.kind)},
                                    {"limit_point", point_json(r.limit_point)},
                                    {"period", r.period},
                                    {"misalignment", r.misalignment},
                                    {"tangent_growth", r.tangent_growth},
                                    {"min_speed", r.min_speed},
                                    {"growth_unbounded", r.growth_unbounded}});
  say(ctx, "dichotomy", std::string(to_string(r.kind)));
  return kExitOk;
}

int homoclinic_gap_cmd(const Context &ctx) {
  const json &a = ctx.analysis();
  const PendulumParams params = params_from_scenario(ctx.scenario);
  const IntegratorConfig cfg = config_from_json(ctx.scenario.at("integrator"));
  GapOptions g;
  g.epsilon = num(a, "epsilon");
  g.t_budget = num(a, "t_budget");
  g.v_escape = num(a, "v_escape");
  const HomoclinicGap gap = homoclinic_gap(params, cfg, g);

  ManifoldOptions m;
  m.epsilon = g.epsilon;
  m.arclength_budget = num(a, "arclength_budget");
  m.v_max = num(a, "v_max");
  m.t_max = num(a, "t_max");
  const PlanarSystem sys = pendulum_only(ctx.scenario, "homoclinic-gap");
  std::ostringstream os;
  csv::write_row(os, {"branch", "s", "theta", "v"});
  for (const FixedPoint &fp : find_fixed_points(params)) {
    if (fp.classification != FixedPointClass::Saddle) continue;
    for (const ManifoldBranch &b : saddle_manifolds(fp, sys, cfg, m)) {
      const std::string label = std::string(b.kind == BranchKind::Unstable ? "unstable" : "stable") +
                                (b.sign > 0 ? "+" : "-");
      for (std::size_t i = 0; i < b.points.size(); ++i) {
        csv::write_row(os, {label, format(b.arclength[i]), format(b.points[i].theta()),
                            format(b.points[i].v())});
      }
    }
  }
  ctx.write("manifolds.csv", os.str());
  ctx.write_json("homoclinic_gap.json", {{"gap", gap.gap},
                                         {"unstable_value", gap.unstable_value},
                                         {"stable_value", gap.stable_value},
                                         {"unstable_reached", gap.unstable_reached},
                                         {"stable_reached", gap.stable_reached},
                                         {"saddle_theta", gap.saddle_theta}});
  say(ctx, "homoclinic-gap", "gap " + format(gap.gap));
  return kExitOk;
}

int atlas(const Context &ctx) {
  const json &a = ctx.analysis();
  AtlasGrid g;
  g.k_lo = num(a, "k_lo");
  g.k_hi = num(a, "k_hi");
  g.n_k = count(a, "n_k");
  g.log_k = a.at("log_k").get<bool>();
  g.u_lo = num(a, "u_lo");
  g.u_hi = num(a, "u_hi");
  g.n_u = count(a, "n_u");
  CellOptions o;
  o.max_time = num(a, "max_time");
  o.fp_tol = num(a, "fp_tol");
  o.cycle_tol = num(a, "cycle_tol");
  const auto cells = sweep(g, config_from_json(ctx.scenario.at("integrator")), o, ctx.jobs);
  std::ostringstream os;
  write_atlas_csv(os, cells);
  ctx.write("atlas.csv", os.str());
  say(ctx, "atlas", std::to_string(cells.size()) + " cells");
  return kExitOk;
}

int homoclinic_curve_cmd(const Context &ctx) {
  const json &a = ctx.analysis();
  CurveOptions o;
  o.gap_tol = num(a, "gap_tol");
  o.u_hi = num(a, "u_hi");
  o.max_bisections = static_cast<int>(count(a, "max_bisections"));
  const auto curve = homoclinic_curve(a.at("ks").get<std::vector<double>>(),
                                      config_from_json(ctx.scenario.at("integrator")), o, ctx.jobs);
  std::ostringstream os;
  write_curve_csv(os, curve);
  ctx.write("curve.csv", os.str());
  say(ctx, "homoclinic-curve", std::to_string(curve.size()) + " points");
  return kExitOk;
}

int critical_damping(const Context &ctx) {
  const json &a = ctx.analysis();
  KcOptions o;
  o.k_lo = num(a, "k_lo");
  o.k_hi = num(a, "k_hi");
  o.tol = num(a, "tol");
  o.u_hi = num(a, "u_hi");
  o.max_bisections = static_cast<int>(count(a, "max_bisections"));
  const KcEstimate e = estimate_kc(config_from_json(ctx.scenario.at("integrator")), o);
  ctx.write_json("critical_damping.json", {{"k_c", e.k_c},
                                           {"lo", e.lo},
                                           {"hi", e.hi},
                                           {"bisections", e.bisections},
                                           {"converged", e.converged}});
  say(ctx, "critical-damping", "k_c " + format(e.k_c));
  return e.converged ? kExitOk : kExitNegative;
}

const json kZeroInput = {{"kind", "constant"}, {"u", 0.0}};

}  // namespace

void Context::write(const std::string &name, const std::string &text) const {
  std::ofstream f(out / name, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + (out / name).string());
}

void Context::write_json(const std::string &name, const json &j) const { write(name, j.dump(2) + "\n"); }

const std::vector<Command> &commands() {
  static const std::vector<Command> table{
      {"simulate", "integrate the state; trajectory.csv", {kX0, kT0, kT1}, simulate},
      {"prolonged",
       "integrate state and tangent; trajectory.csv",
       {kX0, {"d0", FieldKind::Reals, json::array({1.0, 0.0}), {}, 2}, kT0, kT1},
       prolonged},
      {"fundamental", "integrate state and fundamental matrix; trajectory.csv", {kX0, kT0, kT1},
       fundamental},
      {"fixed-points", "equilibria under a constant torque; fixed_points.json", {}, fixed_points},
      {"limit-cycle", "rotating limit cycle by shooting; limit_cycle.json, cycle.csv", cycle_fields(),
       limit_cycle},
      {"floquet", "Floquet multipliers of the rotating cycle; floquet.json", cycle_fields(), floquet},
      {"lyapunov",
       "maximal Lyapunov exponent; lyapunov.json, lyapunov.csv",
       {kX0,
        {"horizon", FieldKind::Real, 1000.0},
        {"renorm_interval", FieldKind::Real, 1.0},
        {"d0", FieldKind::Reals, json::array({1.0, 0.0}), {}, 2}},
       lyapunov},
      {"decay-scan",
       "Finsler-Lyapunov decay over a grid; decay.json",
       {{"metric", FieldKind::Metric, "weighted-angle"},
        {"eta", FieldKind::Real, 1e-3},
        {"projection", FieldKind::Choice, "identity", {"identity", "transversal"}},
        {"theta_lo", FieldKind::Real, -kPi / 2.0},
        {"theta_hi", FieldKind::Real, kPi / 2.0},
        {"n_theta", FieldKind::Count, 720},
        {"v_lo", FieldKind::Real, 0.0},
        {"v_hi", FieldKind::Real, 0.0},
        {"n_v", FieldKind::Count, 1},
        {"n_dirs", FieldKind::Count, 0},
        {"t", FieldKind::Real, 0.0}},
       decay_scan},
      {"pair-contraction",
       "distance between two trajectories; pair.csv, pair.json",
       {kX0,
        {"z0", FieldKind::Reals, json::array({-1.0, 0.0}), {}, 2},
        {"metric", FieldKind::Metric, "weighted-angle"},
        {"eta", FieldKind::Real, 1e-3},
        {"horizon", FieldKind::Real, 40.0},
        {"output_dt", FieldKind::Real, 0.05},
        {"transient_fraction", FieldKind::Real, 0.1}},
       pair_contraction},
      {"entrain",
       "two overdamped trajectories under the same torque; entrain.csv, entrain.json",
       {{"theta0", FieldKind::Reals, json::array({2.0, -2.0}), {}, 2},
        {"eta", FieldKind::Real, 1e-3},
        {"horizon", FieldKind::Real, 40.0},
        {"output_dt", FieldKind::Real, 0.05},
        {"transient_fraction", FieldKind::Real, 0.1}},
       entrain},
      {"interconnect",
       "passive feedback of two overdamped pendulums; interconnect.csv, interconnect.json",
       {{"q1", FieldKind::Input, kZeroInput},
        {"q2", FieldKind::Input, kZeroInput},
        {"x0", FieldKind::Reals, json::array({1.0, -1.0}), {}, 2},
        {"z0", FieldKind::Reals, json::array({-2.0, 2.0}), {}, 2},
        {"horizon", FieldKind::Real, 40.0},
        {"output_dt", FieldKind::Real, 0.05}},
       interconnect},
      {"horizontal",
       "transversal contraction over one period; horizontal.json, horizontal.csv",
       join(cycle_fields(),
            std::vector<Field>{{"samples", FieldKind::Count, 1000}, {"sign", FieldKind::Real, 1.0}}),
       horizontal},
      {"cone-verify", "cone-field invariance; invariance.json",
       join(std::vector<Field>{kCone}, grid_fields(72, 13),
            std::vector<Field>{{"tau", FieldKind::Real, 1.0}}),
       cone_verify},
      {"pf-field", "Perron-Frobenius direction field; pf_field.csv",
       join(std::vector<Field>{kCone}, grid_fields(36, 9),
            std::vector<Field>{{"push_time", FieldKind::Real, 1.0},
                               {"max_pushes", FieldKind::Count, 200},
                               {"tol", FieldKind::Real, 1e-8},
                               {"v_escape", FieldKind::Real, 50.0}}),
       pf_field},
      {"corollary2",
       "limit-cycle certificate for |u| > 1; corollary2.json",
       {kCone,
        {"rho", FieldKind::Real, 1.1},
        {"tau", FieldKind::Real, 1.0},
        {"n_theta", FieldKind::Count, 72},
        {"n_v", FieldKind::Count, 13},
        {"transient", FieldKind::Real, 60.0},
        {"sample_horizon", FieldKind::Real, 30.0}},
       corollary2},
      {"dichotomy",
       "omega-limit classification; dichotomy.json",
       {kCone,
        kX0,
        {"horizon", FieldKind::Real, 300.0},
        {"window", FieldKind::Real, 60.0},
        {"speed_tol", FieldKind::Real, 1e-6},
        {"recurrence_tol", FieldKind::Real, 1e-6},
        {"alignment_tol", FieldKind::Real, 1e-3},
        {"growth_threshold", FieldKind::Real, 1.0}},
       dichotomy},
      {"homoclinic-gap",
       "saddle-connection mismatch and manifolds; homoclinic_gap.json, manifolds.csv",
       {{"epsilon", FieldKind::Real, 1e-6},
        {"t_budget", FieldKind::Real, 0.0},
        {"v_escape", FieldKind::Real, 1e6},
        {"arclength_budget", FieldKind::Real, 20.0},
        {"v_max", FieldKind::Real, 10.0},
        {"t_max", FieldKind::Real, 200.0}},
       homoclinic_gap_cmd},
      {"atlas",
       "(k, u) regime map; atlas.csv",
       {{"k_lo", FieldKind::Real, 0.05},
        {"k_hi", FieldKind::Real, 4.0},
        {"n_k", FieldKind::Count, 40},
        {"log_k", FieldKind::Bool, true},
        {"u_lo", FieldKind::Real, 0.0},
        {"u_hi", FieldKind::Real, 1.5},
        {"n_u", FieldKind::Count, 60},
        {"max_time", FieldKind::Real, 1e4},
        {"fp_tol", FieldKind::Real, 1e-3},
        {"cycle_tol", FieldKind::Real, 1e-4}},
       atlas},
      {"homoclinic-curve",
       "homoclinic bifurcation curve u_c(k); curve.csv",
       {{"ks", FieldKind::Reals, json::array({0.05, 0.1, 0.2})},
        {"gap_tol", FieldKind::Real, 1e-6},
        {"u_hi", FieldKind::Real, 1.0 - 1e-5},
        {"max_bisections", FieldKind::Count, 200}},
       homoclinic_curve_cmd},
      {"critical-damping",
       "critical damping k_c; critical_damping.json",
       {{"k_lo", FieldKind::Real, 0.2},
        {"k_hi", FieldKind::Real, 3.0},
        {"tol", FieldKind::Real, 1e-3},
        {"u_hi", FieldKind::Real, 1.0 - 1e-5},
        {"max_bisections", FieldKind::Count, 60}},
       critical_damping},
  };
  return table;
}

}  // namespace diffgeo::lab
