#include "diffgeo/model.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "diffgeo/error.hpp"
#include "diffgeo/geometry.hpp"

namespace diffgeo {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::MismatchedGrids: return "MismatchedGrids";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::TangentialCrossing: return "TangentialCrossing";
    case ErrorKind::ZeroTangent: return "ZeroTangent";
    case ErrorKind::EquilibriumPoint: return "EquilibriumPoint";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NoCycle: return "NoCycle";
    case ErrorKind::NotASaddle: return "NotASaddle";
    case ErrorKind::BranchEscaped: return "BranchEscaped";
    case ErrorKind::LeftRegion: return "LeftRegion";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::Inconclusive: return "Inconclusive";
    case ErrorKind::InvalidCone: return "InvalidCone";
  }
  return "Unknown";
}

double wrap_angle(double theta) {
  if (theta >= -kPi && theta < kPi) return theta;
  double r = std::fmod(theta + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= kPi;
  // fmod can land exactly on +pi after the shift back.
  if (r >= kPi) r -= kTwoPi;
  return r;
}

double angle_diff(double a, double b) {
  const double d = wrap_angle(a - b);
  // Map the [-pi, pi) representative onto (-pi, pi].
  return d == -kPi ? kPi : d;
}

InputLaw::InputLaw(Variant law) : law_(std::move(law)) {}

InputLaw InputLaw::external(std::vector<double> times, std::vector<double> values) {
  if (times.empty() || times.size() != values.size()) {
    throw Error(ErrorKind::InvalidArgument, "external signal needs equal, nonempty sample arrays");
  }
  if (!std::is_sorted(times.begin(), times.end()) ||
      std::adjacent_find(times.begin(), times.end()) != times.end()) {
    throw Error(ErrorKind::InvalidArgument, "external signal times must be strictly increasing");
  }
  return InputLaw(External{std::move(times), std::move(values)});
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double interpolate(const InputLaw::External &s, double t) {
  if (t <= s.times.front()) return s.values.front();
  if (t >= s.times.back()) return s.values.back();
  const auto hi = std::upper_bound(s.times.begin(), s.times.end(), t);
  const auto i = static_cast<std::size_t>(std::distance(s.times.begin(), hi));
  const double t0 = s.times[i - 1];
  const double t1 = s.times[i];
  const double w = (t - t0) / (t1 - t0);
  return (1.0 - w) * s.values[i - 1] + w * s.values[i];
}

}  // namespace

InputValue InputLaw::evaluate(double theta, double v, double t) const {
  return std::visit(
      Overloaded{
          [](const Constant &c) { return InputValue{c.u0, 0.0, 0.0}; },
          [t](const Sinusoidal &s) {
            return InputValue{s.bias + s.amplitude * std::sin(s.omega * t), 0.0, 0.0};
          },
          [&](const FeedbackLinearizing &f) {
            const InputValue w = f.w->evaluate(theta, v, t);
            return InputValue{std::sin(theta) + w.u, std::cos(theta) + w.du_dtheta, w.du_dv};
          },
          [&](const HalfAngleGain &h) {
            const InputValue r = h.r->evaluate(theta, v, t);
            const double c = std::cos(theta / 2.0);
            const double s = std::sin(theta / 2.0);
            return InputValue{c * r.u, -0.5 * s * r.u + c * r.du_dtheta, c * r.du_dv};
          },
          [t](const External &e) { return InputValue{interpolate(e, t), 0.0, 0.0}; },
          [&](const OutputFeedback &f) {
            const InputValue q = f.reference->evaluate(theta, v, t);
            const double y = passivating_output(theta);
            const double dy = 1.0 / std::cos(theta / 2.0);
            const double h = f.linear * y + f.cubic * y * y * y;
            const double dh = f.linear + 3.0 * f.cubic * y * y;
            return InputValue{-h + q.u, -dh * dy + q.du_dtheta, q.du_dv};
          },
      },
      law_);
}

bool InputLaw::is_autonomous() const {
  return std::visit(Overloaded{
                        [](const Constant &) { return true; },
                        [](const Sinusoidal &s) { return s.amplitude == 0.0 || s.omega == 0.0; },
                        [](const FeedbackLinearizing &f) { return f.w->is_autonomous(); },
                        [](const HalfAngleGain &h) { return h.r->is_autonomous(); },
                        [](const External &e) { return e.times.size() == 1; },
                        [](const OutputFeedback &f) { return f.reference->is_autonomous(); },
                    },
                    law_);
}

std::optional<double> InputLaw::constant_value() const {
  if (const auto *c = std::get_if<Constant>(&law_)) return c->u0;
  return std::nullopt;
}

void PendulumParams::validate() const {
  if (!(k >= 0.0) || !std::isfinite(k)) {
    throw Error(ErrorKind::InvalidArgument, "damping k must be finite and >= 0");
  }
}

PlanarSystem::PlanarSystem(std::string name, StateSpace space, Field field, Jacobian jacobian,
                           std::optional<Field> input_partial, double damping_trace)
    : name_(std::move(name)),
      space_(space),
      field_(std::move(field)),
      jacobian_(std::move(jacobian)),
      input_partial_(std::move(input_partial)),
      trace_(damping_trace) {}

std::optional<Vec2> PlanarSystem::input_partial(const Vec2 &x, double t) const {
  if (!input_partial_) return std::nullopt;
  return (*input_partial_)(x, t);
}

Tangent pendulum_field(const CylinderPoint &p, const PendulumParams &params, double t) {
  const double u = params.input(p.theta(), p.v(), t);
  return {p.v(), -std::sin(p.theta()) - params.k * p.v() + u};
}

Mat2 pendulum_jacobian(const CylinderPoint &p, const PendulumParams &params) {
  return {0.0, 1.0, -std::cos(p.theta()), -params.k};
}

double overdamped_field(double theta, const InputLaw &input, double t) {
  return -std::sin(theta) + input(theta, 0.0, t);
}

double energy(const CylinderPoint &p) { return 0.5 * p.v() * p.v() - std::cos(p.theta()); }

PlanarSystem make_pendulum(const PendulumParams &params) {
  params.validate();
  const double k = params.k;
  const InputLaw input = params.input;
  return PlanarSystem(
      "pendulum", StateSpace::Cylinder,
      [k, input](const Vec2 &x, double t) {
        const double u = input(x.x, x.y, t);
        return Vec2{x.y, -std::sin(x.x) - k * x.y + u};
      },
      [k, input](const Vec2 &x, double t) {
        const InputValue in = input.evaluate(x.x, x.y, t);
        return Mat2{0.0, 1.0, -std::cos(x.x) + in.du_dtheta, -k + in.du_dv};
      },
      [](const Vec2 &, double) { return Vec2{0.0, 1.0}; }, -k);
}

PlanarSystem make_overdamped(const InputLaw &input) {
  PlanarSystem sys(
      "overdamped", StateSpace::Circle,
      [input](const Vec2 &x, double t) {
        return Vec2{-std::sin(x.x) + input(x.x, 0.0, t), 0.0};
      },
      [input](const Vec2 &x, double t) {
        const InputValue in = input.evaluate(x.x, 0.0, t);
        return Mat2{-std::cos(x.x) + in.du_dtheta, 0.0, 0.0, 0.0};
      },
      [](const Vec2 &, double) { return Vec2{1.0, 0.0}; });
  sys.overdamped_ = input;
  return sys;
}

}  // namespace diffgeo
