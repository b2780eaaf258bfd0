#pragma once

// The damped, torque-driven pendulum family on the cylinder S x R, its
// overdamped limit on the circle, the input laws that drive them, and the
// PlanarSystem abstraction the analysis modules consume.

#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "diffgeo/linalg.hpp"

namespace diffgeo {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Canonical representative in [-pi, pi).
double wrap_angle(double theta);

/// Wrapped difference a - b in (-pi, pi].
double angle_diff(double a, double b);

/// A point (theta, v) of the cylinder. theta is kept in [-pi, pi).
class CylinderPoint {
 public:
  constexpr CylinderPoint() = default;
  CylinderPoint(double theta, double v) : theta_(wrap_angle(theta)), v_(v) {}

  double theta() const { return theta_; }
  double v() const { return v_; }
  Vec2 coords() const { return {theta_, v_}; }

  friend bool operator==(const CylinderPoint &, const CylinderPoint &) = default;

 private:
  double theta_{0.0};
  double v_{0.0};
};

/// Tangent vector (dtheta, dv) attached to a CylinderPoint.
struct Tangent {
  double dtheta{0.0};
  double dv{0.0};

  Vec2 vec() const { return {dtheta, dv}; }
  static Tangent from(const Vec2 &v) { return {v.x, v.y}; }
  friend bool operator==(const Tangent &, const Tangent &) = default;
};

/// Torque together with its partial derivatives in the state, which enter
/// the linearization whenever the input is a state feedback.
struct InputValue {
  double u{0.0};
  double du_dtheta{0.0};
  double du_dv{0.0};
};

class InputLaw {
 public:
  struct Constant {
    double u0{0.0};
  };
  /// bias + amplitude * sin(omega * t)
  struct Sinusoidal {
    double bias{0.0};
    double amplitude{0.0};
    double omega{0.0};
  };
  /// sin(theta) + w
  struct FeedbackLinearizing {
    std::shared_ptr<const InputLaw> w;
  };
  /// cos(theta / 2) * r
  struct HalfAngleGain {
    std::shared_ptr<const InputLaw> r;
  };
  /// Piecewise-linear interpolation of samples, held constant outside.
  struct External {
    std::vector<double> times;
    std::vector<double> values;
  };
  /// -(linear * y + cubic * y^3) + reference, with y the passivating output
  /// of theta. Closes the loop r = -h(y) + q around a half-angle-gain plant.
  struct OutputFeedback {
    double linear{1.0};
    double cubic{0.0};
    std::shared_ptr<const InputLaw> reference;
  };

  using Variant =
      std::variant<Constant, Sinusoidal, FeedbackLinearizing, HalfAngleGain, External, OutputFeedback>;

  InputLaw() : law_(Constant{0.0}) {}
  InputLaw(Variant law);  // NOLINT(google-explicit-constructor)

  static InputLaw constant(double u0) { return InputLaw(Constant{u0}); }
  static InputLaw sinusoidal(double bias, double amplitude, double omega) {
    return InputLaw(Sinusoidal{bias, amplitude, omega});
  }
  static InputLaw feedback_linearizing(InputLaw w) {
    return InputLaw(FeedbackLinearizing{std::make_shared<const InputLaw>(std::move(w))});
  }
  static InputLaw half_angle_gain(InputLaw r) {
    return InputLaw(HalfAngleGain{std::make_shared<const InputLaw>(std::move(r))});
  }
  static InputLaw external(std::vector<double> times, std::vector<double> values);
  static InputLaw output_feedback(double linear, double cubic, InputLaw reference) {
    return InputLaw(
        OutputFeedback{linear, cubic, std::make_shared<const InputLaw>(std::move(reference))});
  }

  InputValue evaluate(double theta, double v, double t) const;
  double operator()(double theta, double v, double t) const { return evaluate(theta, v, t).u; }

  /// True when the torque does not depend on time.
  bool is_autonomous() const;
  /// The torque level if the law is Constant.
  std::optional<double> constant_value() const;

  const Variant &variant() const { return law_; }

 private:
  Variant law_;
};

struct PendulumParams {
  double k{0.0};
  InputLaw input{};

  void validate() const;
};

enum class StateSpace { Cylinder, Circle, Plane };

/// A vector field on a two-dimensional state space (theta, v) with its exact
/// Jacobian. One-dimensional systems on the circle use only the theta
/// component; their second component and the matching Jacobian row/column
/// are identically zero.
class PlanarSystem {
 public:
  using Field = std::function<Vec2(const Vec2 &x, double t)>;
  using Jacobian = std::function<Mat2(const Vec2 &x, double t)>;

  PlanarSystem(std::string name, StateSpace space, Field field, Jacobian jacobian,
               std::optional<Field> input_partial = std::nullopt, double damping_trace = kNan);

  const std::string &name() const { return name_; }
  StateSpace space() const { return space_; }
  int dimension() const { return space_ == StateSpace::Circle ? 1 : 2; }
  /// Whether the first coordinate is an angle to be wrapped.
  bool wraps() const { return space_ != StateSpace::Plane; }

  Vec2 field(const Vec2 &x, double t) const { return field_(x, t); }
  Vec2 field(const CylinderPoint &p, double t) const { return field_(p.coords(), t); }
  Mat2 jacobian(const Vec2 &x, double t) const { return jacobian_(x, t); }
  Mat2 jacobian(const CylinderPoint &p, double t) const { return jacobian_(p.coords(), t); }
  /// df/du, when the system has a scalar input channel.
  std::optional<Vec2> input_partial(const Vec2 &x, double t) const;

  /// Constant trace of the Jacobian if the system has one (NaN otherwise).
  /// For the pendulum this is -k, which fixes det Phi(t) = exp(-k t).
  double constant_trace() const { return trace_; }

  /// Torque law when this is the overdamped pendulum, which lets analyses
  /// use its closed forms.
  const InputLaw *overdamped_input() const { return overdamped_ ? &*overdamped_ : nullptr; }

 private:
  friend PlanarSystem make_overdamped(const InputLaw &input);

  static constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

  std::string name_;
  StateSpace space_;
  Field field_;
  Jacobian jacobian_;
  std::optional<Field> input_partial_;
  double trace_;
  std::optional<InputLaw> overdamped_;
};

/// (v, -sin(theta) - k v + u(theta, v, t))
Tangent pendulum_field(const CylinderPoint &p, const PendulumParams &params, double t);

/// A(theta, k) = [[0, 1], [-cos(theta), -k]], the linearization with the
/// input held fixed.
Mat2 pendulum_jacobian(const CylinderPoint &p, const PendulumParams &params);

/// -sin(theta) + u(theta, t) for the first-order overdamped pendulum.
double overdamped_field(double theta, const InputLaw &input, double t);

/// Mechanical energy v^2/2 - cos(theta); satisfies dE/dt = -k v^2 + u v.
double energy(const CylinderPoint &p);

PlanarSystem make_pendulum(const PendulumParams &params);
PlanarSystem make_overdamped(const InputLaw &input);

}  // namespace diffgeo
