#pragma once

// Finsler-Lyapunov functions on the tangent bundle, their induced geodesic
// distances on the circle, polyhedral cone fields, and the projections used
// for horizontal contraction.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "diffgeo/linalg.hpp"
#include "diffgeo/model.hpp"

namespace diffgeo {

class FinslerLyapunov {
 public:
  /// V = dtheta^2
  struct SquaredAngle {};
  /// V = dtheta^2 / (1 + cos theta); singular at theta = pi.
  struct WeightedAngle {};
  /// V = d^T P d with P symmetric positive definite.
  struct ConstantQuadratic {
    Mat2 P{Mat2::identity()};
  };
  using Kind = std::variant<SquaredAngle, WeightedAngle, ConstantQuadratic>;

  /// Constants of c1 |d|^2 <= V <= c2 |d|^2 on |theta| <= theta_max.
  struct Bounds {
    double c1{0.0};
    double c2{0.0};
    double theta_max{kPi};
  };

  static FinslerLyapunov squared_angle() { return FinslerLyapunov(SquaredAngle{}); }
  /// eta truncates the certified domain to |theta| <= pi - eta.
  static FinslerLyapunov weighted_angle(double eta = 1e-3);
  static FinslerLyapunov constant_quadratic(const Mat2 &P);

  const Kind &kind() const { return kind_; }
  double eta() const { return eta_; }
  /// Half-width of the angular interval on which decay is claimed.
  double domain_half_width() const;
  Bounds bounds() const;
  std::string name() const;

 private:
  explicit FinslerLyapunov(Kind kind, double eta = 0.0) : kind_(std::move(kind)), eta_(eta) {}

  Kind kind_;
  double eta_;
};

/// Throws DomainError for WeightedAngle at theta = +-pi.
double eval_V(const FinslerLyapunov &V, const CylinderPoint &p, const Tangent &d);

/// Lie derivative of V along the prolonged flow:
/// dV/dx . f(x, t) + dV/d(dx) . J(x, t) dx. For the weighted angle on the
/// overdamped pendulum the cancellation-free form -dtheta^2 + w is used.
double analytic_Vdot(const FinslerLyapunov &V, const PlanarSystem &sys, const CylinderPoint &p,
                     const Tangent &d, double t);

/// Input-induced part w of the weighted-angle decay on the overdamped
/// pendulum, dV/dt = -dtheta^2 + w, in the closed form
/// w = dtheta^2 q'(theta) / cos(theta / 2) with q = u / cos(theta / 2).
/// Half-angle-gain torques have q = r, so w vanishes whenever r does not
/// depend on theta. Throws DomainError for |theta| >= pi.
double weighted_angle_residual(double theta, double dtheta, const InputLaw &input, double t);
/// Same for a constant torque u: w = dtheta^2 u sin(theta/2) / (2 cos^3(theta/2)).
double weighted_angle_residual(double theta, double dtheta, double u);

/// Length of the shortest path from a to b under the pointwise norm sqrt(V).
/// For WeightedAngle the arc through pi has infinite length, so the distance
/// is always measured along the arc avoiding pi.
double geodesic_distance(const FinslerLyapunov &V, double a, double b);

/// y(theta) = integral_0^theta sec(s/2) ds = 2 ln|sec(theta/2) + tan(theta/2)|.
/// Throws DomainError for |theta| >= pi.
double passivating_output(double theta);

/// Pointed solid cone K(x) = {d : a_i(x) . d >= 0, i = 0, 1}.
class ConeFieldSpec {
 public:
  using Functional = std::function<Vec2(const CylinderPoint &)>;

  ConeFieldSpec(std::string name, std::array<Functional, 2> functionals);

  /// dtheta >= 0, dtheta + dv >= 0.
  static ConeFieldSpec pendulum_default();
  static ConeFieldSpec constant(const Vec2 &a0, const Vec2 &a1);

  const std::string &name() const { return name_; }
  Vec2 functional(std::size_t i, const CylinderPoint &p) const { return functionals_[i](p); }
  /// d a_i / d theta by central differences (zero for constant cones).
  Vec2 functional_theta_derivative(std::size_t i, const CylinderPoint &p) const;
  std::optional<std::array<Vec2, 2>> constant_coefficients() const { return constant_; }

  /// Throws InvalidCone unless the functionals are linearly independent at p.
  void validate_at(const CylinderPoint &p) const;

  /// Extreme rays. Ray i spans {a_i . d = 0} and is scaled so that the other
  /// functional evaluates to 1 on it.
  std::array<Vec2, 2> boundary_rays(const CylinderPoint &p) const;

  /// Unit vector along the sum of the extreme rays.
  Vec2 interior_seed(const CylinderPoint &p) const;

  /// min_i a_i(p) . d / |d|
  double margin(const CylinderPoint &p, const Vec2 &d) const;

 private:
  std::string name_;
  std::array<Functional, 2> functionals_;
  std::optional<std::array<Vec2, 2>> constant_;
};

inline constexpr double kConeTolerance = 1e-9;

enum class Membership { Interior, Boundary, Outside };

struct ConeMembership {
  Membership kind{Membership::Outside};
  double margin{0.0};
  /// Functionals within tolerance of zero (Boundary only).
  std::vector<std::size_t> active;
};

/// Throws ZeroTangent for d = 0.
ConeMembership cone_membership(const ConeFieldSpec &cone, const CylinderPoint &p, const Tangent &d,
                               double tol = kConeTolerance);

/// I - f f^T / |f|^2 at (p, t). Throws EquilibriumPoint if |f| < 1e-12.
Mat2 transversal_projection(const PlanarSystem &sys, const CylinderPoint &p, double t);

struct Projection {
  enum class Kind { Identity, TransversalToFlow };
  Kind kind{Kind::Identity};

  Mat2 at(const PlanarSystem &sys, const CylinderPoint &p, double t) const {
    return kind == Kind::Identity ? Mat2::identity() : transversal_projection(sys, p, t);
  }
};

}  // namespace diffgeo
