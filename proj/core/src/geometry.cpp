#include "diffgeo/geometry.hpp"

#include <cmath>
#include <numbers>

#include "diffgeo/error.hpp"

namespace diffgeo {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double weight_denominator(double theta) {
  if (!(std::abs(theta) < kPi)) {
    throw Error(ErrorKind::DomainError, "weighted-angle metric is singular at theta = pi");
  }
  // 1 + cos theta in half-angle form: no cancellation near pi.
  const double c = std::cos(theta / 2.0);
  return 2.0 * c * c;
}

}  // namespace

FinslerLyapunov FinslerLyapunov::weighted_angle(double eta) {
  if (!(eta > 0.0 && eta < kPi)) {
    throw Error(ErrorKind::InvalidArgument, "eta must lie in (0, pi)");
  }
  return FinslerLyapunov(WeightedAngle{}, eta);
}

FinslerLyapunov FinslerLyapunov::constant_quadratic(const Mat2 &P) {
  if (P.b != P.c) throw Error(ErrorKind::InvalidArgument, "P must be symmetric");
  if (!(P.a > 0.0) || !(P.det() > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "P must be positive definite");
  }
  return FinslerLyapunov(ConstantQuadratic{P});
}

double FinslerLyapunov::domain_half_width() const {
  return std::holds_alternative<WeightedAngle>(kind_) ? kPi - eta_ : kPi;
}

FinslerLyapunov::Bounds FinslerLyapunov::bounds() const {
  return std::visit(Overloaded{
                        [](const SquaredAngle &) { return Bounds{1.0, 1.0, kPi}; },
                        [this](const WeightedAngle &) {
                          const double edge = kPi - eta_;
                          return Bounds{0.5, 1.0 / (1.0 + std::cos(edge)), edge};
                        },
                        [](const ConstantQuadratic &q) {
                          const auto [l1, l2] = eigenvalues(q.P);
                          return Bounds{l2.real(), l1.real(), kPi};
                        },
                    },
                    kind_);
}

std::string FinslerLyapunov::name() const {
  return std::visit(Overloaded{
                        [](const SquaredAngle &) { return std::string("squared-angle"); },
                        [](const WeightedAngle &) { return std::string("weighted-angle"); },
                        [](const ConstantQuadratic &) { return std::string("constant-quadratic"); },
                    },
                    kind_);
}

double eval_V(const FinslerLyapunov &V, const CylinderPoint &p, const Tangent &d) {
  return std::visit(Overloaded{
                        [&](const FinslerLyapunov::SquaredAngle &) { return d.dtheta * d.dtheta; },
                        [&](const FinslerLyapunov::WeightedAngle &) {
                          return d.dtheta * d.dtheta / weight_denominator(p.theta());
                        },
                        [&](const FinslerLyapunov::ConstantQuadratic &q) {
                          const Vec2 x = d.vec();
                          return dot(x, q.P * x);
                        },
                    },
                    V.kind());
}

double analytic_Vdot(const FinslerLyapunov &V, const PlanarSystem &sys, const CylinderPoint &p,
                     const Tangent &d, double t) {
  const Vec2 f = sys.field(p, t);
  const Vec2 jd = sys.jacobian(p, t) * d.vec();
  return std::visit(
      Overloaded{
          [&](const FinslerLyapunov::SquaredAngle &) { return 2.0 * d.dtheta * jd.x; },
          [&](const FinslerLyapunov::WeightedAngle &) {
            const double den = weight_denominator(p.theta());
            if (const InputLaw *input = sys.overdamped_input()) {
              return -d.dtheta * d.dtheta + weighted_angle_residual(p.theta(), d.dtheta, *input, t);
            }
            const double dV_dtheta = d.dtheta * d.dtheta * std::sin(p.theta()) / (den * den);
            return dV_dtheta * f.x + 2.0 * d.dtheta * jd.x / den;
          },
          [&](const FinslerLyapunov::ConstantQuadratic &q) {
            return 2.0 * dot(d.vec(), q.P * jd);
          },
      },
      V.kind());
}

namespace {

double half_cosine(double theta) {
  if (!(std::abs(theta) < kPi)) {
    throw Error(ErrorKind::DomainError, "weighted-angle residual is singular at theta = pi");
  }
  return std::cos(theta / 2.0);
}

}  // namespace

double weighted_angle_residual(double theta, double dtheta, const InputLaw &input, double t) {
  const double c = half_cosine(theta);
  double dq = 0.0;
  if (const auto *h = std::get_if<InputLaw::HalfAngleGain>(&input.variant())) {
    dq = h->r->evaluate(theta, 0.0, t).du_dtheta;
  } else {
    const InputValue in = input.evaluate(theta, 0.0, t);
    dq = (in.du_dtheta * c + 0.5 * in.u * std::sin(theta / 2.0)) / (c * c);
  }
  return dtheta * dtheta * dq / c;
}

double weighted_angle_residual(double theta, double dtheta, double u) {
  const double c = half_cosine(theta);
  return dtheta * dtheta * u * std::sin(theta / 2.0) / (2.0 * c * c * c);
}

double passivating_output(double theta) {
  if (!(std::abs(theta) < kPi)) {
    throw Error(ErrorKind::DomainError, "passivating output diverges at |theta| = pi");
  }
  // ln(sec x + tan x) = asinh(tan x)
  return 2.0 * std::asinh(std::tan(theta / 2.0));
}

double geodesic_distance(const FinslerLyapunov &V, double a, double b) {
  return std::visit(
      Overloaded{
          [&](const FinslerLyapunov::SquaredAngle &) {
            const auto [lo, hi] = std::minmax(a, b);
            return std::abs(angle_diff(hi, lo));
          },
          [&](const FinslerLyapunov::WeightedAngle &) {
            const double wa = wrap_angle(a);
            const double wb = wrap_angle(b);
            if (wa == -kPi || wb == -kPi) {
              throw Error(ErrorKind::DomainError, "weighted-angle distance undefined at pi");
            }
            // The Finsler norm is |dtheta| sec(theta/2) / sqrt(2), whose
            // primitive is the passivating output over sqrt(2).
            return std::abs(passivating_output(wb) - passivating_output(wa)) / std::numbers::sqrt2;
          },
          [](const FinslerLyapunov::ConstantQuadratic &) -> double {
            throw Error(ErrorKind::InvalidArgument,
                        "geodesic distance on the circle needs an angular metric");
          },
      },
      V.kind());
}

ConeFieldSpec::ConeFieldSpec(std::string name, std::array<Functional, 2> functionals)
    : name_(std::move(name)), functionals_(std::move(functionals)) {}

ConeFieldSpec ConeFieldSpec::pendulum_default() {
  ConeFieldSpec c = constant({1.0, 0.0}, {1.0, 1.0});
  c.name_ = "pendulum-default";
  return c;
}

ConeFieldSpec ConeFieldSpec::constant(const Vec2 &a0, const Vec2 &a1) {
  if (std::abs(cross(a0, a1)) <= 1e-12) {
    throw Error(ErrorKind::InvalidCone, "cone functionals must be linearly independent");
  }
  ConeFieldSpec c("constant", {[a0](const CylinderPoint &) { return a0; },
                               [a1](const CylinderPoint &) { return a1; }});
  c.constant_ = std::array<Vec2, 2>{a0, a1};
  return c;
}

Vec2 ConeFieldSpec::functional_theta_derivative(std::size_t i, const CylinderPoint &p) const {
  if (constant_) return {};
  constexpr double h = 1e-6;
  const Vec2 hi = functionals_[i](CylinderPoint(p.theta() + h, p.v()));
  const Vec2 lo = functionals_[i](CylinderPoint(p.theta() - h, p.v()));
  return (1.0 / (2.0 * h)) * (hi - lo);
}

void ConeFieldSpec::validate_at(const CylinderPoint &p) const {
  if (std::abs(cross(functional(0, p), functional(1, p))) <= 1e-12) {
    throw Error(ErrorKind::InvalidCone, "cone is not solid and pointed at this point");
  }
}

std::array<Vec2, 2> ConeFieldSpec::boundary_rays(const CylinderPoint &p) const {
  validate_at(p);
  std::array<Vec2, 2> rays;
  for (std::size_t i = 0; i < 2; ++i) {
    const Vec2 a = functional(i, p);
    const Vec2 other = functional(1 - i, p);
    const Vec2 r{-a.y, a.x};
    rays[i] = (1.0 / dot(other, r)) * r;
  }
  return rays;
}

Vec2 ConeFieldSpec::interior_seed(const CylinderPoint &p) const {
  const auto rays = boundary_rays(p);
  return normalized(normalized(rays[0]) + normalized(rays[1]));
}

double ConeFieldSpec::margin(const CylinderPoint &p, const Vec2 &d) const {
  const double n = norm(d);
  return std::min(dot(functional(0, p), d), dot(functional(1, p), d)) / n;
}

ConeMembership cone_membership(const ConeFieldSpec &cone, const CylinderPoint &p, const Tangent &d,
                               double tol) {
  const Vec2 x = d.vec();
  const double n = norm(x);
  if (n == 0.0) throw Error(ErrorKind::ZeroTangent, "cone membership of the zero tangent");
  ConeMembership out;
  out.margin = cone.margin(p, x);
  if (out.margin > tol) {
    out.kind = Membership::Interior;
  } else if (std::abs(out.margin) <= tol) {
    out.kind = Membership::Boundary;
    for (std::size_t i = 0; i < 2; ++i) {
      if (std::abs(dot(cone.functional(i, p), x)) / n <= tol) out.active.push_back(i);
    }
  } else {
    out.kind = Membership::Outside;
  }
  return out;
}

Mat2 transversal_projection(const PlanarSystem &sys, const CylinderPoint &p, double t) {
  const Vec2 f = sys.field(p, t);
  const double n2 = dot(f, f);
  if (std::sqrt(n2) < 1e-12) {
    throw Error(ErrorKind::EquilibriumPoint, "no flow direction at an equilibrium");
  }
  return Mat2::identity() - (1.0 / n2) * Mat2{f.x * f.x, f.x * f.y, f.y * f.x, f.y * f.y};
}

}  // namespace diffgeo
