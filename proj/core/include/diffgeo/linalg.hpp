#pragma once

// Fixed-size 2D linear algebra. Everything in this library lives on a
// two-dimensional tangent space, so a general matrix library buys nothing.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <utility>

namespace diffgeo {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2 &operator+=(const Vec2 &o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2 &operator-=(const Vec2 &o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2 &operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend constexpr Vec2 operator+(Vec2 a, const Vec2 &b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2 &b) { return a -= b; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator-(const Vec2 &a) { return {-a.x, -a.y}; }
  friend constexpr bool operator==(const Vec2 &, const Vec2 &) = default;
};

constexpr double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2 &a, const Vec2 &b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2 &a) { return std::hypot(a.x, a.y); }

inline Vec2 normalized(const Vec2 &a) {
  const double n = norm(a);
  return {a.x / n, a.y / n};
}

/// Unsigned angle between two lines through the origin, in [0, pi/2].
/// This is the projective distance used for direction fields.
inline double line_angle(const Vec2 &a, const Vec2 &b) {
  const double c = std::abs(dot(a, b));
  const double s = std::abs(cross(a, b));
  return std::atan2(s, c);
}

/// Sine of the projective angle between two lines.
inline double line_sine(const Vec2 &a, const Vec2 &b) {
  return std::abs(cross(a, b)) / (norm(a) * norm(b));
}

struct Mat2 {
  // Row-major: [[a, b], [c, d]].
  double a{0.0};
  double b{0.0};
  double c{0.0};
  double d{0.0};

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 from_columns(const Vec2 &c0, const Vec2 &c1) {
    return {c0.x, c1.x, c0.y, c1.y};
  }

  constexpr Vec2 col0() const { return {a, c}; }
  constexpr Vec2 col1() const { return {b, d}; }
  constexpr double trace() const { return a + d; }
  constexpr double det() const { return a * d - b * c; }
  constexpr Mat2 transposed() const { return {a, c, b, d}; }

  friend constexpr Vec2 operator*(const Mat2 &m, const Vec2 &v) {
    return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
  }
  friend constexpr Mat2 operator*(const Mat2 &m, const Mat2 &n) {
    return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c,
            m.c * n.b + m.d * n.d};
  }
  friend constexpr Mat2 operator*(double s, const Mat2 &m) {
    return {s * m.a, s * m.b, s * m.c, s * m.d};
  }
  friend constexpr Mat2 operator+(const Mat2 &m, const Mat2 &n) {
    return {m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d};
  }
  friend constexpr Mat2 operator-(const Mat2 &m, const Mat2 &n) {
    return {m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d};
  }
  friend constexpr bool operator==(const Mat2 &, const Mat2 &) = default;
};

inline double max_abs_diff(const Mat2 &m, const Mat2 &n) {
  return std::max({std::abs(m.a - n.a), std::abs(m.b - n.b), std::abs(m.c - n.c),
                   std::abs(m.d - n.d)});
}

/// Frobenius norm.
inline double norm(const Mat2 &m) {
  return std::sqrt(m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d);
}

/// Roots of l^2 - tr(m) l + det = 0 with det supplied separately (for when it
/// is known to better relative accuracy than ad - bc). Real pairs are ordered
/// by descending value; complex pairs as (+imag, -imag).
inline std::pair<std::complex<double>, std::complex<double>> eigenvalues(const Mat2 &m, double det) {
  const double tr = m.trace();
  const double disc = tr * tr / 4.0 - det;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    // Avoid cancellation in the smaller root.
    const double big = tr / 2.0 + std::copysign(s, tr == 0.0 ? 1.0 : tr);
    double small = big != 0.0 ? det / big : tr / 2.0 - s;
    double l1 = big;
    double l2 = small;
    if (l1 < l2) std::swap(l1, l2);
    return {{l1, 0.0}, {l2, 0.0}};
  }
  const double s = std::sqrt(-disc);
  return {{tr / 2.0, s}, {tr / 2.0, -s}};
}

/// Eigenvalues of m, same ordering.
inline std::pair<std::complex<double>, std::complex<double>> eigenvalues(const Mat2 &m) {
  return eigenvalues(m, m.det());
}

/// Eigenvector for a real eigenvalue, unit length, first nonzero component
/// made positive so the orientation is reproducible.
inline Vec2 eigenvector(const Mat2 &m, double lambda) {
  // Pick the better-conditioned row of (m - lambda I).
  const Vec2 r0{m.a - lambda, m.b};
  const Vec2 r1{m.c, m.d - lambda};
  const Vec2 row = norm(r0) >= norm(r1) ? r0 : r1;
  Vec2 v = norm(row) == 0.0 ? Vec2{1.0, 0.0} : Vec2{-row.y, row.x};
  v = normalized(v);
  if (v.x < 0.0 || (v.x == 0.0 && v.y < 0.0)) v = -v;
  return v;
}

}  // namespace diffgeo
