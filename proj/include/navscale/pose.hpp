#pragma once

#include <cmath>
#include <numbers>

namespace navscale {

struct Point2 {
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (a > -kPi && a <= kPi) return a;
  a = std::fmod(a + kPi, kTwoPi);
  if (a <= 0.0) a += kTwoPi;
  return a - kPi;
}

/// Planar pose in a local metric frame. Heading is measured counter-clockwise
/// from the +x (east) axis.
struct PoseSE2 {
  double x{0.0};
  double y{0.0};
  double theta{0.0};

  [[nodiscard]] Point2 position() const { return {x, y}; }

  friend bool operator==(const PoseSE2&, const PoseSE2&) = default;
};

/// Velocity command in physical units.
struct Command {
  double v{0.0};      // m/s
  double omega{0.0};  // rad/s

  friend bool operator==(const Command&, const Command&) = default;
};

}  // namespace navscale
