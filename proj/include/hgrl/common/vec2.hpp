#pragma once

#include <cmath>

namespace hgrl {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }

  /// Right-hand normal of a direction (rotated by -90 degrees).
  constexpr Vec2 right() const { return {y, -x}; }
  /// Left-hand normal of a direction (rotated by +90 degrees).
  constexpr Vec2 left() const { return {-y, x}; }
};

inline Vec2 unit_from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }

}  // namespace hgrl
