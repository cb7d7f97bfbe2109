#pragma once

#include <span>

#include "skelsql/encoder.hpp"

namespace skelsql::hyperbolic {

/// Largest norm a point may have before the artanh in poincare_distance.
inline constexpr double kBoundaryMargin = 1e-5;
/// Points with norm >= 1 - kBallTolerance are rejected as outside the ball.
inline constexpr double kBallTolerance = 1e-12;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

/// Exponential map at the origin of the unit Poincare ball:
/// tanh(|h|) h / |h|, with the origin mapping to itself.
Vector project(std::span<const double> h);

/// Rescales v onto the ball of radius 1 - kBoundaryMargin when it lies outside.
Vector clip_to_ball(std::span<const double> v);

/// Mobius addition at curvature -1:
/// ((1 + 2<x,y> + |y|^2) x + (1 - |x|^2) y) / (1 + 2<x,y> + |x|^2 |y|^2).
Vector mobius_add(std::span<const double> x, std::span<const double> y);

/// 2 artanh(|(-a) (+) b|). Exactly zero when a == b.
double poincare_distance(std::span<const double> a, std::span<const double> b);

}  // namespace skelsql::hyperbolic
