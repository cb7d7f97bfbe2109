#include "skelsql/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skelsql/error.hpp"

namespace skelsql::hyperbolic {
namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kNonFiniteInput, std::string(what) + " has a non-finite entry");
  }
}

void require_same_dimension(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " differ");
  }
}

void require_inside(double squared_norm, const char* what) {
  if (!(squared_norm < (1.0 - kBallTolerance) * (1.0 - kBallTolerance))) {
    throw Error(ErrorCode::kOutsideBall, std::string(what) + " has norm " + std::to_string(std::sqrt(squared_norm)));
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector project(std::span<const double> h) {
  require_finite(h, "representation");
  const double n = norm(h);
  Vector out(h.begin(), h.end());
  if (n == 0.0) return out;
  const double scale = std::tanh(n) / n;
  for (double& x : out) x *= scale;
  return out;
}

Vector clip_to_ball(std::span<const double> v) {
  const double n = norm(v);
  const double radius = 1.0 - kBoundaryMargin;
  Vector out(v.begin(), v.end());
  if (n > radius) {
    const double scale = radius / n;
    for (double& x : out) x *= scale;
  }
  return out;
}

Vector mobius_add(std::span<const double> x, std::span<const double> y) {
  require_same_dimension(x, y);
  require_finite(x, "x");
  require_finite(y, "y");
  const double xy = dot(x, y);
  const double x2 = dot(x, x);
  const double y2 = dot(y, y);
  require_inside(x2, "x");
  require_inside(y2, "y");

  const double cx = 1.0 + 2.0 * xy + y2;
  const double cy = 1.0 - x2;
  const double denom = 1.0 + 2.0 * xy + x2 * y2;
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (cx * x[i] + cy * y[i]) / denom;
  return out;
}

double poincare_distance(std::span<const double> a, std::span<const double> b) {
  require_same_dimension(a, b);
  if (std::equal(a.begin(), a.end(), b.begin())) {
    require_finite(a, "a");
    require_inside(dot(a, a), "a");
    return 0.0;
  }
  Vector neg_a(a.begin(), a.end());
  for (double& x : neg_a) x = -x;
  const double r = std::min(norm(mobius_add(neg_a, b)), 1.0 - kBoundaryMargin);
  return 2.0 * std::atanh(r);
}

}  // namespace skelsql::hyperbolic
