#include "verifem/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace verifem {

namespace {

std::vector<LinePoint> gauss_legendre(int n) {
  std::vector<LinePoint> pts(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Re-evaluate derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    pts[n - 1 - i] = {0.5 * (x + 1.0), 0.5 * w};
  }
  return pts;
}

std::vector<TrianglePoint> radon7() {
  const double s = std::sqrt(15.0);
  const double a1 = (6.0 - s) / 21.0, w1 = (155.0 - s) / 1200.0;
  const double a2 = (6.0 + s) / 21.0, w2 = (155.0 + s) / 1200.0;
  std::vector<TrianglePoint> r;
  r.push_back({{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0});
  for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
    const double b = 1.0 - 2.0 * a;
    r.push_back({{a, a, b}, w});
    r.push_back({{a, b, a}, w});
    r.push_back({{b, a, a}, w});
  }
  return r;
}

std::vector<TrianglePoint> collapsed(int degree) {
  const int n = (degree + 3) / 2;
  const auto& g = line_rule(n);
  std::vector<TrianglePoint> r;
  r.reserve(n * n);
  for (const auto& pu : g) {
    for (const auto& pv : g) {
      const double x = pu.t;
      const double y = pv.t * (1.0 - pu.t);
      r.push_back({{1.0 - x - y, x, y}, 2.0 * pu.weight * pv.weight * (1.0 - pu.t)});
    }
  }
  return r;
}

std::mutex cache_mutex;

}  // namespace

const std::vector<LinePoint>& line_rule(int points) {
  if (points < 1) throw std::invalid_argument("line rule needs at least one point");
  static std::map<int, std::vector<LinePoint>> cache;
  std::lock_guard lock(cache_mutex);
  auto it = cache.find(points);
  if (it == cache.end()) it = cache.emplace(points, gauss_legendre(points)).first;
  return it->second;
}

const std::vector<TrianglePoint>& triangle_rule(int degree) {
  static const std::vector<TrianglePoint> low = radon7();
  if (degree <= 5) return low;
  static std::map<int, std::vector<TrianglePoint>> cache;
  {
    std::lock_guard lock(cache_mutex);
    auto it = cache.find(degree);
    if (it != cache.end()) return it->second;
  }
  auto rule = collapsed(degree);
  std::lock_guard lock(cache_mutex);
  return cache.emplace(degree, std::move(rule)).first->second;
}

}  // namespace verifem
