#include "qlayer/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace qlayer::quad {

namespace {

Rule build_rule(int n) {
  // Newton iteration on P_n from the Chebyshev-like initial guess.
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.nodes[n - 1 - i] = x;
    r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

}  // namespace

const Rule& gauss_legendre(int points) {
  if (points < 1 || points > 64) throw std::invalid_argument("gauss_legendre: points out of range");
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(points);
  if (it == cache.end()) {
    Rule r = points == 1 ? Rule{{0.0}, {2.0}} : build_rule(points);
    it = cache.emplace(points, std::move(r)).first;
  }
  return it->second;
}

double adaptive(const std::function<double(double)>& f, double lo, double hi, double rel_tol,
                double* error) {
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, rel_tol, &err);
  if (error) *error = err;
  return v;
}

double composite(const std::function<double(double)>& f, std::span<const double> breaks, int points) {
  const Rule& rule = gauss_legendre(points);
  std::vector<double> cells;
  cells.reserve(breaks.size());
  for (std::size_t c = 0; c + 1 < breaks.size(); ++c) {
    const double lo = breaks[c], hi = breaks[c + 1];
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) s += rule.weights[q] * f(mid + half * rule.nodes[q]);
    cells.push_back(s * half);
  }
  // pairwise order keeps long radial sums stable
  std::function<double(std::size_t, std::size_t)> sum = [&](std::size_t b, std::size_t e) -> double {
    if (e - b <= 8) {
      double s = 0.0;
      for (std::size_t i = b; i < e; ++i) s += cells[i];
      return s;
    }
    const std::size_t m = b + (e - b) / 2;
    return sum(b, m) + sum(m, e);
  };
  return sum(0, cells.size());
}

std::vector<double> graded_breaks(double lo, double hi, std::vector<double> knots, double min_width,
                                  double growth) {
  knots.push_back(lo);
  knots.push_back(hi);
  std::erase_if(knots, [&](double k) { return k < lo || k > hi || !std::isfinite(k); });
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double x, double y) { return std::abs(x - y) <= 1e-12 * (1.0 + std::abs(x)); }),
              knots.end());
  std::vector<double> out{knots.front()};
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    double x = knots[i];
    const double end = knots[i + 1];
    while (x < end) {
      const double w = std::max(min_width, growth * std::abs(x));
      const double remaining = end - x;
      if (remaining <= w * 1.000001) {
        x = end;
      } else {
        // keep the cell count integral over the remaining span when uniform
        const int cells = static_cast<int>(std::ceil(remaining / w));
        x = (growth == 0.0) ? x + remaining / cells : x + w;
      }
      out.push_back(x);
    }
  }
  return out;
}

}  // namespace qlayer::quad
