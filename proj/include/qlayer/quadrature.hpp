#pragma once

#include <functional>
#include <span>
#include <vector>

namespace qlayer::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Gauss-Legendre rule with `points` nodes (1 <= points <= 64).
const Rule& gauss_legendre(int points);

// Adaptive Gauss-Kronrod on [lo, hi]. `error` receives the estimate.
double adaptive(const std::function<double(double)>& f, double lo, double hi,
                double rel_tol = 1e-13, double* error = nullptr);

// Composite Gauss-Legendre over the cells delimited by `breaks`.
double composite(const std::function<double(double)>& f, std::span<const double> breaks,
                 int points = 8);

// Sorted, de-duplicated breakpoints covering [lo, hi]: every interval between
// consecutive `knots` is split so that no cell exceeds
// max(min_width, growth * |x|). Knots outside [lo, hi] are dropped.
std::vector<double> graded_breaks(double lo, double hi, std::vector<double> knots, double min_width,
                                  double growth);

}  // namespace qlayer::quad
