#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "qlayer/geometry.hpp"

namespace testing {

using qlayer::Mat;
using qlayer::Vec;

// Forms with the given g and h; tangents and position are placeholders.
inline qlayer::FundamentalForms forms_from(const Mat& g, const Mat& h) {
  qlayer::FundamentalForms f;
  const auto n = g.rows();
  f.g = g;
  f.h = h;
  f.N = Vec::Zero(n + 1);
  f.N[n] = 1.0;
  f.J = Mat::Zero(n + 1, n);
  f.J.topRows(n) = Mat::Identity(n, n);
  f.X = Vec::Zero(n + 1);
  return f;
}

inline qlayer::FundamentalForms diagonal_forms(std::initializer_list<double> lambdas) {
  const auto n = static_cast<Eigen::Index>(lambdas.size());
  Mat h = Mat::Zero(n, n);
  Eigen::Index i = 0;
  for (double l : lambdas) h(i, i) = l, ++i;
  return forms_from(Mat::Identity(n, n), h);
}

struct RandomShape {
  Mat g, h;
};

inline RandomShape random_shape(std::mt19937_64& gen, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Mat B(n, n), S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = d(gen), S(i, j) = d(gen);
  RandomShape r;
  r.g = B * B.transpose() + 0.5 * Mat::Identity(n, n);
  r.h = scale * 0.5 * (S + S.transpose());
  return r;
}

// Composite Simpson rule, the test-side quadrature oracle.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int cells = 2000) {
  const double h = (hi - lo) / cells;
  double s = f(lo) + f(hi);
  for (int i = 1; i < cells; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
