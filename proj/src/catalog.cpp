#include "qlayer/catalog.hpp"

#include <cmath>
#include <numbers>

#include "qlayer/errors.hpp"

namespace qlayer {

std::vector<CatalogInfo> catalog() {
  return {
      {"plane", 2, 1, 1, 0.0, "totally geodesic"},
      {"paraboloid", 2, 1, 1, 2.0, "z = x^2 + y^2, convex, int K = 2 pi"},
      {"radial-graph", 2, 1, 1, std::nullopt, "z = sum_k c_k r^{2k}"},
      {"gaussian-bump", 2, 1, 1, std::nullopt, "z = h exp(-r^2), equality case int K = 0"},
      {"s1xr2-logtube", 3, 0, 1, std::nullopt, "S^1 x R^2 in R^4, sigma(t) = log t, int c_2(A) < 0"},
  };
}

const CatalogInfo& catalog_info(const std::string& id) {
  static const auto entries = catalog();
  for (const auto& e : entries)
    if (e.id == id) return e;
  throw ConfigError("unknown surface id '" + id + "'");
}

namespace {

RadialProfile polynomial_in_r2(std::vector<double> c) {
  // f(r) = sum_k c_k r^{2k}
  RadialProfile p;
  p.f = [c](double r) {
    double s = 0.0, rr = 1.0;
    for (double ck : c) {
      s += ck * rr;
      rr *= r * r;
    }
    return s;
  };
  p.df = [c](double r) {
    double s = 0.0;
    for (std::size_t k = 1; k < c.size(); ++k) s += c[k] * 2.0 * k * std::pow(r, 2.0 * k - 1.0);
    return s;
  };
  p.d2f = [c](double r) {
    double s = 0.0;
    for (std::size_t k = 1; k < c.size(); ++k)
      s += c[k] * 2.0 * k * (2.0 * k - 1.0) * std::pow(r, 2.0 * k - 2.0);
    return s;
  };
  return p;
}

}  // namespace

GraphFunction catalog_graph(const std::string& id, const SurfaceParams& params) {
  if (id == "plane") return graph_from_radial(id, polynomial_in_r2({0.0}));
  if (id == "paraboloid") return graph_from_radial(id, polynomial_in_r2({0.0, 1.0}));
  if (id == "radial-graph") {
    if (params.coefficients.empty()) throw ConfigError("radial-graph needs coefficients");
    return graph_from_radial(id, polynomial_in_r2(params.coefficients));
  }
  if (id == "gaussian-bump") {
    const double h = params.height;
    RadialProfile p;
    p.f = [h](double r) { return h * std::exp(-r * r); };
    p.df = [h](double r) { return -2.0 * h * r * std::exp(-r * r); };
    p.d2f = [h](double r) { return h * (4.0 * r * r - 2.0) * std::exp(-r * r); };
    return graph_from_radial(id, p);
  }
  if (id == "s1xr2-logtube") throw UnsupportedChart("s1xr2-logtube is not a graph over the plane");
  throw ConfigError("unknown surface id '" + id + "'");
}

SurfaceChart catalog_chart(const std::string& id, const SurfaceParams& params, double truncation,
                           ChartLayout layout) {
  if (id == "s1xr2-logtube") return logtube_chart(truncation);
  const auto g = catalog_graph(id, params);
  SurfaceChart c = layout == ChartLayout::cartesian ? graph_cartesian_chart(g, truncation)
                                                    : graph_polar_chart(g, truncation);
  const auto& info = catalog_info(id);
  c.euler_char = info.euler_char;
  c.end_count = info.end_count;
  return c;
}

RadialProfile logtube_sigma() {
  constexpr double t0 = 3.0, t1 = 3.1, w = t1 - t0;
  // Quintic in s = (t - t0)/w matching (value, slope, curvature) at both ends.
  static const Eigen::Matrix<double, 6, 1> coef = [] {
    Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> rhs;
    for (int k = 0; k < 6; ++k) {
      M(0, k) = k == 0 ? 1.0 : 0.0;
      M(1, k) = k == 1 ? 1.0 : 0.0;
      M(2, k) = k == 2 ? 2.0 : 0.0;
      M(3, k) = 1.0;
      M(4, k) = k;
      M(5, k) = k * (k - 1.0);
    }
    rhs << std::log(t0), 0.0, 0.0, std::log(t1), w / t1, -w * w / (t1 * t1);
    return Eigen::Matrix<double, 6, 1>(M.fullPivLu().solve(rhs));
  }();
  auto poly = [](double s, int deriv) {
    double v = 0.0;
    for (int k = deriv; k < 6; ++k) {
      double fall = 1.0;
      for (int m = 0; m < deriv; ++m) fall *= (k - m);
      v += coef[k] * fall * std::pow(s, k - deriv);
    }
    return v;
  };
  RadialProfile p;
  p.f = [poly](double t) {
    if (t <= t0) return std::log(t0);
    if (t >= t1) return std::log(t);
    return poly((t - t0) / w, 0);
  };
  p.df = [poly](double t) {
    if (t <= t0) return 0.0;
    if (t >= t1) return 1.0 / t;
    return poly((t - t0) / w, 1) / w;
  };
  p.d2f = [poly](double t) {
    if (t <= t0) return 0.0;
    if (t >= t1) return -1.0 / (t * t);
    return poly((t - t0) / w, 2) / (w * w);
  };
  return p;
}

SurfaceChart logtube_chart(double t_max) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const RadialProfile sg = logtube_sigma();
  SurfaceChart c;
  c.id = "s1xr2-logtube";
  c.n = 3;
  c.domain = {{0.0, two_pi, true}, {0.0, t_max, false}, {0.0, two_pi, true}};
  c.layout = ChartLayout::axis;
  c.radius_axis = 1;
  c.symmetry = Symmetry::product;
  c.euler_char = 0;
  c.end_count = 1;
  c.position = [sg](const Vec& x) {
    const double s = sg.f(x[1]);
    Vec X(4);
    X << s * std::cos(x[0]), s * std::sin(x[0]), x[1] * std::cos(x[2]), x[1] * std::sin(x[2]);
    return X;
  };
  c.jacobian = [sg](const Vec& x) {
    const double s = sg.f(x[1]), ds = sg.df(x[1]), t = x[1];
    const double ct = std::cos(x[0]), st = std::sin(x[0]), cp = std::cos(x[2]), sp = std::sin(x[2]);
    Mat J = Mat::Zero(4, 3);
    J.col(0) << -s * st, s * ct, 0.0, 0.0;
    J.col(1) << ds * ct, ds * st, cp, sp;
    J.col(2) << 0.0, 0.0, -t * sp, t * cp;
    return J;
  };
  c.second = [sg](const Vec& x) {
    const double s = sg.f(x[1]), ds = sg.df(x[1]), d2s = sg.d2f(x[1]), t = x[1];
    const double ct = std::cos(x[0]), st = std::sin(x[0]), cp = std::cos(x[2]), sp = std::sin(x[2]);
    std::vector<Vec> S(9, Vec::Zero(4));
    S[0] << -s * ct, -s * st, 0.0, 0.0;   // theta theta
    S[1] << -ds * st, ds * ct, 0.0, 0.0;  // theta t
    S[3] = S[1];
    S[4] << d2s * ct, d2s * st, 0.0, 0.0; // t t
    S[5] << 0.0, 0.0, -sp, cp;            // t phi
    S[7] = S[5];
    S[8] << 0.0, 0.0, -t * cp, -t * sp;   // phi phi
    return S;
  };
  return c;
}

}  // namespace qlayer
