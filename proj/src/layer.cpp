#include "qlayer/layer.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qlayer/errors.hpp"
#include "qlayer/parallel.hpp"

namespace qlayer {

LayerConfig::LayerConfig(double a, double C0) : a_(a), C0_(C0) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("layer depth a must be positive");
  if (!(C0 > 0.0 && C0 < 1.0)) throw ConfigError("C0 must lie in (0, 1)");
}

double LayerConfig::kappa1() const { return std::numbers::pi / (2.0 * a_); }

Mat LayerMetric::full() const {
  const auto n = G_tangent.rows();
  Mat G = Mat::Zero(n + 1, n + 1);
  G.topLeftCorner(n, n) = G_tangent;
  G(n, n) = 1.0;
  return G;
}

LayerMetric layer_metric(const FundamentalForms& forms, const ShapeData& shape, double u,
                         const LayerConfig& config) {
  if (std::abs(u) >= config.a()) throw DomainError("|u| must be below the depth a");
  if (config.a() * shape.normA >= config.C0()) {
    std::ostringstream os;
    os << "a*||A|| = " << config.a() * shape.normA << " >= C0 = " << config.C0();
    throw ValidityError(os.str());
  }
  const auto n = shape.n;
  const Mat M = Mat::Identity(n, n) - u * shape.A;
  LayerMetric m;
  m.G_tangent = M.transpose() * forms.g * M;
  m.G_tangent = (0.5 * (m.G_tangent + m.G_tangent.transpose())).eval();
  m.density = shape.density(u);
  m.detG = m.G_tangent.determinant();
  return m;
}

MeasureBounds measure_bounds_check(const ShapeData& shape, double u) {
  const double t = std::abs(u) * shape.normA;
  if (t >= 1.0) throw DomainError("measure bounds need |u| ||A|| < 1");
  MeasureBounds b;
  b.lower = std::pow(1.0 - t, shape.n);
  b.upper = std::pow(1.0 + t, shape.n);
  b.value = shape.density(u);
  const double slack = 1e-12 * b.upper;
  if (b.value < b.lower - slack || b.value > b.upper + slack)
    throw Inconsistent("det(I-uA) escapes the (1 -+ |u| ||A||)^n sandwich");
  return b;
}

std::size_t SampleGrid::size() const {
  std::size_t s = 1;
  for (const auto& a : axes) s *= a.size();
  return axes.empty() ? 0 : s;
}

Vec SampleGrid::point(std::size_t index) const {
  Vec x(static_cast<Eigen::Index>(axes.size()));
  for (std::size_t k = axes.size(); k-- > 0;) {
    x[static_cast<Eigen::Index>(k)] = axes[k][index % axes[k].size()];
    index /= axes[k].size();
  }
  return x;
}

SampleGrid SampleGrid::uniform(const SurfaceChart& chart, int per_axis, std::optional<double> radius_cap) {
  SampleGrid g;
  for (int i = 0; i < chart.n; ++i) {
    auto d = chart.domain[i];
    if (radius_cap && ((chart.layout == ChartLayout::polar && i == 0) ||
                       (chart.layout == ChartLayout::axis && i == chart.radius_axis))) {
      d.hi = std::min(d.hi, *radius_cap);
    } else if (radius_cap && chart.layout == ChartLayout::cartesian) {
      d.lo = std::max(d.lo, -*radius_cap);
      d.hi = std::min(d.hi, *radius_cap);
    }
    std::vector<double> axis;
    const int count = d.periodic ? per_axis : per_axis + 1;
    for (int k = 0; k < count; ++k) {
      const double t = static_cast<double>(k) / per_axis;
      axis.push_back(d.lo + t * (d.hi - d.lo));
    }
    // polar and axis charts are singular on their radial origin
    if ((chart.layout == ChartLayout::polar && i == 0) ||
        (chart.layout == ChartLayout::axis && i == chart.radius_axis)) {
      if (axis.front() <= 0.0) axis.front() = 1e-3 * (axis[1] - axis[0]);
    }
    g.axes.push_back(std::move(axis));
  }
  return g;
}

ValidityReport validity_scan(const SurfaceChart& chart, const LayerConfig& config, const SampleGrid& grid,
                             int radial_bins) {
  const std::size_t count = grid.size();
  std::vector<double> norms(count), radii(count);
  parallel_for(count, [&](std::size_t i) {
    const Vec x = grid.point(i);
    norms[i] = shape_data(fundamental_forms(chart, x)).normA;
    radii[i] = chart.radius(x);
  });

  ValidityReport rep;
  rep.samples = count;
  std::size_t best = 0;
  double rmax = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (norms[i] > norms[best]) best = i;
    rmax = std::max(rmax, radii[i]);
  }
  rep.sup_normA = count ? norms[best] : 0.0;
  rep.sup_a_normA = config.a() * rep.sup_normA;
  rep.margin = config.C0() - rep.sup_a_normA;
  if (count) rep.argmax = grid.point(best);

  std::vector<double> bin_max(static_cast<std::size_t>(radial_bins), -1.0);
  std::vector<double> bin_r(static_cast<std::size_t>(radial_bins), 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    auto b = static_cast<std::size_t>(std::min<double>(radial_bins - 1, radii[i] / rmax * radial_bins));
    if (norms[i] > bin_max[b]) {
      bin_max[b] = norms[i];
      bin_r[b] = radii[i];
    }
  }
  for (std::size_t b = 0; b < bin_max.size(); ++b)
    if (bin_max[b] >= 0.0) rep.decay_profile.emplace_back(bin_r[b], bin_max[b]);

  // log-log least squares over the outer third
  const std::size_t m = rep.decay_profile.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (std::size_t k = m - m / 3; k < m; ++k) {
    const auto [r, v] = rep.decay_profile[k];
    if (r <= 0.0 || v <= 0.0) continue;
    const double lx = std::log(r), ly = std::log(v);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    ++used;
  }
  if (used >= 2 && used * sxx - sx * sx > 0.0) rep.tail_exponent = (used * sxy - sx * sy) / (used * sxx - sx * sx);

  if (rep.sup_a_normA >= config.C0()) {
    std::ostringstream os;
    os << "sup a*||A|| = " << rep.sup_a_normA << " >= C0 = " << config.C0() << " on '" << chart.id << "'";
    throw ValidityError(os.str());
  }
  return rep;
}

}  // namespace qlayer
