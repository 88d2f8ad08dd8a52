#include "qlayer/parabolicity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Sparse>

#include "qlayer/errors.hpp"
#include "qlayer/parallel.hpp"
#include "qlayer/quadrature.hpp"

namespace qlayer {

namespace {

constexpr double kPi = std::numbers::pi;

// Cumulative integral of a radial density on graded cells, with exact
// in-cell evaluation for arbitrary upper limits.
class RadialTable {
 public:
  RadialTable(std::function<double(double)> density, double lo, double hi, std::vector<double> knots = {})
      : density_(std::move(density)) {
    breaks_ = quad::graded_breaks(lo, hi, std::move(knots), 0.05, 0.02);
    cumulative_.assign(breaks_.size(), 0.0);
    std::vector<double> cells(breaks_.size() - 1);
    parallel_for(cells.size(), [&](std::size_t c) { cells[c] = cell(breaks_[c], breaks_[c + 1]); });
    for (std::size_t c = 0; c < cells.size(); ++c) cumulative_[c + 1] = cumulative_[c] + cells[c];
  }

  double operator()(double x) const {
    if (x <= breaks_.front()) return 0.0;
    if (x >= breaks_.back()) return cumulative_.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin()) - 1;
    return cumulative_[k] + cell(breaks_[k], x);
  }

  double total() const { return cumulative_.back(); }
  double hi() const { return breaks_.back(); }

  // Smallest x with integral(x) = target (the integrand is positive).
  double inverse(double target) const {
    if (target <= 0.0) return breaks_.front();
    const auto k = static_cast<std::size_t>(
                       std::upper_bound(cumulative_.begin(), cumulative_.end(), target) - cumulative_.begin()) - 1;
    if (k + 1 >= breaks_.size()) return breaks_.back();
    double lo = breaks_[k], hi = breaks_[k + 1];
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (cumulative_[k] + cell(breaks_[k], mid) < target) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  double cell(double a, double b) const {
    const auto& rule = quad::gauss_legendre(10);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) s += rule.weights[q] * density_(mid + half * rule.nodes[q]);
    return s * half;
  }

  std::function<double(double)> density_;
  std::vector<double> breaks_;
  std::vector<double> cumulative_;
};

std::pair<double, double> loglog_fit(std::span<const double> x, std::span<const double> y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] <= 0.0 || y[k] <= 0.0) continue;
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    ++m;
  }
  if (m < 2 || m * sxx - sx * sx <= 0.0) return {0.0, 0.0};
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / m;
  return {slope, std::exp(intercept)};
}

std::function<double(double)> arclength_density(const RadialProfile& f) {
  return [f](double r) { return std::sqrt(1.0 + f.df(r) * f.df(r)); };
}

std::function<double(double)> area_density(const RadialProfile& f) {
  return [f](double r) { return 2.0 * kPi * r * std::sqrt(1.0 + f.df(r) * f.df(r)); };
}

// V(t) = 4 pi^2 int_0^t tau sigma sqrt(1 + sigma'^2) for the product chart.
std::function<double(double)> product_volume_density(const SurfaceChart& chart) {
  return [&chart](double t) {
    Vec x(3);
    x << 0.0, t, 0.0;
    const FundamentalForms ff = fundamental_forms(chart, x);
    return 4.0 * kPi * kPi * std::sqrt(ff.g.determinant());
  };
}

}  // namespace

double radial_arclength(const RadialProfile& f, double r) {
  return RadialTable(arclength_density(f), 0.0, r)(r);
}

double radial_area(const RadialProfile& f, double r) { return RadialTable(area_density(f), 0.0, r)(r); }

double radius_at_arclength(const RadialProfile& f, double s, double r_max) {
  return RadialTable(arclength_density(f), 0.0, r_max).inverse(s);
}

VolumeGrowthCurve make_volume_curve(std::vector<double> radii, std::vector<double> volumes) {
  VolumeGrowthCurve c;
  c.radii = std::move(radii);
  c.volumes = std::move(volumes);
  const std::size_t m = c.radii.size();
  const std::size_t start = m - std::max<std::size_t>(2, m / 3);
  const auto [slope, coef] = loglog_fit(std::span(c.radii).subspan(start), std::span(c.volumes).subspan(start));
  c.exponent = slope;
  c.coefficient = coef;
  return c;
}

VolumeGrowthCurve volume_growth(const SurfaceChart& chart, std::span<const double> radii) {
  std::vector<double> rs(radii.begin(), radii.end());
  std::sort(rs.begin(), rs.end());
  std::vector<double> kept, vols;
  if (chart.radial) {
    const double rmax = chart.max_radius();
    const RadialTable arclen(arclength_density(*chart.radial), 0.0, rmax);
    const RadialTable area(area_density(*chart.radial), 0.0, rmax);
    for (double t : rs) {
      if (t <= 0.0 || t > arclen.total()) continue;
      kept.push_back(t);
      vols.push_back(area(arclen.inverse(t)));
    }
  } else if (chart.symmetry == Symmetry::product && chart.layout == ChartLayout::axis) {
    const double tmax = chart.max_radius();
    const RadialTable vol(product_volume_density(chart), 1e-9, tmax, {3.0, 3.1});
    for (double t : rs) {
      if (t <= 0.0 || t > tmax) continue;
      kept.push_back(t);
      vols.push_back(vol(t));
    }
  } else {
    throw UnsupportedChart("volume growth needs a radial or product chart");
  }
  if (kept.size() < 8) throw TruncationTooSmall("fewer than 8 radii inside the truncation");
  return make_volume_curve(std::move(kept), std::move(vols));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::parabolic_consistent:
      return "parabolic-consistent";
    case Verdict::nonparabolic_consistent:
      return "nonparabolic-consistent";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

namespace {

// Piecewise power-law interpolation of V.
double interp_volume(const VolumeGrowthCurve& c, double t) {
  const auto& x = c.radii;
  const auto& y = c.volumes;
  auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin());
  k = std::clamp<std::size_t>(k, 1, x.size() - 1);
  const double p = std::log(y[k] / y[k - 1]) / std::log(x[k] / x[k - 1]);
  return y[k - 1] * std::pow(t / x[k - 1], p);
}

// int_{a}^{b} t / V(t) dt where V = Va (t/ta)^p.
double segment_integral(double ta, double Va, double p, double a, double b) {
  const double q = 2.0 - p;
  const double scale = std::pow(ta, p) / Va;
  const double la = std::log(a), lb = std::log(b);
  if (std::abs(q) < 1e-14) return scale * (lb - la);
  return scale * std::exp(q * la) * std::expm1(q * (lb - la)) / q;
}

}  // namespace

ParabolicityResult parabolicity_integral(const VolumeGrowthCurve& curve, double T) {
  const auto& x = curve.radii;
  const auto& y = curve.volumes;
  if (x.size() < 2 || x.front() > 1.0 || x.back() < T || T <= 1.0)
    throw DomainError("volume curve must cover [1, T]");
  ParabolicityResult res;
  double total = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    const double a = std::max(1.0, x[k - 1]), b = std::min(T, x[k]);
    if (b <= a) continue;
    const double p = std::log(y[k] / y[k - 1]) / std::log(x[k] / x[k - 1]);
    total += segment_integral(x[k - 1], y[k - 1], p, a, b);
  }
  res.partial = total;
  res.end_slope = T * T / interp_volume(curve, T);

  if (T > 10.0 * std::exp(1.0)) {
    const double Tlo = T / 10.0;
    const double slope_lo = Tlo * Tlo / interp_volume(curve, Tlo);
    res.slope_log_ratio = (res.end_slope * std::log(T)) / (slope_lo * std::log(Tlo));
    res.tail_exponent = std::log(interp_volume(curve, T) / interp_volume(curve, Tlo)) / std::log(10.0);
    // divergence at least like log log T
    if (res.slope_log_ratio >= 0.95)
      res.verdict = Verdict::parabolic_consistent;
    else if (res.tail_exponent > 2.05)
      res.verdict = Verdict::nonparabolic_consistent;
  }
  return res;
}

double CapacityProfile::value(double t) const {
  if (t <= r) return 1.0;
  if (t >= R) return 0.0;
  if (from_mesh) {
    auto k = static_cast<std::size_t>(std::upper_bound(radii.begin(), radii.end(), t) - radii.begin());
    k = std::clamp<std::size_t>(k, 1, radii.size() - 1);
    const double w = (t - radii[k - 1]) / (radii[k] - radii[k - 1]);
    return (1 - w) * psi[k - 1] + w * psi[k];
  }
  auto k = static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), t) - breaks.begin()) - 1;
  const double b = breaks[k + 1];
  const auto& rule = quad::gauss_legendre(10);
  const double mid = 0.5 * (t + b), half = 0.5 * (b - t);
  double s = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) s += rule.weights[q] * weight(mid + half * rule.nodes[q]);
  return (tail_integral[k + 1] + s * half) / total;
}

double CapacityProfile::derivative(double t) const {
  if (t <= r || t >= R) return 0.0;
  if (from_mesh) {
    auto k = static_cast<std::size_t>(std::upper_bound(radii.begin(), radii.end(), t) - radii.begin());
    k = std::clamp<std::size_t>(k, 1, radii.size() - 1);
    return (psi[k] - psi[k - 1]) / (radii[k] - radii[k - 1]);
  }
  return -weight(t) / total;
}

CapacityProfile capacity_profile(const SurfaceChart& chart, double r, double R) {
  if (!(r > 0.0 && R > r)) throw DomainError("capacity profile needs 0 < r < R");
  if (!chart.radial || chart.n != 2) throw UnsupportedChart("radial capacity path needs a radial graph chart");
  CapacityProfile p;
  p.r = r;
  p.R = R;
  const RadialProfile f = *chart.radial;
  p.weight = [f](double t) { return std::sqrt(1.0 + f.df(t) * f.df(t)) / t; };
  p.breaks = quad::graded_breaks(r, R, {}, 0.05, 0.02);
  const std::size_t m = p.breaks.size();
  std::vector<double> cells(m - 1);
  parallel_for(cells.size(), [&](std::size_t c) {
    cells[c] = quad::composite(p.weight, std::vector<double>{p.breaks[c], p.breaks[c + 1]}, 10);
  });
  p.tail_integral.assign(m, 0.0);
  for (std::size_t c = m - 1; c-- > 0;) p.tail_integral[c] = p.tail_integral[c + 1] + cells[c];
  p.total = p.tail_integral[0];

  // Dirichlet energy 2 pi int psi'^2 t / sqrt(1 + f_t^2) dt.
  auto energy_density = [&p, f](double t) {
    const double d = p.derivative(t);
    return 2.0 * kPi * d * d * t / std::sqrt(1.0 + f.df(t) * f.df(t));
  };
  p.energy = quad::composite(energy_density, p.breaks, 10);

  const int samples = 200;
  for (int k = 0; k <= samples; ++k) {
    const double t = r * std::pow(R / r, static_cast<double>(k) / samples);
    p.radii.push_back(t);
    p.psi.push_back(p.value(t));
  }
  p.psi.front() = 1.0;
  p.psi.back() = 0.0;
  return p;
}

CapacityProfile capacity_profile_mesh(const SurfaceChart& chart, double r, double R, int nodes) {
  if (chart.n != 2 || chart.layout != ChartLayout::cartesian)
    throw UnsupportedChart("mesh capacity path needs a cartesian n = 2 chart");
  if (!(r > 0.0 && R > r)) throw DomainError("capacity profile needs 0 < r < R");
  const double L = chart.max_radius();
  if (R > L) throw TruncationTooSmall("outer radius exceeds the chart");
  const int m = nodes;
  const double h = 2.0 * L / (m - 1);
  auto coord = [&](int i) { return -L + h * i; };
  auto id = [&](int i, int j) { return i * m + j; };

  // 1 inside r, 0 outside R, unknown in between.
  std::vector<int> dof(static_cast<std::size_t>(m * m), -1);
  std::vector<double> fixed(static_cast<std::size_t>(m * m), 0.0);
  int ndof = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double rad = std::hypot(coord(i), coord(j));
      if (rad <= r) fixed[id(i, j)] = 1.0;
      else if (rad < R) dof[id(i, j)] = ndof++;
    }

  const auto& rule = quad::gauss_legendre(2);
  std::vector<Eigen::Triplet<double>> trips;
  Vec rhs = Vec::Zero(ndof);
  std::vector<Mat> local(static_cast<std::size_t>((m - 1) * (m - 1)));
  parallel_for(local.size(), [&](std::size_t e) {
    const int ei = static_cast<int>(e) / (m - 1), ej = static_cast<int>(e) % (m - 1);
    Mat Ke = Mat::Zero(4, 4);
    for (int qa = 0; qa < 2; ++qa)
      for (int qb = 0; qb < 2; ++qb) {
        const double s = 0.5 * (1 + rule.nodes[qa]), t = 0.5 * (1 + rule.nodes[qb]);
        Vec x(2);
        x << coord(ei) + h * s, coord(ej) + h * t;
        const FundamentalForms ff = fundamental_forms(chart, x);
        const Mat ginv = ff.g.inverse();
        const double w = 0.25 * rule.weights[qa] * rule.weights[qb] * h * h * std::sqrt(ff.g.determinant());
        Mat grads(2, 4);
        grads << -(1 - t) / h, (1 - t) / h, -t / h, t / h, -(1 - s) / h, -s / h, (1 - s) / h, s / h;
        Ke += w * grads.transpose() * ginv * grads;
      }
    local[e] = Ke;
  });
  for (std::size_t e = 0; e < local.size(); ++e) {
    const int ei = static_cast<int>(e) / (m - 1), ej = static_cast<int>(e) % (m - 1);
    const int nodes_e[4] = {id(ei, ej), id(ei + 1, ej), id(ei, ej + 1), id(ei + 1, ej + 1)};
    for (int a = 0; a < 4; ++a) {
      const int da = dof[nodes_e[a]];
      if (da < 0) continue;
      for (int b = 0; b < 4; ++b) {
        const int db = dof[nodes_e[b]];
        if (db >= 0) trips.emplace_back(da, db, local[e](a, b));
        else rhs[da] -= local[e](a, b) * fixed[nodes_e[b]];
      }
    }
  }
  Eigen::SparseMatrix<double> K(ndof, ndof);
  K.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
  if (solver.info() != Eigen::Success) throw AssemblyError("capacity stiffness factorization failed");
  const Vec sol = solver.solve(rhs);

  std::vector<double> values(fixed);
  for (int k = 0; k < m * m; ++k)
    if (dof[k] >= 0) values[k] = sol[dof[k]];

  CapacityProfile p;
  p.r = r;
  p.R = R;
  p.from_mesh = true;
  double energy = 0.0;
  for (std::size_t e = 0; e < local.size(); ++e) {
    const int ei = static_cast<int>(e) / (m - 1), ej = static_cast<int>(e) % (m - 1);
    Vec ve(4);
    ve << values[id(ei, ej)], values[id(ei + 1, ej)], values[id(ei, ej + 1)], values[id(ei + 1, ej + 1)];
    energy += ve.dot(local[e] * ve);
  }
  p.energy = energy;
  // sample along the positive first axis
  const int mid = (m - 1) / 2;
  for (int i = mid; i < m; ++i) {
    const double t = coord(i);
    if (t < r && i + 1 < m && coord(i + 1) < r) continue;
    p.radii.push_back(std::max(t, 0.0));
    p.psi.push_back(values[id(i, mid)]);
    if (t >= R) break;
  }
  return p;
}

double log_cutoff_energy(double R) {
  if (!(R > 3.0)) throw DomainError("log cutoff needs R > 3");
  // In s = log t: sigma = C (log R / s - log R / R), t sigma'(t)^2 dt = sigma_s^2 ds.
  const double lR = std::log(R);
  const double C = 1.0 / (1.0 - lR / R);
  auto integrand = [&](double s) {
    const double ds = -C * lR / (s * s);
    return ds * ds;
  };
  return 2.0 * kPi * quad::adaptive(integrand, lR, R, 1e-14);
}

EndData isoperimetric_constants(const SurfaceChart& chart, std::span<const double> radii) {
  if (chart.n != 2) throw UnsupportedDimension("isoperimetric constants are defined for surfaces");
  if (!chart.radial) throw UnsupportedChart("isoperimetric constants need a radial chart");
  const RadialProfile f = *chart.radial;
  const double rmax = chart.max_radius();
  const RadialTable arclen(arclength_density(f), 0.0, rmax);
  const RadialTable area(area_density(f), 0.0, rmax);

  std::vector<double> s_kept, a_kept;
  for (double s : radii) {
    if (s <= 0.0 || s > arclen.total()) continue;
    s_kept.push_back(s);
    a_kept.push_back(area(arclen.inverse(s)));
  }
  if (s_kept.size() < 4) throw TruncationTooSmall("fewer than 4 radii inside the truncation");

  EndData d;
  std::vector<std::pair<double, double>> curve;
  for (std::size_t k = 0; k < s_kept.size(); ++k) curve.emplace_back(s_kept[k], a_kept[k]);
  d.area_curves.push_back(curve);

  // local exponent over the last decade of radii
  const double s_end = s_kept.back();
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < s_kept.size(); ++k)
    if (s_kept[k] >= s_end / 10.0) {
      xs.push_back(s_kept[k]);
      ys.push_back(a_kept[k]);
    }
  const double p = loglog_fit(xs, ys).first;
  d.tail_exponent.push_back(p);

  double lambda;
  if (p < 2.0 - 0.05) {
    lambda = 0.0;
  } else {
    // ratio(s) = lambda + c / s, eliminated with the half radius
    const double ratio_end = a_kept.back() / (kPi * s_end * s_end);
    const double a_half = area(arclen.inverse(0.5 * s_end));
    const double ratio_half = a_half / (kPi * 0.25 * s_end * s_end);
    lambda = 2.0 * ratio_end - ratio_half;
  }
  d.lambda_iso.push_back(lambda);
  return d;
}

HartmanReport hartman(const SurfaceChart& chart) {
  if (chart.n != 2) throw UnsupportedDimension("Hartman's formula is stated for surfaces");
  if (!chart.euler_char) throw UnknownEulerChar("chart '" + chart.id + "' has no Euler characteristic");
  HartmanReport rep;
  rep.euler_char = *chart.euler_char;
  const double rmax = chart.max_radius();
  if (!chart.radial) throw UnsupportedChart("Hartman residual needs a radial chart");
  const RadialProfile f = *chart.radial;

  auto K_at = [&chart](double r) {
    Vec x = Vec::Zero(2);
    x[0] = std::max(r, 1e-9);
    return *shape_data(fundamental_forms(chart, x)).K_gauss;
  };
  auto dens = area_density(f);
  const auto breaks = quad::graded_breaks(0.0, rmax, {}, 0.02, 0.01);
  rep.total_curvature = quad::composite([&](double r) { return K_at(r) * dens(r); }, breaks, 8);
  const double abs_total = quad::composite([&](double r) { return std::abs(K_at(r)) * dens(r); }, breaks, 8);
  const auto outer = quad::graded_breaks(0.9 * rmax, rmax, {}, 0.02, 0.01);
  const double abs_outer = quad::composite([&](double r) { return std::abs(K_at(r)) * dens(r); }, outer, 8);
  rep.tail_fraction = abs_total > 0.0 ? abs_outer / abs_total : 0.0;

  // isoperimetric constants from a geometric ladder of geodesic radii
  const double s_max = radial_arclength(f, rmax);
  std::vector<double> ladder;
  for (int k = 0; k <= 40; ++k) ladder.push_back(s_max * std::pow(1e-3, 1.0 - k / 40.0));
  const EndData ends = isoperimetric_constants(chart, ladder);
  for (double l : ends.lambda_iso) rep.lambda_sum += l;
  rep.residual = rep.total_curvature / (2.0 * kPi) - (rep.euler_char - rep.lambda_sum);
  return rep;
}

double hartman_residual(const SurfaceChart& chart) { return hartman(chart).residual; }

}  // namespace qlayer
