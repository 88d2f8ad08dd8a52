#include "qlayer/forms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>

#include <boost/math/tools/toms748_solve.hpp>

#include "qlayer/errors.hpp"
#include "qlayer/parallel.hpp"
#include "qlayer/quadrature.hpp"

namespace qlayer {

namespace {

constexpr double kPi = std::numbers::pi;

long double mu_closed_form(double a, int k) {
  if (k == 0 || k % 2 == 1) return 0.0L;
  const long double pi = std::numbers::pi_v<long double>;
  const long double two_kappa = pi / static_cast<long double>(a);
  long double fact_k = 1.0L;
  for (int m = 2; m <= k; ++m) fact_k *= m;
  long double sum = 0.0L;
  long double odd_fact = 1.0L;  // (2l - 1)!
  long double pi_pow = pi;      // pi^{2l - 1}
  const int half = k / 2;
  for (int l = 1; l <= half; ++l) {
    if (l > 1) {
      odd_fact *= (2.0L * l - 2.0L) * (2.0L * l - 1.0L);
      pi_pow *= pi * pi;
    }
    const long double sign = ((half - l) % 2 == 0) ? 1.0L : -1.0L;
    sum += sign * pi_pow / odd_fact;
  }
  return 0.5L * fact_k / std::pow(two_kappa, static_cast<long double>(k - 1)) * sum;
}

}  // namespace

double mu_quadrature(double a, int k) {
  const double kappa = kPi / (2.0 * a);
  auto f = [=](double u) { return std::pow(u, k) * std::cos(2.0 * kappa * u); };
  // halves separately: odd moments cancel, which defeats a relative tolerance
  return -kappa * kappa * (quad::adaptive(f, -a, 0.0, 1e-14) + quad::adaptive(f, 0.0, a, 1e-14));
}

std::vector<double> mu_coefficients(double a, int kmax) {
  if (!(a > 0.0)) throw DomainError("depth must be positive");
  if (kmax < 0 || kmax > 12) throw DomainError("kmax must lie in [0, 12]");
  std::vector<double> mu(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (int k = 0; k <= kmax; ++k) {
    mu[k] = static_cast<double>(mu_closed_form(a, k));
    if (k == 0 || k % 2 == 1) continue;
    const double q = mu_quadrature(a, k);
    if (std::abs(mu[k] - q) > 1e-10 * std::abs(q))
      throw Inconsistent("mu_" + std::to_string(k) + " closed form disagrees with quadrature");
    if (!(mu[k] > 0.0)) throw Inconsistent("mu_" + std::to_string(k) + " is not positive");
  }
  return mu;
}

double curvature_integrand(const ShapeData& shape, const TransverseProfile& profile) {
  const auto& mu = profile.mu();
  double s = 0.0;
  for (int k = 2; k <= shape.n && k < static_cast<int>(mu.size()); k += 2) s += mu[k] * shape.elem_sym[k];
  return s;
}

double sigma_cross(const TransverseFn& chi1, double a) {
  const double kappa = kPi / (2.0 * a);
  double sup = 0.0;
  for (int i = 0; i <= 64; ++i) sup = std::max(sup, std::abs(chi1(-a + 2.0 * a * i / 64.0).value));
  const double scale = std::max(1.0, sup);
  if (std::abs(chi1(a).value) > 1e-12 * scale || std::abs(chi1(-a).value) > 1e-12 * scale)
    throw NonAdmissibleChi1("chi1 must vanish at u = +-a");
  for (int i = 1; i <= 16; ++i) {
    const double u = a * i / 17.0;
    if (std::abs(chi1(u).value + chi1(-u).value) > 1e-12 * scale)
      throw NonAdmissibleChi1("chi1 must be odd");
  }
  auto minus_chi_u_chi1 = [&](double u) { return kappa * std::sin(kappa * u) * chi1(u).value; };
  const double sigma = quad::adaptive(minus_chi_u_chi1, -a, a, 1e-14);
  auto by_parts = [&](double u) {
    const auto c1 = chi1(u);
    const double chi = std::cos(kappa * u), chi_u = -kappa * std::sin(kappa * u);
    return u * (chi_u * c1.deriv - kappa * kappa * chi * c1.value);
  };
  const double identity = quad::adaptive(by_parts, -a, a, 1e-14);
  if (std::abs(identity - sigma) > 1e-10 * std::max(1.0, std::abs(sigma)))
    throw Inconsistent("integration-by-parts identity for sigma fails");
  if (!(sigma > 0.0)) throw NonAdmissibleChi1("sigma must be positive");
  return sigma;
}

double sigma_cross(const TransverseProfile& profile) { return sigma_cross(profile.chi1(), profile.a()); }

TransverseProfile::TransverseProfile(double a, Chi1Kind chi1, int kmax)
    : a_(a), kappa1_(kPi / (2.0 * a)), kind_(chi1) {
  if (!(a > 0.0)) throw ConfigError("depth a must be positive");
  const double k = kappa1_;
  chi_ = [k](double u) { return TransverseValue{std::cos(k * u), -k * std::sin(k * u)}; };
  if (chi1 == Chi1Kind::sine) {
    chi1_ = [k](double u) { return TransverseValue{std::sin(2.0 * k * u), 2.0 * k * std::cos(2.0 * k * u)}; };
    sup_chi1_ = 1.0;
  } else {
    const double a3 = a * a * a;
    chi1_ = [a, a3](double u) { return TransverseValue{u * (a * a - u * u) / a3, (a * a - 3.0 * u * u) / a3}; };
    sup_chi1_ = 2.0 / (3.0 * std::sqrt(3.0));
  }
  mu_ = mu_coefficients(a, kmax);
  sigma_ = sigma_cross(chi1_, a);
}

// ---- trial functions --------------------------------------------------------

TrialValue TrialFunction::evaluate(const Vec& x, const FundamentalForms& forms, double u) const {
  TrialValue v;
  v.grad = Vec::Zero(x.size());
  for (const auto& term : terms) {
    const HorizontalValue h = term.h(x, forms);
    const TransverseValue t = term.t(u);
    v.value += term.coeff * h.value * t.value;
    v.grad += term.coeff * t.value * h.grad;
    v.du += term.coeff * h.value * t.deriv;
  }
  return v;
}

TrialFunction TrialFunction::scaled(double s) const {
  TrialFunction out = *this;
  for (auto& term : out.terms) term.coeff *= s;
  return out;
}

TrialFunction TrialFunction::plus(const TrialFunction& other) const {
  TrialFunction out = *this;
  out.terms.insert(out.terms.end(), other.terms.begin(), other.terms.end());
  return out;
}

HorizontalFn radial_lift(const SurfaceChart& chart, std::function<std::pair<double, double>(double)> profile) {
  const ChartLayout layout = chart.layout;
  const int axis = chart.radius_axis;
  const int n = chart.n;
  return [layout, axis, n, profile = std::move(profile)](const Vec& x, const FundamentalForms&) {
    SurfaceChart probe;
    probe.n = n;
    probe.layout = layout;
    probe.radius_axis = axis;
    const auto [v, d] = profile(probe.radius(x));
    return HorizontalValue{v, d * probe.radius_gradient(x)};
  };
}

HorizontalFn capacity_lift(const SurfaceChart& chart, CapacityProfile profile) {
  auto shared = std::make_shared<const CapacityProfile>(std::move(profile));
  return radial_lift(chart, [shared](double t) { return std::pair{shared->value(t), shared->derivative(t)}; });
}

HorizontalFn bump(const SurfaceChart& chart, const Vec& center, double radius) {
  const Vec Xc = chart.position(center);
  const double r2 = radius * radius;
  return [Xc, r2](const Vec& x, const FundamentalForms& forms) {
    const Vec d = forms.X - Xc;
    const double s = 1.0 - d.squaredNorm() / r2;
    if (s <= 0.0) return HorizontalValue{0.0, Vec::Zero(x.size())};
    const Vec grad_d2 = 2.0 * forms.J.transpose() * d;
    return HorizontalValue{s * s * s, (-3.0 * s * s / r2) * grad_d2};
  };
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::product:
      return "product";
    case FamilyKind::perturbed:
      return "perturbed";
    case FamilyKind::convex:
      return "convex";
  }
  return "product";
}

TrialFunction TestFunctionFamily::base(const TransverseProfile& profile) const {
  return TrialFunction{{TrialTerm{1.0, psi, profile.chi()}}};
}

TrialFunction TestFunctionFamily::perturbation(const TransverseProfile& profile) const {
  if (!pert) return {};
  return TrialFunction{{TrialTerm{1.0, *pert, profile.chi1()}}};
}

TrialFunction TestFunctionFamily::combined(const TransverseProfile& profile, double epsilon) const {
  return base(profile).plus(perturbation(profile).scaled(epsilon));
}

// ---- quadrature grid --------------------------------------------------------

QuadGrid QuadGrid::refined() const {
  QuadGrid out;
  out.u_cells = 2 * u_cells;
  for (const auto& b : breaks) {
    std::vector<double> r{b.front()};
    for (std::size_t i = 1; i < b.size(); ++i) {
      r.push_back(0.5 * (b[i - 1] + b[i]));
      r.push_back(b[i]);
    }
    out.breaks.push_back(std::move(r));
  }
  return out;
}

std::size_t QuadGrid::cells() const {
  std::size_t c = 1;
  for (const auto& b : breaks) c *= b.size() - 1;
  return c;
}

QuadGrid QuadGrid::radial(const SurfaceChart& chart, double r_max, std::vector<double> knots, int angular_cells,
                          int u_cells) {
  QuadGrid g;
  g.u_cells = u_cells;
  auto uniform = [&](const ParamInterval& d) {
    std::vector<double> b;
    for (int i = 0; i <= angular_cells; ++i) b.push_back(d.lo + (d.hi - d.lo) * i / angular_cells);
    return b;
  };
  switch (chart.layout) {
    case ChartLayout::polar:
      g.breaks.push_back(quad::graded_breaks(0.0, r_max, knots, 0.05, 0.05));
      g.breaks.push_back(uniform(chart.domain[1]));
      break;
    case ChartLayout::cartesian: {
      std::vector<double> sym{0.0};
      for (double k : knots) {
        sym.push_back(k);
        sym.push_back(-k);
      }
      for (int i = 0; i < chart.n; ++i) g.breaks.push_back(quad::graded_breaks(-r_max, r_max, sym, 0.05, 0.05));
      break;
    }
    case ChartLayout::axis:
      for (int i = 0; i < chart.n; ++i) {
        if (i == chart.radius_axis)
          g.breaks.push_back(quad::graded_breaks(chart.domain[i].lo, r_max, knots, 0.05, 0.05));
        else
          g.breaks.push_back(uniform(chart.domain[i]));
      }
      break;
  }
  return g;
}

// ---- evaluation -------------------------------------------------------------

namespace {

enum Slot {
  kQ1pp, kQ2pp, kNpp, kQ1pq, kQ2pq, kNpq, kQ1qq, kQ2qq, kNqq, kExpansion, kPertH, kSlots
};

}  // namespace

PairEvaluation evaluate_pair(const TrialFunction& phi, const TrialFunction* p, const HorizontalFn* psi,
                             const HorizontalFn* pert, const SurfaceChart& chart, const LayerConfig& config,
                             const TransverseProfile& profile, const QuadGrid& grid) {
  const int n = chart.n;
  if (static_cast<int>(grid.breaks.size()) != n) throw DomainError("grid dimension does not match the chart");
  const auto& gl = quad::gauss_legendre(2);
  const double a = config.a();
  const double kappa_sq = config.kappa1_sq();

  // u nodes and weights
  std::vector<double> u_nodes, u_weights;
  const double du = 2.0 * a / grid.u_cells;
  for (int c = 0; c < grid.u_cells; ++c)
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      u_nodes.push_back(-a + du * (c + 0.5 * (1.0 + gl.nodes[q])));
      u_weights.push_back(0.5 * du * gl.weights[q]);
    }

  std::vector<std::size_t> dims(n);
  for (int i = 0; i < n; ++i) dims[i] = grid.breaks[i].size() - 1;
  const std::size_t cells = grid.cells();
  const std::size_t corner = std::size_t{1} << n;

  std::vector<std::array<double, kSlots>> acc(cells);
  std::vector<std::array<double, 2>> sups(cells);

  parallel_for(cells, [&](std::size_t cell) {
    std::array<double, kSlots> s{};
    std::array<double, 2> sup{};
    std::vector<std::size_t> idx(n);
    std::size_t rest = cell;
    for (int i = n - 1; i >= 0; --i) {
      idx[i] = rest % dims[i];
      rest /= dims[i];
    }
    for (std::size_t q = 0; q < corner; ++q) {
      Vec x(n);
      double wx = 1.0;
      for (int i = 0; i < n; ++i) {
        const double lo = grid.breaks[i][idx[i]], hi = grid.breaks[i][idx[i] + 1];
        const int b = static_cast<int>((q >> i) & 1u);
        x[i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.nodes[b];
        wx *= 0.5 * (hi - lo) * gl.weights[b];
      }
      const FundamentalForms ff = fundamental_forms(chart, x);
      const ShapeData sd = shape_data(ff);
      if (a * sd.normA >= config.C0()) throw ValidityError("a ||A|| >= C0 inside the quadrature support");
      const double sqrt_g = std::sqrt(ff.g.determinant());
      const Mat ginv = ff.g.inverse();

      auto horizontal = [&](const TrialFunction& tf) {
        std::vector<HorizontalValue> hv;
        hv.reserve(tf.terms.size());
        for (const auto& term : tf.terms) hv.push_back(term.h(x, ff));
        return hv;
      };
      const auto hphi = horizontal(phi);
      std::vector<HorizontalValue> hp;
      if (p) hp = horizontal(*p);

      if (psi) {
        const double v = (*psi)(x, ff).value;
        s[kExpansion] += wx * sqrt_g * v * v * curvature_integrand(sd, profile);
      }
      if (pert) s[kPertH] += wx * sqrt_g * (*pert)(x, ff).value * sd.H;

      for (std::size_t k = 0; k < u_nodes.size(); ++k) {
        const double u = u_nodes[k];
        const double density = sd.density(u);
        if (!(density > 0.0)) throw ValidityError("layer density is not positive");
        const double w = wx * u_weights[k] * density * sqrt_g;
        const Mat Minv = (Mat::Identity(n, n) - u * sd.A).inverse();
        const Mat Ginv = Minv * ginv * Minv.transpose();

        auto combine = [&](const TrialFunction& tf, const std::vector<HorizontalValue>& hv) {
          TrialValue v;
          v.grad = Vec::Zero(n);
          for (std::size_t t = 0; t < tf.terms.size(); ++t) {
            const TransverseValue tv = tf.terms[t].t(u);
            const double c = tf.terms[t].coeff;
            v.value += c * hv[t].value * tv.value;
            v.grad += c * tv.value * hv[t].grad;
            v.du += c * hv[t].value * tv.deriv;
          }
          return v;
        };
        const TrialValue a1 = combine(phi, hphi);
        sup[0] = std::max(sup[0], std::abs(a1.value));
        s[kQ1pp] += w * a1.grad.dot(Ginv * a1.grad);
        s[kQ2pp] += w * (a1.du * a1.du - kappa_sq * a1.value * a1.value);
        s[kNpp] += w * a1.value * a1.value;
        if (p) {
          const TrialValue b1 = combine(*p, hp);
          sup[1] = std::max(sup[1], std::abs(b1.value));
          s[kQ1pq] += w * a1.grad.dot(Ginv * b1.grad);
          s[kQ2pq] += w * (a1.du * b1.du - kappa_sq * a1.value * b1.value);
          s[kNpq] += w * a1.value * b1.value;
          s[kQ1qq] += w * b1.grad.dot(Ginv * b1.grad);
          s[kQ2qq] += w * (b1.du * b1.du - kappa_sq * b1.value * b1.value);
          s[kNqq] += w * b1.value * b1.value;
        }
      }
    }
    acc[cell] = s;
    sups[cell] = sup;
  });

  std::array<double, kSlots> total{};
  std::vector<double> column(cells);
  for (int slot = 0; slot < kSlots; ++slot) {
    for (std::size_t c = 0; c < cells; ++c) column[c] = acc[c][slot];
    total[slot] = pairwise_sum(column);
  }
  PairEvaluation out;
  out.phi_phi = {total[kQ1pp], total[kQ2pp], total[kNpp]};
  out.phi_p = {total[kQ1pq], total[kQ2pq], total[kNpq]};
  out.p_p = {total[kQ1qq], total[kQ2qq], total[kNqq]};
  out.q2_expansion = total[kExpansion];
  out.pert_H = total[kPertH];
  for (const auto& s : sups) {
    out.sup_phi = std::max(out.sup_phi, s[0]);
    out.sup_p = std::max(out.sup_p, s[1]);
  }
  return out;
}

Optimum perturbation_optimize(double Q, double cross, double quad, double cross_tol, double eps_max) {
  if (!(quad > 0.0)) throw DegeneratePerturbation("Q(j chi1, j chi1) must be positive");
  if (std::abs(cross) <= cross_tol) throw DegeneratePerturbation("cross term vanishes within its error");
  Optimum o;
  o.epsilon_star = -cross / quad;
  if (std::abs(o.epsilon_star) > eps_max) {
    o.epsilon_star = std::copysign(eps_max, o.epsilon_star);
    o.clamped = true;
  }
  o.Q_min = Q + 2.0 * o.epsilon_star * cross + o.epsilon_star * o.epsilon_star * quad;
  return o;
}

namespace {

QuadFormReport summarize(const PairEvaluation& e, bool has_p, double sigma, double cross_tol, double eps_max) {
  QuadFormReport r;
  r.Q1 = e.phi_phi.Q1;
  r.Q2 = e.phi_phi.Q2;
  r.Q = e.phi_phi.Q();
  r.norm = e.phi_phi.norm;
  r.Q2_expansion = e.q2_expansion;
  r.Q_min = r.Q;
  r.norm_min = r.norm;
  r.has_perturbation = has_p;
  if (!has_p) return r;
  r.cross = e.phi_p.Q();
  r.cross_identity = -sigma * e.pert_H;
  r.quad = e.p_p.Q();
  r.norm_cross = e.phi_p.norm;
  r.norm_p = e.p_p.norm;
  try {
    const Optimum o = perturbation_optimize(r.Q, r.cross, r.quad, cross_tol, eps_max);
    r.epsilon_star = o.epsilon_star;
    r.Q_min = o.Q_min;
    r.clamped = o.clamped;
  } catch (const DegeneratePerturbation&) {
    r.degenerate = true;
  }
  r.norm_min = r.norm + 2.0 * r.epsilon_star * r.norm_cross + r.epsilon_star * r.epsilon_star * r.norm_p;
  return r;
}

}  // namespace

QuadFormReport evaluate_Q(const TestFunctionFamily& family, const SurfaceChart& chart, const LayerConfig& config,
                          const TransverseProfile& profile, const QuadGrid& grid) {
  const TrialFunction phi = family.base(profile);
  const TrialFunction p = family.perturbation(profile);
  const bool has_p = family.pert.has_value();
  const HorizontalFn* pert = has_p ? &*family.pert : nullptr;
  const QuadGrid fine_grid = grid.refined();

  const PairEvaluation coarse =
      evaluate_pair(phi, has_p ? &p : nullptr, &family.psi, pert, chart, config, profile, grid);
  const PairEvaluation fine =
      evaluate_pair(phi, has_p ? &p : nullptr, &family.psi, pert, chart, config, profile, fine_grid);

  const double sigma = profile.sigma();
  const double eps_max = fine.sup_p > 0.0 ? 0.5 * fine.sup_phi / fine.sup_p
                                          : std::numeric_limits<double>::infinity();
  const double cross_tol = std::max(std::abs(fine.phi_p.Q() - coarse.phi_p.Q()),
                                    1e-12 * std::sqrt(std::abs(fine.phi_phi.Q() * fine.p_p.Q())));
  const QuadFormReport rc = summarize(coarse, has_p, sigma, cross_tol, eps_max);
  QuadFormReport r = summarize(fine, has_p, sigma, cross_tol, eps_max);

  // the optimum is re-evaluated on the coarse grid at the same epsilon
  const double eps = r.epsilon_star;
  const double Qmin_coarse = rc.Q + 2.0 * eps * rc.cross + eps * eps * rc.quad;
  r.quadrature_error = std::max(std::abs(r.Q - rc.Q), std::abs(r.Q_min - Qmin_coarse));
  r.q2_error = std::max(std::abs(r.Q2 - rc.Q2), std::abs(r.Q2_expansion - rc.Q2_expansion));
  r.cross_error = std::max(std::abs(r.cross - rc.cross), std::abs(r.cross_identity - rc.cross_identity));
  const double scale = std::max(std::abs(r.Q), config.kappa1_sq() * r.norm);
  r.refinement_ratio = std::abs(r.Q - rc.Q) / std::max(std::abs(r.Q), scale);
  if (r.refinement_ratio > 0.5) throw QuadratureDivergence("refinement changed Q by more than half its scale");
  r.cells = fine_grid.cells();
  return r;
}

// ---- families ---------------------------------------------------------------

TestFunctionFamily product_family(const SurfaceChart& chart, const CapacityProfile& psi) {
  TestFunctionFamily fam;
  fam.kind = FamilyKind::product;
  fam.psi = capacity_lift(chart, psi);
  fam.description = "capacity profile on [" + std::to_string(psi.r) + ", " + std::to_string(psi.R) + "]";
  return fam;
}

TestFunctionFamily perturbed_family(const SurfaceChart& chart, const CapacityProfile& psi, double r_j) {
  const double inner = psi.r - 1.0;
  if (!(inner > 0.0)) throw DomainError("perturbed family needs psi.r > 1");
  const SampleGrid grid = SampleGrid::uniform(chart, 41, inner);
  Vec center;
  double best = -1.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec x = grid.point(k);
    if (chart.radius(x) > inner) continue;
    const double nA = shape_data(fundamental_forms(chart, x)).normA;
    if (nA > best) {
      best = nA;
      center = x;
    }
  }
  if (best < 0.0) throw DomainError("no sample inside the inner ball");
  const double radius = std::min(r_j, inner - chart.radius(center));
  TestFunctionFamily fam = product_family(chart, psi);
  fam.kind = FamilyKind::perturbed;
  fam.pert = bump(chart, center, radius);
  fam.description += "; bump of radius " + std::to_string(radius);
  return fam;
}

// ---- convex surfaces --------------------------------------------------------

double convex_delta(const GraphFunction& f) {
  const GraphJet origin = f.eval(0.0, 0.0);
  if (std::abs(origin.f) > 1e-12 || origin.grad.norm() > 1e-9)
    throw NotStrictlyConvexAtOrigin("f must vanish with its gradient at the origin");
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(origin.hess);
  if (!(es.eigenvalues().minCoeff() > 1e-8)) throw NotStrictlyConvexAtOrigin("Hessian at the origin is not positive");
  double delta = std::numeric_limits<double>::infinity();
  const int angles = 720;
  for (int k = 0; k < angles; ++k) {
    const double th = 2.0 * kPi * k / angles;
    const Eigen::Vector2d dir(std::cos(th), std::sin(th));
    delta = std::min(delta, f.eval(dir[0], dir[1]).grad.dot(dir));
    // convexity on a ring and the linear growth bound along the ray
    for (double r : {0.5, 1.0, 2.0, 4.0}) {
      const GraphJet j = f.eval(r * dir[0], r * dir[1]);
      if (dir.dot(j.hess * dir) < -1e-8) throw NotStrictlyConvexAtOrigin("f is not convex along a ray");
    }
  }
  if (!(delta > 0.0)) throw NotStrictlyConvexAtOrigin("f_r is not positive on the unit circle");
  for (int k = 0; k < 36; ++k) {
    const double th = 2.0 * kPi * k / 36;
    for (double r : {1.5, 3.0, 6.0, 12.0})
      if (f.eval(r * std::cos(th), r * std::sin(th)).f < delta * (r - 1.0) - 1e-9)
        throw NotStrictlyConvexAtOrigin("growth bound f >= delta (r - 1) fails");
  }
  return delta;
}

double Window::value(double t) const {
  auto step = [](double s) { return s <= 0.0 ? 0.0 : s >= 1.0 ? 1.0 : s * s * (3.0 - 2.0 * s); };
  if (t <= R - 1.0 || t >= R * R + 1.0) return 0.0;
  if (t < R) return step(t - (R - 1.0));
  if (t <= R * R) return 1.0;
  return 1.0 - step(t - R * R);
}

double Window::deriv(double t) const {
  auto dstep = [](double s) { return s <= 0.0 || s >= 1.0 ? 0.0 : 6.0 * s * (1.0 - s); };
  if (t <= R - 1.0 || t >= R * R + 1.0) return 0.0;
  if (t < R) return dstep(t - (R - 1.0));
  if (t <= R * R) return 0.0;
  return -dstep(t - R * R);
}

namespace {

double level_radius(const GraphFunction& f, double t, double theta, double r_max) {
  const double c = std::cos(theta), s = std::sin(theta);
  auto g = [&](double r) { return f.eval(r * c, r * s).f - t; };
  if (g(r_max) < 0.0) throw LevelSetEscapesTruncation("level set f = " + std::to_string(t) + " leaves the truncation");
  if (g(0.0) >= 0.0) return 0.0;
  std::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(
      g, 0.0, r_max, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (lo + hi);
}

}  // namespace

LevelData level_integral(const GraphFunction& f, double t, double r_max, int angles) {
  LevelData d;
  d.t = t;
  d.min_H_over_kb = std::numeric_limits<double>::infinity();
  const double dth = 2.0 * kPi / angles;
  for (int k = 0; k < angles; ++k) {
    const double th = k * dth;
    const double r = level_radius(f, t, th, r_max);
    const Eigen::Vector2d e(std::cos(th), std::sin(th)), et(-std::sin(th), std::cos(th));
    const GraphJet j = f.eval(r * e[0], r * e[1]);
    const double fr = j.grad.dot(e), fth = r * j.grad.dot(et);
    const double dr = -fth / fr;
    const double ds = std::sqrt(r * r + dr * dr) * dth;
    const double fx = j.grad[0], fy = j.grad[1];
    const double fxx = j.hess(0, 0), fxy = j.hess(0, 1), fyy = j.hess(1, 1);
    const double g2 = fx * fx + fy * fy;
    const double H = ((1 + fy * fy) * fxx + (1 + fx * fx) * fyy - 2 * fx * fy * fxy) / std::pow(1 + g2, 1.5);
    const double kb = (fxx * fy * fy - 2 * fxy * fx * fy + fyy * fx * fx) / std::pow(g2, 1.5);
    const double grad_t = std::sqrt(g2 / (1 + g2));
    d.length += ds;
    d.H_integral += H * ds;
    d.weighted += H / grad_t * ds;
    d.inv_grad += ds / grad_t;
    if (kb > 0.0) d.min_H_over_kb = std::min(d.min_H_over_kb, H / kb);
  }
  return d;
}

CoareaReport coarea_H_over_f(const GraphFunction& f, double t_lo, double t_hi, const Window* window, double r_max,
                             int levels) {
  if (!(t_lo > 0.0 && t_hi > t_lo)) throw DomainError("level range must satisfy 0 < t_lo < t_hi");
  CoareaReport rep;
  rep.delta = convex_delta(f);
  std::vector<double> knots;
  if (window) knots = {std::log(window->R), std::log(window->R * window->R)};
  const double s_lo = std::log(t_lo), s_hi = std::log(t_hi);
  std::vector<double> breaks{s_lo};
  for (double k : knots)
    if (k > s_lo && k < s_hi) breaks.push_back(k);
  breaks.push_back(s_hi);
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> cells;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const int m = std::max(1, static_cast<int>(std::ceil(levels * (breaks[i + 1] - breaks[i]) / (s_hi - s_lo))));
    for (int c = 0; c < m; ++c) cells.push_back(breaks[i] + (breaks[i + 1] - breaks[i]) * c / m);
  }
  cells.push_back(s_hi);
  const auto& rule = quad::gauss_legendre(4);
  std::vector<double> abscissae, weights;
  for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
    const double mid = 0.5 * (cells[c] + cells[c + 1]), half = 0.5 * (cells[c + 1] - cells[c]);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      abscissae.push_back(mid + half * rule.nodes[q]);
      weights.push_back(half * rule.weights[q]);
    }
  }
  rep.levels.resize(abscissae.size());
  parallel_for(abscissae.size(), [&](std::size_t k) { rep.levels[k] = level_integral(f, std::exp(abscissae[k]), r_max); });
  std::vector<double> terms(abscissae.size());
  double min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < abscissae.size(); ++k) {
    const double t = std::exp(abscissae[k]);
    const double rho = window ? window->value(t) : 1.0;
    // rho(t)/t dt = rho ds
    terms[k] = weights[k] * rho * rep.levels[k].weighted;
    min_ratio = std::min(min_ratio, rep.levels[k].min_H_over_kb);
  }
  rep.value = pairwise_sum(terms);
  rep.delta_H = std::min(rep.delta, std::cbrt(2.0 * min_ratio));
  const double logR = window ? std::log(window->R) : (s_hi - s_lo);
  rep.bound = kPi * std::pow(rep.delta_H, 3) * logR;
  const double level_bound = kPi * std::pow(rep.delta_H, 3);
  for (const auto& l : rep.levels)
    if (l.H_integral < level_bound * (1.0 - 1e-9)) rep.per_level_ok = false;
  return rep;
}

ConvexCertificate convex_certificate(const GraphFunction& f, const LayerConfig& config, double R, Chi1Kind chi1,
                                     const ConvexOptions& options) {
  ConvexCertificate cert;
  cert.delta = convex_delta(f);
  if (!f.radial) throw UnsupportedChart("convex certificate needs a radially symmetric graph");
  if (!(R > 2.0)) throw DomainError("window scale R must exceed 2");
  const RadialProfile prof = *f.radial;
  cert.R = R;
  const TransverseProfile profile(config.a(), chi1);
  cert.sigma = profile.sigma();

  // radius of the level {f = t} for a radial graph
  auto radius_of = [&](double t) { return level_radius(f, t, 0.0, 1e6); };
  cert.r1 = radius_of(2.0 * R * R);
  cert.r_out = options.cutoff_ratio * cert.r1;

  SurfaceChart chart = graph_polar_chart(f, cert.r_out);
  chart.euler_char = 1;
  const CapacityProfile cutoff = capacity_profile(chart, cert.r1, cert.r_out);
  cert.cutoff_energy = cutoff.energy;

  const Window window{R};
  TestFunctionFamily fam;
  fam.kind = FamilyKind::convex;
  fam.f_divisor = true;
  fam.psi = capacity_lift(chart, cutoff);
  const int top = chart.n;
  fam.pert = [window, top](const Vec& x, const FundamentalForms& ff) {
    const double fz = ff.X[top];
    if (fz <= window.R - 1.0 || fz >= window.R * window.R + 1.0) return HorizontalValue{0.0, Vec::Zero(x.size())};
    const Vec grad_f = ff.J.row(top).transpose();
    const double rho = window.value(fz), drho = window.deriv(fz);
    return HorizontalValue{rho / fz, (drho / fz - rho / (fz * fz)) * grad_f};
  };
  fam.description = "window R = " + std::to_string(R);

  const std::vector<double> knots{radius_of(R - 1.0), radius_of(R), radius_of(R * R), radius_of(R * R + 1.0),
                                  cert.r1};
  const QuadGrid grid = QuadGrid::radial(chart, cert.r_out, knots, options.angular_cells, options.u_cells);
  cert.form = evaluate_Q(fam, chart, config, profile, grid);
  cert.C1 = cert.form.Q;
  cert.epsilon_star = cert.form.epsilon_star;
  cert.Q_value = cert.form.Q_min;
  cert.negative = !cert.form.degenerate && cert.Q_value < -cert.form.quadrature_error;
  cert.family = fam;
  cert.chart = chart;
  cert.grid = grid;

  const CoareaReport co = coarea_H_over_f(f, R - 1.0, R * R + 1.0, &window, cert.r_out);
  cert.coarea = co.value;
  cert.delta_H = co.delta_H;
  cert.coarea_bound = co.bound;

  // int_{R-1 <= f <= R^2+1} 1/f^2 dSigma by the co-area formula in s = log t
  auto inv_f2 = [&](double s) {
    const double t = std::exp(s);
    return level_integral(f, t, cert.r_out, 64).inv_grad / t;
  };
  const double s_lo = std::log(R - 1.0), s_hi = std::log(R * R + 1.0);
  std::vector<double> breaks;
  for (int k = 0; k <= 32; ++k) breaks.push_back(s_lo + (s_hi - s_lo) * k / 32);
  cert.inv_f2_integral = quad::composite(inv_f2, breaks, 4);
  cert.C5 = cert.inv_f2_integral / std::log(R);
  {
    // split of Q(p, p) into its horizontal and transverse parts
    const TrialFunction p = fam.perturbation(profile);
    const PairEvaluation e =
        evaluate_pair(p, nullptr, nullptr, nullptr, chart, config, profile, grid.refined());
    cert.C3 = e.phi_phi.Q1 / cert.inv_f2_integral;
    cert.C4 = e.phi_phi.Q2 / cert.inv_f2_integral;
  }
  // sup f |grad~(psi/f)| along a ray
  {
    const double ra = radius_of(R - 1.0), rb = radius_of(R * R + 1.0);
    double c2 = 0.0;
    for (int k = 0; k <= 4000; ++k) {
      const double r = ra + (rb - ra) * k / 4000.0;
      const double fz = prof.f(r), fr_ = prof.df(r);
      const double g = (window.deriv(fz) / fz - window.value(fz) / (fz * fz)) * fr_;
      c2 = std::max(c2, fz * std::abs(g) / std::sqrt(1.0 + fr_ * fr_));
    }
    cert.C2 = c2;
  }
  return cert;
}

ConvexCertificate convex_certificate_ladder(const GraphFunction& f, const LayerConfig& config,
                                            const std::vector<double>& ladder, Chi1Kind chi1,
                                            const ConvexOptions& options, std::vector<ConvexCertificate>* attempts) {
  for (double R : ladder) {
    ConvexCertificate c = convex_certificate(f, config, R, chi1, options);
    if (attempts) attempts->push_back(c);
    if (c.negative) return c;
  }
  throw CertificateFailed("no window scale in the ladder gave a negative form");
}

}  // namespace qlayer
