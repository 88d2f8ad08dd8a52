#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "qlayer/catalog.hpp"
#include "qlayer/errors.hpp"
#include "qlayer/forms.hpp"
#include "support.hpp"

using namespace qlayer;
using testing::diagonal_forms;
using testing::simpson;

namespace {

constexpr double kPi = std::numbers::pi;

// -kappa^2 int u^k cos(2 kappa u) du by Simpson, written from the definition
// int u^k (chi_u^2 - kappa^2 chi^2) du with chi = cos(kappa u)
double mu_oracle(double a, int k) {
  const double kap = kPi / (2.0 * a);
  return simpson(
      [&](double u) {
        const double c = std::cos(kap * u), s = std::sin(kap * u);
        return std::pow(u, k) * (kap * kap * s * s - kap * kap * c * c);
      },
      -a, a, 20000);
}

GraphFunction radial_graph(const std::string& name, std::function<double(double)> f, std::function<double(double)> df,
                           std::function<double(double)> d2f) {
  return graph_from_radial(name, RadialProfile{std::move(f), std::move(df), std::move(d2f)});
}

}  // namespace

TEST_SUITE("forms") {

TEST_CASE("mu coefficients against quadrature") {
  for (double a : {0.1, 0.4, 1.0, 3.0}) {
    const auto mu = mu_coefficients(a, 12);
    for (int k = 0; k <= 12; ++k) {
      CAPTURE(a);
      CAPTURE(k);
      const double o = mu_oracle(a, k);
      if (k == 0 || k % 2 == 1) {
        CHECK(std::abs(mu[k]) < 1e-14 * std::pow(a, k));
      } else {
        CHECK(mu[k] > 0.0);
        CHECK(testing::rel_err(mu[k], o) < 1e-10);
      }
    }
  }
}

TEST_CASE("mu examples") {
  const auto mu = mu_coefficients(1.0, 4);
  CHECK(mu[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mu[4] == doctest::Approx(2.0 - 12.0 / (kPi * kPi)).epsilon(1e-12));
  CHECK(mu[4] * 4.0 * kPi * kPi / 3.0 == doctest::Approx(16.0 * (kPi * kPi / 6.0 - 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(mu_coefficients(1.0, 13), DomainError);
  CHECK_THROWS_AS(mu_coefficients(0.0, 4), DomainError);
}

TEST_CASE("property: mu scale coherence") {
  const auto unit = mu_coefficients(1.0, 12);
  for (double a : {0.1, 0.4, 3.0}) {
    const auto mu = mu_coefficients(a, 12);
    for (int k = 1; k <= 6; ++k) CHECK(testing::rel_err(mu[2 * k], std::pow(a, 2 * k - 1) * unit[2 * k]) < 1e-12);
  }
}

TEST_CASE("curvature integrand examples") {
  const TransverseProfile p(1.0);
  CHECK(curvature_integrand(shape_data(diagonal_forms({2.0, 2.0})), p) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(curvature_integrand(shape_data(diagonal_forms({0.0, 0.0, 0.0})), p) == 0.0);
  const double expect = 6.0 + (2.0 - 12.0 / (kPi * kPi));
  CHECK(curvature_integrand(shape_data(diagonal_forms({1.0, 1.0, 1.0, 1.0})), p) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("property: curvature integrand equals the trace expansion") {
  std::mt19937_64 gen(5);
  const TransverseProfile p(0.7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 3;
    const auto s = testing::random_shape(gen, n);
    const auto ff = testing::forms_from(s.g, s.h);
    const ShapeData sd = shape_data(ff);
    const CurvatureData cd = curvature_data(sd, ff);
    double traces = 0.0;
    for (std::size_t k = 0; k < cd.traces.size(); ++k) traces += p.mu()[2 * (k + 1)] * cd.traces[k];
    CHECK(testing::rel_err(curvature_integrand(sd, p), traces) < 1e-9);
  }
}

TEST_CASE("sigma of the transverse perturbation") {
  for (double a : {0.1, 0.4, 1.0, 3.0}) {
    const TransverseProfile p(a);
    const double kap = kPi / (2.0 * a);
    const double o = -simpson([&](double u) { return -kap * std::sin(kap * u) * std::sin(2.0 * kap * u); }, -a, a, 20000);
    CHECK(p.sigma() == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
    CHECK(testing::rel_err(p.sigma(), o) < 1e-10);
  }
  const TransverseProfile cubic(0.4, Chi1Kind::cubic);
  const double a = 0.4, kap = kPi / 0.8;
  const double o = -simpson([&](double u) { return -kap * std::sin(kap * u) * u * (a * a - u * u) / (a * a * a); }, -a, a, 20000);
  CHECK(cubic.sigma() > 0.0);
  CHECK(testing::rel_err(cubic.sigma(), o) < 1e-10);
}

TEST_CASE("inadmissible chi1") {
  const double a = 0.5;
  CHECK_THROWS_AS(sigma_cross([](double u) { return TransverseValue{std::cos(kPi * u), -kPi * std::sin(kPi * u)}; }, a),
                  NonAdmissibleChi1);
  CHECK_THROWS_AS(sigma_cross([](double u) { return TransverseValue{u, 1.0}; }, a), NonAdmissibleChi1);
}

TEST_CASE("property: one-dimensional Poincare inequality") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> nd;
  const double a = 0.4, kap = kPi / (2.0 * a);
  for (int trial = 0; trial < 200; ++trial) {
    // random combination of Dirichlet modes plus a bump, all vanishing at +-a
    std::vector<double> c(6);
    for (double& v : c) v = nd(gen) / (1.0 + trial % 4);
    const double b = nd(gen);
    auto f = [&](double u) {
      double s = b * (a * a - u * u) * (a * a - u * u);
      for (int m = 0; m < 6; ++m) s += c[m] * std::sin((m + 1) * kap * (u + a));
      return s;
    };
    auto fu = [&](double u) {
      double s = -4.0 * b * u * (a * a - u * u);
      for (int m = 0; m < 6; ++m) s += c[m] * (m + 1) * kap * std::cos((m + 1) * kap * (u + a));
      return s;
    };
    const double lhs = simpson([&](double u) { return fu(u) * fu(u); }, -a, a, 4000);
    const double rhs = kap * kap * simpson([&](double u) { return f(u) * f(u); }, -a, a, 4000);
    CHECK(lhs >= rhs * (1.0 - 1e-10));
  }
}

TEST_CASE("perturbation optimum") {
  const Optimum o = perturbation_optimize(0.0, -1.0, 2.0);
  CHECK(o.epsilon_star == 0.5);
  CHECK(o.Q_min == -0.5);
  CHECK_FALSE(o.clamped);
  CHECK_THROWS_AS(perturbation_optimize(1.0, 0.0, 2.0), DegeneratePerturbation);
  CHECK_THROWS_AS(perturbation_optimize(1.0, 1.0, 0.0), DegeneratePerturbation);
  const Optimum c = perturbation_optimize(0.0, -1.0, 2.0, 0.0, 0.25);
  CHECK(c.clamped);
  CHECK(c.epsilon_star == 0.25);
  CHECK(c.Q_min == doctest::Approx(-0.375));
}

TEST_CASE("plane product family has no transverse gain") {
  const LayerConfig cfg(0.4);
  const TransverseProfile prof(0.4);
  const SurfaceChart c = catalog_chart("plane", {}, 10.0);
  const QuadFormReport q = evaluate_Q(product_family(c, capacity_profile(c, 1.0, 10.0)), c, cfg, prof,
                                      QuadGrid::radial(c, 10.0, {1.0}));
  CHECK(std::abs(q.Q2) < 1e-10 * cfg.kappa1_sq() * q.norm);
  CHECK(q.Q2_expansion == 0.0);
  CHECK(q.Q >= 0.0);
  // Q1 is the transverse-averaged capacity energy: a int chi^2 = a, so Q1 = a * 2 pi / log 10
  CHECK(q.Q1 == doctest::Approx(0.4 * 2.0 * kPi / std::log(10.0)).epsilon(1e-3));
}

TEST_CASE("paraboloid product family: Q2 against the curvature expansion") {
  const double a = 0.4;
  const LayerConfig cfg(a);
  const TransverseProfile prof(a);
  const SurfaceChart c = catalog_chart("paraboloid", {}, 10.0);
  const CapacityProfile cap = capacity_profile(c, 1.0, 10.0);
  const QuadFormReport q = evaluate_Q(product_family(c, cap), c, cfg, prof, QuadGrid::radial(c, 10.0, {1.0}));
  CHECK(q.Q2 > 0.0);
  CHECK(std::abs(q.Q2 - q.Q2_expansion) <= q.q2_error);
  // oracle: mu_2 int psi^2 K dSigma, K = 4 / (1 + 4 r^2)^2, dSigma = 2 pi r sqrt(1 + 4 r^2) dr
  auto dens = [&](double r) {
    const double w = 1.0 + 4.0 * r * r;
    const double psi = cap.value(r);
    return psi * psi * 4.0 / (w * w) * 2.0 * kPi * r * std::sqrt(w);
  };
  const double oracle = a * (simpson(dens, 0.0, 1.0, 2000) + simpson(dens, 1.0, 10.0, 20000));
  CHECK(testing::rel_err(q.Q2_expansion, oracle) < 1e-6);
  CHECK(std::abs(q.Q2 - oracle) <= q.q2_error + 1e-6 * oracle);
  CHECK(q.Q == doctest::Approx(q.Q1 + q.Q2));
}

TEST_CASE("gaussian bump product family tends to zero from above") {
  const LayerConfig cfg(0.4);
  const TransverseProfile prof(0.4);
  double prev = 1e300;
  for (double R : {10.0, 100.0, 1000.0}) {
    const SurfaceChart c = catalog_chart("gaussian-bump", {}, R);
    const CapacityProfile cap = capacity_profile(c, 4.0, R);
    const QuadFormReport q = evaluate_Q(product_family(c, cap), c, cfg, prof, QuadGrid::radial(c, R, {1.0, 4.0}));
    CHECK(q.Q > 0.0);
    // the bump sits inside psi = 1, so Q2 vanishes with int K and Q1 = a * capacity energy
    CHECK(std::abs(q.Q2) < 1e-3 * q.Q);
    CHECK(q.Q1 == doctest::Approx(0.4 * cap.energy).epsilon(1e-3));
    CHECK(q.Q < prev);
    CHECK(std::abs(q.Q2 - q.Q2_expansion) <= q.q2_error);
    prev = q.Q;
  }
  CHECK(prev < 0.4 * 2.0 * kPi / std::log(250.0) * 1.01);
}

TEST_CASE("gaussian bump perturbed family binds") {
  const LayerConfig cfg(0.4);
  const TransverseProfile prof(0.4);
  const double R = 1e4;
  const SurfaceChart c = catalog_chart("gaussian-bump", {}, R);
  const TestFunctionFamily fam = perturbed_family(c, capacity_profile(c, 4.0, R), 1.0);
  const QuadGrid grid = QuadGrid::radial(c, R, {1.0, 4.0});
  const QuadFormReport q = evaluate_Q(fam, c, cfg, prof, grid);
  CHECK(q.Q > 0.0);
  CHECK(q.Q_min < -q.quadrature_error);
  CHECK(std::abs(q.cross - q.cross_identity) <= q.cross_error);

  // oracle: the explicitly summed trial function at eps*
  const PairEvaluation direct = evaluate_pair(fam.combined(prof, q.epsilon_star), nullptr, nullptr, nullptr, c, cfg,
                                              prof, grid.refined());
  CHECK(std::abs(direct.phi_phi.Q() - q.Q_min) <= q.quadrature_error);

  SUBCASE("quadratic exactness for random perturbation sizes") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> d(-2.0 * std::abs(q.epsilon_star), 2.0 * std::abs(q.epsilon_star));
    for (int k = 0; k < 10; ++k) {
      const double eps = d(gen);
      const PairEvaluation e =
          evaluate_pair(fam.combined(prof, eps), nullptr, nullptr, nullptr, c, cfg, prof, grid.refined());
      const double predicted = q.Q + 2.0 * eps * q.cross + eps * eps * q.quad;
      CHECK(std::abs(e.phi_phi.Q() - predicted) <= q.quadrature_error);
    }
  }
}

TEST_CASE("perturbed family on the plane is degenerate") {
  const LayerConfig cfg(0.4);
  const TransverseProfile prof(0.4);
  const SurfaceChart c = catalog_chart("plane", {}, 100.0);
  const QuadFormReport q = evaluate_Q(perturbed_family(c, capacity_profile(c, 4.0, 100.0)), c, cfg, prof,
                                      QuadGrid::radial(c, 100.0, {1.0, 4.0}));
  CHECK(q.degenerate);
  CHECK(q.Q_min >= 0.0);
}

TEST_CASE("convex delta") {
  const GraphFunction p = radial_graph(
      "r2", [](double r) { return r * r; }, [](double r) { return 2.0 * r; }, [](double) { return 2.0; });
  CHECK(convex_delta(p) == doctest::Approx(2.0).epsilon(1e-12));
  const GraphFunction q = radial_graph(
      "r4", [](double r) { return std::pow(r, 4); }, [](double r) { return 4.0 * r * r * r; },
      [](double r) { return 12.0 * r * r; });
  CHECK_THROWS_AS(convex_delta(q), NotStrictlyConvexAtOrigin);
  const GraphFunction ch = radial_graph(
      "cosh", [](double r) { return std::cosh(r) - 1.0; }, [](double r) { return std::sinh(r); },
      [](double r) { return std::cosh(r); });
  CHECK(convex_delta(ch) == doctest::Approx(std::sinh(1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(convex_delta(catalog_graph("plane")), NotStrictlyConvexAtOrigin);
}

TEST_CASE("window ramps") {
  const Window w{8.0};
  CHECK(w.value(7.0) == 0.0);
  CHECK(w.value(8.0) == 1.0);
  CHECK(w.value(64.0) == 1.0);
  CHECK(w.value(65.0) == 0.0);
  double slope = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double t = 7.0 + k * 0.001;
    slope = std::max(slope, std::abs(w.deriv(t)));
    CHECK((w.value(t) >= 0.0 && w.value(t) <= 1.0));
  }
  CHECK(slope <= 4.0);
  CHECK(slope == doctest::Approx(w.max_slope()).epsilon(1e-3));
}

TEST_CASE("level integrals on the paraboloid") {
  const GraphFunction p = catalog_graph("paraboloid");
  // level f = 100 is the circle r = 10
  const LevelData d = level_integral(p, 100.0, 20.0);
  const double r = 10.0, w = 1.0 + 4.0 * r * r;
  const double H = 4.0 * (1.0 + 2.0 * r * r) / std::pow(w, 1.5);
  CHECK(d.length == doctest::Approx(2.0 * kPi * r).epsilon(1e-10));
  CHECK(d.H_integral == doctest::Approx(2.0 * kPi * r * H).epsilon(1e-8));
  CHECK(d.weighted == doctest::Approx(2.0 * kPi * r * H * std::sqrt(w) / (2.0 * r)).epsilon(1e-8));
  CHECK(d.length <= (2.0 * kPi / 2.0 + 1.0) * 100.0);
  CHECK_THROWS_AS(level_integral(p, 100.0, 5.0), LevelSetEscapesTruncation);
}

TEST_CASE("coarea integral on the paraboloid") {
  const GraphFunction p = catalog_graph("paraboloid");
  const double R = 8.0;
  const CoareaReport co = coarea_H_over_f(p, R, R * R, nullptr, 20.0);
  // oracle: int_R^{R^2} (1/t) 2 pi r H / |grad~ f| dt with r = sqrt(t)
  auto integrand = [](double s) {
    const double t = std::exp(s), r = std::sqrt(t), w = 1.0 + 4.0 * r * r;
    const double H = 4.0 * (1.0 + 2.0 * r * r) / std::pow(w, 1.5);
    return 2.0 * kPi * r * H * std::sqrt(w) / (2.0 * r);
  };
  CHECK(co.value == doctest::Approx(simpson(integrand, std::log(R), std::log(R * R), 4000)).epsilon(1e-8));
  CHECK(co.delta == doctest::Approx(2.0));
  CHECK(co.value >= co.bound);
  CHECK(co.per_level_ok);
  for (const auto& l : co.levels) CHECK(l.H_integral >= kPi * std::pow(co.delta_H, 3) * (1 - 1e-9));
}

TEST_CASE("convex certificate at R = 8") {
  const ConvexCertificate c = convex_certificate(catalog_graph("paraboloid"), LayerConfig(0.4), 8.0);
  CHECK(c.delta == doctest::Approx(2.0));
  CHECK(c.sigma == doctest::Approx(4.0 / 3.0));
  CHECK(c.negative);
  CHECK(c.Q_value < -c.form.quadrature_error);
  CHECK(std::abs(c.form.cross - c.form.cross_identity) <= 0.01 * std::abs(c.form.cross));
  CHECK(std::abs(c.form.cross - c.form.cross_identity) <= c.form.cross_error);
  CHECK(c.cutoff_energy < 1.0);
  CHECK(c.coarea >= c.coarea_bound);
  CHECK_THROWS_AS(convex_certificate(catalog_graph("plane"), LayerConfig(0.4), 8.0), NotStrictlyConvexAtOrigin);
}

}
