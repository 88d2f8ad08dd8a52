#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "qlayer/catalog.hpp"
#include "qlayer/errors.hpp"
#include "qlayer/parabolicity.hpp"
#include "support.hpp"

using namespace qlayer;

namespace {

constexpr double kPi = std::numbers::pi;

// z = r^2: enclosed area and radial arclength in closed form
double paraboloid_area(double r) { return kPi / 6.0 * (std::pow(1.0 + 4.0 * r * r, 1.5) - 1.0); }
double paraboloid_arclength(double r) { return r * std::sqrt(1.0 + 4.0 * r * r) / 2.0 + std::asinh(2.0 * r) / 4.0; }

std::vector<double> geometric(double lo, double hi, int count) {
  std::vector<double> v;
  for (int k = 0; k < count; ++k) v.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1)));
  return v;
}

}  // namespace

TEST_SUITE("parabolicity") {

TEST_CASE("plane volume growth is pi t^2") {
  const SurfaceChart c = catalog_chart("plane", {}, 1200.0);
  const auto radii = geometric(0.5, 1000.0, 40);
  const VolumeGrowthCurve v = volume_growth(c, radii);
  for (std::size_t k = 0; k < v.radii.size(); ++k) CHECK(testing::rel_err(v.volumes[k], kPi * v.radii[k] * v.radii[k]) < 1e-8);
  CHECK(v.exponent == doctest::Approx(2.0).epsilon(0.025));
}

TEST_CASE("paraboloid volume growth against the closed-form area") {
  const SurfaceChart c = catalog_chart("paraboloid", {}, 40.0);
  std::vector<double> rs = geometric(0.1, 35.0, 30), ss;
  for (double r : rs) ss.push_back(paraboloid_arclength(r));
  const VolumeGrowthCurve v = volume_growth(c, ss);
  REQUIRE(v.volumes.size() == rs.size());
  for (std::size_t k = 0; k < rs.size(); ++k) CHECK(testing::rel_err(v.volumes[k], paraboloid_area(rs[k])) < 1e-8);
  for (std::size_t k = 1; k < v.volumes.size(); ++k) CHECK(v.volumes[k] >= v.volumes[k - 1]);
  CHECK(v.exponent == doctest::Approx(1.5).epsilon(0.05));
  CHECK(radial_arclength(*c.radial, 3.0) == doctest::Approx(paraboloid_arclength(3.0)).epsilon(1e-10));
  CHECK(radial_area(*c.radial, 3.0) == doctest::Approx(paraboloid_area(3.0)).epsilon(1e-10));
}

TEST_CASE("too few radii") {
  const SurfaceChart c = catalog_chart("plane", {}, 2.0);
  CHECK_THROWS_AS(volume_growth(c, geometric(1.0, 100.0, 20)), TruncationTooSmall);
}

TEST_CASE("integral test verdicts") {
  const auto t = geometric(0.5, 1e4, 80);
  std::vector<double> quad, cubic;
  for (double x : t) quad.push_back(kPi * x * x), cubic.push_back(x * x * x);

  const ParabolicityResult flat = parabolicity_integral(make_volume_curve(t, quad), 1e3);
  CHECK(flat.partial == doctest::Approx(std::log(1e3) / kPi).epsilon(1e-10));
  CHECK(flat.verdict == Verdict::parabolic_consistent);

  const ParabolicityResult mock = parabolicity_integral(make_volume_curve(t, cubic), 1e4);
  CHECK(mock.partial == doctest::Approx(1.0 - 1e-4).epsilon(1e-10));
  CHECK(mock.verdict == Verdict::nonparabolic_consistent);

  const SurfaceChart p = catalog_chart("paraboloid", {}, 1000.0);
  const ParabolicityResult par = parabolicity_integral(volume_growth(p, geometric(0.1, 1000.0, 61)), 1e3);
  CHECK(par.verdict == Verdict::parabolic_consistent);
  CHECK(to_string(par.verdict) == "parabolic-consistent");
}

TEST_CASE("log tube volume grows like t^2 log t") {
  const SurfaceChart c = logtube_chart(2e3);
  const VolumeGrowthCurve v = volume_growth(c, geometric(0.5, 1e3, 61));
  double worst = 0.0;
  for (std::size_t k = 0; k < v.radii.size(); ++k)
    if (v.radii[k] >= 10.0) {
      const double t = v.radii[k];
      worst = std::max(worst, v.volumes[k] / (t * t * std::log(t)));
    }
  // 4 pi^2 int t sigma dt / (t^2 log t) tends to 2 pi^2
  CHECK(worst < 2.0 * kPi * kPi * 1.5);
  CHECK(parabolicity_integral(v, 1e3).verdict == Verdict::parabolic_consistent);
}

TEST_CASE("flat capacity closed forms") {
  const double e = std::exp(1.0);
  const SurfaceChart c = catalog_chart("plane", {}, std::exp(10.0) + 1.0);
  const CapacityProfile p = capacity_profile(c, 1.0, e);
  CHECK(testing::rel_err(p.energy, 2.0 * kPi) < 1e-8);
  for (double t : {1.2, 1.7, 2.5}) CHECK(p.value(t) == doctest::Approx(1.0 - std::log(t)).epsilon(1e-10));
  const CapacityProfile q = capacity_profile(c, 1.0, std::exp(10.0));
  CHECK(testing::rel_err(q.energy, 2.0 * kPi / 10.0) < 1e-8);
}

TEST_CASE("flat capacity on a mesh") {
  const SurfaceChart c = catalog_chart("plane", {}, 3.2, ChartLayout::cartesian);
  const CapacityProfile p = capacity_profile_mesh(c, 1.0, 3.0, 129);
  CHECK(p.energy == doctest::Approx(2.0 * kPi / std::log(3.0)).epsilon(0.05));
  for (double v : p.psi) CHECK((v >= -1e-12 && v <= 1.0 + 1e-12));
  CHECK_THROWS_AS(capacity_profile_mesh(catalog_chart("plane", {}, 3.0), 1.0, 2.0, 33), UnsupportedChart);
}

TEST_CASE("paraboloid capacity energies decrease to zero") {
  const SurfaceChart c = catalog_chart("paraboloid", {}, 1001.0);
  double prev = 1e300;
  for (double R : {10.0, 100.0, 1000.0}) {
    const CapacityProfile p = capacity_profile(c, 1.0, R);
    // oracle: energy = 2 pi / int_1^R sqrt(1 + 4 t^2) / t dt, in s = log t
    const double denom = testing::simpson([](double s) { return std::sqrt(1.0 + 4.0 * std::exp(2.0 * s)); }, 0.0, std::log(R), 4000);
    CHECK(testing::rel_err(p.energy, 2.0 * kPi / denom) < 1e-7);
    CHECK(p.energy < prev);
    prev = p.energy;
    for (std::size_t k = 0; k < p.psi.size(); ++k) {
      CHECK((p.psi[k] >= 0.0 && p.psi[k] <= 1.0));
      if (k) CHECK(p.psi[k] <= p.psi[k - 1]);
    }
  }
  CHECK(prev < 0.01);
}

TEST_CASE("capacity needs a radial chart") {
  CHECK_THROWS_AS(capacity_profile(logtube_chart(10.0), 1.0, 2.0), UnsupportedChart);
  CHECK_THROWS_AS(capacity_profile(catalog_chart("plane", {}, 5.0), 2.0, 1.0), DomainError);
}

TEST_CASE("log cutoff energy") {
  double prev = 1e300;
  for (double R : {5.0, 10.0, 100.0, 1000.0}) {
    const double e = log_cutoff_energy(R);
    const double lR = std::log(R), C = 1.0 / (1.0 - lR / R);
    // 2 pi C^2 lR^2 int_{lR}^{R} s^-4 ds
    const double oracle = 2.0 * kPi * C * C * lR * lR * (1.0 / std::pow(lR, 3) - 1.0 / std::pow(R, 3)) / 3.0;
    CHECK(testing::rel_err(e, oracle) < 1e-10);
    CHECK(e <= 2.0 * kPi * (4.0 / 3.0) / lR);
    CHECK(e < prev);
    prev = e;
  }
  CHECK(log_cutoff_energy(10.0) <= 3.638);
  CHECK_THROWS_AS(log_cutoff_energy(2.0), DomainError);
}

TEST_CASE("isoperimetric constants") {
  const auto ladder = geometric(0.05, 55.0, 41);
  CHECK(isoperimetric_constants(catalog_chart("plane", {}, 60.0), ladder).lambda_iso[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(isoperimetric_constants(catalog_chart("paraboloid", {}, 60.0), geometric(1.0, 1500.0, 41)).lambda_iso[0] == 0.0);
  CHECK(isoperimetric_constants(catalog_chart("gaussian-bump", {}, 60.0), ladder).lambda_iso[0] ==
        doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("Hartman residuals at truncation 60") {
  for (const char* id : {"plane", "paraboloid", "gaussian-bump"}) {
    CAPTURE(id);
    const HartmanReport h = hartman(catalog_chart(id, {}, 60.0));
    CHECK(std::abs(h.residual) < 0.02);
  }
  // paraboloid: int K = 2 pi (1 - 1/sqrt(1 + 4 r^2)) over r <= 60
  const HartmanReport p = hartman(catalog_chart("paraboloid", {}, 60.0));
  CHECK(p.total_curvature == doctest::Approx(2.0 * kPi * (1.0 - 1.0 / std::sqrt(1.0 + 4.0 * 3600.0))).epsilon(1e-8));
  CHECK(hartman_residual(catalog_chart("plane", {}, 60.0)) == 0.0);
}

TEST_CASE("Hartman needs the Euler characteristic") {
  SurfaceChart c = catalog_chart("paraboloid", {}, 10.0);
  c.euler_char.reset();
  CHECK_THROWS_AS(hartman(c), UnknownEulerChar);
  CHECK_THROWS_AS(hartman(logtube_chart(10.0)), UnsupportedDimension);
}

}
