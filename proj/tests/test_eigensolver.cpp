#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "qlayer/catalog.hpp"
#include "qlayer/eigensolver.hpp"
#include "qlayer/errors.hpp"
#include "qlayer/parallel.hpp"
#include "support.hpp"

using namespace qlayer;

namespace {

constexpr double kPi = std::numbers::pi;

double min_symmetric_eigenvalue(const SparseMat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace

TEST_SUITE("eigensolver") {

TEST_CASE("plane box spectrum separates") {
  const double a = 1.0, L = 4.0;
  const LayerConfig cfg(a);
  const SurfaceChart c = catalog_chart("plane", {}, L, ChartLayout::cartesian);
  const DiscretePair pair = assemble(c, cfg, TensorMesh::cartesian(L, 32, 32, a));
  const EigenReport e = solve_lowest(pair, cfg.kappa1_sq(), {.count = 2});
  const double expect = cfg.kappa1_sq() + 2.0 * std::pow(kPi / (2.0 * L), 2);
  CHECK(e.converged);
  CHECK(e.eigenvalues[0] == doctest::Approx(expect).epsilon(0.02));
  CHECK(e.eigenvalues[0] >= expect);
  CHECK(e.eigenvalues[0] <= e.eigenvalues[1]);
  // second mode: one box direction doubled
  CHECK(e.eigenvalues[1] == doctest::Approx(cfg.kappa1_sq() + 5.0 * std::pow(kPi / (2.0 * L), 2)).epsilon(0.02));
}

TEST_CASE("free horizontal boundary reduces to the Dirichlet interval") {
  const double a = 1.0;
  const LayerConfig cfg(a);
  const SurfaceChart c = catalog_chart("plane", {}, 0.5, ChartLayout::cartesian);
  TensorMesh m = TensorMesh::cartesian(0.5, 4, 40, a);
  m.outer_dirichlet = false;
  const EigenReport e = solve_lowest(assemble(c, cfg, m), cfg.kappa1_sq(), {.count = 1});
  // oracle: linear elements on the u nodes alone
  CHECK(e.eigenvalues[0] == doctest::Approx(discrete_transverse_threshold(m.u)).epsilon(1e-9));
  CHECK(e.eigenvalues[0] == doctest::Approx(kPi * kPi / 4.0).epsilon(2e-3));
  // discrete threshold: (6/h^2)(1 - cos(pi h/2a)) / (2 + cos(pi h/2a)) for a uniform grid
  const double h = 2.0 * a / 39.0, cs = std::cos(kPi * h / (2.0 * a));
  CHECK(discrete_transverse_threshold(m.u) == doctest::Approx(6.0 / (h * h) * (1.0 - cs) / (2.0 + cs)).epsilon(1e-10));
}

TEST_CASE("mass total is the layer volume") {
  const double a = 0.3, L = 2.0;
  const SurfaceChart c = catalog_chart("plane", {}, L, ChartLayout::cartesian);
  const DiscretePair pair = assemble(c, LayerConfig(a), TensorMesh::cartesian(L, 9, 5, a));
  CHECK(testing::rel_err(pair.volume, 2.0 * a * 4.0 * L * L) < 1e-10);
  const SurfaceChart p = catalog_chart("paraboloid", {}, 3.0);
  const DiscretePair pp = assemble(p, LayerConfig(0.3), TensorMesh::polar(3.0, 13, 12, 5, 0.3));
  const double area = kPi / 6.0 * (std::pow(1.0 + 36.0, 1.5) - 1.0);
  // int_{-a}^{a} (1 - H u + K u^2) du = 2a + (2/3) a^3 K; the K term integrates to (2/3) a^3 int K
  const double intK = 2.0 * kPi * (1.0 - 1.0 / std::sqrt(37.0));
  CHECK(pp.volume == doctest::Approx(2.0 * 0.3 * area + 2.0 / 3.0 * 0.027 * intK).epsilon(2e-2));
}

TEST_CASE("discrete pair is symmetric, mass SPD, stiffness PSD") {
  const SurfaceChart p = catalog_chart("paraboloid", {}, 3.0);
  const DiscretePair pair = assemble(p, LayerConfig(0.4), TensorMesh::polar(3.0, 7, 8, 5, 0.4));
  const Mat K(pair.stiffness), M(pair.mass);
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * K.cwiseAbs().maxCoeff());
  CHECK((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * M.cwiseAbs().maxCoeff());
  CHECK(Eigen::LLT<Mat>(M).info() == Eigen::Success);
  CHECK(min_symmetric_eigenvalue(pair.stiffness) >= -1e-10 * K.norm());
}

TEST_CASE("plane layer has no bound state") {
  const double a = 1.0, L = 8.0;
  const LayerConfig cfg(a);
  const SurfaceChart c = catalog_chart("plane", {}, L, ChartLayout::cartesian);
  const EigenReport e = solve_lowest(assemble(c, cfg, TensorMesh::cartesian(L, 48, 24, a)), cfg.kappa1_sq());
  CHECK(e.eigenvalues[0] >= cfg.kappa1_sq());
  CHECK(e.eigenvalues[0] <= cfg.kappa1_sq() + 0.1);
  CHECK(e.gap < 0.0);
  for (std::size_t k = 1; k < e.eigenvalues.size(); ++k) CHECK(e.eigenvalues[k] >= e.eigenvalues[k - 1]);
  for (double r : e.relative_residuals) CHECK(r < e.tol);
}

TEST_CASE("Rayleigh quotient") {
  const double a = 0.4;
  const LayerConfig cfg(a);
  const SurfaceChart p = catalog_chart("paraboloid", {}, 4.0);
  const TensorMesh m = TensorMesh::polar(4.0, 17, 16, 6, a);
  const DiscretePair pair = assemble(p, cfg, m);
  SolverOptions o;
  o.count = 2;
  o.keep_vectors = true;
  const EigenReport e = solve_lowest(pair, cfg.kappa1_sq(), o);
  CHECK(rayleigh(pair, e.vectors.col(0)) == doctest::Approx(e.eigenvalues[0]).epsilon(1e-10));
  CHECK_THROWS_AS(rayleigh(pair, Vec::Zero(static_cast<Eigen::Index>(pair.dofs()))), ZeroVector);

  // sampled psi chi on the plane stays above the threshold
  const SurfaceChart plane = catalog_chart("plane", {}, 6.0);
  const TensorMesh pm = TensorMesh::polar(6.0, 25, 16, 8, a);
  const DiscretePair pp = assemble(plane, cfg, pm);
  const TransverseProfile prof(a);
  const TrialFunction trial = product_family(plane, capacity_profile(plane, 1.0, 6.0)).base(prof);
  CHECK(rayleigh(pp, sample_trial(plane, pm, pp, trial)) >= cfg.kappa1_sq());
}

TEST_CASE("essential threshold") {
  const double a = 0.4;
  const LayerConfig cfg(a);
  CHECK(essential_threshold(catalog_chart("plane", {}, 30.0), cfg, 10.0) == cfg.kappa1_sq());
  const SurfaceChart p = catalog_chart("paraboloid", {}, 30.0);
  // oracle: ||A|| = 2 / sqrt(1 + 4 r^2) is largest at the inner edge r = K
  const ThresholdPoint t10 = essential_threshold_point(p, cfg, 10.0);
  const double eps = 2.0 / std::sqrt(401.0);
  CHECK(t10.epsilon == doctest::Approx(eps).epsilon(1e-8));
  CHECK(t10.bound == doctest::Approx(std::pow((1.0 - a * eps) / (1.0 + a * eps), 2) * cfg.kappa1_sq()).epsilon(1e-8));
  double prev = 0.0;
  for (double K : {2.0, 5.0, 10.0, 20.0, 30.0}) {
    const double b = essential_threshold(p, cfg, K);
    CHECK(b >= prev);
    CHECK(b <= cfg.kappa1_sq());
    prev = b;
  }
  CHECK_THROWS_AS(essential_threshold(p, cfg, 31.0), DomainError);
}

TEST_CASE("property: enlarging the truncation never raises the ground state") {
  const double a = 0.4;
  const LayerConfig cfg(a);
  double prev = 1e300;
  // radial spacing 0.25 on every mesh, so the meshes are nested
  for (int nr : {25, 37, 49}) {
    const double R = 0.25 * (nr - 1);
    const SurfaceChart p = catalog_chart("paraboloid", {}, R);
    const EigenReport e = solve_lowest(assemble(p, cfg, TensorMesh::polar(R, nr, 16, 8, a)), cfg.kappa1_sq(), {.count = 1});
    CHECK(e.eigenvalues[0] <= prev * (1.0 + 1e-10));
    prev = e.eigenvalues[0];
  }
}

TEST_CASE("certificate cases") {
  const double k2 = 15.0;
  EigenReport below;
  below.eigenvalues = {14.9, 15.2};
  below.tol = 1e-7;
  below.gap = k2 - 14.9;
  EigenReport above = below;
  above.eigenvalues = {15.3, 15.4};
  above.gap = k2 - 15.3;
  QuadFormReport neg;
  neg.Q_min = -0.2;
  neg.quadrature_error = 0.01;
  QuadFormReport pos = neg;
  pos.Q_min = 0.3;
  const std::vector<ThresholdPoint> trend{{2.0, 0.5, 12.0}, {5.0, 0.1, 14.0}, {10.0, 0.01, 14.9}};
  const std::vector<ThresholdPoint> flat{{2.0, 0.0, k2}, {5.0, 0.0, k2}};
  const std::vector<ThresholdPoint> falling{{2.0, 0.1, 14.0}, {5.0, 0.2, 13.0}};

  const CertificateFindings g = bound_state_certificate(below, neg, trend, k2, 0.0, true);
  CHECK(g.granted);
  CHECK(g.variational_negative);
  CHECK(g.spectral_gap);
  CHECK(g.threshold_trend);

  const CertificateFindings d = bound_state_certificate(above, pos, flat, k2, 0.0, true);
  CHECK_FALSE(d.granted);
  CHECK_FALSE(d.variational_negative);
  CHECK_FALSE(d.spectral_gap);
  CHECK(d.threshold_trend);

  CHECK_FALSE(bound_state_certificate(below, neg, falling, k2, 0.0, true).granted);
  CHECK_THROWS_AS(bound_state_certificate(above, neg, trend, k2, 0.0, true), Inconsistent);
  // the discretization allowance absorbs a coarse mesh, and incomparable supports never conflict
  CHECK_NOTHROW(bound_state_certificate(above, neg, trend, k2, 0.5, true));
  CHECK_NOTHROW(bound_state_certificate(above, neg, trend, k2, 0.0, false));
}

TEST_CASE("QLMX round trip") {
  const SurfaceChart p = catalog_chart("paraboloid", {}, 2.0);
  const DiscretePair pair = assemble(p, LayerConfig(0.4), TensorMesh::polar(2.0, 5, 6, 4, 0.4));
  const auto path = (std::filesystem::temp_directory_path() / "qlayer_roundtrip.qlmx").string();
  write_qlmx(path, pair.stiffness);
  const SparseMat back = read_qlmx(path);
  CHECK(back.rows() == pair.stiffness.rows());
  CHECK(back.nonZeros() == pair.stiffness.nonZeros());
  CHECK((Mat(back) - Mat(pair.stiffness)).cwiseAbs().maxCoeff() == 0.0);

  std::ifstream is(path, std::ios::binary);
  char head[29];
  is.read(head, 29);
  CHECK(std::string(head, 5) == "QLMX1");
  std::uint64_t rows = 0;
  std::memcpy(&rows, head + 5, 8);
  CHECK(rows == static_cast<std::uint64_t>(pair.stiffness.rows()));
  CHECK(std::filesystem::file_size(path) == 29 + 16 * static_cast<std::uintmax_t>(pair.stiffness.nonZeros()));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_qlmx(path), DomainError);
}

TEST_CASE("solver and mesh errors") {
  const SurfaceChart p = catalog_chart("paraboloid", {}, 3.0);
  const LayerConfig cfg(0.4);
  const DiscretePair pair = assemble(p, cfg, TensorMesh::polar(3.0, 9, 8, 5, 0.4));
  SolverOptions o;
  o.max_iterations = 1;
  o.tol = 1e-10;
  CHECK_THROWS_AS(solve_lowest(pair, cfg.kappa1_sq(), o), NoConvergence);
  CHECK_THROWS_AS(solve_lowest(pair, cfg.kappa1_sq(), {.count = 11}), DomainError);
  CHECK_THROWS_AS(solve_lowest(pair, cfg.kappa1_sq(), {.count = 2, .tol = 1e-12}), DomainError);
  CHECK_THROWS_AS(TensorMesh::polar(3.0, 3, 8, 5, 0.4), DomainError);
  CHECK_THROWS_AS(TensorMesh::cartesian(3.0, 8, 3, 0.4), DomainError);
  CHECK_THROWS_AS(assemble(logtube_chart(10.0), cfg, TensorMesh::polar(3.0, 5, 5, 5, 0.4)), UnsupportedDimension);
  CHECK_THROWS_AS(assemble(p, LayerConfig(0.5, 0.9), TensorMesh::polar(3.0, 5, 5, 5, 0.5)), ValidityError);
}

TEST_CASE("solves are deterministic across thread counts") {
  const SurfaceChart p = catalog_chart("paraboloid", {}, 4.0);
  const LayerConfig cfg(0.4);
  const TensorMesh m = TensorMesh::polar(4.0, 13, 12, 6, 0.4);
  set_thread_count(1);
  const EigenReport a = solve_lowest(assemble(p, cfg, m), cfg.kappa1_sq());
  set_thread_count(3);
  const EigenReport b = solve_lowest(assemble(p, cfg, m), cfg.kappa1_sq());
  set_thread_count(1);
  CHECK(a.eigenvalues == b.eigenvalues);
  CHECK(a.iterations == b.iterations);
}

}
