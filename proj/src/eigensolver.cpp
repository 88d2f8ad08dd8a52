#include "qlayer/eigensolver.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <tuple>

#include <Eigen/Eigenvalues>
#include <Eigen/CholmodSupport>
#include <Eigen/SparseCholesky>

#include "qlayer/errors.hpp"
#include "qlayer/parallel.hpp"
#include "qlayer/quadrature.hpp"

namespace qlayer {

namespace {

std::vector<double> linspace(double lo, double hi, int count, bool include_hi = true) {
  std::vector<double> v;
  const int div = include_hi ? count - 1 : count;
  for (int i = 0; i < count; ++i) v.push_back(lo + (hi - lo) * i / div);
  return v;
}

}  // namespace

std::string TensorMesh::label() const {
  return std::to_string(x0.size()) + "x" + std::to_string(x1.size()) + "x" + std::to_string(u.size());
}

TensorMesh TensorMesh::polar(double r_max, int nr, int ntheta, int nu, double a) {
  if (nr < 4 || ntheta < 4 || nu < 4) throw DomainError("mesh needs at least 4 nodes per axis");
  TensorMesh m;
  m.x0 = linspace(0.0, r_max, nr);
  m.x1 = linspace(0.0, 2.0 * std::numbers::pi, ntheta, false);
  m.u = linspace(-a, a, nu);
  m.periodic1 = true;
  m.pole = true;
  return m;
}

TensorMesh TensorMesh::cartesian(double L, int nx, int nu, double a) {
  if (nx < 4 || nu < 4) throw DomainError("mesh needs at least 4 nodes per axis");
  TensorMesh m;
  m.x0 = linspace(-L, L, nx);
  m.x1 = linspace(-L, L, nx);
  m.u = linspace(-a, a, nu);
  return m;
}

namespace {

struct NodeLayout {
  std::size_t n0, n1, nu;
  std::size_t id(std::size_t i, std::size_t j, std::size_t k) const { return (i * n1 + j) * nu + k; }
};

std::vector<std::int64_t> build_dof_map(const TensorMesh& mesh, const NodeLayout& L) {
  std::vector<std::int64_t> map(mesh.node_count(), -1);
  std::int64_t next = 0;
  for (std::size_t i = 0; i < L.n0; ++i)
    for (std::size_t j = 0; j < L.n1; ++j)
      for (std::size_t k = 0; k < L.nu; ++k) {
        const bool u_face = k == 0 || k + 1 == L.nu;
        bool outer = false;
        if (mesh.outer_dirichlet) {
          outer = i + 1 == L.n0;
          if (!mesh.pole) outer = outer || i == 0;
          if (!mesh.periodic1) outer = outer || j == 0 || j + 1 == L.n1;
        }
        if (u_face || outer) continue;
        if (mesh.pole && i == 0 && j > 0) {
          map[L.id(i, j, k)] = map[L.id(0, 0, k)];
          continue;
        }
        map[L.id(i, j, k)] = next++;
      }
  return map;
}

}  // namespace

DiscretePair assemble(const SurfaceChart& chart, const LayerConfig& config, const TensorMesh& mesh) {
  if (chart.n != 2) throw UnsupportedDimension("the layer discretization supports surfaces only");
  const NodeLayout L{mesh.x0.size(), mesh.x1.size(), mesh.u.size()};
  DiscretePair pair;
  pair.node_to_dof = build_dof_map(mesh, L);
  const std::int64_t ndof =
      1 + *std::max_element(pair.node_to_dof.begin(), pair.node_to_dof.end());
  if (ndof <= 0) throw AssemblyError("mesh has no free nodes");

  const auto& gl = quad::gauss_legendre(2);
  const std::size_t e0 = L.n0 - 1;
  const std::size_t e1 = mesh.periodic1 ? L.n1 : L.n1 - 1;
  const std::size_t eu = L.nu - 1;
  const double two_pi = 2.0 * std::numbers::pi;

  struct Local {
    std::vector<Eigen::Triplet<double>> K, M;
    double volume = 0.0;
  };
  std::vector<Local> rows(e0);

  parallel_for(e0, [&](std::size_t i) {
    Local& out = rows[i];
    const double r0 = mesh.x0[i], h0 = mesh.x0[i + 1] - mesh.x0[i];
    for (std::size_t j = 0; j < e1; ++j) {
      const double t0 = mesh.x1[j];
      const double t1 = (j + 1 < L.n1) ? mesh.x1[j + 1] : mesh.x1[0] + two_pi;
      const double h1 = t1 - t0;
      // horizontal quadrature data
      struct HPoint {
        double s, t, w, sqrt_g;
        ShapeData shape;
        Mat ginv;
      };
      std::vector<HPoint> hp;
      for (int qa = 0; qa < 2; ++qa)
        for (int qb = 0; qb < 2; ++qb) {
          const double s = 0.5 * (1.0 + gl.nodes[qa]), t = 0.5 * (1.0 + gl.nodes[qb]);
          Vec x(2);
          x << r0 + h0 * s, t0 + h1 * t;
          const FundamentalForms ff = fundamental_forms(chart, x);
          ShapeData sd = shape_data(ff);
          if (config.a() * sd.normA >= config.C0()) throw ValidityError("a ||A|| >= C0 inside the mesh");
          hp.push_back({s, t, 0.25 * gl.weights[qa] * gl.weights[qb] * h0 * h1, std::sqrt(ff.g.determinant()),
                        std::move(sd), ff.g.inverse()});
        }
      const std::size_t jn = (j + 1 < L.n1) ? j + 1 : 0;
      for (std::size_t k = 0; k < eu; ++k) {
        const double u0 = mesh.u[k], hu = mesh.u[k + 1] - mesh.u[k];
        Eigen::Matrix<double, 8, 8> Ke = Eigen::Matrix<double, 8, 8>::Zero();
        Eigen::Matrix<double, 8, 8> Me = Eigen::Matrix<double, 8, 8>::Zero();
        for (const auto& p : hp)
          for (int qc = 0; qc < 2; ++qc) {
            const double v = 0.5 * (1.0 + gl.nodes[qc]);
            const double u = u0 + hu * v;
            const double density = p.shape.density(u);
            if (!(density > 0.0)) throw ValidityError("layer density is not positive inside the mesh");
            const double w = p.w * 0.5 * gl.weights[qc] * hu * density * p.sqrt_g;
            const Mat Minv = (Mat::Identity(2, 2) - u * p.shape.A).inverse();
            const Eigen::Matrix2d Ginv = Minv * p.ginv * Minv.transpose();
            Eigen::Matrix<double, 8, 1> N;
            Eigen::Matrix<double, 2, 8> dX;
            Eigen::Matrix<double, 8, 1> dU;
            for (int c = 0; c < 8; ++c) {
              const int a = c & 1, b = (c >> 1) & 1, cc = (c >> 2) & 1;
              const double fa = a ? p.s : 1.0 - p.s, fb = b ? p.t : 1.0 - p.t, fc = cc ? v : 1.0 - v;
              const double da = (a ? 1.0 : -1.0) / h0, db = (b ? 1.0 : -1.0) / h1, dc = (cc ? 1.0 : -1.0) / hu;
              N[c] = fa * fb * fc;
              dX(0, c) = da * fb * fc;
              dX(1, c) = fa * db * fc;
              dU[c] = fa * fb * dc;
            }
            Ke.noalias() += w * (dX.transpose() * Ginv * dX + dU * dU.transpose());
            Me.noalias() += w * (N * N.transpose());
            out.volume += w;
          }
        std::array<std::int64_t, 8> dof{};
        for (int c = 0; c < 8; ++c) {
          const int a = c & 1, b = (c >> 1) & 1, cc = (c >> 2) & 1;
          dof[c] = pair.node_to_dof[L.id(i + a, b ? jn : j, k + cc)];
        }
        for (int r = 0; r < 8; ++r) {
          if (dof[r] < 0) continue;
          for (int c = 0; c < 8; ++c) {
            if (dof[c] < 0) continue;
            out.K.emplace_back(dof[r], dof[c], Ke(r, c));
            out.M.emplace_back(dof[r], dof[c], Me(r, c));
          }
        }
      }
    }
  });

  std::vector<Eigen::Triplet<double>> kt, mt;
  std::vector<double> volumes;
  for (auto& r : rows) {
    kt.insert(kt.end(), r.K.begin(), r.K.end());
    mt.insert(mt.end(), r.M.begin(), r.M.end());
    volumes.push_back(r.volume);
    r = Local{};
  }
  pair.volume = pairwise_sum(volumes);
  pair.stiffness.resize(ndof, ndof);
  pair.mass.resize(ndof, ndof);
  pair.stiffness.setFromTriplets(kt.begin(), kt.end());
  pair.mass.setFromTriplets(mt.begin(), mt.end());
  pair.stiffness.makeCompressed();
  pair.mass.makeCompressed();
  for (std::int64_t d = 0; d < ndof; ++d)
    if (!(pair.mass.coeff(d, d) > 0.0)) throw AssemblyError("mass matrix has a nonpositive diagonal entry");
  return pair;
}

// ---- LOBPCG -------------------------------------------------------------------

namespace {

Mat seeded_block(std::size_t rows, int cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Mat X(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (std::size_t r = 0; r < rows; ++r) X(r, c) = static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5;
  return X;
}

struct Ritz {
  Mat X, KX, MX;
  Vec theta;
};

// Rayleigh-Ritz on span(S), keeping the `m` lowest pairs.
Ritz rayleigh_ritz(const SparseMat& K, const SparseMat& M, Mat S, int m) {
  for (Eigen::Index c = 0; c < S.cols(); ++c) {
    const double nrm = S.col(c).norm();
    if (nrm > 0.0) S.col(c) /= nrm;
  }
  const Mat KS = K * S;
  const Mat MS = M * S;
  Mat Gm = S.transpose() * MS;
  Mat Gk = S.transpose() * KS;
  Gm = (0.5 * (Gm + Gm.transpose())).eval();
  Gk = (0.5 * (Gk + Gk.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Mat> em(Gm);
  const Vec& d = em.eigenvalues();
  const double cut = 1e-13 * d.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d[i] > cut) keep.push_back(i);
  Mat Z(S.cols(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    Z.col(static_cast<Eigen::Index>(c)) = em.eigenvectors().col(keep[c]) / std::sqrt(d[keep[c]]);
  Mat H = Z.transpose() * Gk * Z;
  H = (0.5 * (H + H.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Mat> eh(H);
  const int take = std::min<int>(m, static_cast<int>(H.rows()));
  const Mat C = Z * eh.eigenvectors().leftCols(take);
  return {S * C, KS * C, MS * C, eh.eigenvalues().head(take)};
}

}  // namespace

EigenReport solve_lowest(const DiscretePair& pair, double kappa1_sq, const SolverOptions& options) {
  if (options.count < 1 || options.count > 10) throw DomainError("count must lie in [1, 10]");
  if (options.tol < 1e-10) throw DomainError("tolerance must be at least 1e-10");
  const SparseMat& K = pair.stiffness;
  const SparseMat& M = pair.mass;
  const auto n = static_cast<std::size_t>(K.rows());
  const int k = options.count;
  const int m = std::min<int>(k + 2, static_cast<int>(n));
  if (static_cast<int>(n) < k) throw DomainError("fewer free nodes than requested eigenvalues");

  Eigen::CholmodSimplicialLLT<SparseMat> chol;
  chol.cholmod().print = 0;
  Vec diag;
  double shift = 0.0;
  bool shifted = options.preconditioner != Preconditioner::factorized;
  if (options.preconditioner == Preconditioner::factorized) {
    chol.compute(K);
    if (chol.info() != Eigen::Success) throw AssemblyError("stiffness factorization failed");
  } else {
    diag = K.diagonal();
  }
  // Refactor K - shift M with shift just below the current lowest Ritz value;
  // a successful Cholesky factorization certifies that no eigenvalue lies below the shift.
  auto apply_shift = [&](const Vec& theta) {
    const double spread = theta[theta.size() - 1] - theta[0];
    double delta = std::max(spread, 1e-3 * std::abs(theta[0]));
    for (int attempt = 0; attempt < 30; ++attempt) {
      const double s = theta[0] - delta;
      if (s <= 0.0) break;
      chol.factorize(SparseMat(K - s * M));
      if (chol.info() == Eigen::Success) {
        shift = s;
        return;
      }
      delta *= 2.0;
    }
    chol.factorize(K);
  };
  auto precondition = [&](const Mat& R) -> Mat {
    if (options.preconditioner == Preconditioner::factorized) {
      // the factorization shares one CHOLMOD workspace, so solves stay sequential
      return chol.solve(R);
    }
    return diag.cwiseInverse().asDiagonal() * R;
  };

  Ritz cur = rayleigh_ritz(K, M, seeded_block(n, m, options.seed), m);
  Mat P;
  EigenReport rep;
  rep.kappa1_sq = kappa1_sq;
  rep.dofs = n;
  rep.tol = options.tol;
  Vec res(m), rel(m);
  int it = 0;
  for (; it <= options.max_iterations; ++it) {
    const Mat R = cur.KX - cur.MX * cur.theta.asDiagonal();
    bool done = true;
    for (int c = 0; c < cur.theta.size(); ++c) {
      // columns are M-orthonormal after Rayleigh-Ritz
      res[c] = R.col(c).norm();
      rel[c] = res[c] / (std::abs(cur.theta[c]) * cur.MX.col(c).norm());
      if (c < k && !(rel[c] < options.tol)) done = false;
    }
    if (done) {
      rep.converged = true;
      break;
    }
    if (it == options.max_iterations) break;
    if (!shifted && (rel[0] < 1e-2 || it == 20)) {
      apply_shift(cur.theta);
      shifted = true;
    }
    // converged leading pairs stay in X but stop contributing search directions
    std::vector<Eigen::Index> active;
    for (int c = 0; c < cur.theta.size(); ++c)
      if (c >= k || !(rel[c] < options.tol)) active.push_back(c);
    Mat Ra(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t c = 0; c < active.size(); ++c) Ra.col(static_cast<Eigen::Index>(c)) = R.col(active[c]);
    const Mat W = precondition(Ra);
    Mat Pa(n, P.cols() > 0 ? Ra.cols() : 0);
    for (Eigen::Index c = 0; c < Pa.cols(); ++c) Pa.col(c) = P.col(active[static_cast<std::size_t>(c)]);
    Mat S(n, cur.X.cols() + W.cols() + Pa.cols());
    S << cur.X, W, Pa;
    Ritz next = rayleigh_ritz(K, M, std::move(S), m);
    P = next.X - cur.X * (cur.MX.transpose() * next.X);
    cur = std::move(next);
  }
  rep.iterations = it;
  rep.shift = shift;
  for (int c = 0; c < k; ++c) {
    rep.eigenvalues.push_back(cur.theta[c]);
    rep.residuals.push_back(res[c]);
    rep.relative_residuals.push_back(rel[c]);
  }
  rep.gap = kappa1_sq - rep.eigenvalues.front();
  if (options.keep_vectors) rep.vectors = cur.X.leftCols(k);
  if (!rep.converged)
    throw NoConvergence("eigensolver stopped after " + std::to_string(it) + " iterations with relative residual " +
                        std::to_string(rel.head(k).maxCoeff()));
  return rep;
}

double rayleigh(const DiscretePair& pair, const Vec& v) {
  const double den = v.dot(pair.mass * v);
  if (!(den > 0.0)) throw ZeroVector("vector has zero mass norm");
  return v.dot(pair.stiffness * v) / den;
}

Vec sample_trial(const SurfaceChart& chart, const TensorMesh& mesh, const DiscretePair& pair,
                 const TrialFunction& trial) {
  const NodeLayout L{mesh.x0.size(), mesh.x1.size(), mesh.u.size()};
  Vec v = Vec::Zero(static_cast<Eigen::Index>(pair.dofs()));
  std::vector<Vec> columns(L.n0);
  parallel_for(L.n0, [&](std::size_t i) {
    for (std::size_t j = 0; j < L.n1; ++j) {
      if (mesh.pole && i == 0 && j > 0) continue;
      Vec x(2);
      // the polar chart is singular at the pole itself
      x << (mesh.pole && i == 0 ? 1e-3 * mesh.x0[1] : mesh.x0[i]), mesh.x1[j];
      const FundamentalForms ff = fundamental_forms(chart, x);
      for (std::size_t k = 0; k < L.nu; ++k) {
        const std::int64_t d = pair.node_to_dof[L.id(i, j, k)];
        if (d < 0) continue;
        v[d] = trial.evaluate(x, ff, mesh.u[k]).value;
      }
    }
  });
  return v;
}

double discrete_transverse_threshold(const std::vector<double>& u) {
  const auto n = static_cast<Eigen::Index>(u.size()) - 2;
  if (n < 1) throw DomainError("need interior u nodes");
  Mat K = Mat::Zero(n, n), M = Mat::Zero(n, n);
  for (std::size_t e = 0; e + 1 < u.size(); ++e) {
    const double h = u[e + 1] - u[e];
    const Eigen::Matrix2d ke{{1.0 / h, -1.0 / h}, {-1.0 / h, 1.0 / h}};
    const Eigen::Matrix2d me{{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const auto ia = static_cast<Eigen::Index>(e) + a - 1, ib = static_cast<Eigen::Index>(e) + b - 1;
        if (ia < 0 || ib < 0 || ia >= n || ib >= n) continue;
        K(ia, ib) += ke(a, b);
        M(ia, ib) += me(a, b);
      }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(K, M, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

ThresholdPoint essential_threshold_point(const SurfaceChart& chart, const LayerConfig& config, double K_radius) {
  const double r_max = chart.max_radius();
  if (!(K_radius >= 0.0 && K_radius <= r_max)) throw DomainError("K_radius must lie within the truncation");
  ThresholdPoint tp;
  tp.K_radius = K_radius;
  std::vector<Vec> points;
  const int radial = 400, angular = 16;
  const double r_lo = std::max(K_radius, 1e-3 * r_max);
  for (int a = 0; a <= radial; ++a) {
    const double r = r_lo * std::pow(r_max / r_lo, static_cast<double>(a) / radial);
    for (int b = 0; b < angular; ++b) {
      const double th = 2.0 * std::numbers::pi * b / angular;
      Vec x(chart.n);
      switch (chart.layout) {
        case ChartLayout::polar:
          x << r, th;
          break;
        case ChartLayout::cartesian: {
          x.setZero();
          x[0] = r * std::cos(th);
          x[1] = r * std::sin(th);
          if (!chart.contains(x)) continue;
          break;
        }
        case ChartLayout::axis:
          for (int i = 0; i < chart.n; ++i) x[i] = chart.domain[i].lo + (chart.domain[i].hi - chart.domain[i].lo) * b / angular;
          x[chart.radius_axis] = r;
          break;
      }
      points.push_back(x);
    }
  }
  std::vector<double> norms(points.size());
  parallel_for(points.size(), [&](std::size_t p) { norms[p] = shape_data(fundamental_forms(chart, points[p])).normA; });
  tp.epsilon = norms.empty() ? 0.0 : *std::max_element(norms.begin(), norms.end());
  const double ae = config.a() * tp.epsilon;
  tp.bound = std::pow((1.0 - ae) / (1.0 + ae), chart.n) * config.kappa1_sq();
  return tp;
}

double essential_threshold(const SurfaceChart& chart, const LayerConfig& config, double K_radius) {
  return essential_threshold_point(chart, config, K_radius).bound;
}

CertificateFindings bound_state_certificate(const EigenReport& eig, const QuadFormReport& q,
                                            const std::vector<ThresholdPoint>& thresholds, double kappa1_sq,
                                            double discretization_tol, bool comparable) {
  CertificateFindings f;
  f.comparable = comparable;
  f.variational_negative = q.Q_min < -q.quadrature_error;
  const double solver_tol = eig.tol * std::abs(eig.eigenvalues.front());
  f.spectral_gap = eig.gap > solver_tol;
  bool monotone = thresholds.size() >= 2;
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (thresholds[i].bound < thresholds[i - 1].bound) monotone = false;
  if (monotone) {
    const double first = kappa1_sq - thresholds.front().bound;
    const double last = kappa1_sq - thresholds.back().bound;
    f.threshold_trend = last <= 1e-14 * kappa1_sq || last < first;
  }
  f.granted = f.variational_negative && f.spectral_gap && f.threshold_trend;
  if (comparable && f.variational_negative && eig.eigenvalues.front() > kappa1_sq + discretization_tol + solver_tol)
    throw Inconsistent("variational form is negative but the discrete ground state lies above the threshold");
  f.summary = std::string(f.granted ? "granted" : "denied") + ": variational " +
              (f.variational_negative ? "negative" : "not negative") + ", spectral gap " +
              (f.spectral_gap ? "positive" : "not positive") + ", threshold trend " +
              (f.threshold_trend ? "ok" : "not established");
  return f;
}

// ---- binary dump ----------------------------------------------------------------

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw DomainError("truncated QLMX1 stream");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_qlmx(const std::string& path, const SparseMat& m) {
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> entries;
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMat::InnerIterator it(m, c); it; ++it)
      entries.emplace_back(static_cast<std::uint32_t>(it.row()), static_cast<std::uint32_t>(it.col()), it.value());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("cannot open '" + path + "' for writing");
  os.write("QLMX1", 5);
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  put_le<std::uint64_t>(os, entries.size());
  for (const auto& [i, j, v] : entries) {
    put_le(os, i);
    put_le(os, j);
    put_le(os, v);
  }
}

SparseMat read_qlmx(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("cannot open '" + path + "'");
  char magic[5];
  is.read(magic, 5);
  if (!is || std::string(magic, 5) != "QLMX1") throw DomainError("not a QLMX1 file");
  const auto rows = get_le<std::uint64_t>(is), cols = get_le<std::uint64_t>(is), nnz = get_le<std::uint64_t>(is);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(nnz);
  for (std::uint64_t e = 0; e < nnz; ++e) {
    const auto i = get_le<std::uint32_t>(is);
    const auto j = get_le<std::uint32_t>(is);
    const auto v = get_le<double>(is);
    t.emplace_back(i, j, v);
  }
  SparseMat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace qlayer
