#include "qlayer/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qlayer/errors.hpp"

namespace qlayer {

double SurfaceChart::scale() const {
  double s = 0.0;
  for (const auto& d : domain) s = std::max(s, d.hi - d.lo);
  return s > 0.0 ? s : 1.0;
}

double SurfaceChart::radius(const Vec& x) const {
  switch (layout) {
    case ChartLayout::cartesian:
      return x.norm();
    case ChartLayout::polar:
      return x[0];
    case ChartLayout::axis:
      return x[radius_axis];
  }
  return 0.0;
}

Vec SurfaceChart::radius_gradient(const Vec& x) const {
  Vec g = Vec::Zero(n);
  switch (layout) {
    case ChartLayout::cartesian: {
      const double r = x.norm();
      if (r > 0.0) g = x / r;
      break;
    }
    case ChartLayout::polar:
      g[0] = 1.0;
      break;
    case ChartLayout::axis:
      g[radius_axis] = 1.0;
      break;
  }
  return g;
}

double SurfaceChart::max_radius() const {
  switch (layout) {
    case ChartLayout::cartesian: {
      double m = 0.0;
      for (const auto& d : domain) m = std::max({m, std::abs(d.lo), std::abs(d.hi)});
      return m;
    }
    case ChartLayout::polar:
      return domain[0].hi;
    case ChartLayout::axis:
      return domain[radius_axis].hi;
  }
  return 0.0;
}

bool SurfaceChart::contains(const Vec& x) const {
  if (x.size() != n) return false;
  for (int i = 0; i < n; ++i) {
    const auto& d = domain[i];
    if (d.periodic) continue;
    const double slack = 1e-12 * (1.0 + std::abs(d.hi - d.lo));
    if (x[i] < d.lo - slack || x[i] > d.hi + slack) return false;
  }
  return true;
}

namespace {

Mat central_jacobian(const SurfaceChart& chart, const Vec& x, double h) {
  Mat J(chart.ambient(), chart.n);
  for (int i = 0; i < chart.n; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    J.col(i) = (chart.position(xp) - chart.position(xm)) / (2.0 * h);
  }
  return J;
}

Mat jacobian_at(const SurfaceChart& chart, const Vec& x, const FiniteDifference& fd, double local_scale) {
  if (chart.jacobian) return chart.jacobian(x);
  const double h = fd.step > 0.0 ? fd.step : 1e-5 * local_scale;
  Mat J = central_jacobian(chart, x, h);
  if (fd.richardson) J = (4.0 * central_jacobian(chart, x, 0.5 * h) - J) / 3.0;
  return J;
}

// Second derivatives X_ij as n*n vectors.
std::vector<Vec> second_from_jacobian(const SurfaceChart& chart, const Vec& x, double h) {
  const int n = chart.n;
  std::vector<Vec> out(static_cast<std::size_t>(n * n));
  for (int j = 0; j < n; ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Mat D = (chart.jacobian(xp) - chart.jacobian(xm)) / (2.0 * h);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i * n + j)] = D.col(i);
  }
  return out;
}

std::vector<Vec> second_from_position(const SurfaceChart& chart, const Vec& x, double h) {
  const int n = chart.n;
  std::vector<Vec> out(static_cast<std::size_t>(n * n));
  const Vec X0 = chart.position(x);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      Vec d;
      if (i == j) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        d = (chart.position(xp) - 2.0 * X0 + chart.position(xm)) / (h * h);
      } else {
        Vec pp = x, pm = x, mp = x, mm = x;
        pp[i] += h, pp[j] += h;
        pm[i] += h, pm[j] -= h;
        mp[i] -= h, mp[j] += h;
        mm[i] -= h, mm[j] -= h;
        d = (chart.position(pp) - chart.position(pm) - chart.position(mp) + chart.position(mm)) / (4.0 * h * h);
      }
      out[static_cast<std::size_t>(i * n + j)] = d;
      out[static_cast<std::size_t>(j * n + i)] = d;
    }
  }
  return out;
}

std::vector<Vec> second_at(const SurfaceChart& chart, const Vec& x, const FiniteDifference& fd, double local_scale) {
  if (chart.second) return chart.second(x);
  const bool have_jac = static_cast<bool>(chart.jacobian);
  const double h = fd.step > 0.0 ? fd.step : (have_jac ? 1e-5 : 2e-4) * local_scale;
  auto eval = [&](double step) {
    return have_jac ? second_from_jacobian(chart, x, step) : second_from_position(chart, x, step);
  };
  auto S = eval(h);
  if (fd.richardson) {
    const auto Sh = eval(0.5 * h);
    for (std::size_t k = 0; k < S.size(); ++k) S[k] = (4.0 * Sh[k] - S[k]) / 3.0;
  }
  return S;
}

}  // namespace

FundamentalForms fundamental_forms(const SurfaceChart& chart, const Vec& x, FiniteDifference fd) {
  if (!chart.contains(x)) throw DomainError("point outside chart domain of '" + chart.id + "'");
  const int n = chart.n;
  const double local_scale = std::max(1.0, x.cwiseAbs().maxCoeff());

  FundamentalForms out;
  out.X = chart.position(x);
  out.J = jacobian_at(chart, x, fd, local_scale);
  out.g = out.J.transpose() * out.J;

  Eigen::SelfAdjointEigenSolver<Mat> ge(out.g, Eigen::EigenvaluesOnly);
  const double gmin = ge.eigenvalues()(0), gmax = ge.eigenvalues()(n - 1);
  if (!(gmin > 0.0) || out.g.determinant() <= 0.0) throw SingularChart("det g <= 0 on '" + chart.id + "'");
  if (gmax / gmin > 1e12) throw SingularChart("Gram matrix condition number above 1e12 on '" + chart.id + "'");

  // Unit normal: last column of the full QR factor, oriented so that
  // (J, N) is a positively oriented frame of R^{n+1}.
  Eigen::HouseholderQR<Mat> qr(out.J);
  Mat Q = qr.householderQ() * Mat::Identity(n + 1, n + 1);
  out.N = Q.col(n);
  Mat frame(n + 1, n + 1);
  frame << out.J, out.N;
  if (frame.determinant() < 0.0) out.N = -out.N;

  const auto S = second_at(chart, x, fd, local_scale);
  out.h.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.h(i, j) = S[static_cast<std::size_t>(i * n + j)].dot(out.N);
  out.h = (0.5 * (out.h + out.h.transpose())).eval();
  return out;
}

Vec elementary_symmetric(const Vec& values) {
  const auto n = values.size();
  Vec c = Vec::Zero(n + 1);
  c[0] = 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = i + 1; k >= 1; --k) c[k] += values[i] * c[k - 1];
  return c;
}

double ShapeData::density(double u) const {
  double s = 0.0, uk = 1.0;
  for (int k = 0; k <= n; ++k) {
    s += ((k % 2) ? -1.0 : 1.0) * uk * elem_sym[k];
    uk *= u;
  }
  return s;
}

ShapeData shape_data(const FundamentalForms& forms) {
  const auto n = static_cast<int>(forms.g.rows());
  Eigen::LLT<Mat> llt(forms.g);
  if (llt.info() != Eigen::Success) throw SingularChart("first fundamental form is not positive definite");
  const Mat L = llt.matrixL();
  const Mat Linv = L.triangularView<Eigen::Lower>().solve(Mat::Identity(n, n));

  ShapeData s;
  s.n = n;
  s.A = llt.solve(forms.h);
  s.frame = Linv.transpose();
  const Mat fh = Linv * forms.h * Linv.transpose();
  s.frame_h = 0.5 * (fh + fh.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s.frame_h, Eigen::EigenvaluesOnly);
  s.principal = es.eigenvalues();
  s.normA = s.principal.cwiseAbs().maxCoeff();
  s.elem_sym = elementary_symmetric(s.principal);
  s.H = s.elem_sym[1];
  if (n == 2) s.K_gauss = s.elem_sym[2];
  return s;
}

namespace {

struct PairSeq {
  std::vector<int> idx;  // i1 j1 i2 j2 ...
};

void enumerate_pair_sequences(int n, int p, std::vector<int>& cur, std::vector<PairSeq>& out) {
  if (static_cast<int>(cur.size()) == 2 * p) {
    out.push_back({cur});
    return;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::find(cur.begin(), cur.end(), i) != cur.end()) continue;
      if (std::find(cur.begin(), cur.end(), j) != cur.end()) continue;
      cur.push_back(i);
      cur.push_back(j);
      enumerate_pair_sequences(n, p, cur, out);
      cur.pop_back();
      cur.pop_back();
    }
  }
}

// Sign of the permutation taking sequence `from` to sequence `to`, or 0 when
// they are not permutations of each other.
int permutation_sign(const std::vector<int>& from, const std::vector<int>& to) {
  const std::size_t m = from.size();
  std::vector<int> perm(m);
  for (std::size_t a = 0; a < m; ++a) {
    auto it = std::find(from.begin(), from.end(), to[a]);
    if (it == from.end()) return 0;
    perm[a] = static_cast<int>(it - from.begin());
  }
  int inversions = 0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      if (perm[a] > perm[b]) ++inversions;
  return (inversions % 2) ? -1 : 1;
}

}  // namespace

CurvatureData curvature_data(const ShapeData& shape, const FundamentalForms&) {
  const int n = shape.n;
  if (n > 6) throw UnsupportedDimension("curvature tensor storage supports n <= 6");
  const Mat& h = shape.frame_h;

  CurvatureData c;
  c.n = n;
  c.R.assign(static_cast<std::size_t>(n * n * n * n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          c.R[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)] = h(i, k) * h(j, l) - h(i, l) * h(j, k);

  c.Ric = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i) c.Ric(j, l) += c(i, j, i, l);
  c.rho = c.Ric.trace();
  c.ric_norm_sq = c.Ric.squaredNorm();
  for (double v : c.R) c.riem_norm_sq += v * v;

  // Signed full contraction over ordered pair sequences, normalized by
  // 2^p/(2p)! so that the result equals c_{2p}(A).
  for (int p = 1; 2 * p <= n; ++p) {
    std::vector<PairSeq> seqs;
    std::vector<int> cur;
    enumerate_pair_sequences(n, p, cur, seqs);
    double total = 0.0;
    for (const auto& I : seqs) {
      for (const auto& K : seqs) {
        const int sign = permutation_sign(I.idx, K.idx);
        if (sign == 0) continue;
        double prod = 1.0;
        for (int s = 0; s < p; ++s)
          prod *= c(I.idx[2 * s], I.idx[2 * s + 1], K.idx[2 * s], K.idx[2 * s + 1]);
        total += sign * prod;
      }
    }
    double fact = 1.0;
    for (int m = 2; m <= 2 * p; ++m) fact *= m;
    c.traces.push_back(total * std::pow(2.0, p) / fact);
  }
  return c;
}

void validate_chart(const SurfaceChart& chart, double tol) {
  for (int i = 0; i < chart.n; ++i) {
    if (!chart.domain[i].periodic) continue;
    for (double frac : {0.3, 0.7}) {
      Vec lo(chart.n);
      for (int k = 0; k < chart.n; ++k) {
        const auto& d = chart.domain[k];
        lo[k] = d.lo + frac * (d.hi - d.lo);
      }
      Vec hi = lo;
      lo[i] = chart.domain[i].lo;
      hi[i] = chart.domain[i].hi;
      const double gap = (chart.position(lo) - chart.position(hi)).norm();
      if (gap > tol * std::max(1.0, chart.position(lo).norm()))
        throw DomainError("periodic endpoints of '" + chart.id + "' do not agree");
    }
  }
}

// ---- graphs ----------------------------------------------------------------

GraphFunction graph_from_radial(std::string name, RadialProfile profile) {
  GraphFunction g;
  g.name = std::move(name);
  g.radial = profile;
  g.eval = [p = profile](double x, double y) {
    GraphJet j;
    const double r = std::hypot(x, y);
    j.f = p.f(r);
    const double fpp = p.d2f(r);
    if (r < 1e-12) {
      j.hess = fpp * Eigen::Matrix2d::Identity();
      return j;
    }
    const double fp = p.df(r);
    const Eigen::Vector2d e(x / r, y / r);
    j.grad = fp * e;
    j.hess = fpp * e * e.transpose() + (fp / r) * (Eigen::Matrix2d::Identity() - e * e.transpose());
    return j;
  };
  return g;
}

GraphFunction graph_from_values(std::string name, std::function<double(double, double)> f, double step) {
  GraphFunction g;
  g.name = std::move(name);
  g.eval = [f = std::move(f), h = step](double x, double y) {
    GraphJet j;
    j.f = f(x, y);
    const double fxp = f(x + h, y), fxm = f(x - h, y), fyp = f(x, y + h), fym = f(x, y - h);
    j.grad = Eigen::Vector2d((fxp - fxm) / (2 * h), (fyp - fym) / (2 * h));
    j.hess(0, 0) = (fxp - 2 * j.f + fxm) / (h * h);
    j.hess(1, 1) = (fyp - 2 * j.f + fym) / (h * h);
    j.hess(0, 1) = j.hess(1, 0) =
        (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h);
    return j;
  };
  return g;
}

double mean_curvature_graph(const GraphFunction& f, double x, double y) {
  const GraphJet j = f.eval(x, y);
  const double fx = j.grad[0], fy = j.grad[1];
  const double num = (1 + fy * fy) * j.hess(0, 0) + (1 + fx * fx) * j.hess(1, 1) - 2 * fx * fy * j.hess(0, 1);
  return num / std::pow(1 + fx * fx + fy * fy, 1.5);
}

SurfaceChart graph_cartesian_chart(const GraphFunction& f, double half_width) {
  SurfaceChart c;
  c.id = f.name;
  c.n = 2;
  c.domain = {{-half_width, half_width, false}, {-half_width, half_width, false}};
  c.layout = ChartLayout::cartesian;
  c.radial = f.radial;
  c.symmetry = f.radial ? Symmetry::radial : Symmetry::none;
  c.position = [f](const Vec& x) {
    Vec X(3);
    X << x[0], x[1], f.eval(x[0], x[1]).f;
    return X;
  };
  c.jacobian = [f](const Vec& x) {
    const GraphJet j = f.eval(x[0], x[1]);
    Mat J(3, 2);
    J << 1, 0, 0, 1, j.grad[0], j.grad[1];
    return J;
  };
  c.second = [f](const Vec& x) {
    const GraphJet j = f.eval(x[0], x[1]);
    std::vector<Vec> S(4, Vec::Zero(3));
    S[0][2] = j.hess(0, 0);
    S[1][2] = S[2][2] = j.hess(0, 1);
    S[3][2] = j.hess(1, 1);
    return S;
  };
  return c;
}

SurfaceChart graph_polar_chart(const GraphFunction& f, double max_radius) {
  SurfaceChart c;
  c.id = f.name;
  c.n = 2;
  c.domain = {{0.0, max_radius, false}, {0.0, 2.0 * std::numbers::pi, true}};
  c.layout = ChartLayout::polar;
  c.radial = f.radial;
  c.symmetry = f.radial ? Symmetry::radial : Symmetry::none;
  c.position = [f](const Vec& x) {
    const double r = x[0], cs = std::cos(x[1]), sn = std::sin(x[1]);
    Vec X(3);
    X << r * cs, r * sn, f.eval(r * cs, r * sn).f;
    return X;
  };
  c.jacobian = [f](const Vec& x) {
    const double r = x[0], cs = std::cos(x[1]), sn = std::sin(x[1]);
    const GraphJet j = f.eval(r * cs, r * sn);
    Mat J(3, 2);
    J << cs, -r * sn, sn, r * cs, j.grad[0] * cs + j.grad[1] * sn, r * (-j.grad[0] * sn + j.grad[1] * cs);
    return J;
  };
  c.second = [f](const Vec& x) {
    const double r = x[0], cs = std::cos(x[1]), sn = std::sin(x[1]);
    const GraphJet j = f.eval(r * cs, r * sn);
    const double fx = j.grad[0], fy = j.grad[1];
    const double fxx = j.hess(0, 0), fxy = j.hess(0, 1), fyy = j.hess(1, 1);
    std::vector<Vec> S(4, Vec::Zero(3));
    S[0] << 0.0, 0.0, fxx * cs * cs + 2 * fxy * cs * sn + fyy * sn * sn;
    const double Frt = r * (-fxx * cs * sn + fxy * (cs * cs - sn * sn) + fyy * cs * sn) - fx * sn + fy * cs;
    S[1] << -sn, cs, Frt;
    S[2] = S[1];
    const double Ftt = r * r * (fxx * sn * sn - 2 * fxy * cs * sn + fyy * cs * cs) - r * (fx * cs + fy * sn);
    S[3] << -r * cs, -r * sn, Ftt;
    return S;
  };
  return c;
}

}  // namespace qlayer
