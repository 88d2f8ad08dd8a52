#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qlayer {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ParamInterval {
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;
};

enum class Symmetry { radial, product, none };

// How the "chart radius" used by radial test functions and truncation is read
// off a parameter point.
enum class ChartLayout {
  cartesian,  // |x|
  polar,      // x[0], with x[1] the angle
  axis,       // x[radius_axis]
};

// z = f(r) together with its first two derivatives.
struct RadialProfile {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;
};

struct SurfaceChart {
  std::string id;
  int n = 2;
  std::vector<ParamInterval> domain;
  std::function<Vec(const Vec&)> position;
  // Optional analytic (n+1) x n derivative.
  std::function<Mat(const Vec&)> jacobian;
  // Optional analytic second derivatives, n*n vectors in R^{n+1}, row-major (i, j).
  std::function<std::vector<Vec>(const Vec&)> second;
  std::optional<int> euler_char;
  Symmetry symmetry = Symmetry::none;
  int end_count = 1;
  ChartLayout layout = ChartLayout::cartesian;
  int radius_axis = 0;
  // Set for graphs z = f(r) over the plane (either layout).
  std::optional<RadialProfile> radial;

  int ambient() const { return n + 1; }
  double scale() const;
  double radius(const Vec& x) const;
  Vec radius_gradient(const Vec& x) const;
  // Largest chart radius covered by the domain.
  double max_radius() const;
  bool contains(const Vec& x) const;
};

struct FiniteDifference {
  // 0 selects the default: 1e-5 x scale when an analytic Jacobian is present,
  // 2e-4 x scale otherwise (second differences of the position map).
  double step = 0.0;
  bool richardson = true;
};

struct FundamentalForms {
  Mat g;       // n x n
  Mat h;       // n x n
  Vec N;       // unit normal in R^{n+1}
  Mat J;       // tangent columns, (n+1) x n
  Vec X;       // position
};

struct ShapeData {
  int n = 0;
  Mat A;                      // g^{-1} h
  Vec principal;              // ascending
  double normA = 0.0;         // max |lambda_i|
  Vec elem_sym;               // c_0 .. c_n
  double H = 0.0;             // c_1
  std::optional<double> K_gauss;
  Mat frame_h;                // h in a g-orthonormal frame (L^{-1} h L^{-T})
  Mat frame;                  // L^{-T}: columns are the orthonormal frame in chart indices

  // det(I - uA) by the expansion sum (-1)^k u^k c_k.
  double density(double u) const;
};

struct CurvatureData {
  int n = 0;
  std::vector<double> R;      // R_{ijkl}, index ((i*n + j)*n + k)*n + l
  Mat Ric;
  double rho = 0.0;
  std::vector<double> traces; // Tr(R^p), p = 1 .. floor(n/2)
  double ric_norm_sq = 0.0;
  double riem_norm_sq = 0.0;

  double operator()(int i, int j, int k, int l) const { return R[((i * n + j) * n + k) * n + l]; }
};

FundamentalForms fundamental_forms(const SurfaceChart& chart, const Vec& x, FiniteDifference fd = {});

ShapeData shape_data(const FundamentalForms& forms);

CurvatureData curvature_data(const ShapeData& shape, const FundamentalForms& forms);

// Elementary symmetric polynomials c_0 .. c_n of the given values.
Vec elementary_symmetric(const Vec& values);

// Checks the periodic identification of the chart (endpoint agreement).
void validate_chart(const SurfaceChart& chart, double tol = 1e-12);

// ---- graph functions z = f(x, y) ------------------------------------------

struct GraphJet {
  double f = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

struct GraphFunction {
  std::string name;
  std::function<GraphJet(double, double)> eval;
  std::optional<RadialProfile> radial;
};

GraphFunction graph_from_radial(std::string name, RadialProfile profile);
// Derivatives by central differences of `f`.
GraphFunction graph_from_values(std::string name, std::function<double(double, double)> f,
                                double step = 1e-4);

// Mean curvature c_1 of the graph with upward normal:
// ((1+f_y^2) f_xx + (1+f_x^2) f_yy - 2 f_x f_y f_xy) / (1+|grad f|^2)^{3/2}.
double mean_curvature_graph(const GraphFunction& f, double x, double y);

SurfaceChart graph_cartesian_chart(const GraphFunction& f, double half_width);
// Polar parametrization (r, theta) -> (r cos, r sin, f). theta is periodic.
SurfaceChart graph_polar_chart(const GraphFunction& f, double max_radius);

}  // namespace qlayer
