#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qlayer/geometry.hpp"
#include "qlayer/layer.hpp"
#include "qlayer/parabolicity.hpp"

namespace qlayer {

// ---- transverse profiles ----------------------------------------------------

struct TransverseValue {
  double value = 0.0;
  double deriv = 0.0;
};
using TransverseFn = std::function<TransverseValue(double)>;

enum class Chi1Kind { sine, cubic };

class TransverseProfile {
 public:
  TransverseProfile(double a, Chi1Kind chi1 = Chi1Kind::sine, int kmax = 12);

  double a() const { return a_; }
  double kappa1() const { return kappa1_; }
  Chi1Kind chi1_kind() const { return kind_; }
  const TransverseFn& chi() const { return chi_; }
  const TransverseFn& chi1() const { return chi1_; }
  const std::vector<double>& mu() const { return mu_; }
  double sigma() const { return sigma_; }
  double sup_chi1() const { return sup_chi1_; }

 private:
  double a_, kappa1_;
  Chi1Kind kind_;
  TransverseFn chi_, chi1_;
  std::vector<double> mu_;
  double sigma_ = 0.0;
  double sup_chi1_ = 1.0;
};

// mu_0 .. mu_kmax in closed form, each checked against adaptive quadrature.
std::vector<double> mu_coefficients(double a, int kmax);
// Same moment by adaptive quadrature of -kappa^2 int u^k cos(2 kappa u).
double mu_quadrature(double a, int k);

// sum_k mu_{2k} c_{2k}(A).
double curvature_integrand(const ShapeData& shape, const TransverseProfile& profile);

// sigma = -int chi_u chi1 du; also checks the integration-by-parts identity.
double sigma_cross(const TransverseFn& chi1, double a);
double sigma_cross(const TransverseProfile& profile);

// ---- trial functions --------------------------------------------------------

struct HorizontalValue {
  double value = 0.0;
  Vec grad;  // chart gradient
};
using HorizontalFn = std::function<HorizontalValue(const Vec&, const FundamentalForms&)>;

struct TrialTerm {
  double coeff = 1.0;
  HorizontalFn h;
  TransverseFn t;
};

struct TrialValue {
  double value = 0.0;
  Vec grad;          // chart gradient
  double du = 0.0;
};

struct TrialFunction {
  std::vector<TrialTerm> terms;

  TrialValue evaluate(const Vec& x, const FundamentalForms& forms, double u) const;
  TrialFunction scaled(double s) const;
  TrialFunction plus(const TrialFunction& other) const;
};

// Lift of a radial profile t -> (value, derivative) along the chart radius.
HorizontalFn radial_lift(const SurfaceChart& chart, std::function<std::pair<double, double>(double)> profile);
HorizontalFn capacity_lift(const SurfaceChart& chart, CapacityProfile profile);
// (1 - (d / radius)^2)^3 with d the ambient distance to the image of `center`.
HorizontalFn bump(const SurfaceChart& chart, const Vec& center, double radius);

enum class FamilyKind { product, perturbed, convex };
std::string to_string(FamilyKind kind);

struct TestFunctionFamily {
  FamilyKind kind = FamilyKind::product;
  HorizontalFn psi;                 // phi = psi chi
  std::optional<HorizontalFn> pert; // perturbation pert * chi1 (j, or psi / f)
  bool f_divisor = false;
  double sup_psi = 1.0;
  double sup_pert = 1.0;
  std::string description;

  TrialFunction base(const TransverseProfile& profile) const;
  TrialFunction perturbation(const TransverseProfile& profile) const;
  TrialFunction combined(const TransverseProfile& profile, double epsilon) const;
};

// ---- quadrature grid --------------------------------------------------------

struct QuadGrid {
  std::vector<std::vector<double>> breaks;  // per chart axis
  int u_cells = 8;

  QuadGrid refined() const;
  std::size_t cells() const;
  // Graded radial cells up to r_max (with knots) and uniform angular cells.
  static QuadGrid radial(const SurfaceChart& chart, double r_max, std::vector<double> knots,
                         int angular_cells = 4, int u_cells = 8);
};

// Q(xi, eta) split into the horizontal gradient part, the transverse part
// (xi_u eta_u - kappa^2 xi eta) and the L^2 pairing.
struct FormParts {
  double Q1 = 0.0;
  double Q2 = 0.0;
  double norm = 0.0;
  double Q() const { return Q1 + Q2; }
};

struct PairEvaluation {
  FormParts phi_phi, phi_p, p_p;
  double q2_expansion = 0.0;   // int psi^2 sum mu_2k c_2k dSigma (psi of the base)
  double pert_H = 0.0;         // int pert H dSigma
  double sup_phi = 0.0, sup_p = 0.0;
};

PairEvaluation evaluate_pair(const TrialFunction& phi, const TrialFunction* p, const HorizontalFn* psi,
                             const HorizontalFn* pert, const SurfaceChart& chart, const LayerConfig& config,
                             const TransverseProfile& profile, const QuadGrid& grid);

struct QuadFormReport {
  double Q1 = 0.0, Q2 = 0.0, Q = 0.0, norm = 0.0;
  double Q2_expansion = 0.0;
  bool has_perturbation = false;
  double cross = 0.0;             // Q(phi, p)
  double cross_identity = 0.0;    // -sigma int pert H
  double quad = 0.0;              // Q(p, p)
  double norm_cross = 0.0, norm_p = 0.0;
  double epsilon_star = 0.0;
  double Q_min = 0.0;
  double norm_min = 0.0;          // ||phi + eps* p||^2
  double quadrature_error = 0.0;
  double q2_error = 0.0;
  double cross_error = 0.0;
  double refinement_ratio = 0.0;
  bool degenerate = false;        // cross vanished within its error
  bool clamped = false;
  std::size_t cells = 0;
};

QuadFormReport evaluate_Q(const TestFunctionFamily& family, const SurfaceChart& chart, const LayerConfig& config,
                          const TransverseProfile& profile, const QuadGrid& grid);

struct Optimum {
  double epsilon_star = 0.0;
  double Q_min = 0.0;
  bool clamped = false;
};

// Minimizes Q + 2 eps cross + eps^2 quad over |eps| <= eps_max.
Optimum perturbation_optimize(double Q, double cross, double quad, double cross_tol = 0.0,
                              double eps_max = std::numeric_limits<double>::infinity());

// ---- families ---------------------------------------------------------------

TestFunctionFamily product_family(const SurfaceChart& chart, const CapacityProfile& psi);
// psi = capacity profile, j = bump of radius r_j at the point of largest ||A||
// inside the chart ball of radius psi.r - 1.
TestFunctionFamily perturbed_family(const SurfaceChart& chart, const CapacityProfile& psi, double r_j = 1.0);

// ---- convex surfaces --------------------------------------------------------

// inf of f_r over the unit circle.
double convex_delta(const GraphFunction& f);

// C^1 cubic ramps on [R-1, R] and [R^2, R^2+1].
struct Window {
  double R = 0.0;
  double value(double t) const;
  double deriv(double t) const;
  double max_slope() const { return 1.5; }
};

struct LevelData {
  double t = 0.0;
  double H_integral = 0.0;        // int_{f=t} H ds
  double weighted = 0.0;          // int_{f=t} H / |grad~ f| ds
  double length = 0.0;
  double inv_grad = 0.0;          // int_{f=t} 1 / |grad~ f| ds
  double min_H_over_kb = 0.0;
};

struct CoareaReport {
  double value = 0.0;             // int rho(t)/t int_{f=t} H/|grad~ f| dt
  double delta = 0.0;
  double delta_H = 0.0;           // largest delta with H >= delta^3 k_b / 2 on the levels
  double bound = 0.0;             // pi delta_H^3 log R
  std::vector<LevelData> levels;
  bool per_level_ok = true;
};

// Level-set integrals over t in [t_lo, t_hi] weighted by `window` (rho = 1
// when window is null); levels must stay inside radius r_max.
CoareaReport coarea_H_over_f(const GraphFunction& f, double t_lo, double t_hi, const Window* window,
                             double r_max, int levels = 64);
LevelData level_integral(const GraphFunction& f, double t, double r_max, int angles = 256);

struct ConvexCertificate {
  double delta = 0.0;
  double delta_H = 0.0;
  double sigma = 0.0;
  double R = 0.0;
  double r1 = 0.0, r_out = 0.0;
  double cutoff_energy = 0.0;      // int |grad phi|^2 dSigma
  double C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0, C5 = 0.0;
  double inv_f2_integral = 0.0;    // int_{R-1 <= f <= R^2+1} 1/f^2 dSigma
  double coarea = 0.0;
  double coarea_bound = 0.0;
  double epsilon_star = 0.0;
  double Q_value = 0.0;
  bool negative = false;
  QuadFormReport form;
  // what the form was evaluated on, for resampling elsewhere
  TestFunctionFamily family;
  SurfaceChart chart;
  QuadGrid grid;
};

struct ConvexOptions {
  double cutoff_ratio = 2.0;  // r_out / r1
  int angular_cells = 4;
  int u_cells = 8;
};

ConvexCertificate convex_certificate(const GraphFunction& f, const LayerConfig& config, double R,
                                     Chi1Kind chi1 = Chi1Kind::sine, const ConvexOptions& options = {});
// First negative certificate along the ladder; CertificateFailed if none.
ConvexCertificate convex_certificate_ladder(const GraphFunction& f, const LayerConfig& config,
                                            const std::vector<double>& ladder, Chi1Kind chi1 = Chi1Kind::sine,
                                            const ConvexOptions& options = {},
                                            std::vector<ConvexCertificate>* attempts = nullptr);

}  // namespace qlayer
