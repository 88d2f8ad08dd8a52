#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qlayer/geometry.hpp"

namespace qlayer {

struct VolumeGrowthCurve {
  std::vector<double> radii;    // increasing
  std::vector<double> volumes;  // V(t_j)
  double exponent = 0.0;        // power-law tail fit over the outer third
  double coefficient = 0.0;
};

// Builds a curve from given samples and fits its tail.
VolumeGrowthCurve make_volume_curve(std::vector<double> radii, std::vector<double> volumes);

// V(t) for radial graphs (t = radial arclength from the pole) and for the
// product chart (region t < R of the radial axis).
VolumeGrowthCurve volume_growth(const SurfaceChart& chart, std::span<const double> radii);

enum class Verdict { parabolic_consistent, nonparabolic_consistent, inconclusive };
std::string to_string(Verdict v);

struct ParabolicityResult {
  double partial = 0.0;        // int_1^T t / V(t) dt
  Verdict verdict = Verdict::inconclusive;
  double end_slope = 0.0;      // d partial / d log T at T, = T^2 / V(T)
  double slope_log_ratio = 0.0;  // [s(T) log T] / [s(T/10) log(T/10)]
  double tail_exponent = 0.0;  // local exponent of V over [T/10, T]
};

ParabolicityResult parabolicity_integral(const VolumeGrowthCurve& curve, double T);

// Radial harmonic capacity function on the annulus r < t < R (chart radius).
class CapacityProfile {
 public:
  double r = 0.0, R = 0.0;
  std::vector<double> radii;
  std::vector<double> psi;
  double energy = 0.0;

  double value(double t) const;
  double derivative(double t) const;

  // Internal tables for the radial path.
  std::function<double(double)> weight;  // sqrt(1 + f_r^2) / t
  std::vector<double> breaks;
  std::vector<double> tail_integral;     // int_{breaks[k]}^R weight
  double total = 0.0;                    // int_r^R weight
  bool from_mesh = false;
};

CapacityProfile capacity_profile(const SurfaceChart& chart, double r, double R);

// Discrete harmonic solve on a cartesian n = 2 chart with `nodes` per axis.
CapacityProfile capacity_profile_mesh(const SurfaceChart& chart, double r, double R, int nodes);

// 2 pi int t |sigma_R'(t)|^2 dt for the logarithmic cutoff sigma_R.
double log_cutoff_energy(double R);

struct EndData {
  std::vector<double> lambda_iso;
  // Per end: (geodesic radius, area) samples.
  std::vector<std::vector<std::pair<double, double>>> area_curves;
  std::vector<double> tail_exponent;
};

EndData isoperimetric_constants(const SurfaceChart& chart, std::span<const double> radii);

struct HartmanReport {
  double total_curvature = 0.0;   // int K dSigma
  double euler_char = 0.0;
  double lambda_sum = 0.0;
  double residual = 0.0;          // (1/2pi) int K - (e - sum lambda)
  double tail_fraction = 0.0;     // share of int |K| over the outer tenth of the radius
};

HartmanReport hartman(const SurfaceChart& chart);
double hartman_residual(const SurfaceChart& chart);

// Radial arclength s(r) and enclosed area A(r) of a radial graph.
double radial_arclength(const RadialProfile& f, double r);
double radial_area(const RadialProfile& f, double r);
// Inverse of radial_arclength on [0, r_max].
double radius_at_arclength(const RadialProfile& f, double s, double r_max);

}  // namespace qlayer
