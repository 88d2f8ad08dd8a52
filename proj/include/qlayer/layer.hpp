#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qlayer/geometry.hpp"

namespace qlayer {

// Depth a and the admissibility constant C0 of the layer Sigma x (-a, a).
class LayerConfig {
 public:
  explicit LayerConfig(double a, double C0 = 0.9);

  double a() const { return a_; }
  double C0() const { return C0_; }
  double width() const { return 2.0 * a_; }
  double kappa1() const;
  double kappa1_sq() const { return kappa1() * kappa1(); }

 private:
  double a_;
  double C0_;
};

struct LayerMetric {
  Mat G_tangent;   // (I - uA)^T g (I - uA)
  double detG = 0.0;
  double density = 0.0;  // det(I - uA)

  // Full (n+1) x (n+1) metric in (x, u) coordinates.
  Mat full() const;
};

LayerMetric layer_metric(const FundamentalForms& forms, const ShapeData& shape, double u,
                         const LayerConfig& config);

struct MeasureBounds {
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
};

// ((1-|u|||A||)^n, det(I-uA), (1+|u|||A||)^n); requires |u| ||A|| < 1.
MeasureBounds measure_bounds_check(const ShapeData& shape, double u);

// Tensor-product sample set over the chart parameters.
struct SampleGrid {
  std::vector<std::vector<double>> axes;

  std::size_t size() const;
  Vec point(std::size_t index) const;
  static SampleGrid uniform(const SurfaceChart& chart, int per_axis, std::optional<double> radius_cap = {});
};

struct ValidityReport {
  double sup_normA = 0.0;
  double sup_a_normA = 0.0;
  double margin = 0.0;           // C0 - sup a||A||
  Vec argmax;
  // (chart radius, max ||A|| among samples in that radial bin)
  std::vector<std::pair<double, double>> decay_profile;
  // Slope of log||A|| against log r over the outer third of the profile.
  std::optional<double> tail_exponent;
  std::size_t samples = 0;
};

ValidityReport validity_scan(const SurfaceChart& chart, const LayerConfig& config, const SampleGrid& grid,
                             int radial_bins = 32);

}  // namespace qlayer
