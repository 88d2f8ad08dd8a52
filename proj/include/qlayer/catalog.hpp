#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qlayer/geometry.hpp"

namespace qlayer {

struct SurfaceParams {
  double height = 1.0;                // gaussian-bump amplitude
  std::vector<double> coefficients;   // radial-graph: f(r) = sum_k c_k r^{2k}
};

struct CatalogInfo {
  std::string id;
  int n = 2;
  std::optional<int> euler_char;
  int end_count = 1;
  std::optional<double> sup_normA;  // known closed-form sup ||A||, when available
  std::string note;
};

std::vector<CatalogInfo> catalog();
const CatalogInfo& catalog_info(const std::string& id);

// Graph surfaces of the catalog (plane, paraboloid, radial-graph, gaussian-bump).
GraphFunction catalog_graph(const std::string& id, const SurfaceParams& params = {});

// Chart for a catalog surface truncated at chart radius `truncation`.
// Graph surfaces use the requested layout; s1xr2-logtube always uses
// (theta, t, phi) with t as the radial axis.
SurfaceChart catalog_chart(const std::string& id, const SurfaceParams& params, double truncation,
                           ChartLayout layout = ChartLayout::polar);

// sigma(t) of the S^1 x R^2 example: log 3 below t = 3, log t above 3.1 and a
// C^2 monotone quintic join in between.
RadialProfile logtube_sigma();
SurfaceChart logtube_chart(double t_max);

}  // namespace qlayer
