#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "qlayer/forms.hpp"
#include "qlayer/geometry.hpp"
#include "qlayer/layer.hpp"

namespace qlayer {

using SparseMat = Eigen::SparseMatrix<double>;

struct TensorMesh {
  // Node coordinates along the two chart axes and along u in [-a, a].
  std::vector<double> x0, x1, u;
  bool periodic1 = false;        // x1 wraps (angle)
  bool pole = false;             // x0[0] = 0 is a single point per u (polar charts)
  bool outer_dirichlet = true;   // Dirichlet on the outer horizontal boundary

  std::size_t node_count() const { return x0.size() * x1.size() * u.size(); }
  std::string label() const;

  // Polar mesh with nr nodes on [0, r_max] (pole included), ntheta angular
  // nodes and nu nodes across the layer.
  static TensorMesh polar(double r_max, int nr, int ntheta, int nu, double a);
  // Cartesian mesh on [-L, L]^2 x [-a, a].
  static TensorMesh cartesian(double L, int nx, int nu, double a);
};

struct DiscretePair {
  SparseMat stiffness;
  SparseMat mass;
  std::vector<std::int64_t> node_to_dof;  // -1 for Dirichlet nodes
  double volume = 0.0;                    // sum of quadrature weights of dOmega
  std::size_t dofs() const { return static_cast<std::size_t>(stiffness.rows()); }
};

DiscretePair assemble(const SurfaceChart& chart, const LayerConfig& config, const TensorMesh& mesh);

enum class Preconditioner { factorized, diagonal };

struct SolverOptions {
  int count = 4;
  double tol = 1e-7;               // relative residual ||Kx - lambda Mx|| / (lambda ||Mx||)
  int max_iterations = 500;
  std::uint64_t seed = 20240601;
  Preconditioner preconditioner = Preconditioner::factorized;
  bool keep_vectors = false;
};

struct EigenReport {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;          // ||Kx - lambda Mx|| / ||x||_M
  std::vector<double> relative_residuals;
  int iterations = 0;
  bool converged = false;
  double kappa1_sq = 0.0;
  double gap = 0.0;                       // kappa1^2 - lambda_min
  std::size_t dofs = 0;
  std::string mesh;
  double tol = 0.0;
  double shift = 0.0;                     // preconditioner shift (K - shift M)
  Mat vectors;                            // columns, when requested
};

EigenReport solve_lowest(const DiscretePair& pair, double kappa1_sq, const SolverOptions& options = {});

double rayleigh(const DiscretePair& pair, const Vec& v);

// Nodal interpolant of a trial function on the mesh (Dirichlet nodes dropped).
Vec sample_trial(const SurfaceChart& chart, const TensorMesh& mesh, const DiscretePair& pair,
                 const TrialFunction& trial);

// Lowest eigenvalue of linear elements on the u-nodes of the mesh (Dirichlet
// interval), the discrete counterpart of kappa1^2.
double discrete_transverse_threshold(const std::vector<double>& u_nodes);

struct ThresholdPoint {
  double K_radius = 0.0;
  double epsilon = 0.0;   // sup ||A|| over chart radius >= K
  double bound = 0.0;     // ((1 - a eps) / (1 + a eps))^n kappa1^2
};

double essential_threshold(const SurfaceChart& chart, const LayerConfig& config, double K_radius);
ThresholdPoint essential_threshold_point(const SurfaceChart& chart, const LayerConfig& config, double K_radius);

struct CertificateFindings {
  bool variational_negative = false;
  bool spectral_gap = false;
  bool threshold_trend = false;
  bool granted = false;
  bool comparable = false;   // variational support lies inside the mesh truncation
  std::string summary;
};

CertificateFindings bound_state_certificate(const EigenReport& eig, const QuadFormReport& q,
                                            const std::vector<ThresholdPoint>& thresholds, double kappa1_sq,
                                            double discretization_tol, bool comparable);

// Binary dump: "QLMX1", u64 rows, cols, nnz, then (u32 i, u32 j, f64 v)
// sorted row-major, all little-endian.
void write_qlmx(const std::string& path, const SparseMat& m);
SparseMat read_qlmx(const std::string& path);

}  // namespace qlayer
