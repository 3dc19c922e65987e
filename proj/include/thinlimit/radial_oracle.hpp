#pragma once

#include <array>
#include <vector>

#include "thinlimit/core_model.hpp"
#include "thinlimit/sparse_eigs.hpp"

namespace thinlimit {

/// How the rho = 0 nodes of the disk meshes are treated.
enum class OriginTreatment {
  Auto,      ///< free for n = 0, eliminated for n >= 1
  Free,      ///< natural node (only legal for n = 0)
  Eliminate  ///< Dirichlet-eliminated
};

struct MeshSpec {
  int elements1 = 4096;  ///< P1 elements on (r, R)
  int elements2 = 4096;  ///< P1 elements on each disk radius (0, r)
  OriginTreatment origin = OriginTreatment::Auto;
};

/// Piecewise-linear discretisation of the weighted radial forms for one
/// angular index n. In the coupled case the three traces at rho = r share a
/// single degree of freedom; the flux balance there is left natural. In the
/// decoupled (Dirichlet) case every lateral end is eliminated and the matrix
/// is block diagonal over the sheets.
struct CoupledRadialAssembly {
  int n = 0;
  BoundaryCondition bc = BoundaryCondition::Neumann;
  GridPtr grid;
  SparseMatrix stiffness;
  SparseMatrix mass;
  /// Global dof per grid node, -1 where eliminated.
  std::array<std::vector<int>, 3> dof_map;
  /// Shared interface dof (coupled case), else -1.
  int interface_dof = -1;
  /// Contiguous dof ranges per sheet [begin, end); the shared interface dof
  /// is outside these ranges.
  std::array<std::pair<int, int>, 3> sheet_range{};

  int dofs() const { return static_cast<int>(stiffness.rows()); }
  BranchedRadialFunction to_profile(const Eigen::VectorXd& x) const;
};

CoupledRadialAssembly assemble(int n, const AnnulusStackConfig& config, const MeshSpec& mesh = {});

struct RadialEigenpair {
  double lambda = 0.0;
  BranchedRadialFunction profile;
  Eigen::VectorXd x;
};

/// k smallest eigenpairs of K x = lambda M x, M-orthonormal.
std::vector<RadialEigenpair> solve_eigs(const CoupledRadialAssembly& assembly, int k);

/// Number of eigenvalues below `threshold` from the inertia of K - t M.
/// Throws ThresholdOnEigenvalue when the count changes within 1e-12
/// relative of the threshold.
int count_below(const CoupledRadialAssembly& assembly, double threshold);

/// k smallest eigenvalues extrapolated from meshes of N/2 and N elements
/// per interval: (4 lambda_N - lambda_{N/2}) / 3.
std::vector<double> richardson_eigenvalues(int n, const AnnulusStackConfig& config, int elements, int k);

}  // namespace thinlimit
