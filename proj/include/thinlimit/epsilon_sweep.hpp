#pragma once

#include <string>
#include <vector>

#include "thinlimit/core_model.hpp"
#include "thinlimit/sparse_eigs.hpp"

namespace thinlimit {

/// Resolution of the meridian mesh. Cells across the thinnest sheet are
/// `layer_cells`; next to rho = r the radial spacing shrinks to
/// eps * min(h) / layer_cells and grows geometrically back to 1 / radial_density.
struct MeridianMeshOptions {
  int radial_density = 96;  ///< cells per unit length away from rho = r
  int layer_cells = 16;
  double grading = 1.15;
  bool notch = true;  ///< false meshes the full cylinder (test geometry)

  /// Every count multiplied by `factor`.
  MeridianMeshOptions refined(int factor = 2) const;
};

/// Tensor mesh of the meridian section {0 <= rho <= R, 0 <= y <= h1} with the
/// notch [0, r] x [h3, h1 - h2] cut out cell by cell.
struct MeridianMesh {
  double epsilon = 1.0;
  std::vector<double> rho;  ///< mesh lines in rho
  std::vector<double> y;    ///< mesh lines in y
  bool notch = true;
  double r = 0.0, y_lo = 0.0, y_hi = 0.0;  ///< notch rectangle
  /// Global dof of line-grid node (i, j), -1 when not in the mesh.
  std::vector<int> node_index;
  /// Lower-left (i, j) of every kept cell.
  std::vector<std::pair<int, int>> cells;
  int nodes = 0;

  int node(std::size_t i, std::size_t j) const { return node_index[i * y.size() + j]; }

  static MeridianMesh build(const AnnulusStackConfig& config, double epsilon, const MeridianMeshOptions& options = {});
  /// Mesh from explicit lines. Throws MeshError unless both line sets are
  /// strictly increasing, span the section and contain the notch edges.
  static MeridianMesh from_lines(const AnnulusStackConfig& config, double epsilon, std::vector<double> rho,
                                 std::vector<double> y, bool notch = true);
};

struct SqueezedSystem {
  SparseMatrix stiffness;
  SparseMatrix mass;
  /// Mesh node -> dof, -1 where the lateral Dirichlet condition eliminates it.
  std::vector<int> dof_of_node;
};

/// Bilinear elements for int (u_rho v_rho + eps^-2 u_y v_y) rho and
/// int u v rho. With bc = DirichletLateral the outer wall rho = R and the
/// notch wall rho = r, h3 <= y <= h1 - h2 are eliminated.
SqueezedSystem assemble_squeezed(const MeridianMesh& mesh, const AnnulusStackConfig& config);

struct SweepRow {
  double epsilon = 0.0;
  std::vector<double> lambda;  ///< k lowest eigenvalues
};

struct SweepResult {
  BoundaryCondition bc = BoundaryCondition::Neumann;
  std::vector<double> targets;  ///< k lowest n = 0 limit eigenvalues, repeated by multiplicity
  std::vector<SweepRow> rows;
};

/// k lowest eigenvalues of the squeezed problem for each epsilon, paired
/// with the axisymmetric limit spectrum.
SweepResult sweep(const AnnulusStackConfig& config, const std::vector<double>& eps_list, int k,
                  const MeridianMeshOptions& options = {});

/// k lowest eigenvalues for a single epsilon.
std::vector<double> squeezed_eigenvalues(const AnnulusStackConfig& config, double epsilon, int k,
                                         const MeridianMeshOptions& options = {});

/// n = 0 limit eigenvalues with multiplicity, the k smallest.
std::vector<double> limit_targets(const AnnulusStackConfig& config, int k);

/// CSV with header epsilon,k,lambda,target_lambda0,abs_gap.
std::string sweep_csv(const SweepResult& result);

}  // namespace thinlimit
