#pragma once

#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace thinlimit {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct GeneralizedEigenpairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, M-orthonormal
  int lanczos_steps = 0;
};

/// k smallest eigenpairs of K x = lambda M x for symmetric K and SPD M, by
/// shift-invert Lanczos on (K - shift M)^{-1} M with full
/// M-reorthogonalisation. `shift` must lie below the smallest eigenvalue.
/// Small problems are handed to a dense solver. Throws SolverError when the
/// factorisation fails or the residuals stay above tolerance.
GeneralizedEigenpairs smallest_eigenpairs(const SparseMatrix& K, const SparseMatrix& M, int k, double shift,
                                          std::uint64_t seed = 0x5eed);

struct Inertia {
  int negative = 0;
  int zero = 0;
  int positive = 0;
};

/// Signature of a symmetric sparse matrix from the diagonal of its LDL^T
/// factor (Sylvester's law of inertia). Pivots below `zero_tol` times the
/// largest diagonal entry count as zero.
Inertia sparse_inertia(const SparseMatrix& A, double zero_tol = 1e-14);

}  // namespace thinlimit
