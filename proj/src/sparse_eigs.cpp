#include "thinlimit/sparse_eigs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "thinlimit/errors.hpp"

namespace thinlimit {

namespace {

constexpr int kDenseLimit = 160;
constexpr double kRitzTol = 1e-13;

GeneralizedEigenpairs dense_pairs(const SparseMatrix& K, const SparseMatrix& M, int k) {
  const Eigen::MatrixXd kd(K), md(M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(kd, md);
  if (es.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed");
  GeneralizedEigenpairs out;
  out.values = es.eigenvalues().head(k);
  out.vectors = es.eigenvectors().leftCols(k);
  return out;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v[idx] < 0.0) v = -v;
}

}  // namespace

GeneralizedEigenpairs smallest_eigenpairs(const SparseMatrix& K, const SparseMatrix& M, int k, double shift,
                                          std::uint64_t seed) {
  const auto n = static_cast<int>(K.rows());
  if (k < 1 || k > n) throw SolverError("smallest_eigenpairs: k=" + std::to_string(k) + " out of range");

  GeneralizedEigenpairs out;
  if (n <= kDenseLimit) {
    out = dense_pairs(K, M, k);
  } else {
    SparseMatrix shifted = K - shift * M;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) throw SolverError("shift-invert factorisation failed");

    const int cap = std::min(n, std::max(4 * k + 40, 400));
    Eigen::MatrixXd Q;
    Eigen::MatrixXd MQ;
    std::vector<double> alpha, beta;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd q(n);
    for (int i = 0; i < n; ++i) q[i] = normal(rng);

    auto m_orthogonalise = [&](Eigen::VectorXd& w, int cols) {
      for (int pass = 0; pass < 2; ++pass) {
        if (cols > 0) w -= Q.leftCols(cols) * (MQ.leftCols(cols).transpose() * w);
      }
    };

    Eigen::VectorXd mq = M * q;
    q /= std::sqrt(q.dot(mq));
    mq = M * q;

    int steps = 0;
    int target = std::min(cap, std::max(2 * k + 20, 40));
    Eigen::VectorXd theta;
    Eigen::MatrixXd S;
    bool converged = false;
    while (!converged) {
      Q.conservativeResize(n, target);
      MQ.conservativeResize(n, target);
      while (steps < target) {
        Q.col(steps) = q;
        MQ.col(steps) = mq;
        Eigen::VectorXd w = ldlt.solve(mq);
        const double a = mq.dot(w);
        alpha.push_back(a);
        m_orthogonalise(w, steps + 1);
        Eigen::VectorXd mw = M * w;
        double b = std::sqrt(std::max(w.dot(mw), 0.0));
        ++steps;
        if (steps == n) {
          beta.push_back(0.0);
          break;
        }
        if (b < 1e-12 * std::abs(a)) {
          // Invariant subspace: continue from a fresh direction.
          for (int i = 0; i < n; ++i) w[i] = normal(rng);
          m_orthogonalise(w, steps);
          mw = M * w;
          w /= std::sqrt(w.dot(mw));
          mw = M * w;
          beta.push_back(0.0);
          q = w;
          mq = mw;
          continue;
        }
        beta.push_back(b);
        q = w / b;
        mq = mw / b;
      }

      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
      for (int i = 0; i < steps; ++i) {
        T(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < steps) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      theta = es.eigenvalues();
      S = es.eigenvectors();
      const double tail = beta[static_cast<std::size_t>(steps - 1)];
      converged = steps >= k;
      for (int i = 0; i < k && converged; ++i) {
        const int col = steps - 1 - i;
        if (std::abs(tail * S(steps - 1, col)) > kRitzTol * std::abs(theta[col])) converged = false;
      }
      if (!converged) {
        if (steps >= cap || steps >= n) {
          throw SolverError("Lanczos did not converge in " + std::to_string(steps) + " steps");
        }
        target = std::min({cap, n, steps + std::max(steps / 2, 20)});
      }
    }

    out.values.resize(k);
    out.vectors.resize(n, k);
    for (int i = 0; i < k; ++i) {
      const int col = steps - 1 - i;
      Eigen::VectorXd x = Q.leftCols(steps) * S.col(col);
      const double mx = x.dot(M * x);
      x /= std::sqrt(mx);
      out.values[i] = x.dot(K * x);
      out.vectors.col(i) = x;
    }
    out.lanczos_steps = steps;
  }

  // Rayleigh quotients may reorder nearly equal values.
  std::vector<int> order(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return out.values[a] < out.values[b]; });
  GeneralizedEigenpairs sorted;
  sorted.values.resize(k);
  sorted.vectors.resize(n, k);
  sorted.lanczos_steps = out.lanczos_steps;
  for (int i = 0; i < k; ++i) {
    sorted.values[i] = out.values[order[static_cast<std::size_t>(i)]];
    sorted.vectors.col(i) = out.vectors.col(order[static_cast<std::size_t>(i)]);
    fix_sign(sorted.vectors.col(i));
  }

  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < K.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(K, c); it; ++it) row_sums[it.row()] += std::abs(it.value());
  }
  const double knorm = std::max(1.0, row_sums.maxCoeff());
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd x = sorted.vectors.col(i);
    const double res = (K * x - sorted.values[i] * (M * x)).norm();
    if (res > 1e-6 * knorm * x.norm()) {
      throw SolverError("eigenpair " + std::to_string(i) + " residual " + std::to_string(res) + " above tolerance");
    }
  }
  return sorted;
}

namespace {

// Counts pivot signs; nullopt when a pivot is exactly zero.
std::optional<Inertia> ldlt_signs(const SparseMatrix& A, double zero_abs) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd d = ldlt.vectorD();
  Inertia out;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) return std::nullopt;
    if (std::abs(d[i]) <= zero_abs) {
      ++out.zero;
    } else if (d[i] < 0.0) {
      ++out.negative;
    } else {
      ++out.positive;
    }
  }
  return out;
}

}  // namespace

Inertia sparse_inertia(const SparseMatrix& A, double zero_tol) {
  const double scale = std::max(A.diagonal().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if (auto direct = ldlt_signs(A, zero_tol * scale)) return *direct;

  // Exactly singular pivot: bracket the kernel with A + delta I and A - delta I.
  // Sylvester's law makes both counts exact for the shifted matrices.
  SparseMatrix eye(A.rows(), A.cols());
  eye.setIdentity();
  for (double delta = std::max(zero_tol, 1e-12) * scale; delta < 1e-2 * scale; delta *= 10.0) {
    const auto below = ldlt_signs(A + delta * eye, 0.0);
    const auto above = ldlt_signs(A - delta * eye, 0.0);
    if (!below || !above) continue;
    Inertia out;
    out.negative = below->negative;
    out.positive = above->positive;
    out.zero = static_cast<int>(A.rows()) - out.negative - out.positive;
    return out;
  }
  throw SolverError("sparse_inertia: factorization failed at every shift");
}

}  // namespace thinlimit
