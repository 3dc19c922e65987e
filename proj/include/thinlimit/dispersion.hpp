#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "thinlimit/core_model.hpp"

namespace thinlimit {

/// The 4x4 matrix whose singularity in lambda characterises the coupled
/// radial eigenproblem. Unknowns are (c1, c2, c3, c4) with
///   v1 = c1 J(s rho) + c4 Y(s rho),  v2 = c2 J(s rho),  v3 = c3 J(s rho),
/// s = sqrt(lambda), J = J_|n|, Y = Y_|n|. Rows: Neumann end, trace match
/// v1 = v2, trace match v2 = v3, flux balance.
struct DispersionMatrix {
  int n = 0;
  double lambda = 0.0;
  std::array<std::array<double, 4>, 4> entries{};
  /// Natural magnitude of each row: the Bessel modulus sqrt(J^2 + Y^2) (or
  /// of the derivatives) at the row's argument, times the largest thickness
  /// for the balance row. Never zero, unlike the row max-norm, which
  /// vanishes in the trace row whenever J_n(s r) = 0.
  std::array<double, 4> row_scale{1.0, 1.0, 1.0, 1.0};

  double determinant() const;
  /// |det| divided by the product of row scales.
  double scaled_determinant() const;
};

DispersionMatrix build_matrix(int n, double lambda, const AnnulusStackConfig& config);

/// Sign-change roots of lambda -> det M(n, lambda) on (0, lambda_max],
/// scanned in s = sqrt(lambda) with step pi / (8 R) and refined by bisection
/// to 1e-11 relative in lambda.
std::vector<double> scan_roots(int n, double lambda_max, const AnnulusStackConfig& config);

/// Orthonormal basis of the numerical nullspace of M with rows divided by
/// their row_scale.
/// Throws EmptyNullspace when no singular value falls below the threshold.
std::vector<std::array<double, 4>> nullspace_coeffs(const DispersionMatrix& m, double rel_threshold = 1e-8);

/// Which sheets a mode lives on, and how its profile is built.
enum class ModeKind {
  Constant,      ///< lambda = 0, n = 0 Neumann mode (1, 1, 1)
  Coupled,       ///< nullspace vector of the dispersion matrix
  DiskDirichlet, ///< c2 or c3 nonzero only: J_n on one disk, zero elsewhere
  AnnulusDirichlet
};

struct EigenMode {
  int n = 0;
  int m = 0;
  int ell = 1;
  double lambda = 0.0;
  ModeKind kind = ModeKind::Coupled;
  std::array<double, 4> c{};
  BranchedRadialFunction profile;
  int ang_mult = 1;
  double residual_compat = 0.0;
  double residual_balance = 0.0;
};

/// Samples, normalises (weighted_inner_product = 1) and checks a mode.
/// Throws ResidualTooLarge when the interface residuals exceed 1e-6.
EigenMode assemble_mode(int n, int m, int ell, double lambda, const std::array<double, 4>& c,
                        const AnnulusStackConfig& config, const GridPtr& grid);

/// The lambda = 0 Neumann mode.
EigenMode constant_mode(const AnnulusStackConfig& config, const GridPtr& grid);

enum class SpectrumSource { Analytic, Oracle };

struct Spectrum {
  BoundaryCondition bc = BoundaryCondition::Neumann;
  AnnulusStackConfig config;
  int n_max = 0;
  int m_max = 0;
  SpectrumSource source = SpectrumSource::Analytic;
  std::vector<EigenMode> modes;  // ascending in lambda, ties by n then m, ell

  /// Pairs of (index, index) whose eigenvalues coincide within 1e-9 relative
  /// across different n; reported, never merged.
  std::vector<std::pair<std::size_t, std::size_t>> coincidences() const;
};

struct SpectrumOptions {
  int n_max = 8;
  int m_max = 16;
  /// Upper bound of the eigenvalue search; by default grown until m_max roots
  /// are found for every n.
  std::optional<double> lambda_max;
  /// Cross-check root counts against the finite-element oracle.
  bool oracle_check = true;
  int oracle_mesh = 2048;
};

/// Coupled (Neumann) spectrum for n = 0..n_max.
Spectrum neumann_spectrum(const AnnulusStackConfig& config, const SpectrumOptions& options);

/// Union of the two disk and the annulus Dirichlet spectra.
Spectrum dirichlet_spectrum(const AnnulusStackConfig& config, const SpectrumOptions& options);

/// Dispatches on config.bc.
Spectrum compute_spectrum(const AnnulusStackConfig& config, const SpectrumOptions& options);

/// Positive roots of J_n(s r) Y_n(s R) - J_n(s R) Y_n(s r), as lambda = s^2.
std::vector<double> annulus_dirichlet_roots(int n, double lambda_max, const AnnulusStackConfig& config);

/// Checks the dispersion roots of one angular sector against oracle counts at
/// midpoints between consecutive roots. Missing roots are searched by local
/// |det| minimisation; if still unresolved, throws SuspectedEvenRoot.
/// Returns the (possibly augmented) root list.
std::vector<double> reconcile_with_oracle(int n, std::vector<double> roots, double lambda_max,
                                          const AnnulusStackConfig& config, int oracle_mesh);

/// CSV with header bc,n,m,ell,lambda,ang_mult,residual_compat,residual_balance.
std::string spectrum_csv(const Spectrum& spectrum);

}  // namespace thinlimit
