#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "thinlimit/dispersion.hpp"
#include "thinlimit/errors.hpp"
#include "thinlimit/radial_oracle.hpp"
#include "thinlimit/sparse_eigs.hpp"

using namespace thinlimit;

namespace {

AnnulusStackConfig base(BoundaryCondition bc = BoundaryCondition::Neumann) {
  AnnulusStackConfig c;
  c.r = 1.0;
  c.R = 2.0;
  c.h = {1.0, 0.3, 0.3};
  c.bc = bc;
  return c;
}

const Spectrum& neumann() {
  static const Spectrum s = neumann_spectrum(base(), SpectrumOptions{3, 8});
  return s;
}

std::vector<double> sector(const Spectrum& s, int n) {
  std::vector<double> out;
  for (const auto& m : s.modes) {
    if (m.n == n && (out.empty() || m.lambda != out.back())) out.push_back(m.lambda);
  }
  return out;
}

}  // namespace

TEST(DispersionMatrix, TraceRowHasNoAnnulusColumns) {
  for (int n : {0, 1, 4}) {
    for (double lambda : {0.3, 7.0, 55.5}) {
      const auto m = build_matrix(n, lambda, base());
      EXPECT_EQ(m.entries[2][0], 0.0);
      EXPECT_EQ(m.entries[2][3], 0.0);
      for (double s : m.row_scale) EXPECT_GT(s, 0.0);
    }
  }
}

TEST(DispersionMatrix, DeterminantVanishesAtDiskBesselZeros) {
  // Expanding along the trace rows, det carries the factor J_n(s r).
  const auto c = base();
  for (int n : {0, 1, 2}) {
    for (int k : {1, 2, 3}) {
      const double s = oracle::bessel_zero(n, k) / c.r;
      const auto m = build_matrix(n, s * s, c);
      EXPECT_LT(m.scaled_determinant(), 1e-12) << n << "," << k;
    }
  }
}

TEST(DispersionMatrix, DeterminantContinuous) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.5, 80.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double lambda = u(rng);
    const int n = trial % 4;
    const double d0 = build_matrix(n, lambda, base()).determinant();
    double prev = std::numeric_limits<double>::infinity();
    for (double delta : {1e-2, 1e-4, 1e-6, 1e-8}) {
      const double diff = std::abs(build_matrix(n, lambda + delta, base()).determinant() - d0);
      EXPECT_LE(diff, prev);
      prev = diff;
    }
    EXPECT_LT(prev, 1e-5 * (std::abs(d0) + 1.0));
  }
}

TEST(ScanRoots, FirstRootPositiveAndMatchesOracle) {
  const auto c = base();
  for (int n : {0, 1, 2}) {
    const auto roots = scan_roots(n, 60.0, c);
    ASSERT_FALSE(roots.empty());
    EXPECT_GT(roots.front(), 0.0);
    const int offset = n == 0 ? 1 : 0;
    const auto fem = richardson_eigenvalues(n, c, 4096, 1 + offset);
    EXPECT_NEAR(roots.front(), fem[static_cast<std::size_t>(offset)], 1e-4 * roots.front()) << n;
  }
}

TEST(ScanRoots, NoSolutionAtZeroForNonzeroN) {
  const auto c = base();
  const auto roots = scan_roots(1, 40.0, c);
  EXPECT_GT(roots.front(), 0.5);
  const auto fem = solve_eigs(assemble(1, c, MeshSpec{512, 512}), 1);
  EXPECT_GT(fem[0].lambda, 0.5);
}

TEST(ScanRoots, RootsDriveDeterminantToZero) {
  const auto c = base();
  for (int n : {0, 1, 3}) {
    for (double root : scan_roots(n, 150.0, c)) {
      // Scale of det near the root: its size a quarter scan step away.
      const double s = std::sqrt(root), ds = std::numbers::pi / (32.0 * c.R);
      const double scale = std::max(std::abs(build_matrix(n, (s + ds) * (s + ds), c).determinant()),
                                    std::abs(build_matrix(n, (s - ds) * (s - ds), c).determinant()));
      EXPECT_LT(std::abs(build_matrix(n, root, c).determinant()), 1e-9 * scale) << n << " " << root;
    }
  }
}

TEST(Nullspace, DimensionBetweenOneAndFour) {
  const auto c = base();
  for (int n : {0, 1, 2}) {
    for (double root : scan_roots(n, 120.0, c)) {
      const auto basis = nullspace_coeffs(build_matrix(n, root, c));
      EXPECT_GE(basis.size(), 1u);
      EXPECT_LE(basis.size(), 4u);
      for (const auto& v : basis) {
        double norm = 0.0;
        for (double x : v) norm += x * x;
        EXPECT_NEAR(norm, 1.0, 1e-12);
      }
    }
  }
}

TEST(Nullspace, EmptyAwayFromRoots) {
  EXPECT_THROW(nullspace_coeffs(build_matrix(0, 3.0, base())), EmptyNullspace);
}

TEST(Spectrum, ConstantModeNormalisation) {
  const auto& s = neumann();
  ASSERT_FALSE(s.modes.empty());
  const auto& z = s.modes.front();
  EXPECT_EQ(z.lambda, 0.0);
  EXPECT_EQ(z.kind, ModeKind::Constant);
  // The radial profile times the angular factor 1/sqrt(2 pi) is the constant
  // (sum h_j |omega_j|)^{-1/2} of the full branched domain.
  const double expected = 1.0 / std::sqrt(base().weighted_area());
  for (int j = 0; j < kSheets; ++j) {
    for (double v : z.profile.values(j)) EXPECT_NEAR(v / std::sqrt(2.0 * std::numbers::pi), expected, 1e-12);
  }
  EXPECT_NEAR(weighted_inner_product(z.profile, z.profile), 1.0, 1e-12);
}

TEST(Spectrum, ModeInvariants) {
  const auto& s = neumann();
  std::set<std::tuple<int, int, int>> seen;
  double prev = -1.0;
  for (const auto& m : s.modes) {
    EXPECT_GE(m.lambda, prev);
    prev = m.lambda;
    EXPECT_TRUE(seen.insert({m.n, m.m, m.ell}).second) << m.n << "," << m.m << "," << m.ell;
    EXPECT_EQ(m.ang_mult, m.n == 0 ? 1 : 2);
    EXPECT_LE(m.ell, 4);
    EXPECT_NEAR(weighted_inner_product(m.profile, m.profile), 1.0, 1e-8);
    EXPECT_LT(compatibility_residual(m.profile), 1e-8);
    const double norm = m.profile.max_abs();
    EXPECT_LT(balance_residual(m.profile), 1e-6 * norm) << m.n << "," << m.m;
    EXPECT_LT(std::abs(m.profile.outer_derivative()), 1e-6 * norm * std::max(1.0, std::sqrt(m.lambda)));
  }
}

TEST(Spectrum, SameSectorModesOrthogonal) {
  const auto& s = neumann();
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    for (std::size_t j = i + 1; j < s.modes.size(); ++j) {
      if (s.modes[i].n != s.modes[j].n) continue;
      EXPECT_LT(std::abs(weighted_inner_product(s.modes[i].profile, s.modes[j].profile)), 1e-6);
    }
  }
}

TEST(Spectrum, OracleCompleteness) {
  const auto c = base();
  const Spectrum s = neumann_spectrum(c, SpectrumOptions{4, 12});
  for (int n = 0; n <= 4; ++n) {
    const auto lam = sector(s, n);
    double big = lam.back() / 2.0;
    // Keep the threshold away from any eigenvalue so mesh error cannot flip a count.
    for (double l : lam) {
      if (std::abs(l - big) < 1e-3 * big) big *= 1.01;
    }
    int expected = 0;
    for (const auto& m : s.modes) expected += m.n == n && m.lambda < big;
    const auto assembly = assemble(n, c, MeshSpec{4096, 4096});
    EXPECT_EQ(count_below(assembly, big), expected) << n;
  }
}

TEST(Spectrum, ThicknessScalingInvariance) {
  auto c = base();
  c.h = {3.7, 1.11, 1.11};
  const Spectrum scaled = neumann_spectrum(c, SpectrumOptions{3, 8});
  const auto& s = neumann();
  ASSERT_EQ(scaled.modes.size(), s.modes.size());
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    EXPECT_NEAR(scaled.modes[i].lambda, s.modes[i].lambda, 1e-10 * std::max(1.0, s.modes[i].lambda));
  }
}

TEST(Spectrum, ReconcileRestoresDroppedRoot) {
  const auto c = base();
  auto roots = scan_roots(2, 80.0, c);
  ASSERT_GE(roots.size(), 3u);
  const double dropped = roots[1];
  roots.erase(roots.begin() + 1);
  const auto fixed = reconcile_with_oracle(2, roots, 80.0, c, 2048);
  ASSERT_EQ(fixed.size(), roots.size() + 1);
  EXPECT_NEAR(fixed[1], dropped, 1e-9 * dropped);
}

TEST(Spectrum, CoincidencesAcrossSectors) {
  Spectrum s;
  const auto grid = BranchedGrid::make(base(), GridSizes{9, 9});
  for (auto [n, lambda] : {std::pair{0, 1.0}, {1, 1.0 + 1e-12}, {1, 2.0}, {2, 3.0}}) {
    EigenMode m = constant_mode(base(), grid);
    m.n = n;
    m.lambda = lambda;
    s.modes.push_back(m);
  }
  const auto pairs = s.coincidences();
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0], (std::pair<std::size_t, std::size_t>{0, 1}));
}

TEST(Dirichlet, LowestDiskValueTwice) {
  const auto s = dirichlet_spectrum(base(BoundaryCondition::DirichletLateral), SpectrumOptions{2, 6});
  ASSERT_GE(s.modes.size(), 2u);
  EXPECT_NEAR(s.modes[0].lambda, 5.783185962946785, 1e-10 * 5.78);
  EXPECT_EQ(s.modes[1].lambda, s.modes[0].lambda);
  const double j01 = oracle::bessel_zero(0, 1);
  EXPECT_NEAR(s.modes[0].lambda, j01 * j01, 1e-10 * j01 * j01);
}

TEST(Dirichlet, DiskEntriesMatchBesselZerosWithMultiplicityTwo) {
  const auto c = base(BoundaryCondition::DirichletLateral);
  const auto s = dirichlet_spectrum(c, SpectrumOptions{3, 8});
  int disks = 0;
  for (const auto& m : s.modes) {
    if (m.kind != ModeKind::DiskDirichlet) continue;
    ++disks;
    bool matched = false;
    for (int k = 1; k <= 10 && !matched; ++k) {
      const double z = oracle::bessel_zero(m.n, k) / c.r;
      matched = std::abs(m.lambda - z * z) <= 1e-10 * z * z;
    }
    EXPECT_TRUE(matched) << m.n << " " << m.lambda;
    int copies = 0;
    for (const auto& o : s.modes) copies += o.n == m.n && o.lambda == m.lambda && o.kind == ModeKind::DiskDirichlet;
    EXPECT_GE(copies, 2);
  }
  EXPECT_GT(disks, 0);
}

TEST(Dirichlet, AnnulusMatchesSingleIntervalOracle) {
  const auto c = base(BoundaryCondition::DirichletLateral);
  const double analytic = annulus_dirichlet_roots(0, 30.0, c).front();
  auto annulus_block = [&](int elements) {
    const auto a = assemble(0, c, MeshSpec{elements, elements});
    const auto [b, e] = a.sheet_range[0];
    const SparseMatrix K = a.stiffness.block(b, b, e - b, e - b);
    const SparseMatrix M = a.mass.block(b, b, e - b, e - b);
    return smallest_eigenpairs(K, M, 1, 0.0).values[0];
  };
  const double fem = (4.0 * annulus_block(4096) - annulus_block(2048)) / 3.0;
  EXPECT_NEAR(analytic, fem, 1e-5 * analytic);
}

TEST(Dirichlet, DispatchAndWrongBc) {
  EXPECT_THROW(dirichlet_spectrum(base(), SpectrumOptions{1, 2}), ConfigError);
  const auto s = compute_spectrum(base(BoundaryCondition::DirichletLateral), SpectrumOptions{1, 3});
  EXPECT_EQ(s.bc, BoundaryCondition::DirichletLateral);
}

TEST(SpectrumCsv, HeaderAndPrecision) {
  const auto csv = spectrum_csv(neumann());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bc,n,m,ell,lambda,ang_mult,residual_compat,residual_balance");
  EXPECT_EQ(csv.find("neumann,0,0,1,0,1,"), csv.find('\n') + 1);
  const auto& m = neumann().modes[1];
  char buf[64];
  std::snprintf(buf, sizeof buf, ",%.15g,", m.lambda);
  EXPECT_NE(csv.find(buf), std::string::npos);
}
