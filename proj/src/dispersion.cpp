#include "thinlimit/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "thinlimit/bessel.hpp"
#include "thinlimit/errors.hpp"
#include "thinlimit/radial_oracle.hpp"

namespace thinlimit {

namespace {

constexpr double kRootRelTol = 1e-11;
constexpr double kModeResidualTol = 1e-6;

using Mat4 = std::array<std::array<double, 4>, 4>;

long double det3(const Mat4& a, int skip_col) {
  int c[3];
  for (int j = 0, k = 0; j < 4; ++j) {
    if (j != skip_col) c[k++] = j;
  }
  auto at = [&](int i, int j) { return static_cast<long double>(a[static_cast<std::size_t>(i)][static_cast<std::size_t>(c[j])]); };
  return at(1, 0) * (at(2, 1) * at(3, 2) - at(2, 2) * at(3, 1)) - at(1, 1) * (at(2, 0) * at(3, 2) - at(2, 2) * at(3, 0)) +
         at(1, 2) * (at(2, 0) * at(3, 1) - at(2, 1) * at(3, 0));
}

/// Sign changes of f on [s_lo, s_hi] sampled with `step`, bisected in s to
/// relative width `rel`. Returned in s.
std::vector<double> sign_change_roots(const std::function<double(double)>& f, double s_lo, double s_hi, double step,
                                      double rel) {
  std::vector<double> roots;
  double a = s_lo;
  double fa = f(a);
  while (a < s_hi) {
    const double b = std::min(a + step, s_hi);
    const double fb = f(b);
    if (fb == 0.0) {
      roots.push_back(b);
    } else if (fa != 0.0 && (fa > 0.0) != (fb > 0.0)) {
      double lo = a, hi = b;
      const bool rising = fb > 0.0;
      while (hi - lo > rel * hi) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm > 0.0) == rising) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

double scan_step(const AnnulusStackConfig& config) { return std::numbers::pi / (8.0 * config.R); }

// Radial profile for coefficients c at s = sqrt(lambda), not normalised.
BranchedRadialFunction synthesize(int n, double s, const std::array<double, 4>& c, const GridPtr& grid) {
  return BranchedRadialFunction::sample(grid, [&](int sheet, double rho) {
    if (sheet == kAnnulus) {
      const auto e = bessel_jy(n, s * rho);
      return c[0] * e.j + c[3] * e.y;
    }
    const double j = bessel_j(n, s * rho);
    return (sheet == kUpperDisk ? c[1] : c[2]) * j;
  });
}

// Orthonormalises the coefficient vectors of one eigenvalue in the weighted
// inner product of their synthesized profiles.
std::vector<std::array<double, 4>> orthonormalize(int n, double s, std::vector<std::array<double, 4>> cs,
                                                  const GridPtr& grid) {
  std::vector<std::array<double, 4>> out;
  std::vector<BranchedRadialFunction> done;
  for (auto c : cs) {
    auto v = synthesize(n, s, c, grid);
    for (std::size_t i = 0; i < done.size(); ++i) {
      const double proj = weighted_inner_product(done[i], v);
      for (std::size_t q = 0; q < 4; ++q) c[q] -= proj * out[i][q];
      v = synthesize(n, s, c, grid);
    }
    const double norm = std::sqrt(weighted_inner_product(v, v));
    if (norm == 0.0) continue;
    for (double& x : c) x /= norm;
    out.push_back(c);
    done.push_back(v.scaled(1.0 / norm));
  }
  return out;
}

EigenMode dirichlet_mode(int n, int m, int ell, double lambda, ModeKind kind, std::array<double, 4> c,
                         const GridPtr& grid) {
  const double s = std::sqrt(lambda);
  auto profile = synthesize(n, s, c, grid);
  const double norm = std::sqrt(weighted_inner_product(profile, profile));
  for (double& x : c) x /= norm;
  profile = profile.scaled(1.0 / norm);
  const double trace = std::max({std::abs(profile.values(kAnnulus).front()), std::abs(profile.values(kAnnulus).back()),
                                 std::abs(profile.interface_value(kUpperDisk)),
                                 std::abs(profile.interface_value(kLowerDisk))});
  if (trace > kModeResidualTol) {
    throw ResidualTooLarge("Dirichlet mode n=" + std::to_string(n) + " m=" + std::to_string(m) +
                           " violates its boundary condition by " + std::to_string(trace));
  }
  EigenMode mode{n, m, ell, lambda, kind, c, std::move(profile), n == 0 ? 1 : 2, 0.0, trace};
  mode.residual_compat = compatibility_residual(mode.profile);
  return mode;
}

double initial_lambda_guess(int n, int m_max, const AnnulusStackConfig& config) {
  const double s = (m_max + 0.5 * n + 2.0) * std::numbers::pi / (config.R + config.r);
  return s * s;
}

void sort_modes(std::vector<EigenMode>& modes) {
  std::stable_sort(modes.begin(), modes.end(), [](const EigenMode& a, const EigenMode& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    if (a.n != b.n) return a.n < b.n;
    if (a.m != b.m) return a.m < b.m;
    return a.ell < b.ell;
  });
}

// Oracle count, nudging the threshold off any eigenvalue it lands on.
int robust_count(const CoupledRadialAssembly& assembly, double t) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      return count_below(assembly, t);
    } catch (const ThresholdOnEigenvalue&) {
      t *= 1.0 + 1e-9 * (attempt + 1);
    }
  }
  return count_below(assembly, t);
}

// Checkpoints strictly between consecutive values where the oracle count is
// unambiguous, each paired with the number of values below it.
std::vector<std::pair<double, int>> checkpoints(const std::vector<double>& sorted, double lambda_max) {
  std::vector<std::pair<double, int>> out;
  if (sorted.empty()) {
    out.emplace_back(lambda_max, 0);
    return out;
  }
  out.emplace_back(0.5 * sorted.front(), 0);
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i + 1] - sorted[i] > 1e-5 * sorted[i + 1]) {
      out.emplace_back(0.5 * (sorted[i] + sorted[i + 1]), static_cast<int>(i + 1));
    }
  }
  if (lambda_max - sorted.back() > 1e-4 * lambda_max) out.emplace_back(lambda_max, static_cast<int>(sorted.size()));
  return out;
}

}  // namespace

double DispersionMatrix::determinant() const {
  long double d = 0.0L;
  for (int j = 0; j < 4; ++j) {
    const long double a0j = entries[0][static_cast<std::size_t>(j)];
    if (a0j == 0.0L) continue;
    d += ((j % 2 == 0) ? 1.0L : -1.0L) * a0j * det3(entries, j);
  }
  return static_cast<double>(d);
}

double DispersionMatrix::scaled_determinant() const {
  double scale = 1.0;
  for (double v : row_scale) scale *= v;
  return std::abs(determinant()) / scale;
}

DispersionMatrix build_matrix(int n, double lambda, const AnnulusStackConfig& config) {
  if (!(lambda > 0.0)) throw DomainError("build_matrix: lambda must be positive");
  const int order = std::abs(n);
  const double s = std::sqrt(lambda);
  const auto outer = bessel_jy(order, s * config.R);
  const auto inner = bessel_jy(order, s * config.r);
  const auto& h = config.h;
  DispersionMatrix m;
  m.n = n;
  m.lambda = lambda;
  m.entries = {{{outer.jp, 0.0, 0.0, outer.yp},
                {inner.j, -inner.j, 0.0, inner.y},
                {0.0, inner.j, -inner.j, 0.0},
                {h[0] * inner.jp, -h[1] * inner.jp, -h[2] * inner.jp, h[0] * inner.yp}}};
  const double h_max = std::max({h[0], h[1], h[2]});
  m.row_scale = {std::hypot(outer.jp, outer.yp), std::hypot(inner.j, inner.y), std::hypot(inner.j, inner.y),
                 h_max * std::hypot(inner.jp, inner.yp)};
  return m;
}

std::vector<double> scan_roots(int n, double lambda_max, const AnnulusStackConfig& config) {
  if (!(lambda_max > 0.0)) throw DomainError("scan_roots: lambda_max must be positive");
  const double step = scan_step(config);
  const double s_max = std::sqrt(lambda_max);
  auto det = [&](double s) { return build_matrix(n, s * s, config).determinant(); };
  auto roots = sign_change_roots(det, 1e-3 * step, s_max, step, 0.5 * kRootRelTol);
  for (double& s : roots) s = s * s;
  return roots;
}

std::vector<std::array<double, 4>> nullspace_coeffs(const DispersionMatrix& m, double rel_threshold) {
  Eigen::Matrix4d a;
  for (int i = 0; i < 4; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    for (int j = 0; j < 4; ++j) a(i, j) = m.entries[iu][static_cast<std::size_t>(j)] / m.row_scale[iu];
  }
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  std::vector<std::array<double, 4>> out;
  for (int k = 3; k >= 0; --k) {
    if (sv[k] >= rel_threshold * sv[0]) break;
    Eigen::Vector4d v = svd.matrixV().col(k);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v[big] < 0.0) v = -v;
    out.push_back({v[0], v[1], v[2], v[3]});
  }
  if (out.empty()) {
    throw EmptyNullspace("nullspace_coeffs: no singular value below threshold at lambda=" + std::to_string(m.lambda) +
                         " (smallest ratio " + std::to_string(sv[3] / sv[0]) + ")");
  }
  return out;
}

EigenMode assemble_mode(int n, int m, int ell, double lambda, const std::array<double, 4>& c,
                        const AnnulusStackConfig& config, const GridPtr& grid) {
  const int order = std::abs(n);
  const double s = std::sqrt(lambda);
  auto profile = synthesize(order, s, c, grid);
  const double norm = std::sqrt(weighted_inner_product(profile, profile));
  if (!(norm > 0.0)) throw ResidualTooLarge("assemble_mode: zero profile");
  profile = profile.scaled(1.0 / norm);
  std::array<double, 4> cn = c;
  for (double& x : cn) x /= norm;

  const auto inner = bessel_jy(order, s * config.r);
  const auto outer = bessel_jy(order, s * config.R);
  const auto& h = config.h;
  const double balance =
      s * std::abs(h[0] * (cn[0] * inner.jp + cn[3] * inner.yp) - h[1] * cn[1] * inner.jp - h[2] * cn[2] * inner.jp);
  const double neumann_end = s * std::abs(cn[0] * outer.jp + cn[3] * outer.yp);
  const double compat = compatibility_residual(profile);
  if (compat > kModeResidualTol || balance > kModeResidualTol * std::max(1.0, s) ||
      neumann_end > kModeResidualTol * std::max(1.0, s)) {
    throw ResidualTooLarge("assemble_mode: n=" + std::to_string(n) + " lambda=" + std::to_string(lambda) +
                           " residuals compat=" + std::to_string(compat) + " balance=" + std::to_string(balance) +
                           " end=" + std::to_string(neumann_end));
  }
  return EigenMode{n, m, ell, lambda, ModeKind::Coupled, cn, std::move(profile), order == 0 ? 1 : 2, compat, balance};
}

EigenMode constant_mode(const AnnulusStackConfig& config, const GridPtr& grid) {
  auto ones = BranchedRadialFunction::sample(grid, [](int, double) { return 1.0; });
  const double norm = std::sqrt(weighted_inner_product(ones, ones));
  auto profile = ones.scaled(1.0 / norm);
  const double v = 1.0 / norm;
  (void)config;
  return EigenMode{0, 0, 1, 0.0, ModeKind::Constant, {v, v, v, 0.0}, std::move(profile), 1, 0.0, 0.0};
}

std::vector<std::pair<std::size_t, std::size_t>> Spectrum::coincidences() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    for (std::size_t j = i + 1; j < modes.size(); ++j) {
      if (modes[j].lambda - modes[i].lambda > 1e-9 * std::max(1.0, modes[j].lambda)) break;
      if (modes[i].n != modes[j].n) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<double> reconcile_with_oracle(int n, std::vector<double> roots, double lambda_max,
                                          const AnnulusStackConfig& config, int oracle_mesh) {
  AnnulusStackConfig coupled = config;
  coupled.bc = BoundaryCondition::Neumann;
  const auto assembly = assemble(n, coupled, MeshSpec{oracle_mesh, oracle_mesh});
  const int offset = n == 0 ? 1 : 0;

  auto find_mismatch = [&](const std::vector<double>& rs) -> std::optional<std::pair<double, double>> {
    double prev = 0.0;
    for (const auto& [t, expected] : checkpoints(rs, lambda_max)) {
      const int got = robust_count(assembly, t) - offset;
      if (got > expected) return std::pair{prev, t};
      if (got < expected) {
        throw SolverError("dispersion sector n=" + std::to_string(n) + ": spurious root below " + std::to_string(t) +
                          " (oracle " + std::to_string(got) + ", dispersion " + std::to_string(expected) + ")");
      }
      prev = t;
    }
    return std::nullopt;
  };

  auto det = [&](double s) { return build_matrix(n, s * s, config).determinant(); };
  for (int attempt = 0; attempt < 8; ++attempt) {
    const auto gap = find_mismatch(roots);
    if (!gap) return roots;
    const auto [lo, hi] = *gap;
    // Close pairs hide inside one coarse step; rescan the gap more finely.
    const auto inside = [&](double x) { return x > lo && x < hi; };
    const auto known = std::count_if(roots.begin(), roots.end(), inside);
    bool refined = false;
    double step = scan_step(config) / 16.0;
    for (int level = 0; level < 8 && step > 1e-10 * std::sqrt(hi); ++level, step /= 16.0) {
      auto fine = sign_change_roots(det, std::sqrt(lo), std::sqrt(hi), step, 0.5 * kRootRelTol);
      if (static_cast<std::ptrdiff_t>(fine.size()) <= known) continue;
      std::erase_if(roots, inside);
      for (double x : fine) roots.push_back(x * x);
      std::sort(roots.begin(), roots.end());
      refined = true;
      break;
    }
    if (refined) continue;
    // Even-order zero: look for a local minimum of the scaled determinant.
    const int samples = 2000;
    auto g = [&](double lam) { return build_matrix(n, lam, config).scaled_determinant(); };
    double best_lam = 0.0, best = std::numeric_limits<double>::infinity();
    std::vector<double> vals(samples + 1);
    for (int i = 0; i <= samples; ++i) vals[static_cast<std::size_t>(i)] = g(lo + (hi - lo) * (i + 0.5) / (samples + 1));
    for (int i = 1; i < samples; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      if (vals[iu] <= vals[iu - 1] && vals[iu] <= vals[iu + 1] && vals[iu] < best) {
        best = vals[iu];
        best_lam = lo + (hi - lo) * (i + 0.5) / (samples + 1);
      }
    }
    if (!(best < 1e-6)) break;
    // Golden-section refinement of the minimum.
    const double dl = (hi - lo) / (samples + 1);
    double a = best_lam - dl, b = best_lam + dl;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200 && b - a > kRootRelTol * b; ++it) {
      const double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
      if (g(x1) < g(x2)) {
        b = x2;
      } else {
        a = x1;
      }
    }
    const double root = 0.5 * (a + b);
    if (!(g(root) < 1e-9)) break;
    // An even zero carries two eigenvalues.
    roots.push_back(root);
    roots.push_back(root);
    std::sort(roots.begin(), roots.end());
  }
  throw SuspectedEvenRoot("dispersion sector n=" + std::to_string(n) +
                          ": oracle counts more eigenvalues than sign changes and no even zero was resolved");
}

Spectrum neumann_spectrum(const AnnulusStackConfig& config, const SpectrumOptions& options) {
  config.validate();
  const auto grid = BranchedGrid::make(config);
  Spectrum out;
  out.bc = BoundaryCondition::Neumann;
  out.config = config;
  out.config.bc = BoundaryCondition::Neumann;
  out.n_max = options.n_max;
  out.m_max = options.m_max;
  out.modes.push_back(constant_mode(config, grid));

  for (int n = 0; n <= options.n_max; ++n) {
    double lambda_max = options.lambda_max.value_or(initial_lambda_guess(n, options.m_max, config));
    std::vector<double> roots = scan_roots(n, lambda_max, config);
    while (!options.lambda_max && static_cast<int>(roots.size()) < options.m_max) {
      lambda_max *= 2.0;
      roots = scan_roots(n, lambda_max, config);
    }
    if (options.oracle_check) roots = reconcile_with_oracle(n, roots, lambda_max, config, options.oracle_mesh);
    // Repeated entries (even zeros) collapse to one eigenvalue with p = 2.
    std::vector<double> distinct;
    for (double root : roots) {
      if (distinct.empty() || root - distinct.back() > 1e-12 * root) distinct.push_back(root);
    }
    if (static_cast<int>(distinct.size()) > options.m_max) distinct.resize(static_cast<std::size_t>(options.m_max));

    int m = 0;
    for (double lambda : distinct) {
      ++m;
      const auto mat = build_matrix(n, lambda, config);
      auto coeffs = orthonormalize(n, std::sqrt(lambda), nullspace_coeffs(mat), grid);
      int ell = 0;
      for (const auto& c : coeffs) out.modes.push_back(assemble_mode(n, m, ++ell, lambda, c, config, grid));
    }
  }
  sort_modes(out.modes);
  return out;
}

std::vector<double> annulus_dirichlet_roots(int n, double lambda_max, const AnnulusStackConfig& config) {
  const double step = scan_step(config);
  auto cross = [&](double s) {
    const auto a = bessel_jy(n, s * config.r);
    const auto b = bessel_jy(n, s * config.R);
    return a.j * b.y - b.j * a.y;
  };
  auto roots = sign_change_roots(cross, 1e-3 * step, std::sqrt(lambda_max), step, 0.5 * kRootRelTol);
  for (double& s : roots) s = s * s;
  return roots;
}

Spectrum dirichlet_spectrum(const AnnulusStackConfig& config, const SpectrumOptions& options) {
  config.validate();
  if (config.bc != BoundaryCondition::DirichletLateral) {
    throw ConfigError("dirichlet_spectrum: config bc must be dirichlet_lateral");
  }
  const auto grid = BranchedGrid::make(config);
  Spectrum out;
  out.bc = BoundaryCondition::DirichletLateral;
  out.config = config;
  out.n_max = options.n_max;
  out.m_max = options.m_max;

  for (int n = 0; n <= options.n_max; ++n) {
    double lambda_max = options.lambda_max.value_or(initial_lambda_guess(n, options.m_max, config));
    std::vector<double> disk, annulus;
    while (true) {
      disk.clear();
      for (int k = 1;; ++k) {
        const double z = bessel_j_zero(n, k) / config.r;
        if (z * z > lambda_max) break;
        disk.push_back(z * z);
      }
      annulus = annulus_dirichlet_roots(n, lambda_max, config);
      if (options.lambda_max || static_cast<int>(disk.size() + annulus.size()) >= options.m_max) break;
      lambda_max *= 2.0;
    }

    if (options.oracle_check) {
      const auto assembly = assemble(n, config, MeshSpec{options.oracle_mesh, options.oracle_mesh});
      std::vector<double> all = annulus;
      for (double d : disk) all.insert(all.end(), {d, d});
      std::sort(all.begin(), all.end());
      for (const auto& [t, expected] : checkpoints(all, lambda_max)) {
        const int got = robust_count(assembly, t);
        if (got != expected) {
          throw SuspectedEvenRoot("Dirichlet sector n=" + std::to_string(n) + ": oracle counts " + std::to_string(got) +
                                  " eigenvalues below " + std::to_string(t) + ", enumeration gives " +
                                  std::to_string(expected));
        }
      }
    }

    std::vector<std::pair<double, bool>> merged;  // (lambda, is_disk)
    for (double d : disk) merged.emplace_back(d, true);
    for (double a : annulus) merged.emplace_back(a, false);
    std::stable_sort(merged.begin(), merged.end());
    if (static_cast<int>(merged.size()) > options.m_max) merged.resize(static_cast<std::size_t>(options.m_max));

    int m = 0;
    for (const auto& [lambda, is_disk] : merged) {
      ++m;
      if (is_disk) {
        out.modes.push_back(dirichlet_mode(n, m, 1, lambda, ModeKind::DiskDirichlet, {0, 1, 0, 0}, grid));
        out.modes.push_back(dirichlet_mode(n, m, 2, lambda, ModeKind::DiskDirichlet, {0, 0, 1, 0}, grid));
      } else {
        const double s = std::sqrt(lambda);
        const auto a = bessel_jy(n, s * config.r);
        const auto b = bessel_jy(n, s * config.R);
        const bool use_inner = std::hypot(a.j, a.y) >= std::hypot(b.j, b.y);
        const std::array<double, 4> c = use_inner ? std::array<double, 4>{a.y, 0, 0, -a.j}
                                                  : std::array<double, 4>{b.y, 0, 0, -b.j};
        out.modes.push_back(dirichlet_mode(n, m, 1, lambda, ModeKind::AnnulusDirichlet, c, grid));
      }
    }
  }
  sort_modes(out.modes);
  return out;
}

Spectrum compute_spectrum(const AnnulusStackConfig& config, const SpectrumOptions& options) {
  return config.bc == BoundaryCondition::Neumann ? neumann_spectrum(config, options)
                                                 : dirichlet_spectrum(config, options);
}

std::string spectrum_csv(const Spectrum& spectrum) {
  std::ostringstream out;
  out << "bc,n,m,ell,lambda,ang_mult,residual_compat,residual_balance\n";
  char buf[256];
  for (const auto& mode : spectrum.modes) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%.15g,%d,%.3e,%.3e\n", std::string(to_string(spectrum.bc)).c_str(),
                  mode.n, mode.m, mode.ell, mode.lambda, mode.ang_mult, mode.residual_compat, mode.residual_balance);
    out << buf;
  }
  return out.str();
}

}  // namespace thinlimit
