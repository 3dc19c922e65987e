#include "thinlimit/radial_oracle.hpp"

#include <algorithm>
#include <string>

#include "thinlimit/errors.hpp"

namespace thinlimit {

namespace {

using Triplet = Eigen::Triplet<double>;

bool eliminates_origin(int n, OriginTreatment origin) {
  switch (origin) {
    case OriginTreatment::Auto:
      return n != 0;
    case OriginTreatment::Eliminate:
      return true;
    case OriginTreatment::Free:
      if (n != 0) {
        throw AssemblyContractViolation("assemble: n=" + std::to_string(n) +
                                        " requires disk basis functions vanishing at rho = 0");
      }
      return false;
  }
  return n != 0;
}

SparseMatrix block(const SparseMatrix& A, int begin, int end) {
  return A.block(begin, begin, end - begin, end - begin);
}

}  // namespace

CoupledRadialAssembly assemble(int n, const AnnulusStackConfig& config, const MeshSpec& mesh) {
  if (n < 0) throw AssemblyContractViolation("assemble: angular index must be nonnegative");
  config.validate();
  if (mesh.elements1 < 2 || mesh.elements2 < 2) throw MeshError("assemble: need at least two elements per interval");
  const bool drop_origin = eliminates_origin(n, mesh.origin);
  const bool coupled = config.bc == BoundaryCondition::Neumann;

  CoupledRadialAssembly out;
  out.n = n;
  out.bc = config.bc;
  out.grid = BranchedGrid::from_nodes(config.r, config.R, config.h,
                                      {graded_nodes(config.r, config.R, mesh.elements1 + 1),
                                       graded_nodes(0.0, config.r, mesh.elements2 + 1),
                                       graded_nodes(0.0, config.r, mesh.elements2 + 1)});
  const auto& g = *out.grid;

  int next = 0;
  for (int j = 0; j < kSheets; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const std::size_t count = g.nodes[ju].size();
    auto& map = out.dof_map[ju];
    map.assign(count, -1);
    const int begin = next;
    for (std::size_t i = 0; i < count; ++i) {
      const bool at_interface = (j == kAnnulus) ? i == 0 : i + 1 == count;
      const bool at_outer = j == kAnnulus && i + 1 == count;
      const bool at_origin = j != kAnnulus && i == 0;
      if (at_interface) continue;  // shared or eliminated, handled below
      if (at_outer && !coupled) continue;
      if (at_origin && drop_origin) continue;
      map[i] = next++;
    }
    out.sheet_range[ju] = {begin, next};
  }
  if (coupled) {
    out.interface_dof = next++;
    out.dof_map[0].front() = out.interface_dof;
    out.dof_map[1].back() = out.interface_dof;
    out.dof_map[2].back() = out.interface_dof;
  }

  const double n2 = static_cast<double>(n) * n;
  std::vector<Triplet> kt, mt;
  kt.reserve(static_cast<std::size_t>(next) * 4);
  mt.reserve(static_cast<std::size_t>(next) * 4);
  for (int j = 0; j < kSheets; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const auto& x = g.nodes[ju];
    const auto& map = out.dof_map[ju];
    const double hj = g.h[ju];
    for (std::size_t e = 0; e + 1 < x.size(); ++e) {
      const double a = x[e], b = x[e + 1];
      const double grad = 0.5 * (a + b) / (b - a);
      const auto mass = detail::rho_mass_element(a, b);
      std::array<double, 3> inv{0.0, 0.0, 0.0};
      if (n != 0) inv = detail::inverse_rho_element(a, b);
      const std::array<int, 2> dof{map[e], map[e + 1]};
      // Local entries in (aa, ab, bb) order.
      const std::array<double, 3> kl{grad + n2 * inv[0], -grad + n2 * inv[1], grad + n2 * inv[2]};
      for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
          if (dof[static_cast<std::size_t>(p)] < 0 || dof[static_cast<std::size_t>(q)] < 0) continue;
          const auto slot = static_cast<std::size_t>(p + q);
          kt.emplace_back(dof[static_cast<std::size_t>(p)], dof[static_cast<std::size_t>(q)], hj * kl[slot]);
          mt.emplace_back(dof[static_cast<std::size_t>(p)], dof[static_cast<std::size_t>(q)], hj * mass[slot]);
        }
      }
    }
  }
  out.stiffness.resize(next, next);
  out.mass.resize(next, next);
  out.stiffness.setFromTriplets(kt.begin(), kt.end());
  out.mass.setFromTriplets(mt.begin(), mt.end());
  return out;
}

BranchedRadialFunction CoupledRadialAssembly::to_profile(const Eigen::VectorXd& x) const {
  std::array<std::vector<double>, 3> v;
  for (std::size_t j = 0; j < 3; ++j) {
    const auto& map = dof_map[j];
    v[j].resize(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) v[j][i] = map[i] < 0 ? 0.0 : x[map[i]];
  }
  return {grid, std::move(v)};
}

std::vector<RadialEigenpair> solve_eigs(const CoupledRadialAssembly& assembly, int k) {
  const int dofs = assembly.dofs();
  if (k < 1 || k > dofs) throw SolverError("solve_eigs: k=" + std::to_string(k) + " exceeds dof count");
  std::vector<std::pair<double, Eigen::VectorXd>> found;
  if (assembly.bc == BoundaryCondition::Neumann) {
    const double shift = assembly.n == 0 ? -1.0 : 0.0;
    const auto pairs = smallest_eigenpairs(assembly.stiffness, assembly.mass, k, shift);
    for (int i = 0; i < k; ++i) found.emplace_back(pairs.values[i], pairs.vectors.col(i));
  } else {
    // Block diagonal over the sheets; solving per block keeps the exactly
    // repeated disk eigenvalues from hiding inside one Krylov space.
    for (const auto& [begin, end] : assembly.sheet_range) {
      if (end == begin) continue;
      const int kb = std::min(k, end - begin);
      const auto pairs =
          smallest_eigenpairs(block(assembly.stiffness, begin, end), block(assembly.mass, begin, end), kb, 0.0);
      for (int i = 0; i < kb; ++i) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(dofs);
        x.segment(begin, end - begin) = pairs.vectors.col(i);
        found.emplace_back(pairs.values[i], std::move(x));
      }
    }
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    found.resize(static_cast<std::size_t>(k));
  }
  std::vector<RadialEigenpair> out;
  out.reserve(found.size());
  for (auto& [lambda, x] : found) {
    out.push_back(RadialEigenpair{lambda, assembly.to_profile(x), std::move(x)});
  }
  return out;
}

int count_below(const CoupledRadialAssembly& assembly, double threshold) {
  if (!(threshold > 0.0)) throw SolverError("count_below: threshold must be positive");
  auto negatives = [&](double t) {
    const SparseMatrix shifted = assembly.stiffness - t * assembly.mass;
    const auto in = sparse_inertia(shifted);
    return std::pair{in.negative, in.zero};
  };
  const auto lo = negatives(threshold * (1.0 - 1e-12));
  const auto hi = negatives(threshold * (1.0 + 1e-12));
  if (lo.first != hi.first || lo.second != 0 || hi.second != 0) {
    throw ThresholdOnEigenvalue("count_below: threshold " + std::to_string(threshold) +
                                " coincides with an eigenvalue; perturb it");
  }
  return lo.first;
}

std::vector<double> richardson_eigenvalues(int n, const AnnulusStackConfig& config, int elements, int k) {
  const auto fine = solve_eigs(assemble(n, config, MeshSpec{elements, elements}), k);
  const auto coarse = solve_eigs(assemble(n, config, MeshSpec{elements / 2, elements / 2}), k);
  std::vector<double> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (4.0 * fine[i].lambda - coarse[i].lambda) / 3.0;
  return out;
}

}  // namespace thinlimit
