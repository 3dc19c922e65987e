#include "thinlimit/epsilon_sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "thinlimit/dispersion.hpp"
#include "thinlimit/errors.hpp"

namespace thinlimit {

namespace {

using Triplet = Eigen::Triplet<double>;

// Steps growing geometrically from `fine` to at most `coarse`, rescaled to
// cover `length` exactly. Returned nearest-first.
std::vector<double> graded_steps(double length, double fine, double coarse, double ratio) {
  std::vector<double> steps;
  double sum = 0.0, h = std::min(fine, coarse);
  while (sum < length) {
    steps.push_back(h);
    sum += h;
    h = std::min(coarse, h * ratio);
  }
  // Fold a sliver of a last step into its neighbour.
  if (steps.size() > 1 && sum - length > 0.5 * steps.back()) {
    sum -= steps.back();
    steps.pop_back();
  }
  for (double& s : steps) s *= length / sum;
  return steps;
}

std::vector<double> uniform_lines(double a, double b, int cells) {
  std::vector<double> out(static_cast<std::size_t>(cells) + 1);
  for (int i = 0; i <= cells; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / cells;
  out.back() = b;
  return out;
}

bool contains(const std::vector<double>& lines, double v) {
  return std::any_of(lines.begin(), lines.end(), [&](double x) { return x == v; });
}

}  // namespace

MeridianMeshOptions MeridianMeshOptions::refined(int factor) const {
  MeridianMeshOptions out = *this;
  out.radial_density *= factor;
  out.layer_cells *= factor;
  return out;
}

MeridianMesh MeridianMesh::build(const AnnulusStackConfig& config, double epsilon, const MeridianMeshOptions& options) {
  config.validate();
  if (options.radial_density < 1 || options.layer_cells < 1 || !(options.grading >= 1.0)) {
    throw MeshError("meridian mesh: resolution options must be positive and grading >= 1");
  }
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw MeshError("meridian mesh: epsilon must lie in (0, 1]");
  const auto& h = config.h;
  const double h_min = std::min({h[0] - h[1] - h[2], h[1], h[2]});
  const double fine = epsilon * h_min / options.layer_cells;
  const double coarse = 1.0 / options.radial_density;

  // Inner segment built from rho = r downwards, then reversed.
  std::vector<double> rho{config.r};
  for (double s : graded_steps(config.r, fine, coarse, options.grading)) rho.push_back(rho.back() - s);
  rho.back() = 0.0;
  std::reverse(rho.begin(), rho.end());
  for (double s : graded_steps(config.R - config.r, fine, coarse, options.grading)) rho.push_back(rho.back() + s);
  rho.back() = config.R;

  const double y_lo = h[2], y_hi = h[0] - h[1];
  auto layer = [&](double a, double b) {
    return std::max(1, static_cast<int>(std::ceil((b - a) / h_min * options.layer_cells - 1e-9)));
  };
  std::vector<double> y = uniform_lines(0.0, y_lo, layer(0.0, y_lo));
  for (double v : uniform_lines(y_lo, y_hi, layer(y_lo, y_hi))) {
    if (v > y.back()) y.push_back(v);
  }
  y.back() = y_hi;
  for (double v : uniform_lines(y_hi, h[0], layer(y_hi, h[0]))) {
    if (v > y.back()) y.push_back(v);
  }
  y.back() = h[0];
  return from_lines(config, epsilon, std::move(rho), std::move(y), options.notch);
}

MeridianMesh MeridianMesh::from_lines(const AnnulusStackConfig& config, double epsilon, std::vector<double> rho,
                                      std::vector<double> y, bool notch) {
  config.validate();
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw MeshError("meridian mesh: epsilon must lie in (0, 1]");
  auto check = [](const std::vector<double>& v, const char* name) {
    if (v.size() < 2) throw MeshError(std::string("meridian mesh: too few ") + name + " lines");
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (!(v[i] > v[i - 1])) throw MeshError(std::string("meridian mesh: ") + name + " lines not increasing");
    }
  };
  check(rho, "rho");
  check(y, "y");
  const double y_lo = config.h[2], y_hi = config.h[0] - config.h[1];
  if (rho.front() != 0.0 || rho.back() != config.R) throw MeshError("meridian mesh: rho lines must span [0, R]");
  if (y.front() != 0.0 || y.back() != config.h[0]) throw MeshError("meridian mesh: y lines must span [0, h1]");
  if (notch && (!contains(rho, config.r) || !contains(y, y_lo) || !contains(y, y_hi))) {
    throw MeshError("meridian mesh: notch edges rho = r, y = h3, y = h1 - h2 must be mesh lines");
  }

  MeridianMesh mesh;
  mesh.epsilon = epsilon;
  mesh.notch = notch;
  mesh.r = config.r;
  mesh.y_lo = y_lo;
  mesh.y_hi = y_hi;
  mesh.rho = std::move(rho);
  mesh.y = std::move(y);
  const std::size_t nr = mesh.rho.size(), ny = mesh.y.size();
  std::vector<char> used(nr * ny, 0);
  for (std::size_t i = 0; i + 1 < nr; ++i) {
    for (std::size_t j = 0; j + 1 < ny; ++j) {
      const double rc = 0.5 * (mesh.rho[i] + mesh.rho[i + 1]);
      const double yc = 0.5 * (mesh.y[j] + mesh.y[j + 1]);
      if (notch && rc < config.r && yc > y_lo && yc < y_hi) continue;
      mesh.cells.emplace_back(static_cast<int>(i), static_cast<int>(j));
      used[i * ny + j] = used[(i + 1) * ny + j] = used[i * ny + j + 1] = used[(i + 1) * ny + j + 1] = 1;
    }
  }
  mesh.node_index.assign(nr * ny, -1);
  for (std::size_t q = 0; q < used.size(); ++q) {
    if (used[q]) mesh.node_index[q] = mesh.nodes++;
  }
  return mesh;
}

SqueezedSystem assemble_squeezed(const MeridianMesh& mesh, const AnnulusStackConfig& config) {
  if (mesh.cells.empty() || mesh.node_index.size() != mesh.rho.size() * mesh.y.size()) {
    throw MeshError("assemble_squeezed: empty or inconsistent mesh");
  }
  if (mesh.rho.back() != config.R || mesh.y.back() != config.h[0]) {
    throw MeshError("assemble_squeezed: mesh does not match the configuration");
  }
  const bool dirichlet = config.bc == BoundaryCondition::DirichletLateral;
  const std::size_t nr = mesh.rho.size(), ny = mesh.y.size();

  SqueezedSystem sys;
  sys.dof_of_node.assign(static_cast<std::size_t>(mesh.nodes), -1);
  int dofs = 0;
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const int node = mesh.node(i, j);
      if (node < 0) continue;
      if (dirichlet) {
        const bool outer = i + 1 == nr;
        const bool notch_wall =
            mesh.notch && mesh.rho[i] == mesh.r && mesh.y[j] >= mesh.y_lo && mesh.y[j] <= mesh.y_hi;
        if (outer || notch_wall) continue;
      }
      sys.dof_of_node[static_cast<std::size_t>(node)] = dofs++;
    }
  }

  const double coef_y = 1.0 / (mesh.epsilon * mesh.epsilon);
  std::vector<Triplet> kt, mt;
  kt.reserve(mesh.cells.size() * 16);
  mt.reserve(mesh.cells.size() * 16);
  for (const auto& [ci, cj] : mesh.cells) {
    const auto i = static_cast<std::size_t>(ci), j = static_cast<std::size_t>(cj);
    const double a = mesh.rho[i], b = mesh.rho[i + 1];
    const double ly = mesh.y[j + 1] - mesh.y[j];
    // 1D factors; the rho ones carry the rho weight.
    const auto mr = detail::rho_mass_element(a, b);
    const double mrho[2][2] = {{mr[0], mr[1]}, {mr[1], mr[2]}};
    const double g = 0.5 * (a + b) / (b - a);
    const double krho[2][2] = {{g, -g}, {-g, g}};
    const double my[2][2] = {{ly / 3.0, ly / 6.0}, {ly / 6.0, ly / 3.0}};
    const double ky[2][2] = {{1.0 / ly, -1.0 / ly}, {-1.0 / ly, 1.0 / ly}};
    int dof[4];
    for (int p = 0; p < 4; ++p) {
      const int node = mesh.node(i + static_cast<std::size_t>(p % 2), j + static_cast<std::size_t>(p / 2));
      dof[p] = sys.dof_of_node[static_cast<std::size_t>(node)];
    }
    for (int p = 0; p < 4; ++p) {
      if (dof[p] < 0) continue;
      for (int q = 0; q < 4; ++q) {
        if (dof[q] < 0) continue;
        const int pr = p % 2, py = p / 2, qr = q % 2, qy = q / 2;
        kt.emplace_back(dof[p], dof[q], krho[pr][qr] * my[py][qy] + coef_y * mrho[pr][qr] * ky[py][qy]);
        mt.emplace_back(dof[p], dof[q], mrho[pr][qr] * my[py][qy]);
      }
    }
  }
  sys.stiffness.resize(dofs, dofs);
  sys.mass.resize(dofs, dofs);
  sys.stiffness.setFromTriplets(kt.begin(), kt.end());
  sys.mass.setFromTriplets(mt.begin(), mt.end());
  return sys;
}

std::vector<double> squeezed_eigenvalues(const AnnulusStackConfig& config, double epsilon, int k,
                                         const MeridianMeshOptions& options) {
  const auto mesh = MeridianMesh::build(config, epsilon, options);
  const auto sys = assemble_squeezed(mesh, config);
  const double shift = config.bc == BoundaryCondition::Neumann ? -1.0 : 0.0;
  const auto pairs = smallest_eigenpairs(sys.stiffness, sys.mass, k, shift);
  return {pairs.values.data(), pairs.values.data() + pairs.values.size()};
}

std::vector<double> limit_targets(const AnnulusStackConfig& config, int k) {
  SpectrumOptions opts;
  opts.n_max = 0;
  opts.m_max = k;
  const auto spectrum = compute_spectrum(config, opts);
  std::vector<double> out;
  for (const auto& mode : spectrum.modes) out.push_back(mode.lambda);
  std::sort(out.begin(), out.end());
  if (static_cast<int>(out.size()) > k) out.resize(static_cast<std::size_t>(k));
  return out;
}

SweepResult sweep(const AnnulusStackConfig& config, const std::vector<double>& eps_list, int k,
                  const MeridianMeshOptions& options) {
  if (k < 1) throw ConfigError("sweep: k must be positive");
  if (eps_list.empty()) throw ConfigError("sweep: empty epsilon list");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0 && eps_list[i] <= 1.0)) throw ConfigError("sweep: epsilon values must lie in (0, 1]");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ConfigError("sweep: epsilon list must be decreasing");
  }
  SweepResult out;
  out.bc = config.bc;
  out.targets = limit_targets(config, k);
  for (double eps : eps_list) out.rows.push_back({eps, squeezed_eigenvalues(config, eps, k, options)});
  return out;
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "epsilon,k,lambda,target_lambda0,abs_gap\n";
  char buf[160];
  for (const auto& row : result.rows) {
    for (std::size_t i = 0; i < row.lambda.size(); ++i) {
      const double target = i < result.targets.size() ? result.targets[i] : std::nan("");
      std::snprintf(buf, sizeof buf, "%.6g,%zu,%.15g,%.15g,%.6e\n", row.epsilon, i + 1, row.lambda[i], target,
                    std::abs(row.lambda[i] - target));
      out << buf;
    }
  }
  return out.str();
}

}  // namespace thinlimit
