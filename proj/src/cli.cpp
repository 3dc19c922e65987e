#include "thinlimit/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "thinlimit/core_model.hpp"
#include "thinlimit/dispersion.hpp"
#include "thinlimit/epsilon_sweep.hpp"
#include "thinlimit/errors.hpp"
#include "thinlimit/radial_oracle.hpp"
#include "thinlimit/semigroup.hpp"

namespace thinlimit {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(' ', used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(flag + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(flag + ": empty list");
  return out;
}

// Files written into an output directory. Unless commit() is called, the
// destructor removes them again, and the directory too if it was created here.
class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    if (fs::exists(root_, ec)) {
      if (!fs::is_directory(root_, ec)) throw ConfigError("--out: '" + root_.string() + "' is not a directory");
    } else {
      fs::create_directories(root_, ec);
      if (ec) throw ConfigError("--out: cannot create '" + root_.string() + "': " + ec.message());
      created_ = true;
    }
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  ~OutputDir() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : written_) fs::remove(f, ec);
    if (created_) fs::remove(root_, ec);
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = root_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("--out: cannot write '" + path.string() + "'");
    written_.push_back(path);
    out << content;
    if (!out) throw ConfigError("--out: write failed for '" + path.string() + "'");
  }

  void commit() { committed_ = true; }
  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  bool created_ = false;
  bool committed_ = false;
  std::vector<fs::path> written_;
};

struct ConfigFlags {
  std::string path;
  std::optional<std::string> bc;
  std::optional<double> r, R;
  std::optional<std::string> h;
  std::optional<int> n1, n2;

  void attach(CLI::App* app) {
    app->add_option("--config", path, "JSON geometry file (defaults apply when omitted)");
    app->add_option("--bc", bc, "override: neumann | dirichlet_lateral");
    app->add_option("--r", r, "override: inner radius");
    app->add_option("--R", R, "override: outer radius");
    app->add_option("--heights", h, "override: thicknesses h1,h2,h3");
    app->add_option("--grid-n1", n1, "override: radial nodes on (r, R)");
    app->add_option("--grid-n2", n2, "override: radial nodes on (0, r)");
  }

  AnnulusStackConfig resolve() const {
    AnnulusStackConfig config = path.empty() ? AnnulusStackConfig{} : load_config(path);
    if (bc) config.bc = boundary_condition_from_string(*bc);
    if (r) config.r = *r;
    if (R) config.R = *R;
    if (h) {
      const auto v = parse_list(*h, "--heights");
      if (v.size() != 3) throw ConfigError("--heights: expected three thicknesses");
      config.h = {v[0], v[1], v[2]};
    }
    if (n1) config.grid.n1 = *n1;
    if (n2) config.grid.n2 = *n2;
    config.validate();
    return config;
  }
};

RunManifest start_manifest(const std::string& command, const AnnulusStackConfig& config) {
  RunManifest m;
  m.command = command;
  m.started = utc_now();
  m.config_digest = sha256_hex(to_json(config).dump());
  m.parameters["r"] = fmt(config.r);
  m.parameters["R"] = fmt(config.R);
  m.parameters["h1"] = fmt(config.h[0]);
  m.parameters["h2"] = fmt(config.h[1]);
  m.parameters["h3"] = fmt(config.h[2]);
  m.parameters["bc"] = std::string(to_string(config.bc));
  m.parameters["grid_n1"] = std::to_string(config.grid.n1);
  m.parameters["grid_n2"] = std::to_string(config.grid.n2);
  return m;
}

void finish(OutputDir& out, RunManifest& manifest) {
  manifest.finished = utc_now();
  out.write("manifest.json", manifest.to_json().dump(2) + "\n");
  out.commit();
}

// Eigenvalues of one angular sector with multiplicity.
std::vector<double> sector_values(const Spectrum& spectrum, int n) {
  std::vector<double> out;
  for (const auto& mode : spectrum.modes) {
    if (mode.n == n) out.push_back(mode.lambda);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct EigsFlags {
  ConfigFlags config;
  int n_max = 8;
  int m_max = 16;
  std::optional<double> lambda_max;
  bool no_oracle = false;
  std::string out;
};

int cmd_eigs(const EigsFlags& f) {
  const auto config = f.config.resolve();
  if (f.n_max < 0 || f.m_max < 1) throw ConfigError("eigs: need n-max >= 0 and m-max >= 1");
  SpectrumOptions opts;
  opts.n_max = f.n_max;
  opts.m_max = f.m_max;
  opts.lambda_max = f.lambda_max;
  opts.oracle_check = !f.no_oracle;
  auto manifest = start_manifest("eigs", config);
  OutputDir out(f.out);
  const auto spectrum = compute_spectrum(config, opts);
  out.write("spectrum.csv", spectrum_csv(spectrum));
  manifest.parameters["n_max"] = std::to_string(f.n_max);
  manifest.parameters["m_max"] = std::to_string(f.m_max);
  manifest.parameters["lambda_max"] = f.lambda_max ? fmt(*f.lambda_max) : "auto";
  manifest.parameters["oracle_check"] = f.no_oracle ? "false" : "true";
  manifest.parameters["modes"] = std::to_string(spectrum.modes.size());
  const auto coincide = spectrum.coincidences();
  manifest.parameters["coincidences"] = std::to_string(coincide.size());
  for (const auto& [i, j] : coincide) {
    std::cerr << "note: lambda=" << fmt(spectrum.modes[i].lambda) << " shared by n=" << spectrum.modes[i].n
              << " and n=" << spectrum.modes[j].n << "\n";
  }
  finish(out, manifest);
  std::cout << spectrum.modes.size() << " modes written to " << (out.root() / "spectrum.csv").string() << "\n";
  return kExitOk;
}

struct VerifyFlags {
  ConfigFlags config;
  int n_max = 2;
  int m_max = 8;
  double tol = 1e-4;
  int mesh = 4096;
  std::string out;
};

int cmd_verify(const VerifyFlags& f) {
  const auto config = f.config.resolve();
  if (f.n_max < 0 || f.m_max < 1) throw ConfigError("verify: need n-max >= 0 and m-max >= 1");
  if (f.mesh < 4 || f.mesh % 2 != 0) throw ConfigError("verify: --mesh must be an even count >= 4");
  if (!(f.tol > 0.0)) throw ConfigError("verify: --tol must be positive");
  SpectrumOptions opts;
  opts.n_max = f.n_max;
  opts.m_max = f.m_max + 1;
  const auto spectrum = compute_spectrum(config, opts);

  std::ostringstream table;
  table << "n,index,lambda_dispersion,lambda_oracle,rel_gap\n";
  std::ostringstream counts;
  counts << "n,threshold,count_dispersion,count_oracle\n";
  bool ok = true;
  char buf[256];
  for (int n = 0; n <= f.n_max; ++n) {
    const auto values = sector_values(spectrum, n);
    const int k = std::min<int>(f.m_max, static_cast<int>(values.size()) - 1);
    const auto oracle = richardson_eigenvalues(n, config, f.mesh, k + 1);
    for (int i = 0; i < k; ++i) {
      const double d = values[static_cast<std::size_t>(i)], o = oracle[static_cast<std::size_t>(i)];
      const double gap = d > 0.0 ? std::abs(d - o) / d : std::abs(d - o);
      if (!(gap <= f.tol)) ok = false;
      std::snprintf(buf, sizeof buf, "%d,%d,%.12g,%.12g,%.3e%s\n", n, i + 1, d, o, gap, gap <= f.tol ? "" : ",FAIL");
      table << buf;
    }
    // Count check at a threshold inside the first clear gap at or below index k.
    int split = k;
    while (split > 1 && values[static_cast<std::size_t>(split)] - values[static_cast<std::size_t>(split - 1)] <=
                            1e-6 * values[static_cast<std::size_t>(split)]) {
      --split;
    }
    const double t = 0.5 * (values[static_cast<std::size_t>(split - 1)] + values[static_cast<std::size_t>(split)]);
    const auto assembly = assemble(n, config, MeshSpec{f.mesh, f.mesh});
    const int got = count_below(assembly, t);
    if (got != split) ok = false;
    std::snprintf(buf, sizeof buf, "%d,%.12g,%d,%d%s\n", n, t, split, got, got == split ? "" : ",FAIL");
    counts << buf;
  }
  std::cout << table.str() << "\n" << counts.str();
  if (!f.out.empty()) {
    auto manifest = start_manifest("verify", config);
    manifest.parameters["n_max"] = std::to_string(f.n_max);
    manifest.parameters["m_max"] = std::to_string(f.m_max);
    manifest.parameters["tol"] = fmt(f.tol);
    manifest.parameters["mesh"] = std::to_string(f.mesh);
    manifest.parameters["passed"] = ok ? "true" : "false";
    OutputDir out(f.out);
    out.write("verify.csv", table.str());
    out.write("counts.csv", counts.str());
    finish(out, manifest);
  }
  if (!ok) {
    std::cerr << "verify: dispersion and oracle disagree beyond tol=" << fmt(f.tol) << "\n";
    return kExitVerification;
  }
  return kExitOk;
}

struct SweepFlags {
  ConfigFlags config;
  std::string eps = "0.4,0.2,0.1,0.05";
  int k = 5;
  int density = MeridianMeshOptions{}.radial_density;
  int layer_cells = MeridianMeshOptions{}.layer_cells;
  std::string out;
};

int cmd_sweep(const SweepFlags& f) {
  const auto config = f.config.resolve();
  const auto eps = parse_list(f.eps, "--eps");
  if (f.k < 1 || f.k > 12) throw ConfigError("sweep: --k must lie in 1..12");
  MeridianMeshOptions mesh;
  mesh.radial_density = f.density;
  mesh.layer_cells = f.layer_cells;
  auto manifest = start_manifest("sweep", config);
  manifest.parameters["eps"] = f.eps;
  manifest.parameters["k"] = std::to_string(f.k);
  manifest.parameters["radial_density"] = std::to_string(f.density);
  manifest.parameters["layer_cells"] = std::to_string(f.layer_cells);
  OutputDir out(f.out);
  const auto result = sweep(config, eps, f.k, mesh);
  const auto csv = sweep_csv(result);
  out.write("sweep.csv", csv);
  finish(out, manifest);
  std::cout << csv;
  return kExitOk;
}

struct SimulateFlags {
  ConfigFlags config;
  std::string f = "0,1,0,-1";
  double T = 1.0;
  double dt = 1e-3;
  int snap = 100;
  std::string init = "gauss:1,0.5,0,0.5";
  int n_max = 8;
  int m_max = 16;
  int n_theta = 0;
  std::string out;
};

int cmd_simulate(const SimulateFlags& f) {
  const auto config = f.config.resolve();
  const auto reaction = ReactionTerm::parse(f.f);
  reaction.validate();
  const auto init = InitialData::parse(f.init);
  if (!(f.T > 0.0) || !(f.dt > 0.0)) throw ConfigError("simulate: --T and --dt must be positive");
  if (f.snap < 1) throw ConfigError("simulate: --snap must be at least 1");
  if (f.n_max < 0 || f.m_max < 1) throw ConfigError("simulate: need n-max >= 0 and m-max >= 1");
  auto manifest = start_manifest("simulate", config);
  OutputDir out(f.out);
  SimulationOptions opts{f.n_max, f.m_max, f.n_theta};
  const auto traj = run(config, reaction, init, f.T, f.dt, f.snap, opts);
  char name[64];
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    std::snprintf(name, sizeof name, "snapshot_%04zu.csv", i);
    out.write(name, snapshot_csv(*traj.model, traj.snapshots[i].coeffs));
  }
  out.write("series.csv", series_csv(traj));
  manifest.parameters["f"] = f.f;
  manifest.parameters["T"] = fmt(f.T);
  manifest.parameters["dt"] = fmt(f.dt);
  manifest.parameters["dt_effective"] = fmt(traj.dt);
  manifest.parameters["steps"] = std::to_string(traj.steps);
  manifest.parameters["snap"] = std::to_string(f.snap);
  manifest.parameters["init"] = f.init;
  manifest.parameters["n_max"] = std::to_string(f.n_max);
  manifest.parameters["m_max"] = std::to_string(f.m_max);
  manifest.parameters["n_theta"] = std::to_string(traj.model->n_theta());
  manifest.parameters["basis_size"] = std::to_string(traj.model->size());
  manifest.parameters["snapshots"] = std::to_string(traj.snapshots.size());
  finish(out, manifest);
  std::cout << series_csv(traj);
  return kExitOk;
}

struct ModesFlags {
  ConfigFlags config;
  int n = 0;
  int m = 1;
  int ell = 0;
  std::string source = "analytic";
  int mesh = 2048;
  std::string out;
};

std::string profile_csv(const BranchedRadialFunction& p) {
  std::ostringstream out;
  out << "component,rho,value\n";
  char buf[128];
  for (int j = 0; j < kSheets; ++j) {
    const auto nodes = p.nodes(j);
    const auto values = p.values(j);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%d,%.15g,%.15g\n", j + 1, nodes[i], values[i]);
      out << buf;
    }
  }
  return out.str();
}

int cmd_modes(const ModesFlags& f) {
  const auto config = f.config.resolve();
  if (f.n < 0 || f.m < 0) throw ConfigError("modes: --n and --m must be nonnegative");
  if (f.source != "analytic" && f.source != "oracle") throw ConfigError("modes: --source is analytic or oracle");
  SpectrumOptions opts;
  opts.n_max = f.n;
  opts.m_max = std::max(f.m, 1);
  const auto spectrum = compute_spectrum(config, opts);

  // Modes of sector n in ascending order; their position doubles as the
  // oracle eigenpair index.
  std::vector<const EigenMode*> sector;
  for (const auto& mode : spectrum.modes) {
    if (mode.n == f.n) sector.push_back(&mode);
  }
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < sector.size(); ++i) {
    if (sector[i]->m == f.m && (f.ell == 0 || sector[i]->ell == f.ell)) picked.push_back(i);
  }
  if (picked.empty()) {
    throw ConfigError("modes: no mode with n=" + std::to_string(f.n) + ", m=" + std::to_string(f.m) +
                      (f.ell ? ", ell=" + std::to_string(f.ell) : std::string()));
  }
  auto manifest = start_manifest("modes", config);
  manifest.parameters["n"] = std::to_string(f.n);
  manifest.parameters["m"] = std::to_string(f.m);
  manifest.parameters["ell"] = f.ell ? std::to_string(f.ell) : "all";
  manifest.parameters["source"] = f.source;
  OutputDir out(f.out);
  std::vector<RadialEigenpair> oracle;
  if (f.source == "oracle") {
    manifest.parameters["mesh"] = std::to_string(f.mesh);
    const auto assembly = assemble(f.n, config, MeshSpec{f.mesh, f.mesh});
    oracle = solve_eigs(assembly, static_cast<int>(picked.back()) + 1);
  }
  for (std::size_t i : picked) {
    const auto& mode = *sector[i];
    std::string name = "mode_bc-" + std::string(to_string(config.bc)) + "_n" + std::to_string(mode.n) + "_m" +
                       std::to_string(mode.m) + "_ell" + std::to_string(mode.ell) + ".csv";
    if (f.source == "oracle") {
      // Sign fixed so the largest nodal value is positive.
      auto profile = oracle[i].profile;
      double big = 0.0;
      for (int j = 0; j < kSheets; ++j) {
        for (double v : profile.values(j)) {
          if (std::abs(v) > std::abs(big)) big = v;
        }
      }
      if (big < 0.0) profile = profile.scaled(-1.0);
      out.write(name, profile_csv(profile));
      std::cout << name << " lambda_oracle=" << fmt(oracle[i].lambda) << " lambda=" << fmt(mode.lambda) << "\n";
    } else {
      out.write(name, profile_csv(mode.profile));
      std::cout << name << " lambda=" << fmt(mode.lambda) << "\n";
    }
  }
  finish(out, manifest);
  return kExitOk;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MeshError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},           {"config_digest", config_digest}, {"parameters", parameters},
          {"tool_version", tool_version}, {"started", started},             {"finished", finished}};
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  std::string out;
  char hex[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(hex, sizeof hex, "%02x", md[i]);
    out += hex;
  }
  return out;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Spectra, eigenmodes and reaction-diffusion runs for the thin notched-cylinder limit problem",
               "thinlimit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  EigsFlags eigs;
  auto* c_eigs = app.add_subcommand("eigs", "Write the spectrum of the limit operator as CSV");
  eigs.config.attach(c_eigs);
  c_eigs->add_option("--n-max", eigs.n_max, "largest angular index")->capture_default_str();
  c_eigs->add_option("--m-max", eigs.m_max, "radial eigenvalues per angular index")->capture_default_str();
  c_eigs->add_option("--lambda-max", eigs.lambda_max, "upper bound of the eigenvalue search");
  c_eigs->add_flag("--no-oracle", eigs.no_oracle, "skip the finite-element root count check");
  c_eigs->add_option("--out", eigs.out, "output directory")->required();

  VerifyFlags verify;
  auto* c_verify = app.add_subcommand("verify", "Compare dispersion roots with the finite-element oracle");
  verify.config.attach(c_verify);
  c_verify->add_option("--n-max", verify.n_max, "largest angular index")->capture_default_str();
  c_verify->add_option("--m-max", verify.m_max, "eigenvalues compared per angular index")->capture_default_str();
  c_verify->add_option("--tol", verify.tol, "relative tolerance")->capture_default_str();
  c_verify->add_option("--mesh", verify.mesh, "elements per interval (even)")->capture_default_str();
  c_verify->add_option("--out", verify.out, "optional output directory for the tables");

  SweepFlags sw;
  auto* c_sweep = app.add_subcommand("sweep", "Squeezed eigenvalues against the axisymmetric limit spectrum");
  sw.config.attach(c_sweep);
  c_sweep->add_option("--eps", sw.eps, "decreasing comma list of epsilon values")->capture_default_str();
  c_sweep->add_option("--k", sw.k, "eigenvalues per epsilon")->capture_default_str();
  c_sweep->add_option("--mesh-density", sw.density, "radial cells per unit length")->capture_default_str();
  c_sweep->add_option("--layer-cells", sw.layer_cells, "cells across the thinnest sheet")->capture_default_str();
  c_sweep->add_option("--out", sw.out, "output directory")->required();

  SimulateFlags sim;
  auto* c_sim = app.add_subcommand("simulate", "Integrate the limit reaction-diffusion system");
  sim.config.attach(c_sim);
  c_sim->add_option("--f", sim.f, "reaction polynomial coefficients, constant first")->capture_default_str();
  c_sim->add_option("--T", sim.T, "final time")->capture_default_str();
  c_sim->add_option("--dt", sim.dt, "time step")->capture_default_str();
  c_sim->add_option("--snap", sim.snap, "steps between snapshots")->capture_default_str();
  c_sim->add_option("--init", sim.init, "const:c | mode:n,m,ell[,amp[,sin]] | gauss:a,x0,y0,w | random:seed[,amp] | coeffs:path")
      ->capture_default_str();
  c_sim->add_option("--n-max", sim.n_max, "largest angular index of the basis")->capture_default_str();
  c_sim->add_option("--m-max", sim.m_max, "radial eigenvalues per angular index")->capture_default_str();
  c_sim->add_option("--n-theta", sim.n_theta, "angular collocation points (0 = automatic)")->capture_default_str();
  c_sim->add_option("--out", sim.out, "output directory")->required();

  ModesFlags modes;
  auto* c_modes = app.add_subcommand("modes", "Export radial eigenmode profiles");
  modes.config.attach(c_modes);
  c_modes->add_option("--n", modes.n, "angular index")->capture_default_str();
  c_modes->add_option("--m", modes.m, "radial index (0 is the constant Neumann mode)")->capture_default_str();
  c_modes->add_option("--ell", modes.ell, "member of a repeated eigenvalue (0 = all)")->capture_default_str();
  c_modes->add_option("--source", modes.source, "analytic | oracle")->capture_default_str();
  c_modes->add_option("--mesh", modes.mesh, "oracle elements per interval")->capture_default_str();
  c_modes->add_option("--out", modes.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (c_eigs->parsed()) return guarded([&] { return cmd_eigs(eigs); });
  if (c_verify->parsed()) return guarded([&] { return cmd_verify(verify); });
  if (c_sweep->parsed()) return guarded([&] { return cmd_sweep(sw); });
  if (c_sim->parsed()) return guarded([&] { return cmd_simulate(sim); });
  if (c_modes->parsed()) return guarded([&] { return cmd_modes(modes); });
  return kExitUsage;
}

}  // namespace thinlimit
