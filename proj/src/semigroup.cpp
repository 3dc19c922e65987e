#include "thinlimit/semigroup.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "thinlimit/errors.hpp"

namespace thinlimit {

namespace {

constexpr double kBlowup = 1e12;

std::vector<double> parse_numbers(std::string_view text, const std::string& what) {
  std::vector<double> out;
  while (true) {
    const auto comma = text.find(',');
    auto item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || !std::isfinite(v)) {
      throw ConfigError(what + ": cannot parse number '" + std::string(item) + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

double phi1(double z) { return z == 0.0 ? 1.0 : std::expm1(z) / z; }

}  // namespace

ReactionTerm::ReactionTerm(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw ConfigError("reaction term: coefficients must be finite");
  }
}

ReactionTerm ReactionTerm::parse(std::string_view text) { return ReactionTerm(parse_numbers(text, "--f")); }

int ReactionTerm::degree() const {
  for (int i = static_cast<int>(coeffs_.size()) - 1; i >= 0; --i) {
    if (coeffs_[static_cast<std::size_t>(i)] != 0.0) return i;
  }
  return -1;
}

void ReactionTerm::validate() const {
  const int d = degree();
  if (d < 0) return;
  if (d > 3) {
    throw HypothesisViolation("reaction term violates (H1): degree " + std::to_string(d) +
                              " exceeds the growth bound (degree <= 3)");
  }
  const double lead = coeffs_[static_cast<std::size_t>(d)];
  if (d % 2 == 0 || lead >= 0.0) {
    throw HypothesisViolation("reaction term violates (H2): f(s)/s must tend to a negative limit, "
                              "which needs odd degree and a negative leading coefficient");
  }
}

double ReactionTerm::operator()(double u) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * u + *it;
  return acc;
}

double ReactionTerm::primitive(double u) const {
  double acc = 0.0;
  for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * u + coeffs_[i] / static_cast<double>(i + 1);
  return acc * u;
}

GalerkinModel::GalerkinModel(std::shared_ptr<const Spectrum> spectrum, ReactionTerm reaction, int n_theta)
    : spectrum_(std::move(spectrum)), reaction_(std::move(reaction)) {
  if (!spectrum_ || spectrum_->modes.empty()) throw ConfigError("Galerkin model: empty spectrum");
  grid_ = spectrum_->modes.front().profile.grid_ptr();
  int n_max = 0;
  for (const auto& mode : spectrum_->modes) {
    if (!mode.profile.grid().same_as(*grid_)) throw GridMismatch("Galerkin model: modes on different grids");
    n_max = std::max(n_max, mode.n);
  }
  const int d = std::max(reaction_.degree(), 1);
  const int needed = (d + 1) * n_max + 1;
  if (n_theta == 0) n_theta = needed;
  if (n_theta < needed) {
    throw ConfigError("Galerkin model: n_theta=" + std::to_string(n_theta) + " aliases a degree " + std::to_string(d) +
                      " nonlinearity at n_max=" + std::to_string(n_max) + "; need at least " + std::to_string(needed));
  }
  n_theta_ = n_theta;
  harmonics_ = 2 * n_max + 1;

  angular_.resize(n_theta_, harmonics_);
  for (int l = 0; l < n_theta_; ++l) {
    const double th = theta(l);
    angular_(l, 0) = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (int n = 1; n <= n_max; ++n) {
      angular_(l, 2 * n - 1) = std::cos(n * th) / std::sqrt(std::numbers::pi);
      angular_(l, 2 * n) = std::sin(n * th) / std::sqrt(std::numbers::pi);
    }
  }

  for (std::size_t i = 0; i < spectrum_->modes.size(); ++i) {
    const auto& mode = spectrum_->modes[i];
    std::array<bool, 3> support{};
    for (int j = 0; j < kSheets; ++j) {
      const auto v = mode.profile.values(j);
      support[static_cast<std::size_t>(j)] = std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
    }
    for (bool sine : {false, true}) {
      if (sine && mode.n == 0) continue;
      basis_.push_back({mode.n, mode.m, mode.ell, sine, mode.lambda, i, support});
      slot_.push_back(mode.n == 0 ? 0 : 2 * mode.n - (sine ? 0 : 1));
    }
  }

  for (int j = 0; j < kSheets; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const auto& nodes = grid_->nodes[ju];
    const auto& w = grid_->weights[ju];
    auto& rw = radial_weight_[ju];
    rw.resize(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) rw[static_cast<Eigen::Index>(i)] = grid_->h[ju] * w[i] * nodes[i];
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      if (basis_[k].support[ju]) columns_[ju].push_back(static_cast<int>(k));
    }
    auto& p = profiles_[ju];
    p.resize(rw.size(), static_cast<Eigen::Index>(columns_[ju].size()));
    for (std::size_t c = 0; c < columns_[ju].size(); ++c) {
      const auto& b = basis_[static_cast<std::size_t>(columns_[ju][c])];
      const auto v = spectrum_->modes[b.mode].profile.values(j);
      for (std::size_t i = 0; i < v.size(); ++i) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v[i];
    }
  }
}

double GalerkinModel::theta(int l) const { return 2.0 * std::numbers::pi * l / n_theta_; }

int GalerkinModel::find(int n, int m, int ell, bool sine) const {
  for (std::size_t k = 0; k < basis_.size(); ++k) {
    const auto& b = basis_[k];
    if (b.n == n && b.m == m && b.ell == ell && b.sine == sine) return static_cast<int>(k);
  }
  return -1;
}

GalerkinModel::SheetValues GalerkinModel::synthesize(const Eigen::VectorXd& a) const {
  if (a.size() != static_cast<Eigen::Index>(basis_.size())) {
    throw ConfigError("synthesize: coefficient vector does not match the basis");
  }
  SheetValues out;
  for (std::size_t j = 0; j < 3; ++j) {
    const auto& p = profiles_[j];
    Eigen::MatrixXd radial = Eigen::MatrixXd::Zero(p.rows(), harmonics_);
    for (std::size_t c = 0; c < columns_[j].size(); ++c) {
      const int k = columns_[j][c];
      radial.col(slot_[static_cast<std::size_t>(k)]) += a[k] * p.col(static_cast<Eigen::Index>(c));
    }
    out[j] = radial * angular_.transpose();
  }
  return out;
}

Eigen::VectorXd GalerkinModel::analyze(const SheetValues& values) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis_.size()));
  const double dtheta = 2.0 * std::numbers::pi / n_theta_;
  for (std::size_t j = 0; j < 3; ++j) {
    const auto& p = profiles_[j];
    if (values[j].rows() != p.rows() || values[j].cols() != n_theta_) {
      throw GridMismatch("analyze: values do not match the collocation grid");
    }
    if (columns_[j].empty()) continue;
    const Eigen::MatrixXd g = radial_weight_[j].asDiagonal() * (values[j] * angular_) * dtheta;
    for (std::size_t c = 0; c < columns_[j].size(); ++c) {
      const int k = columns_[j][c];
      out[k] += p.col(static_cast<Eigen::Index>(c)).dot(g.col(slot_[static_cast<std::size_t>(k)]));
    }
  }
  return out;
}

Eigen::VectorXd GalerkinModel::project(const std::function<double(int, double, double)>& g) const {
  SheetValues values;
  for (int j = 0; j < kSheets; ++j) {
    const auto& nodes = grid_->nodes[static_cast<std::size_t>(j)];
    auto& v = values[static_cast<std::size_t>(j)];
    v.resize(static_cast<Eigen::Index>(nodes.size()), n_theta_);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (int l = 0; l < n_theta_; ++l) v(static_cast<Eigen::Index>(i), l) = g(j, nodes[i], theta(l));
    }
  }
  return analyze(values);
}

Eigen::VectorXd GalerkinModel::nonlinear_term(const Eigen::VectorXd& a) const {
  auto values = synthesize(a);
  for (auto& v : values) v = v.unaryExpr([this](double u) { return reaction_(u); });
  return analyze(values);
}

SimState step(const SimState& state) {
  if (!state.model) throw ConfigError("step: state has no model");
  if (!(state.dt > 0.0)) throw ConfigError("step: dt must be positive");
  const auto& model = *state.model;
  const auto& a = state.field.coeffs;
  const bool forced = !model.reaction().is_zero();
  const Eigen::VectorXd forcing = forced ? model.nonlinear_term(a) : Eigen::VectorXd();
  SimState next = state;
  for (std::size_t k = 0; k < model.size(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    const double z = -model.basis()[k].lambda * state.dt;
    double v = std::exp(z) * a[ki];
    if (forced) v += phi1(z) * state.dt * forcing[ki];
    if (!(std::abs(v) <= kBlowup)) {
      throw BlowupDetected("step: coefficient " + std::to_string(k) + " reached " + std::to_string(v) + " at t=" +
                           std::to_string(state.field.t + state.dt));
    }
    next.field.coeffs[ki] = v;
  }
  next.field.t = state.field.t + state.dt;
  return next;
}

Diagnostics diagnostics(const SimState& state) {
  const auto& model = *state.model;
  const auto& a = state.field.coeffs;
  Diagnostics d;
  for (std::size_t k = 0; k < model.size(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    d.energy += 0.5 * model.basis()[k].lambda * a[ki] * a[ki];
  }
  const auto values = model.synthesize(a);
  const double dtheta = 2.0 * std::numbers::pi / model.n_theta();
  const auto& grid = model.grid();
  for (int j = 0; j < kSheets; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const auto& v = values[ju];
    double integral = 0.0, mass = 0.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const auto iu = static_cast<std::size_t>(i);
      const double w = grid.h[ju] * grid.weights[ju][iu] * grid.nodes[ju][iu] * dtheta;
      for (Eigen::Index l = 0; l < v.cols(); ++l) {
        integral += w * model.reaction().primitive(v(i, l));
        mass += w * v(i, l);
      }
    }
    d.energy -= integral;
    d.mass += mass;
  }
  const auto& ann = values[kAnnulus];
  for (Eigen::Index l = 0; l < ann.cols(); ++l) {
    const double v1 = ann(0, l);
    for (int j : {kUpperDisk, kLowerDisk}) {
      const auto& disk = values[static_cast<std::size_t>(j)];
      d.compat_residual = std::max(d.compat_residual, std::abs(v1 - disk(disk.rows() - 1, l)));
    }
  }
  return d;
}

InitialData InitialData::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ConfigError("--init: expected <kind>:<parameters>, got '" + std::string(text) + "'");
  const auto kind = text.substr(0, colon);
  const auto rest = text.substr(colon + 1);
  InitialData out;
  if (kind == "coeffs") {
    out.kind = Kind::Coefficients;
    out.path = std::string(rest);
    if (out.path.empty()) throw ConfigError("--init coeffs: missing path");
    return out;
  }
  std::string_view nums = rest;
  if (kind == "mode") {
    out.kind = Kind::Mode;
    const auto last = rest.rfind(',');
    if (last != std::string_view::npos && rest.substr(last + 1) == "sin") {
      out.sine = true;
      nums = rest.substr(0, last);
    }
  } else if (kind == "const") {
    out.kind = Kind::Constant;
  } else if (kind == "gauss") {
    out.kind = Kind::Gauss;
  } else if (kind == "random") {
    out.kind = Kind::Random;
  } else {
    throw ConfigError("--init: unknown kind '" + std::string(kind) + "'");
  }
  out.params = parse_numbers(nums, "--init " + std::string(kind));
  const std::size_t count = out.params.size();
  const bool ok = (out.kind == Kind::Constant && count == 1) || (out.kind == Kind::Mode && (count == 3 || count == 4)) ||
                  (out.kind == Kind::Gauss && count == 4) || (out.kind == Kind::Random && (count == 1 || count == 2));
  if (!ok) throw ConfigError("--init " + std::string(kind) + ": wrong number of parameters");
  if (out.kind == Kind::Gauss && !(out.params[3] > 0.0)) throw ConfigError("--init gauss: width must be positive");
  return out;
}

Eigen::VectorXd initial_coefficients(const GalerkinModel& model, const InitialData& init) {
  const auto size = static_cast<Eigen::Index>(model.size());
  switch (init.kind) {
    case InitialData::Kind::Constant: {
      const double c = init.params.at(0);
      return model.project([c](int, double, double) { return c; });
    }
    case InitialData::Kind::Mode: {
      const int n = static_cast<int>(init.params.at(0)), m = static_cast<int>(init.params.at(1)),
                ell = static_cast<int>(init.params.at(2));
      const int k = model.find(n, m, ell, init.sine);
      if (k < 0) {
        throw ConfigError("--init mode: (n=" + std::to_string(n) + ", m=" + std::to_string(m) +
                          ", ell=" + std::to_string(ell) + (init.sine ? ", sin" : "") + ") is not in the basis");
      }
      Eigen::VectorXd a = Eigen::VectorXd::Zero(size);
      a[k] = init.params.size() > 3 ? init.params[3] : 1.0;
      return a;
    }
    case InitialData::Kind::Gauss: {
      const double amp = init.params[0], x0 = init.params[1], y0 = init.params[2], w = init.params[3];
      return model.project([=](int, double rho, double th) {
        const double dx = rho * std::cos(th) - x0, dy = rho * std::sin(th) - y0;
        return amp * std::exp(-(dx * dx + dy * dy) / (2.0 * w * w));
      });
    }
    case InitialData::Kind::Random: {
      std::mt19937_64 rng(static_cast<std::uint64_t>(init.params.at(0)));
      std::normal_distribution<double> normal;
      const double amp = init.params.size() > 1 ? init.params[1] : 1.0;
      Eigen::VectorXd a(size);
      for (Eigen::Index k = 0; k < size; ++k) {
        a[k] = amp * normal(rng) / (1.0 + model.basis()[static_cast<std::size_t>(k)].lambda);
      }
      return a;
    }
    case InitialData::Kind::Coefficients: {
      std::ifstream in(init.path);
      if (!in) throw ConfigError("--init coeffs: cannot open '" + init.path + "'");
      Eigen::VectorXd a = Eigen::VectorXd::Zero(size);
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && line.rfind("n,", 0) == 0)) continue;
        std::istringstream row(line);
        std::string f[5];
        for (auto& s : f) std::getline(row, s, ',');
        try {
          const int n = std::stoi(f[0]), m = std::stoi(f[1]), ell = std::stoi(f[2]);
          const bool sine = f[3] == "sin";
          if (!sine && f[3] != "cos") throw ConfigError("part must be cos or sin");
          const int k = model.find(n, m, ell, sine);
          if (k < 0) throw ConfigError("mode not in the basis");
          a[k] = std::stod(f[4]);
        } catch (const std::exception& e) {
          throw ConfigError("--init coeffs: " + init.path + ":" + std::to_string(lineno) + ": " + e.what());
        }
      }
      return a;
    }
  }
  return Eigen::VectorXd::Zero(size);
}

Trajectory run(std::shared_ptr<const GalerkinModel> model, const Eigen::VectorXd& initial, double T, double dt,
               int snapshot_every) {
  if (!model) throw ConfigError("run: missing model");
  if (!(T > 0.0)) throw ConfigError("run: T must be positive");
  if (!(dt > 0.0)) throw ConfigError("run: dt must be positive");
  if (snapshot_every < 1) throw ConfigError("run: snapshot interval must be at least one step");
  if (initial.size() != static_cast<Eigen::Index>(model->size())) {
    throw ConfigError("run: initial coefficients do not match the basis");
  }
  Trajectory out;
  out.model = model;
  out.steps = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
  out.dt = T / static_cast<double>(out.steps);

  SimState state{model, {initial, 0.0}, out.dt};
  auto record = [&] {
    out.snapshots.push_back({state.field.t, state.field.coeffs});
    out.series.emplace_back(state.field.t, diagnostics(state));
  };
  record();
  for (long s = 1; s <= out.steps; ++s) {
    state = step(state);
    state.field.t = static_cast<double>(s) * out.dt;
    if (s % snapshot_every == 0 || s == out.steps) record();
  }
  return out;
}

Trajectory run(const AnnulusStackConfig& config, const ReactionTerm& reaction, const InitialData& initial, double T,
               double dt, int snapshot_every, const SimulationOptions& options) {
  SpectrumOptions opts;
  opts.n_max = options.n_max;
  opts.m_max = options.m_max;
  auto spectrum = std::make_shared<const Spectrum>(compute_spectrum(config, opts));
  auto model = std::make_shared<const GalerkinModel>(spectrum, reaction, options.n_theta);
  return run(model, initial_coefficients(*model, initial), T, dt, snapshot_every);
}

std::string snapshot_csv(const GalerkinModel& model, const Eigen::VectorXd& coeffs) {
  const auto values = model.synthesize(coeffs);
  std::ostringstream out;
  out << "sheet,rho,theta,value\n";
  char buf[128];
  for (int j = 0; j < kSheets; ++j) {
    const auto& nodes = model.grid().nodes[static_cast<std::size_t>(j)];
    const auto& v = values[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (int l = 0; l < model.n_theta(); ++l) {
        std::snprintf(buf, sizeof buf, "%d,%.15g,%.15g,%.15g\n", j + 1, nodes[i], model.theta(l),
                      v(static_cast<Eigen::Index>(i), l));
        out << buf;
      }
    }
  }
  return out.str();
}

std::string series_csv(const Trajectory& trajectory) {
  std::ostringstream out;
  out << "t,mass,energy,compat_residual\n";
  char buf[160];
  for (const auto& [t, d] : trajectory.series) {
    std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g,%.6e\n", t, d.mass, d.energy, d.compat_residual);
    out << buf;
  }
  return out.str();
}

}  // namespace thinlimit
