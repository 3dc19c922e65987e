#include "thinlimit/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "thinlimit/errors.hpp"

namespace thinlimit {

namespace {

[[noreturn]] void reject(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

double read_number(const nlohmann::json& doc, const std::string& key, const std::string& field) {
  if (!doc.contains(key)) reject(field, "missing");
  const auto& v = doc.at(key);
  if (!v.is_number()) reject(field, "expected a number");
  return v.get<double>();
}

int read_count(const nlohmann::json& doc, const std::string& key, const std::string& field) {
  const auto& v = doc.at(key);
  if (!v.is_number_integer()) reject(field, "expected an integer");
  return v.get<int>();
}

std::pair<int, int> line_and_column(std::string_view text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void check_nodes(std::span<const double> nodes, double lo, double hi, const std::string& name) {
  if (nodes.size() < 2) throw ConfigError(name + ": need at least two nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!std::isfinite(nodes[i])) throw ConfigError(name + ": non-finite node");
    if (i > 0 && !(nodes[i] > nodes[i - 1])) throw ConfigError(name + ": nodes not strictly increasing");
  }
  if (nodes.front() != lo || nodes.back() != hi) throw ConfigError(name + ": endpoints must be exactly the interval ends");
}

// Second-order one-sided derivative at x0 from (x0, f0), (x1, f1), (x2, f2),
// where the points may lie on either side of x0.
double one_sided_derivative(double x0, double x1, double x2, double f0, double f1, double f2) {
  const double d1 = x1 - x0;
  const double d2 = x2 - x0;
  return -(d1 + d2) / (d1 * d2) * f0 + d2 / (d1 * (d2 - d1)) * f1 - d1 / (d2 * (d2 - d1)) * f2;
}

}  // namespace

std::string_view to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::Neumann ? "neumann" : "dirichlet_lateral";
}

BoundaryCondition boundary_condition_from_string(std::string_view text) {
  if (text == "neumann") return BoundaryCondition::Neumann;
  if (text == "dirichlet_lateral" || text == "dirichlet") return BoundaryCondition::DirichletLateral;
  reject("bc", "expected \"neumann\" or \"dirichlet_lateral\", got \"" + std::string(text) + "\"");
}

void AnnulusStackConfig::validate() const {
  if (!std::isfinite(r) || !(r > 0.0)) reject("r", "must be positive");
  if (!std::isfinite(R) || !(R > r)) reject("R", "must exceed r");
  for (std::size_t j = 0; j < 3; ++j) {
    if (!std::isfinite(h[j]) || !(h[j] > 0.0)) reject("h[" + std::to_string(j) + "]", "must be positive");
  }
  if (!(h[0] > h[1] + h[2])) reject("h", "need h1 > h2 + h3");
  if (grid.n1 < 3) reject("grid.n1", "need at least 3 nodes");
  if (grid.n2 < 3) reject("grid.n2", "need at least 3 nodes");
}

double AnnulusStackConfig::sheet_area(int sheet) const {
  const double pi = std::numbers::pi;
  return sheet == kAnnulus ? pi * (R * R - r * r) : pi * r * r;
}

double AnnulusStackConfig::weighted_area() const {
  double total = 0.0;
  for (int j = 0; j < kSheets; ++j) total += h[static_cast<std::size_t>(j)] * sheet_area(j);
  return total;
}

AnnulusStackConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  AnnulusStackConfig c;
  c.r = read_number(doc, "r", "r");
  c.R = read_number(doc, "R", "R");
  if (!doc.contains("h")) reject("h", "missing");
  const auto& h = doc.at("h");
  if (!h.is_array() || h.size() != 3) reject("h", "expected an array [h1, h2, h3]");
  for (std::size_t j = 0; j < 3; ++j) {
    if (!h[j].is_number()) reject("h[" + std::to_string(j) + "]", "expected a number");
    c.h[j] = h[j].get<double>();
  }
  if (doc.contains("bc")) {
    if (!doc.at("bc").is_string()) reject("bc", "expected a string");
    c.bc = boundary_condition_from_string(doc.at("bc").get<std::string>());
  }
  if (doc.contains("grid")) {
    const auto& g = doc.at("grid");
    if (!g.is_object()) reject("grid", "expected an object");
    if (g.contains("n1")) c.grid.n1 = read_count(g, "n1", "grid.n1");
    if (g.contains("n2")) c.grid.n2 = read_count(g, "n2", "grid.n2");
  }
  c.validate();
  return c;
}

AnnulusStackConfig parse_config(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("config: JSON syntax error at line " + std::to_string(line) + ", column " +
                      std::to_string(col));
  }
  return config_from_json(doc);
}

AnnulusStackConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

nlohmann::json to_json(const AnnulusStackConfig& c) {
  return {{"r", c.r},
          {"R", c.R},
          {"h", {c.h[0], c.h[1], c.h[2]}},
          {"bc", std::string(to_string(c.bc))},
          {"grid", {{"n1", c.grid.n1}, {"n2", c.grid.n2}}}};
}

std::vector<double> graded_nodes(double a, double b, int count) {
  std::vector<double> x(static_cast<std::size_t>(count));
  const double pi = std::numbers::pi;
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / (count - 1);
    x[static_cast<std::size_t>(i)] = a + (b - a) * 0.5 * (1.0 - std::cos(pi * t));
  }
  x.front() = a;
  x.back() = b;
  return x;
}

std::vector<double> quadrature_weights(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> w(n, 0.0);
  if (n < 2) return w;
  if (n == 2) {
    w[0] = w[1] = 0.5 * (x[1] - x[0]);
    return w;
  }
  const std::size_t intervals = n - 1;
  const std::size_t paired = intervals - intervals % 2;
  for (std::size_t i = 0; i + 2 <= paired; i += 2) {
    const double h0 = x[i + 1] - x[i];
    const double h1 = x[i + 2] - x[i + 1];
    const double s = (h0 + h1) / 6.0;
    w[i] += s * (2.0 - h1 / h0);
    w[i + 1] += s * (h0 + h1) * (h0 + h1) / (h0 * h1);
    w[i + 2] += s * (2.0 - h0 / h1);
  }
  if (paired < intervals) {
    const std::size_t i = n - 3;
    const double h0 = x[i + 1] - x[i];
    const double h1 = x[i + 2] - x[i + 1];
    w[i] += -h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
    w[i + 1] += h1 * (h1 + 3.0 * h0) / (6.0 * h0);
    w[i + 2] += h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1));
  }
  return w;
}

std::shared_ptr<const BranchedGrid> BranchedGrid::make(const AnnulusStackConfig& config) {
  return make(config, config.grid);
}

std::shared_ptr<const BranchedGrid> BranchedGrid::make(const AnnulusStackConfig& config, GridSizes sizes) {
  config.validate();
  std::array<std::vector<double>, 3> nodes{graded_nodes(config.r, config.R, sizes.n1),
                                           graded_nodes(0.0, config.r, sizes.n2),
                                           graded_nodes(0.0, config.r, sizes.n2)};
  return from_nodes(config.r, config.R, config.h, std::move(nodes));
}

std::shared_ptr<const BranchedGrid> BranchedGrid::from_nodes(double r, double R, std::array<double, 3> h,
                                                             std::array<std::vector<double>, 3> nodes) {
  check_nodes(nodes[0], r, R, "grid I1");
  check_nodes(nodes[1], 0.0, r, "grid I2");
  check_nodes(nodes[2], 0.0, r, "grid I3");
  auto g = std::make_shared<BranchedGrid>();
  g->r = r;
  g->R = R;
  g->h = h;
  for (std::size_t j = 0; j < 3; ++j) g->weights[j] = quadrature_weights(nodes[j]);
  g->nodes = std::move(nodes);
  return g;
}

bool BranchedGrid::same_as(const BranchedGrid& other) const {
  return this == &other || (r == other.r && R == other.R && h == other.h && nodes == other.nodes);
}

BranchedRadialFunction::BranchedRadialFunction(GridPtr grid, std::array<std::vector<double>, 3> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw GridMismatch("branched function without a grid");
  for (std::size_t j = 0; j < 3; ++j) {
    if (values_[j].size() != grid_->nodes[j].size()) throw GridMismatch("sample count does not match grid");
    for (double v : values_[j]) {
      if (!std::isfinite(v)) throw DomainError("non-finite sample in branched function");
    }
  }
}

BranchedRadialFunction BranchedRadialFunction::zero(GridPtr grid) {
  std::array<std::vector<double>, 3> v;
  for (std::size_t j = 0; j < 3; ++j) v[j].assign(grid->nodes[j].size(), 0.0);
  return {std::move(grid), std::move(v)};
}

BranchedRadialFunction BranchedRadialFunction::sample(GridPtr grid,
                                                      const std::function<double(int, double)>& f) {
  std::array<std::vector<double>, 3> v;
  for (int j = 0; j < kSheets; ++j) {
    const auto& x = grid->nodes[static_cast<std::size_t>(j)];
    auto& out = v[static_cast<std::size_t>(j)];
    out.reserve(x.size());
    for (double rho : x) out.push_back(f(j, rho));
  }
  return {std::move(grid), std::move(v)};
}

double BranchedRadialFunction::interface_value(int sheet) const {
  const auto& v = values_[static_cast<std::size_t>(sheet)];
  return sheet == kAnnulus ? v.front() : v.back();
}

double BranchedRadialFunction::interface_derivative(int sheet) const {
  const auto& v = values_[static_cast<std::size_t>(sheet)];
  const auto& x = grid_->nodes[static_cast<std::size_t>(sheet)];
  const std::size_t n = x.size();
  if (n == 2) return (v[1] - v[0]) / (x[1] - x[0]);
  if (sheet == kAnnulus) return one_sided_derivative(x[0], x[1], x[2], v[0], v[1], v[2]);
  return one_sided_derivative(x[n - 1], x[n - 2], x[n - 3], v[n - 1], v[n - 2], v[n - 3]);
}

double BranchedRadialFunction::outer_derivative() const {
  const auto& v = values_[0];
  const auto& x = grid_->nodes[0];
  const std::size_t n = x.size();
  if (n == 2) return (v[1] - v[0]) / (x[1] - x[0]);
  return one_sided_derivative(x[n - 1], x[n - 2], x[n - 3], v[n - 1], v[n - 2], v[n - 3]);
}

double BranchedRadialFunction::max_abs() const {
  double m = 0.0;
  for (const auto& v : values_) {
    for (double x : v) m = std::max(m, std::abs(x));
  }
  return m;
}

BranchedRadialFunction BranchedRadialFunction::scaled(double factor) const {
  auto v = values_;
  for (auto& sheet : v) {
    for (double& x : sheet) x *= factor;
  }
  return {grid_, std::move(v)};
}

double weighted_inner_product(const BranchedRadialFunction& a, const BranchedRadialFunction& b) {
  if (!a.grid().same_as(b.grid())) throw GridMismatch("weighted_inner_product: operands live on different grids");
  const auto& g = a.grid();
  double total = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const auto& x = g.nodes[j];
    const auto& w = g.weights[j];
    const auto va = a.values(static_cast<int>(j));
    const auto vb = b.values(static_cast<int>(j));
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i] * (va[i] * vb[i]);
    total += g.h[j] * s;
  }
  return total;
}

double energy_form(const BranchedRadialFunction& a, const BranchedRadialFunction& b, int n) {
  if (!a.grid().same_as(b.grid())) throw GridMismatch("energy_form: operands live on different grids");
  const auto& g = a.grid();
  const double n2 = static_cast<double>(n) * n;
  if (n != 0) {
    const double tol = 1e-10 * std::max({1.0, a.max_abs(), b.max_abs()});
    for (int j : {kUpperDisk, kLowerDisk}) {
      if (std::abs(a.values(j).front()) >= tol || std::abs(b.values(j).front()) >= tol) {
        throw IntegralDiverges("energy_form: n^2/rho term diverges, disk profile does not vanish at rho = 0");
      }
    }
  }
  double total = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const auto& x = g.nodes[j];
    const auto va = a.values(static_cast<int>(j));
    const auto vb = b.values(static_cast<int>(j));
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      const double lo = x[i], hi = x[i + 1], len = hi - lo;
      const double sa = (va[i + 1] - va[i]) / len;
      const double sb = (vb[i + 1] - vb[i]) / len;
      s += sa * sb * 0.5 * (hi * hi - lo * lo);
      if (n != 0) {
        const auto e = detail::inverse_rho_element(lo, hi);
        // On the origin element the phi_a^2 entry diverges; its coefficient
        // is below tolerance and is dropped.
        const double aa = lo == 0.0 ? 0.0 : e[0] * va[i] * vb[i];
        s += n2 * (aa + e[1] * (va[i] * vb[i + 1] + va[i + 1] * vb[i]) + e[2] * va[i + 1] * vb[i + 1]);
      }
    }
    total += g.h[j] * s;
  }
  return total;
}

double compatibility_residual(const BranchedRadialFunction& a) {
  const double v1 = a.interface_value(kAnnulus);
  return std::max(std::abs(v1 - a.interface_value(kUpperDisk)), std::abs(v1 - a.interface_value(kLowerDisk)));
}

double balance_residual(const BranchedRadialFunction& a) {
  const auto& h = a.grid().h;
  return std::abs(h[0] * a.interface_derivative(kAnnulus) - h[1] * a.interface_derivative(kUpperDisk) -
                  h[2] * a.interface_derivative(kLowerDisk));
}

namespace detail {

std::array<double, 3> inverse_rho_element(double a, double b) {
  if (a == 0.0) return {std::numeric_limits<double>::infinity(), 0.5, 0.5};
  const double u = (b - a) / a;
  if (u < 0.5) {
    double aa = 0.0, ab = 0.0, bb = 0.0, p = u;
    for (int k = 0; k < 200 && std::abs(p) > 1e-19 * u; ++k) {
      const double k1 = k + 1.0, k2 = k + 2.0, k3 = k + 3.0;
      aa += p * (1.0 / k1 - 2.0 / k2 + 1.0 / k3);
      ab += p * (1.0 / k2 - 1.0 / k3);
      bb += p / k3;
      p *= -u;
    }
    return {aa, ab, bb};
  }
  const double l = std::log1p(u);
  const double u2 = u * u;
  return {(1.0 + u) * (1.0 + u) * l / u2 - (1.0 + 2.0 * u) / u + 0.5, 1.0 / u + 0.5 - (1.0 + u) * l / u2,
          0.5 - 1.0 / u + l / u2};
}

std::array<double, 3> rho_mass_element(double a, double b) {
  const double len = b - a;
  return {len * (3.0 * a + b) / 12.0, len * (a + b) / 12.0, len * (a + 3.0 * b) / 12.0};
}

}  // namespace detail

}  // namespace thinlimit
