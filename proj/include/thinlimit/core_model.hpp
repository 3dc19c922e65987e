#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace thinlimit {

enum class BoundaryCondition { Neumann, DirichletLateral };

std::string_view to_string(BoundaryCondition bc);
BoundaryCondition boundary_condition_from_string(std::string_view text);

/// Sheet indices of the limit domain: the annulus r < |x| < R and the two
/// stacked copies of the disk |x| < r (upper one of thickness h2, lower h3).
enum Sheet : int { kAnnulus = 0, kUpperDisk = 1, kLowerDisk = 2 };
inline constexpr int kSheets = 3;

struct GridSizes {
  int n1 = 512;  ///< nodes on (r, R)
  int n2 = 512;  ///< nodes on (0, r), shared by both disks
};

/// Cylinder of radius R and height h1 with a coaxial cylindrical notch of
/// radius r removed between heights h3 and h1 - h2.
struct AnnulusStackConfig {
  double r = 1.0;
  double R = 2.0;
  std::array<double, 3> h{1.0, 0.3, 0.3};
  BoundaryCondition bc = BoundaryCondition::Neumann;
  GridSizes grid{};

  /// Throws ConfigError naming the offending field.
  void validate() const;

  double interval_lo(int sheet) const { return sheet == kAnnulus ? r : 0.0; }
  double interval_hi(int sheet) const { return sheet == kAnnulus ? R : r; }
  /// Planar area of sheet j.
  double sheet_area(int sheet) const;
  /// Sum of h_j |omega_j|: the volume of the notched cylinder.
  double weighted_area() const;
};

AnnulusStackConfig config_from_json(const nlohmann::json& doc);
/// Parses JSON text; syntax errors are reported with line/column.
AnnulusStackConfig parse_config(std::string_view text);
AnnulusStackConfig load_config(const std::string& path);
nlohmann::json to_json(const AnnulusStackConfig& config);

/// `count` nodes on [a, b] clustered at both ends by a cosine map.
std::vector<double> graded_nodes(double a, double b, int count);

/// Weights of composite Simpson quadrature on an arbitrary increasing grid.
/// Pairs of intervals use the nonuniform three-point rule; an odd interval
/// count closes with a quadratic through the last three nodes.
std::vector<double> quadrature_weights(std::span<const double> nodes);

/// Radial grids of I1 = (r, R), I2 = I3 = (0, r) with their quadrature
/// weights and the sheet thicknesses that weight the limit inner product.
struct BranchedGrid {
  double r = 0.0;
  double R = 0.0;
  std::array<double, 3> h{};
  std::array<std::vector<double>, 3> nodes;
  std::array<std::vector<double>, 3> weights;

  static std::shared_ptr<const BranchedGrid> make(const AnnulusStackConfig& config);
  static std::shared_ptr<const BranchedGrid> make(const AnnulusStackConfig& config, GridSizes sizes);
  /// Validates endpoints and monotonicity; throws ConfigError.
  static std::shared_ptr<const BranchedGrid> from_nodes(double r, double R, std::array<double, 3> h,
                                                        std::array<std::vector<double>, 3> nodes);

  bool same_as(const BranchedGrid& other) const;
};

using GridPtr = std::shared_ptr<const BranchedGrid>;

/// Triple (v1, v2, v3) of radial profiles sampled on a BranchedGrid.
class BranchedRadialFunction {
 public:
  BranchedRadialFunction(GridPtr grid, std::array<std::vector<double>, 3> values);

  static BranchedRadialFunction zero(GridPtr grid);
  static BranchedRadialFunction sample(GridPtr grid, const std::function<double(int sheet, double rho)>& f);

  const BranchedGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values(int sheet) const { return values_[static_cast<std::size_t>(sheet)]; }
  std::span<const double> nodes(int sheet) const { return grid_->nodes[static_cast<std::size_t>(sheet)]; }

  /// Trace at rho = r as seen from the given sheet.
  double interface_value(int sheet) const;
  /// Derivative at rho = r from inside the sheet (one-sided, second order).
  double interface_derivative(int sheet) const;
  /// v1'(R), one-sided second order.
  double outer_derivative() const;
  double max_abs() const;

  BranchedRadialFunction scaled(double factor) const;

 private:
  GridPtr grid_;
  std::array<std::vector<double>, 3> values_;
};

/// Sum_j h_j int_{I_j} rho a_j b_j drho.
double weighted_inner_product(const BranchedRadialFunction& a, const BranchedRadialFunction& b);

/// Sum_j h_j int rho a_j' b_j' + n^2 Sum_j h_j int a_j b_j / rho, evaluated
/// exactly for the piecewise-linear interpolants of the samples. For n != 0
/// the disk profiles must vanish at the origin, else IntegralDiverges.
double energy_form(const BranchedRadialFunction& a, const BranchedRadialFunction& b, int n);

/// max(|v1(r) - v2(r)|, |v1(r) - v3(r)|)
double compatibility_residual(const BranchedRadialFunction& a);

/// |h1 v1'(r) - h2 v2'(r) - h3 v3'(r)|
double balance_residual(const BranchedRadialFunction& a);

namespace detail {

/// Exact integrals of the two linear hat functions on [a, b] against the
/// weight 1/rho: {int phi_a^2/rho, int phi_a phi_b/rho, int phi_b^2/rho}.
/// For a == 0 the phi_a^2 entry diverges and is returned as +inf.
std::array<double, 3> inverse_rho_element(double a, double b);

/// Exact {int rho phi_a^2, int rho phi_a phi_b, int rho phi_b^2} on [a, b].
std::array<double, 3> rho_mass_element(double a, double b);

}  // namespace detail

}  // namespace thinlimit
