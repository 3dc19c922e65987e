#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "thinlimit/dispersion.hpp"

namespace thinlimit {

/// Polynomial nonlinearity f(u) = sum_i coeffs[i] u^i.
class ReactionTerm {
 public:
  ReactionTerm() = default;
  explicit ReactionTerm(std::vector<double> coeffs);

  /// Comma separated coefficients, constant term first: "0,1,0,-1".
  static ReactionTerm parse(std::string_view text);

  /// Growth (H1): degree at most 3. Dissipativity (H2): odd degree with a
  /// negative leading coefficient. Throws HypothesisViolation naming the
  /// failed hypothesis. The zero polynomial (pure diffusion) is accepted.
  void validate() const;

  double operator()(double u) const;
  /// Antiderivative with F(0) = 0.
  double primitive(double u) const;
  /// Degree after dropping trailing zeros; -1 for the zero polynomial.
  int degree() const;
  bool is_zero() const { return degree() < 0; }
  const std::vector<double>& coeffs() const { return coeffs_; }

 private:
  std::vector<double> coeffs_;
};

/// One real basis function of the limit space: a radial mode times
/// 1/sqrt(2 pi) (n = 0), cos(n theta)/sqrt(pi) or sin(n theta)/sqrt(pi).
struct BasisFunction {
  int n = 0;
  int m = 0;
  int ell = 1;
  bool sine = false;
  double lambda = 0.0;
  std::size_t mode = 0;  ///< index into Spectrum::modes
  std::array<bool, 3> support{};
};

/// Spectral Galerkin discretisation of u' + A0 u = f(u) in the eigenbasis of
/// a Spectrum, with collocation on (radial grid nodes) x (n_theta angles).
class GalerkinModel {
 public:
  /// n_theta = 0 picks the smallest count for which the angular transform
  /// of f(u) is exact: (deg f + 1) n_max + 1.
  GalerkinModel(std::shared_ptr<const Spectrum> spectrum, ReactionTerm reaction, int n_theta = 0);

  const Spectrum& spectrum() const { return *spectrum_; }
  const ReactionTerm& reaction() const { return reaction_; }
  const std::vector<BasisFunction>& basis() const { return basis_; }
  std::size_t size() const { return basis_.size(); }
  int n_theta() const { return n_theta_; }
  double theta(int l) const;
  const BranchedGrid& grid() const { return *grid_; }

  /// Index of the basis function (n, m, ell, sine), or -1.
  int find(int n, int m, int ell, bool sine = false) const;

  /// Field on each sheet as (radial nodes) x (angles).
  using SheetValues = std::array<Eigen::MatrixXd, 3>;
  SheetValues synthesize(const Eigen::VectorXd& a) const;
  /// Weighted L2 projection of collocation values onto the basis.
  Eigen::VectorXd analyze(const SheetValues& values) const;
  /// Samples g(sheet, rho, theta) and projects it.
  Eigen::VectorXd project(const std::function<double(int sheet, double rho, double theta)>& g) const;

  /// <f(u), phi_k> for every k.
  Eigen::VectorXd nonlinear_term(const Eigen::VectorXd& a) const;

 private:
  std::shared_ptr<const Spectrum> spectrum_;
  ReactionTerm reaction_;
  GridPtr grid_;
  int n_theta_ = 1;
  int harmonics_ = 1;  ///< angular slots: n = 0, then (cos, sin) per n >= 1
  std::vector<BasisFunction> basis_;
  std::vector<int> slot_;          ///< angular slot per basis function
  Eigen::MatrixXd angular_;        ///< n_theta x harmonics
  std::array<Eigen::MatrixXd, 3> profiles_;      ///< radial nodes x basis (support columns only)
  std::array<std::vector<int>, 3> columns_;      ///< basis indices stored in profiles_[j]
  std::array<Eigen::VectorXd, 3> radial_weight_; ///< h_j w_i rho_i
};

/// Branched field: spectral coefficients at time t.
struct BranchedField {
  Eigen::VectorXd coeffs;
  double t = 0.0;
};

struct SimState {
  std::shared_ptr<const GalerkinModel> model;
  BranchedField field;
  double dt = 0.0;
};

/// One exponential Euler step. Throws BlowupDetected once a coefficient
/// leaves [-1e12, 1e12] or stops being finite.
SimState step(const SimState& state);

struct Diagnostics {
  double mass = 0.0;
  double energy = 0.0;
  double compat_residual = 0.0;
};

Diagnostics diagnostics(const SimState& state);

/// Initial data, either closed form (sampled then projected) or given
/// coefficients. Text forms:
///   const:<c>
///   mode:<n>,<m>,<ell>[,<amp>[,sin]]
///   gauss:<amp>,<x0>,<y0>,<width>
///   random:<seed>[,<amp>]
///   coeffs:<csv path with n,m,ell,part,value>
struct InitialData {
  enum class Kind { Constant, Mode, Gauss, Random, Coefficients };
  Kind kind = Kind::Constant;
  std::vector<double> params;
  bool sine = false;
  std::string path;

  static InitialData parse(std::string_view text);
};

Eigen::VectorXd initial_coefficients(const GalerkinModel& model, const InitialData& init);

struct Snapshot {
  double t = 0.0;
  Eigen::VectorXd coeffs;
};

struct Trajectory {
  std::shared_ptr<const GalerkinModel> model;
  double dt = 0.0;  ///< step actually used, T / steps
  long steps = 0;
  std::vector<Snapshot> snapshots;
  std::vector<std::pair<double, Diagnostics>> series;
};

/// Integrates to time T with `ceil(T / dt)` equal steps, keeping a snapshot
/// and diagnostics every `snapshot_every` steps and at both ends.
Trajectory run(std::shared_ptr<const GalerkinModel> model, const Eigen::VectorXd& initial, double T, double dt,
               int snapshot_every);

struct SimulationOptions {
  int n_max = 8;
  int m_max = 16;
  int n_theta = 0;
};

/// Builds the spectrum for config.bc and the Galerkin model, then runs.
Trajectory run(const AnnulusStackConfig& config, const ReactionTerm& reaction, const InitialData& initial, double T,
               double dt, int snapshot_every, const SimulationOptions& options = {});

/// CSV with header sheet,rho,theta,value.
std::string snapshot_csv(const GalerkinModel& model, const Eigen::VectorXd& coeffs);
/// CSV with header t,mass,energy,compat_residual.
std::string series_csv(const Trajectory& trajectory);

}  // namespace thinlimit
