#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "thinlimit/errors.hpp"
#include "thinlimit/semigroup.hpp"

using namespace thinlimit;

namespace {

AnnulusStackConfig base(BoundaryCondition bc = BoundaryCondition::Neumann, int nodes = 129) {
  AnnulusStackConfig c;
  c.r = 1.0;
  c.R = 2.0;
  c.h = {1.0, 0.3, 0.3};
  c.bc = bc;
  c.grid = {nodes, nodes};
  return c;
}

std::shared_ptr<const Spectrum> spectrum(const AnnulusStackConfig& c, int n_max, int m_max) {
  return std::make_shared<const Spectrum>(compute_spectrum(c, SpectrumOptions{n_max, m_max}));
}

std::shared_ptr<const GalerkinModel> model(const AnnulusStackConfig& c, int n_max, int m_max, ReactionTerm f,
                                           int n_theta = 0) {
  return std::make_shared<const GalerkinModel>(spectrum(c, n_max, m_max), std::move(f), n_theta);
}

ReactionTerm allen_cahn() { return ReactionTerm({0.0, 1.0, 0.0, -1.0}); }

Eigen::VectorXd final_state(const std::shared_ptr<const GalerkinModel>& m, const Eigen::VectorXd& a0, double T,
                            double dt) {
  return run(m, a0, T, dt, 1 << 30).snapshots.back().coeffs;
}

double sup_norm(const GalerkinModel& m, const Eigen::VectorXd& a) {
  double s = 0.0;
  for (const auto& v : m.synthesize(a)) s = std::max(s, v.cwiseAbs().maxCoeff());
  return s;
}

}  // namespace

TEST(ReactionTerm, Hypotheses) {
  auto message = [](const char* text) {
    try {
      ReactionTerm::parse(text).validate();
    } catch (const HypothesisViolation& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(message("0,1,0,-1"), "");
  EXPECT_EQ(message("0,-1"), "");
  EXPECT_EQ(message("0"), "");
  EXPECT_NE(message("0,1").find("(H2)"), std::string::npos);
  EXPECT_NE(message("1,0,-1").find("(H2)"), std::string::npos);
  EXPECT_NE(message("0,1,0,2").find("(H2)"), std::string::npos);
  EXPECT_NE(message("0,0,0,0,-1").find("(H1)"), std::string::npos);
  EXPECT_NE(message("0,0,0,0,0,-1").find("(H1)"), std::string::npos);
  EXPECT_THROW(ReactionTerm::parse("0,x"), ConfigError);
  EXPECT_THROW(ReactionTerm::parse(""), ConfigError);
}

TEST(ReactionTerm, EvaluationAndPrimitive) {
  const auto f = allen_cahn();
  EXPECT_EQ(f.degree(), 3);
  EXPECT_DOUBLE_EQ(f(2.0), 2.0 - 8.0);
  EXPECT_DOUBLE_EQ(f.primitive(2.0), 2.0 - 4.0);
  EXPECT_EQ(ReactionTerm({0.0, 0.0}).degree(), -1);
  EXPECT_TRUE(ReactionTerm({0.0, 0.0}).is_zero());
  EXPECT_EQ(ReactionTerm({1.0, 2.0, 0.0}).degree(), 1);
}

TEST(Galerkin, BasisLayoutAndDealiasing) {
  const auto m = model(base(), 3, 4, allen_cahn());
  EXPECT_EQ(m->n_theta(), 4 * 3 + 1);
  std::size_t expected = 0;
  for (const auto& mode : m->spectrum().modes) expected += mode.n == 0 ? 1 : 2;
  EXPECT_EQ(m->size(), expected);
  EXPECT_GE(m->find(2, 1, 1, true), 0);
  EXPECT_EQ(m->find(0, 1, 1, true), -1);
  EXPECT_THROW(GalerkinModel(spectrum(base(), 3, 4), allen_cahn(), 12), ConfigError);
}

TEST(Galerkin, ProjectionInvertsSynthesis) {
  const auto m = model(base(BoundaryCondition::Neumann, 513), 2, 4, allen_cahn());
  Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->size()));
  for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = std::sin(1.0 + k);
  const auto back = m->analyze(m->synthesize(a));
  EXPECT_LT((back - a).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Galerkin, NonlinearTermUnaliased) {
  auto s = spectrum(base(), 2, 3);
  const GalerkinModel tight(s, allen_cahn()), loose(s, allen_cahn(), 40);
  Eigen::VectorXd a(static_cast<Eigen::Index>(tight.size()));
  for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = 0.3 * std::cos(2.0 * k);
  EXPECT_LT((tight.nonlinear_term(a) - loose.nonlinear_term(a)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Step, LinearFlowIsExact) {
  const auto m = model(base(), 2, 4, ReactionTerm({0.0}));
  const int k = m->find(1, 2, 1, true);
  ASSERT_GE(k, 0);
  Eigen::VectorXd a0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->size()));
  a0[k] = 0.7;
  const double lambda = m->basis()[static_cast<std::size_t>(k)].lambda;
  for (double dt : {0.5, 0.1, 0.013}) {
    const auto a = final_state(m, a0, 1.3, dt);
    EXPECT_NEAR(a[k], 0.7 * std::exp(-lambda * 1.3), 1e-14);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (i != k) EXPECT_EQ(a[i], 0.0);
    }
  }
}

TEST(Step, ConstantStateUnchangedByHeatFlow) {
  const auto m = model(base(), 2, 4, ReactionTerm({0.0}));
  Eigen::VectorXd a0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->size()));
  a0[m->find(0, 0, 1)] = 2.5;
  EXPECT_EQ(final_state(m, a0, 5.0, 0.01), a0);
}

TEST(Step, MatchesFineStepReference) {
  // Small multiple of the first non-constant mode; the reference uses dt/100.
  // The global error constant is about 1.6 relative per unit dt here.
  const auto m = model(base(BoundaryCondition::Neumann, 17), 0, 2, allen_cahn());
  Eigen::VectorXd a0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->size()));
  a0[m->find(0, 1, 1)] = 1e-2;
  const double dt = 4e-6;
  const auto coarse = final_state(m, a0, 1.0, dt);
  const auto fine = final_state(m, a0, 1.0, dt / 100.0);
  EXPECT_LT((coarse - fine).norm(), 1e-5 * fine.norm());
}

TEST(Step, BlowupDetected) {
  const auto m = model(base(), 0, 2, ReactionTerm({0.0, 0.0, 1.0}));
  Eigen::VectorXd a0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->size()));
  a0[m->find(0, 0, 1)] = 100.0;
  EXPECT_THROW(final_state(m, a0, 1.0, 1e-3), BlowupDetected);
}

TEST(Step, RejectsBadArguments) {
  const auto m = model(base(), 0, 2, allen_cahn());
  const Eigen::VectorXd a0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->size()));
  EXPECT_THROW(run(m, a0, 0.0, 0.1, 1), ConfigError);
  EXPECT_THROW(run(m, a0, 1.0, -0.1, 1), ConfigError);
  EXPECT_THROW(run(m, a0, 1.0, 0.1, 0), ConfigError);
  EXPECT_THROW(run(m, Eigen::VectorXd::Zero(1), 1.0, 0.1, 1), ConfigError);
}

TEST(Run, StepCountAndSnapshots) {
  const auto m = model(base(), 0, 2, allen_cahn());
  const Eigen::VectorXd a0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->size()));
  const auto tr = run(m, a0, 1.0, 0.03, 10);
  EXPECT_EQ(tr.steps, 34);
  EXPECT_DOUBLE_EQ(tr.dt, 1.0 / 34);
  ASSERT_EQ(tr.snapshots.size(), 5u);
  EXPECT_EQ(tr.snapshots.front().t, 0.0);
  EXPECT_DOUBLE_EQ(tr.snapshots.back().t, 1.0);
  EXPECT_EQ(tr.series.size(), tr.snapshots.size());
}

TEST(Diagnostics, ZeroState) {
  const auto m = model(base(), 2, 3, allen_cahn());
  const SimState s{m, {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->size())), 0.0}, 0.1};
  const auto d = diagnostics(s);
  EXPECT_EQ(d.mass, 0.0);
  EXPECT_EQ(d.energy, 0.0);
  EXPECT_EQ(d.compat_residual, 0.0);
}

TEST(Diagnostics, ConstantStateClosedForm) {
  const auto c = base();
  const auto m = model(c, 2, 3, allen_cahn());
  const double value = 0.8, volume = c.weighted_area();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->size()));
  a[m->find(0, 0, 1)] = value * std::sqrt(volume);
  const auto d = diagnostics(SimState{m, {a, 0.0}, 0.1});
  EXPECT_NEAR(d.mass, value * volume, 1e-10 * volume);
  EXPECT_NEAR(d.energy, -volume * allen_cahn().primitive(value), 1e-10 * volume);
  EXPECT_LT(d.compat_residual, 1e-12);
}

TEST(Diagnostics, RandomStateCompatible) {
  const auto m = model(base(), 4, 6, allen_cahn());
  const auto a = initial_coefficients(*m, InitialData::parse("random:17,2"));
  EXPECT_LT(diagnostics(SimState{m, {a, 0.0}, 0.1}).compat_residual, 1e-6);
}

TEST(Run, HeatFlowConservesMass) {
  const auto m = model(base(), 4, 8, ReactionTerm({0.0}));
  const auto a0 = initial_coefficients(*m, InitialData::parse("gauss:1,0.5,0.2,0.4"));
  const auto tr = run(m, a0, 1.0, 1e-3, 100);
  const double m0 = tr.series.front().second.mass;
  for (const auto& [t, d] : tr.series) EXPECT_LT(std::abs(d.mass - m0), 1e-8 * std::abs(m0)) << t;
}

TEST(Run, EnergyNonincreasing) {
  const auto m = model(base(), 3, 6, allen_cahn());
  const auto a0 = initial_coefficients(*m, InitialData::parse("gauss:1.5,0.5,0,0.5"));
  const auto tr = run(m, a0, 1.0, 1e-3, 20);
  for (std::size_t i = 1; i < tr.series.size(); ++i) {
    EXPECT_LE(tr.series[i].second.energy, tr.series[i - 1].second.energy + 1e-6) << tr.series[i].first;
  }
}

TEST(Run, DirichletSheetsDecoupled) {
  const auto m = model(base(BoundaryCondition::DirichletLateral), 2, 4, allen_cahn());
  const auto a0 = initial_coefficients(*m, InitialData::parse("random:5,1"));
  Eigen::VectorXd a1 = a0;
  for (std::size_t k = 0; k < m->size(); ++k) {
    const auto& s = m->basis()[k].support;
    if (s[kUpperDisk] && !s[kAnnulus] && !s[kLowerDisk]) a1[static_cast<Eigen::Index>(k)] += 0.25 * std::cos(1.0 * k);
  }
  ASSERT_NE(a0, a1);
  const auto x = final_state(m, a0, 0.5, 1e-2);
  const auto y = final_state(m, a1, 0.5, 1e-2);
  const auto vx = m->synthesize(x), vy = m->synthesize(y);
  EXPECT_EQ(vx[kAnnulus], vy[kAnnulus]);
  EXPECT_EQ(vx[kLowerDisk], vy[kLowerDisk]);
  EXPECT_NE(vx[kUpperDisk], vy[kUpperDisk]);
  for (std::size_t k = 0; k < m->size(); ++k) {
    if (!m->basis()[k].support[kUpperDisk]) EXPECT_EQ(x[static_cast<Eigen::Index>(k)], y[static_cast<Eigen::Index>(k)]);
  }
}

TEST(Run, FirstOrderInTime) {
  const auto m = model(base(), 2, 4, allen_cahn());
  const auto a0 = initial_coefficients(*m, InitialData::parse("gauss:1,0.5,0,0.5"));
  const auto ref = final_state(m, a0, 1.0, 1e-4);
  const double e1 = (final_state(m, a0, 1.0, 1e-2) - ref).norm();
  const double e2 = (final_state(m, a0, 1.0, 5e-3) - ref).norm();
  EXPECT_GE(e1 / e2, 1.7);
  EXPECT_LE(e1 / e2, 2.3);
}

TEST(Run, DissipativeBound) {
  const auto m = model(base(), 2, 4, allen_cahn());
  for (int seed = 1; seed <= 10; ++seed) {
    auto a0 = initial_coefficients(*m, InitialData::parse("random:" + std::to_string(seed)));
    a0 *= 5.0 / sup_norm(*m, a0);
    ASSERT_LE(sup_norm(*m, a0), 5.0 + 1e-12);
    const auto a = final_state(m, a0, 20.0, 5e-3);
    EXPECT_LE(sup_norm(*m, a), 2.0) << seed;
  }
}

TEST(Run, TruncationConsistency) {
  const auto c = base();
  const auto small = model(c, 2, 4, allen_cahn());
  const auto large = model(c, 4, 8, allen_cahn());
  const InitialData init = InitialData::parse("gauss:0.5,0.3,0,0.8");
  const auto as = final_state(small, initial_coefficients(*small, init), 1.0, 1e-3);
  const auto al = final_state(large, initial_coefficients(*large, init), 1.0, 1e-3);
  Eigen::VectorXd diff = al;
  for (std::size_t k = 0; k < small->size(); ++k) {
    const auto& b = small->basis()[k];
    const int j = large->find(b.n, b.m, b.ell, b.sine);
    ASSERT_GE(j, 0);
    diff[j] -= as[static_cast<Eigen::Index>(k)];
  }
  EXPECT_LT(diff.norm(), 1e-3);
}

TEST(InitialData, ParsingAndErrors) {
  EXPECT_EQ(InitialData::parse("const:2").kind, InitialData::Kind::Constant);
  const auto mode = InitialData::parse("mode:2,1,1,0.5,sin");
  EXPECT_EQ(mode.kind, InitialData::Kind::Mode);
  EXPECT_TRUE(mode.sine);
  EXPECT_EQ(mode.params, (std::vector<double>{2, 1, 1, 0.5}));
  EXPECT_EQ(InitialData::parse("random:3").kind, InitialData::Kind::Random);
  EXPECT_THROW(InitialData::parse("gauss:1,2"), ConfigError);
  EXPECT_THROW(InitialData::parse("gauss:1,0,0,0"), ConfigError);
  EXPECT_THROW(InitialData::parse("wave:1"), ConfigError);
  EXPECT_THROW(InitialData::parse("const"), ConfigError);
  const auto m = model(base(), 1, 2, allen_cahn());
  EXPECT_THROW(initial_coefficients(*m, InitialData::parse("mode:5,1,1")), ConfigError);
}

TEST(InitialData, CoefficientFile) {
  const auto m = model(base(), 1, 2, allen_cahn());
  const auto path = std::filesystem::temp_directory_path() / "thinlimit_coeffs_test.csv";
  {
    std::ofstream out(path);
    out << "n,m,ell,part,value\n1,1,1,sin,0.25\n0,0,1,cos,1.5\n";
  }
  const auto a = initial_coefficients(*m, InitialData::parse("coeffs:" + path.string()));
  EXPECT_EQ(a[m->find(1, 1, 1, true)], 0.25);
  EXPECT_EQ(a[m->find(0, 0, 1)], 1.5);
  EXPECT_EQ(a.cwiseAbs().sum(), 1.75);
  {
    std::ofstream out(path);
    out << "n,m,ell,part,value\n1,1,1,tan,0.25\n";
  }
  EXPECT_THROW(initial_coefficients(*m, InitialData::parse("coeffs:" + path.string())), ConfigError);
  std::filesystem::remove(path);
}

TEST(Output, CsvHeaders) {
  const auto m = model(base(BoundaryCondition::Neumann, 9), 1, 1, allen_cahn());
  const Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->size()));
  const auto snap = snapshot_csv(*m, a);
  EXPECT_EQ(snap.substr(0, snap.find('\n')), "sheet,rho,theta,value");
  EXPECT_EQ(std::count(snap.begin(), snap.end(), '\n'), 1 + 3 * 9 * m->n_theta());
  const auto tr = run(m, a, 0.1, 0.05, 1);
  const auto series = series_csv(tr);
  EXPECT_EQ(series.substr(0, series.find('\n')), "t,mass,energy,compat_residual");
  EXPECT_EQ(std::count(series.begin(), series.end(), '\n'), 4);
}
