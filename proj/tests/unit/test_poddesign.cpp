#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dcseg/casestudy.hpp"
#include "dcseg/poddesign.hpp"
#include "test_util.hpp"

using namespace dcseg;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

LinearModel from_matrix(const Eigen::MatrixXd& a) {
  LinearModel lin;
  lin.a = a;
  for (Eigen::Index k = 0; k < a.rows(); ++k) lin.state_labels.push_back({"x", std::to_string(k)});
  return lin;
}

using EigenAtGain = std::function<std::pair<std::vector<Mode>, std::vector<StateLabel>>(double)>;

EigenAtGain from_family(const std::function<Eigen::MatrixXd(double)>& a_of_k) {
  return [a_of_k](double k) {
    const auto lin = from_matrix(a_of_k(k));
    return std::make_pair(eigensolve(lin), lin.state_labels);
  };
}

// Oscillator with gain-proportional damping injection.
constexpr double kW = 4.5, kSigma = 0.2, kB = 0.01;

Eigen::MatrixXd damped(double k) {
  Eigen::MatrixXd a(2, 2);
  a << 0.0, 1.0, -kW * kW, -2.0 * kSigma - k * kB;
  return a;
}

Complex damped_sensitivity() {
  const double wd = std::sqrt(kW * kW - kSigma * kSigma);
  return Complex(-kB / 2.0, -kSigma * kB / (2.0 * wd));
}

SensitivityEstimate estimate(const std::function<Eigen::MatrixXd(double)>& fam, double dk) {
  const auto f = from_family(fam);
  const auto [modes, labels] = f(0.0);
  const Mode* target = &modes.front();
  for (const auto& m : modes) {
    if (m.lambda.imag() > target->lambda.imag()) target = &m;
  }
  return numerical_sensitivity(f, *target, labels, dk);
}

const Scenario& scenario() {
  static const Scenario sc = load_scenario(data_file("scenarios/case_study.json"));
  return sc;
}

}  // namespace

TEST(Sensitivity, OneStateIsExact) {
  for (double dk : {20.0, 2.0, -3.5}) {
    const auto est = estimate(
        [](double k) {
          Eigen::MatrixXd a(1, 1);
          a << -2.0 + 0.3 * k;
          return a;
        },
        dk);
    EXPECT_NEAR(est.s_nc.real(), 0.3, 1e-12);
    EXPECT_NEAR(est.s_nc.imag(), 0.0, 1e-12);
  }
}

TEST(Sensitivity, TwoStateClosedForm) {
  const Complex s = damped_sensitivity();
  const auto e20 = estimate(damped, 20.0);
  const auto e2 = estimate(damped, 2.0);
  EXPECT_LT(std::abs(e20.s_nc - s) / std::abs(s), 0.02);
  EXPECT_LT(std::abs(e2.s_nc - s) / std::abs(s), 0.002);
  // the finite step is not trivially exact
  EXPECT_GT(std::abs(e20.s_nc - s) / std::abs(s), 1e-3);
}

TEST(Sensitivity, DecoupledBlockSeesNothing) {
  auto fam = [](double k) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
    a.block<2, 2>(0, 0) << 0.0, 1.0, -20.25, -0.4;
    a.block<2, 2>(2, 2) << 0.0, 1.0, -9.0, -0.3 - k;
    return a;
  };
  EXPECT_LT(std::abs(estimate(fam, 20.0).s_nc), 1e-10);
}

TEST(Sensitivity, ZeroStepRejected) {
  expect_error(ErrorKind::ZeroGainStep, [] { estimate(damped, 0.0); });
}

TEST(Sensitivity, QuotientIdentity) {
  const Complex l0(-0.274, 4.524), l1(-0.301, 4.497);
  const auto est = SensitivityEstimate::from_eigenvalues(l0, l1, 20.0);
  EXPECT_LT(std::abs(est.s_nc * est.delta_k + l0 - l1), 1e-12);
  EXPECT_NEAR(est.phase_nc, std::arg(est.s_nc), 1e-15);
}

TEST(LeadLag, AlreadyAligned) {
  const auto ll = design_leadlag(kPi, 2, 4.524);
  EXPECT_NEAR(ll.a_q, 1.0, 1e-15);
  EXPECT_NEAR(ll.t_q1, 1.0 / 4.524, 1e-15);
  EXPECT_NEAR(ll.phi_per_stage, 0.0, 1e-15);
}

TEST(LeadLag, NinetyDegreesTwoStages) {
  const auto ll = design_leadlag(90.0 * kDeg, 2, 4.524);
  EXPECT_TRUE(ll.lead);
  EXPECT_NEAR(ll.phi_per_stage, 45.0 * kDeg, 1e-12);
  EXPECT_NEAR(ll.a_q, 0.17157, 1e-5);
  EXPECT_NEAR(ll.t_q1, 0.5336, 1e-4);
  EXPECT_NEAR(ll.t_q2, ll.a_q * ll.t_q1, 1e-15);
}

TEST(LeadLag, TimeConstantForNearUnityRatio) {
  // a = 0.999 at 0.716 Hz
  const double w0 = 2.0 * kPi * 0.716;
  const double t1 = 1.0 / (w0 * std::sqrt(0.999));
  EXPECT_LT(std::abs(t1 - 0.2223) / 0.2223, 0.02);
  const double phi = std::asin((1.0 - 0.999) / (1.0 + 0.999));
  const auto ll = design_leadlag(kPi - 2.0 * phi, 2, w0);
  EXPECT_NEAR(ll.a_q, 0.999, 1e-12);
  EXPECT_LT(std::abs(ll.t_q1 - 0.2223) / 0.2223, 0.02);
}

TEST(LeadLag, LagBranch) {
  const auto ll = design_leadlag(-150.0 * kDeg, 2, 3.0);
  EXPECT_FALSE(ll.lead);
  EXPECT_GT(ll.a_q, 1.0);
  EXPECT_NEAR(ll.phi_per_stage, 15.0 * kDeg, 1e-12);
  EXPECT_NEAR(ll.a_q, (1.0 + std::sin(15.0 * kDeg)) / (1.0 - std::sin(15.0 * kDeg)), 1e-12);
}

TEST(LeadLag, ExcessivePhase) {
  expect_error(ErrorKind::ExcessivePhaseRequirement, [] { design_leadlag(5.0 * kDeg, 2, 3.0); });
  EXPECT_NO_THROW(design_leadlag(5.0 * kDeg, 3, 3.0));
}

TEST(Compensation, ReachesOneEightyOnTheImaginaryAxis) {
  const double w0 = 4.524;
  const auto est = SensitivityEstimate::from_eigenvalues(Complex(0.0, w0), Complex(0.0, w0 + 0.02), 20.0);
  ASSERT_NEAR(est.phase_nc, 90.0 * kDeg, 1e-12);
  const auto ll = design_leadlag(est.phase_nc, 2, w0);
  const Complex s = compensated_sensitivity(est, ll, Complex(0.0, w0));
  EXPECT_LT(std::abs(std::abs(std::arg(s)) - kPi), 1e-9);
  EXPECT_NEAR(std::abs(s), std::abs(est.s_nc) / ll.a_q, 1e-12);
}

TEST(Compensation, UnityRatioLeavesSensitivity) {
  const auto est = SensitivityEstimate::from_eigenvalues(Complex(-0.3, 4.0), Complex(-0.35, 4.01), 20.0);
  LeadLagDesign ll;
  ll.a_q = 1.0;
  ll.t_q1 = ll.t_q2 = 0.25;
  EXPECT_EQ(compensated_sensitivity(est, ll, Complex(-0.3, 4.0)), est.s_nc);
}

TEST(Compensation, NeverWorsensAlignment) {
  const Complex l0(-0.25, 4.0);
  for (double ph = -170.0; ph <= 170.0; ph += 10.0) {
    const auto est = SensitivityEstimate::from_eigenvalues(l0, l0 + std::polar(0.01, ph * kDeg), 20.0);
    LeadLagDesign ll;
    try {
      ll = design_leadlag(est.phase_nc, 2, l0.imag());
    } catch (const Error&) {
      continue;
    }
    const Complex s = compensated_sensitivity(est, ll, Complex(0.0, l0.imag()));
    EXPECT_LE(kPi - std::abs(std::arg(s)), kPi - std::abs(est.phase_nc) + 1e-9) << ph;
  }
}

TEST(Gain, TargetArithmetic) {
  const Complex l0(-0.274, 4.524);
  const auto t = DesignTarget::make(l0, 0.15);
  EXPECT_NEAR(t.lambda_d.real(), -0.6786, 1e-4);
  EXPECT_EQ(t.lambda_d.imag(), 4.524);
  EXPECT_NEAR(std::abs(t.lambda_d - l0), 0.4046, 1e-4);
  const auto g = compute_gain(l0, t.lambda_d, std::polar(0.002, kPi));
  EXPECT_NEAR(g.k_q, 202.3, 0.05);
  EXPECT_EQ(g.gamma, 1);
  EXPECT_FALSE(g.saturated);
}

TEST(Gain, ClampedAtLimit) {
  const Complex l0(-0.274, 4.524);
  const auto t = DesignTarget::make(l0, 0.15);
  const auto g = compute_gain(l0, t.lambda_d, std::polar(0.0005, kPi));
  EXPECT_EQ(g.k_q, 400.0);
  EXPECT_TRUE(g.saturated);
  EXPECT_NEAR(std::abs(t.lambda_d - l0) / 0.0005, 809.2, 0.1);
}

TEST(Gain, DestabilizingDirectionFlipsSign) {
  const Complex l0(-0.274, 4.524);
  const auto t = DesignTarget::make(l0, 0.15);
  const auto g = compute_gain(l0, t.lambda_d, Complex(0.002, 0.0));
  EXPECT_EQ(g.gamma, -1);
  EXPECT_LT(g.k_q, 0.0);
  expect_error(ErrorKind::ZeroSensitivity, [&] { compute_gain(l0, t.lambda_d, Complex(0.0, 0.0)); });
}

TEST(FixtureDesign, SmallerStepAgrees) {
  const auto cm = build_case(scenario(), CaseKind::DcsFcPodFCOI);
  const auto eq = initialize(cm.baseline);
  const auto an = analyze(eq.model, eq.x);
  const Mode& target = select_target(an, scenario().target);
  int checked = 0;
  for (const auto& l : cm.baseline.hvdc_links) {
    for (const auto* st : {&l.station_1, &l.station_2}) {
      if (cm.baseline.region_of_bus(st->bus) != scenario().target.region) continue;
      const auto a = numerical_sensitivity(cm.baseline, st->bus, PodVariant::FCOI, target,
                                           an.lin.state_labels, 2.0);
      const auto b = numerical_sensitivity(cm.baseline, st->bus, PodVariant::FCOI, target,
                                           an.lin.state_labels, 0.2);
      EXPECT_LT(std::abs(a.s_nc - b.s_nc) / std::abs(b.s_nc), 0.05) << "bus " << st->bus;
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(FixtureDesign, ZeroGainReproducesBaseline) {
  const auto cm = build_case(scenario(), CaseKind::DcsFcPodLF);
  const auto eq = initialize(cm.baseline);
  const auto an = analyze(eq.model, eq.x);
  const Mode& target = select_target(an, scenario().target);
  std::vector<StationDesign> designs;
  for (const auto& l : cm.baseline.hvdc_links) {
    auto d = design_station(cm.baseline, l.station_1.bus, PodVariant::LF, target, an.lin.state_labels);
    d.params.k_q = 0.0;
    d.gain.k_q = 0.0;
    designs.push_back(d);
  }
  for (const auto& c : verify_design(cm.baseline, designs, an)) {
    EXPECT_LT(std::abs(c.lambda_after - c.lambda_before), 1e-6);
  }
}

TEST(FixtureDesign, DesignedModesImprove) {
  const auto cm = build_case(scenario(), CaseKind::DcsFcPodFCOI);
  if (cm.designs.empty()) GTEST_SKIP() << "frequency control alone meets the damping target";
  const auto eq = initialize(cm.baseline);
  const auto an = analyze(eq.model, eq.x);
  const Mode& target = select_target(an, scenario().target);
  for (const auto& c : verify_design(cm.baseline, cm.designs, an)) {
    if (std::abs(c.lambda_before - target.lambda) < 1e-9) {
      EXPECT_GT(c.zeta_after, c.zeta_before);
    } else {
      EXPECT_LT(std::abs(c.zeta_after - c.zeta_before), 0.05);
    }
  }
  for (const auto& d : cm.designs) EXPECT_LE(std::abs(d.gain.k_q), scenario().design.k_max);
}
