#include <gtest/gtest.h>

#include <cmath>

#include "dcseg/hvdc.hpp"
#include "test_util.hpp"

using namespace dcseg;

namespace {

HvdcLink default_link() {
  HvdcLink l;
  l.name = "A";
  l.station_1.bus = 1;
  l.station_1.mode = VscMode::VdcControl;
  l.station_2.bus = 2;
  l.station_2.mode = VscMode::PControl;
  return l;
}

}  // namespace

TEST(CurrentReferences, ActivePowerOnly) {
  const auto r = current_references(1.0, 0.0, 1.0, 1.0);
  EXPECT_EQ(r.i_d, 1.0);
  EXPECT_EQ(r.i_q, 0.0);
  EXPECT_FALSE(r.limited);
}

TEST(CurrentReferences, NoReactiveSetPointNoReactiveCurrent) {
  for (double p : {-0.8, -0.1, 0.0, 0.4, 0.95}) EXPECT_EQ(current_references(p, 0.0, 0.97, 1.0).i_q, 0.0);
}

TEST(CurrentReferences, ActivePriorityTruncation) {
  const auto r = current_references(0.9, 0.9, 1.0, 1.0);
  EXPECT_NEAR(r.i_d, 0.9, 1e-15);
  EXPECT_NEAR(r.i_q, -std::sqrt(1.0 - 0.81), 1e-12);
  EXPECT_NEAR(r.i_q, -0.43589, 1e-5);
  EXPECT_TRUE(r.limited);
}

TEST(CurrentReferences, ScalesWithVoltage) {
  const auto r = current_references(0.5, -0.2, 0.8, 1.0);
  EXPECT_NEAR(r.i_d, 0.625, 1e-15);
  EXPECT_NEAR(r.i_q, 0.25, 1e-15);
}

TEST(CurrentReferences, CollapsedVoltage) {
  expect_error(ErrorKind::VoltageCollapse, [] { current_references(0.5, 0.0, 0.1, 1.0); });
  expect_error(ErrorKind::VoltageCollapse, [] { current_references(0.5, 0.0, 0.0, 1.0); });
}

TEST(CurrentReferences, MagnitudeNeverExceedsLimit) {
  for (double p = -2.0; p <= 2.0; p += 0.25) {
    for (double q = -2.0; q <= 2.0; q += 0.25) {
      const auto r = current_references(p, q, 0.9, 1.1);
      EXPECT_LE(std::hypot(r.i_d, r.i_q), 1.1 + 1e-12);
    }
  }
}

TEST(Converter, CurrentLag) {
  VscStation st;
  VscState x;
  CurrentRefs refs;
  refs.i_d = 1.0;
  const auto r = vsc_dynamics(st, x, refs, Complex(1.0, 0.0));
  EXPECT_NEAR(r.di_d, 500.0, 1e-9);
  EXPECT_EQ(r.di_q, 0.0);

  x.i_d = 1.0;
  EXPECT_EQ(vsc_dynamics(st, x, refs, Complex(1.0, 0.0)).di_d, 0.0);
}

TEST(Converter, LagSettlesOnRefs) {
  VscStation st;
  VscState x;
  const CurrentRefs refs{0.7, -0.3, false};
  const double dt = 1e-5;
  for (int k = 0; k < 5000; ++k) {  // 25 tau_i
    const auto r = vsc_dynamics(st, x, refs, Complex(1.0, 0.0));
    x.i_d += dt * r.di_d;
    x.i_q += dt * r.di_q;
  }
  EXPECT_NEAR(x.i_d, 0.7, 1e-6);
  EXPECT_NEAR(x.i_q, -0.3, 1e-6);
}

TEST(Converter, InjectionFollowsBusAngle) {
  VscStation st;
  VscState x;
  x.i_d = 0.6;
  x.i_q = -0.2;
  const Complex v = std::polar(0.98, 0.4);
  const auto r = vsc_dynamics(st, x, {}, v);
  const Complex s = v * std::conj(r.injection);
  EXPECT_NEAR(s.real(), r.p_bus, 1e-14);
  EXPECT_NEAR(s.imag(), r.q_bus, 1e-14);
  EXPECT_NEAR(r.p_bus, 0.98 * 0.6, 1e-14);
  EXPECT_NEAR(r.q_bus, 0.98 * 0.2, 1e-14);
  EXPECT_NEAR(r.p_conv - r.p_bus, st.rs * 0.4, 1e-14);
}

TEST(Coupling, Losses) {
  EXPECT_EQ(ac_dc_power_coupling(0.731, 0.8, 0.0, 0.0, 0.0), 0.731);
  EXPECT_EQ(ac_dc_power_coupling(0.5, 0.0, 0.0, 0.3, 0.3), 0.5);
  EXPECT_NEAR(0.7 - ac_dc_power_coupling(0.7, 1.0, 0.01, 0.01, 0.01), 0.03, 1e-15);
}

TEST(DcGrid, RestState) {
  const auto l = default_link();
  const auto d = dc_grid_dynamics(l, 1.0, 1.0, 0.0, 0.0, 0.0);
  EXPECT_EQ(d.dv_dc1, 0.0);
  EXPECT_EQ(d.dv_dc2, 0.0);
  EXPECT_EQ(d.di_line, 0.0);
}

TEST(DcGrid, InductorLaw) {
  auto l = default_link();
  l.line.r_dc = 0.0;
  const auto d = dc_grid_dynamics(l, 1.01, 1.0, 0.0, 0.0, 0.0);
  EXPECT_NEAR(d.di_line, 0.01 / l.l_pu(), 1e-9);
}

TEST(DcGrid, PerUnitConversion) {
  const auto l = default_link();
  const double z = 1070.0 * 1070.0 / 3500.0;
  EXPECT_NEAR(l.r_pu(), 1.6 / z, 1e-15);
  EXPECT_NEAR(l.l_pu(), 0.067 / z, 1e-15);
  EXPECT_NEAR(l.c1_pu(), 305e-6 * z, 1e-15);
}

TEST(DcGrid, ImbalanceDrifts) {
  const auto l = default_link();
  double v1 = 1.0, v2 = 1.0, i = 0.0;
  double prev = 2.0;
  const double dt = 1e-5;
  for (int k = 0; k < 2000; ++k) {
    const auto d = dc_grid_dynamics(l, v1, v2, i, -0.05, 0.0);
    v1 += dt * d.dv_dc1;
    v2 += dt * d.dv_dc2;
    i += dt * d.di_line;
    const double total = l.c1_pu() * v1 * v1 + l.c2_pu() * v2 * v2 + l.l_pu() * i * i;
    EXPECT_LT(total, prev);
    prev = total;
  }
}

TEST(DcGrid, GuardBand) {
  const auto l = default_link();
  expect_error(ErrorKind::DcOvervoltage, [&] { dc_grid_dynamics(l, 1.7, 1.0, 0.0, 0.0, 0.0); });
  expect_error(ErrorKind::DcUndervoltage, [&] { dc_grid_dynamics(l, 1.0, 0.4, 0.0, 0.0, 0.0); });
}

TEST(DcGrid, LosslessSteadyStateBalance) {
  const auto l = default_link();
  // Station 2 pushes p into the DC side; find the line current and voltages
  // that make every derivative vanish, then check the power balance.
  const double p2 = 0.6;
  const double v1 = 1.0;
  const double r = l.r_pu();
  const double v2 = 0.5 * (v1 + std::sqrt(v1 * v1 + 4.0 * r * p2));
  const double i = (v1 - v2) / r;
  const double p1 = i * v1;
  const auto d = dc_grid_dynamics(l, v1, v2, i, p1, p2);
  EXPECT_LT(std::abs(d.dv_dc1), 1e-8);
  EXPECT_LT(std::abs(d.dv_dc2), 1e-8);
  EXPECT_LT(std::abs(d.di_line), 1e-8);
  EXPECT_NEAR(p1 + p2 - r * i * i, 0.0, 1e-12);
}

TEST(VdcPi, Neutral) {
  const auto r = vdc_pi_controller(VscStation{}, 1.0, 1.0, 0.0);
  EXPECT_EQ(r.output, 0.0);
  EXPECT_EQ(r.d_integral, 0.0);
}

TEST(VdcPi, ProportionalStep) {
  const auto r = vdc_pi_controller(VscStation{}, 1.01, 1.0, 0.0);
  EXPECT_NEAR(r.output, 0.1, 1e-12);
  EXPECT_NEAR(r.d_integral, 0.2, 1e-12);
}

TEST(VdcPi, AntiWindup) {
  VscStation st;
  const auto r = vdc_pi_controller(st, 1.05, 1.0, 0.9);
  EXPECT_EQ(r.output, st.p_max);
  EXPECT_TRUE(r.saturated);
  EXPECT_EQ(r.d_integral, 0.0);
  const auto back = vdc_pi_controller(st, 0.95, 1.0, 0.9);
  EXPECT_LT(back.d_integral, 0.0);
}

TEST(Link, NeedsOneStationOfEachMode) {
  auto l = default_link();
  EXPECT_NO_THROW(l.validate());
  l.station_2.mode = VscMode::VdcControl;
  expect_error(ErrorKind::InvalidInput, [&] { l.validate(); });
}
