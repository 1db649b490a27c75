#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dcseg/error.hpp"
#include "dcseg/grid.hpp"
#include "dcseg/io.hpp"
#include "test_util.hpp"

using namespace dcseg;

namespace {

NetworkModel two_bus(double x, double p_load, double q_load = 0.0) {
  NetworkModel n;
  n.buses.push_back({.id = 1, .kind = BusKind::Slack, .region = "R1"});
  n.buses.push_back({.id = 2, .kind = BusKind::PQ, .p_load = p_load, .q_load = q_load, .region = "R1"});
  n.branches.push_back({.from = 1, .to = 2, .r = 0.0, .x = x});
  return n;
}

}  // namespace

TEST(Admittance, SingleSeriesBranch) {
  auto n = two_bus(0.5, 0.0);
  const auto y = build_admittance(n);
  EXPECT_NEAR(std::abs(y(0, 1) - Complex(0.0, 2.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(y(1, 0) - Complex(0.0, 2.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(y(0, 0) - Complex(0.0, -2.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(y(1, 1) - Complex(0.0, -2.0)), 0.0, 1e-12);
}

TEST(Admittance, OpenBranchContributesNothing) {
  auto n = two_bus(0.5, 0.0);
  n.branches[0].status = false;
  EXPECT_EQ(build_admittance(n).norm(), 0.0);
}

TEST(Admittance, ShuntSplitsBetweenEnds) {
  auto n = two_bus(0.5, 0.0);
  n.branches[0].b_sh = 0.2;
  const auto y = build_admittance(n);
  EXPECT_NEAR(y(0, 0).imag(), -2.0 + 0.1, 1e-12);
  EXPECT_NEAR(y(1, 1).imag(), -2.0 + 0.1, 1e-12);
  EXPECT_NEAR(y(0, 1).imag(), 2.0, 1e-12);
}

TEST(Admittance, ZeroImpedanceRejected) {
  auto n = two_bus(0.0, 0.0);
  expect_error(ErrorKind::ZeroImpedanceBranch, [&] { build_admittance(n); });
  n.branches[0].status = false;
  EXPECT_NO_THROW(build_admittance(n));
}

TEST(Admittance, EqualsSumOfStampsAndRemovalIsExact) {
  const SystemModel m = load_system(data_file("two_area.json"));
  const auto& net = m.network;
  const auto full = build_admittance(net);
  const auto idx = net.index_map();
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    ComplexMatrix y = full;
    stamp_branch(y, br, idx.at(br.from), idx.at(br.to), -1.0);
    NetworkModel without = net;
    without.branches.erase(without.branches.begin() + static_cast<long>(k));
    EXPECT_LT((y - build_admittance(without)).cwiseAbs().maxCoeff(), 1e-9) << "branch " << k;
  }
  EXPECT_LT((full - full.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PowerFlow, NoLoadFlatStart) {
  auto n = two_bus(0.1, 0.0);
  const auto pf = solve_power_flow(n);
  EXPECT_LE(pf.iterations, 1);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(pf.v_mag[i], 1.0, 1e-12);
    EXPECT_NEAR(pf.v_ang[i], 0.0, 1e-12);
  }
}

TEST(PowerFlow, TwoBusClosedForm) {
  const double x = 0.1;
  const double p = 0.5;
  const auto pf = solve_power_flow(two_bus(x, p));
  const double theta = 0.5 * std::asin(-2.0 * p * x);
  EXPECT_NEAR(pf.v_ang[1], theta, 1e-8);
  EXPECT_NEAR(pf.v_mag[1], std::cos(theta), 1e-8);
  EXPECT_NEAR(pf.v_mag[1], 0.9987, 5e-5);
  EXPECT_NEAR(pf.v_ang[1] * 180.0 / std::numbers::pi, -2.87, 5e-3);
  EXPECT_LE(pf.max_mismatch, 1e-8);
}

TEST(PowerFlow, BeyondTransferLimitFails) {
  expect_error(ErrorKind::NoConvergence, [] { solve_power_flow(two_bus(0.1, 20.0)); });
}

TEST(PowerFlow, FixtureMismatchWithinTolerance) {
  const SystemModel m = load_system(data_file("two_area.json"));
  PowerFlowOptions opt;
  opt.tol = 1e-10;
  const auto pf = solve_power_flow(m.network, opt);
  EXPECT_LE(pf.max_mismatch, 1e-10);
  EXPECT_LE(power_mismatch(m.network, pf), 1e-10);
  for (double v : pf.v_mag) EXPECT_GT(v, 0.0);
}

TEST(PowerFlow, InvariantToBusOrdering) {
  const SystemModel m = load_system(data_file("two_area.json"));
  PowerFlowOptions opt;
  opt.tol = 1e-10;
  const auto ref = solve_power_flow(m.network, opt);
  NetworkModel shuffled = m.network;
  std::reverse(shuffled.buses.begin(), shuffled.buses.end());
  std::rotate(shuffled.buses.begin(), shuffled.buses.begin() + 3, shuffled.buses.end());
  const auto pf = solve_power_flow(shuffled, opt);
  for (std::size_t i = 0; i < ref.bus_ids.size(); ++i) {
    const auto j = pf.index_of(ref.bus_ids[i]);
    EXPECT_NEAR(pf.v_mag[j], ref.v_mag[i], 1e-9);
    EXPECT_NEAR(pf.v_ang[j], ref.v_ang[i], 1e-9);
  }
}

TEST(PowerFlow, IslandsNeedTheirOwnSlack) {
  auto n = two_bus(0.1, 0.5);
  n.buses.push_back({.id = 3, .kind = BusKind::PQ, .p_load = 0.1, .region = "R2"});
  n.buses.push_back({.id = 4, .kind = BusKind::Slack, .region = "R2"});
  n.branches.push_back({.from = 3, .to = 4, .r = 0.01, .x = 0.1});
  EXPECT_EQ(n.islands().size(), 2u);
  const auto pf = solve_power_flow(n);
  EXPECT_LE(pf.max_mismatch, 1e-8);
  n.buses[3].kind = BusKind::PQ;
  EXPECT_THROW(solve_power_flow(n), Error);
}

TEST(PowerFlow, BranchFlowBalancesAtBothEnds) {
  const auto pf = solve_power_flow(two_bus(0.1, 0.5, 0.2));
  const auto [s12, s21] = branch_flow({.from = 1, .to = 2, .x = 0.1}, pf.voltage(0), pf.voltage(1));
  EXPECT_NEAR(s21.real(), -0.5, 1e-8);
  EXPECT_NEAR(s21.imag(), -0.2, 1e-8);
  EXPECT_NEAR(s12.real() + s21.real(), 0.0, 1e-8);  // lossless
}
