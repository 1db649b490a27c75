#include <gtest/gtest.h>

#include <cmath>

#include "dcseg/casestudy.hpp"
#include "dcseg/segmentation.hpp"
#include "test_util.hpp"

using namespace dcseg;

namespace {

const Scenario& scenario() {
  static const Scenario sc = load_scenario(data_file("scenarios/case_study.json"));
  return sc;
}

// AC flow drawn from bus `at` into the listed branches.
Complex corridor_draw(const SystemModel& m, const PowerFlowSolution& pf,
                      const std::vector<std::pair<int, int>>& corridor, int at) {
  Complex s(0.0, 0.0);
  for (const auto& br : m.network.branches) {
    if (!br.status) continue;
    for (const auto& [a, b] : corridor) {
      if (!((br.from == a && br.to == b) || (br.from == b && br.to == a))) continue;
      const auto [sf, st] = branch_flow(br, pf.voltage(pf.index_of(br.from)), pf.voltage(pf.index_of(br.to)));
      s += br.from == at ? sf : st;
      break;
    }
  }
  return s;
}

}  // namespace

TEST(Segment, SetPointsMatchAcFlows) {
  const auto& sc = scenario();
  const auto ac = initialize(sc.system);
  const auto seg = segment(sc.system, *sc.plan);
  ASSERT_EQ(seg.hvdc_links.size(), sc.plan->links.size());
  for (std::size_t k = 0; k < seg.hvdc_links.size(); ++k) {
    const auto& corridor = sc.plan->links[k].branches;
    for (const auto* st : {&seg.hvdc_links[k].station_1, &seg.hvdc_links[k].station_2}) {
      const Complex drawn = corridor_draw(sc.system, ac.power_flow, corridor, st->bus);
      const double scale = 100.0 / st->s_rated;
      EXPECT_NEAR(st->p_set0, -drawn.real() * scale, 1e-9) << "bus " << st->bus;
      EXPECT_NEAR(st->q_set0, -drawn.imag() * scale, 1e-9) << "bus " << st->bus;
    }
  }
}

TEST(Segment, RemovesCorridorsAndSplitsRegions) {
  const auto& sc = scenario();
  const auto seg = segment(sc.system, *sc.plan);
  std::size_t removed = 0;
  for (const auto& rep : sc.plan->links) removed += rep.branches.size();
  EXPECT_EQ(seg.network.branches.size(), sc.system.network.branches.size() - removed);
  const auto islands = seg.network.islands();
  EXPECT_EQ(islands.size(), 2u);
  for (const auto& isl : islands) {
    int slack = 0;
    for (int id : isl) slack += seg.network.buses[seg.network.bus_index(id)].kind == BusKind::Slack;
    EXPECT_EQ(slack, 1);
  }
}

TEST(Segment, LeavesInputUntouched) {
  const auto& sc = scenario();
  const auto before = sc.system.network.branches.size();
  segment(sc.system, *sc.plan);
  EXPECT_EQ(sc.system.network.branches.size(), before);
}

TEST(Segment, PartialCutIsNotASeparator) {
  const auto& sc = scenario();
  auto plan = *sc.plan;
  plan.links.pop_back();
  expect_error(ErrorKind::NotASeparator, [&] { segment(sc.system, plan); });
}

TEST(Segment, UnknownCorridor) {
  const auto& sc = scenario();
  auto plan = *sc.plan;
  plan.links.front().branches = {{5, 10}};
  plan.links.front().link.station_1.bus = 5;
  plan.links.front().link.station_2.bus = 10;
  expect_error(ErrorKind::TargetNotFound, [&] { segment(sc.system, plan); });
}

TEST(Segment, UndersizedStation) {
  const auto& sc = scenario();
  auto plan = *sc.plan;
  plan.links.front().link.station_1.s_rated = 1.0;
  plan.links.front().link.station_2.s_rated = 1.0;
  expect_error(ErrorKind::RatingExceeded, [&] { segment(sc.system, plan); });
}

TEST(Segment, EmptyPlan) {
  expect_error(ErrorKind::InvalidInput, [] { segment(scenario().system, SegmentationPlan{}); });
}
