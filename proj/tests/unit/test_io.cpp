#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dcseg/io.hpp"
#include "test_util.hpp"

using namespace dcseg;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Io, SystemRoundTripIsByteStable) {
  const auto sys = load_system(data_file("two_area.json"));
  const std::string a = canonical_dump(to_json(sys));
  const std::string b = canonical_dump(to_json(system_from_json(Json::parse(a))));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.back(), '\n');
}

TEST(Io, SaveAndReload) {
  const auto sys = load_system(data_file("two_area.json"));
  const auto path = std::filesystem::temp_directory_path() / "dcseg_io_roundtrip.json";
  save_system(sys, path);
  const auto back = load_system(path);
  EXPECT_EQ(canonical_dump(to_json(back)), slurp(path));
  EXPECT_EQ(back.machines.size(), sys.machines.size());
  EXPECT_EQ(back.network.branches.size(), sys.network.branches.size());
  std::filesystem::remove(path);
}

TEST(Io, PlanRoundTrip) {
  const auto plan = plan_from_json(read_json_file(data_file("two_area_segmentation.json")));
  const auto j = to_json(plan);
  EXPECT_EQ(canonical_dump(to_json(plan_from_json(j))), canonical_dump(j));
  ASSERT_FALSE(plan.links.empty());
  EXPECT_EQ(plan.links.front().link.station_1.mode, VscMode::VdcControl);
}

TEST(Io, EventAndConfigRoundTrip) {
  for (const auto& e : {Event::trip_branch(1.0, 5, 7), Event::trip_machine(2.5, 3)}) {
    const auto j = to_json(e);
    EXPECT_EQ(to_json(event_from_json(j)), j);
  }
  SimConfig cfg;
  cfg.dt = 0.0025;
  cfg.t_stop = 7.0;
  const auto back = sim_config_from_json(to_json(cfg));
  EXPECT_EQ(back.dt, 0.0025);
  EXPECT_EQ(back.t_stop, 7.0);
}

TEST(Io, SystemBaseKeyAliases) {
  auto j = to_json(load_system(data_file("two_area.json")));
  j.erase("system_base_mva");
  j["system_base"] = 250.0;
  EXPECT_EQ(system_from_json(j).network.system_base, 250.0);
  j.erase("system_base");
  EXPECT_EQ(system_from_json(j).network.system_base, 100.0);
}

TEST(Io, RejectsBadInput) {
  auto j = to_json(load_system(data_file("two_area.json")));
  j["buses"][0]["kind"] = "swing-ish";
  expect_error(ErrorKind::InvalidInput, [&] { system_from_json(j); });
  expect_error(ErrorKind::InvalidInput, [] { read_json_file("/nonexistent/x.json"); });
  Json ev{{"kind", "explode"}, {"time", 1.0}};
  expect_error(ErrorKind::InvalidInput, [&] { event_from_json(ev); });
}

TEST(Io, CanonicalDumpSortsKeys) {
  const Json j = Json::parse(R"({"b": 1, "a": {"d": 2, "c": [3, 4]}})");
  EXPECT_EQ(canonical_dump(j), "{\n  \"a\": {\n    \"c\": [\n      3,\n      4\n    ],\n    \"d\": 2\n  },\n  \"b\": 1\n}\n");
}
