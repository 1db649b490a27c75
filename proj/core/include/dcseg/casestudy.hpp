#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcseg/io.hpp"
#include "dcseg/poddesign.hpp"
#include "dcseg/segmentation.hpp"
#include "dcseg/simcore.hpp"
#include "dcseg/smallsignal.hpp"

namespace dcseg {

enum class CaseKind { AcBase, DcsConstPQ, DcsFcPodLF, DcsFcPodFCOI };

std::string to_string(CaseKind kind);
CaseKind parse_case(const std::string& name);

/// Picks the least-damped Intra(region) mode inside [f_lo, f_hi].
struct TargetSelector {
  std::string region = "R1";
  double f_lo = 0.1;
  double f_hi = 2.0;
};

const Mode& select_target(const ModalAnalysis& an, const TargetSelector& sel);

struct Scenario {
  std::filesystem::path system_file;
  SystemModel system;
  std::optional<SegmentationPlan> plan;
  std::filesystem::path plan_file;
  CaseKind kind = CaseKind::AcBase;
  std::vector<Event> events;
  SimConfig sim;
  std::vector<StationControl> controllers;  // overrides applied last
  /// Regions whose stations get a damping design; empty designs every
  /// region that hosts a station.
  std::vector<std::string> design_regions;
  TargetSelector target;  // mode reported by the delay sweep
  DesignOptions design;
  FcParams fc;
  std::vector<double> delays{0.0, 0.05, 0.1};
  std::vector<Event> line_trip;
  std::vector<Event> gen_trip;
  std::filesystem::path output_dir;
};

/// Loads a scenario; relative file references resolve against its folder.
Scenario load_scenario(const std::filesystem::path& path);
Json to_json(const Scenario& sc);
Scenario scenario_from_json(const Json& j, const std::filesystem::path& base_dir);

struct CaseModel {
  CaseKind kind = CaseKind::AcBase;
  SystemModel model;              // not yet initialized
  SystemModel baseline;           // segmented with FC, before damping design
  std::vector<StationDesign> designs;
};

/// Builds the system for one of the four cases from the scenario's base
/// system and segmentation plan (designing POD-Q where the case needs it).
CaseModel build_case(const Scenario& sc, CaseKind kind);

struct ModeRow {
  int number = 0;
  Complex lambda;
  double zeta = 0.0;
  double freq = 0.0;
  std::string region;
};

std::vector<ModeRow> mode_table(const ModalAnalysis& an);
std::string format_mode_table(const std::vector<ModeRow>& rows);
Json to_json(const std::vector<ModeRow>& rows);

struct NadirResult {
  double f_min = 1.0;
  double f_final = 1.0;
  double settle_rate = 0.0;  // |df/dt| at t_stop, pu/s
};

/// f_min/f_final of a frequency channel.
NadirResult nadir(const TimeSeries& ts, const std::string& channel);

struct CaseReport {
  CaseKind kind = CaseKind::AcBase;
  std::vector<ModeRow> modes;
  std::vector<StationDesign> designs;
  TimeSeries line_trip;
  TimeSeries gen_trip;
  std::map<std::string, NadirResult> nadir;  // per region COI
};

struct DelayPoint {
  double tau = 0.0;
  double zeta = 0.0;
  double freq = 0.0;
};

struct CaseStudyReport {
  std::vector<CaseReport> cases;
  std::vector<DelayPoint> delay_sweep;
  double baseline_zeta = 0.0;  // target mode, constant-PQ segmented case
};

CaseStudyReport run_case_study(const Scenario& sc);

/// Writes tables (text + JSON) and CSV time series into `dir`.
void write_case_study(const CaseStudyReport& report, const std::filesystem::path& dir);

std::string format_design_table(const std::vector<StationDesign>& designs);
Json to_json(const std::vector<StationDesign>& designs);

}  // namespace dcseg
