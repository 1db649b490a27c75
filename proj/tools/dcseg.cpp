#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dcseg/casestudy.hpp"
#include "dcseg/error.hpp"
#include "dcseg/io.hpp"

namespace fs = std::filesystem;
using namespace dcseg;

namespace {

struct Common {
  std::string scenario;
  std::string out;
  std::string case_name;
  std::optional<double> tol;
  std::optional<double> dt;
  std::optional<double> tstop;
  bool json = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--scenario", c.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory for JSON/CSV files");
  cmd->add_option("--case", c.case_name,
                  "ac_base | dcs_const_pq | dcs_fc_pod_lf | dcs_fc_pod_fcoi (default: scenario's)");
  cmd->add_option("--tol", c.tol, "Power-flow mismatch tolerance, pu")->check(CLI::PositiveNumber);
  cmd->add_option("--dt", c.dt, "Integration step, s")->check(CLI::PositiveNumber);
  cmd->add_option("--tstop", c.tstop, "Simulation end time, s")->check(CLI::PositiveNumber);
  cmd->add_flag("--json", c.json, "Print JSON to stdout instead of text tables");
}

Scenario load(const Common& c) {
  Scenario sc = load_scenario(c.scenario);
  if (!c.case_name.empty()) sc.kind = parse_case(c.case_name);
  if (c.dt) sc.sim.dt = *c.dt;
  if (c.tstop) sc.sim.t_stop = *c.tstop;
  sc.sim.validate();
  return sc;
}

double pf_tol(const Common& c) { return c.tol.value_or(1e-10); }

void emit(const Common& c, const std::string& name, const std::string& text, const Json& j) {
  if (c.json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << text;
  }
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    write_text_file(fs::path(c.out) / (name + ".txt"), text);
    write_text_file(fs::path(c.out) / (name + ".json"), canonical_dump(j));
  }
}

int cmd_powerflow(const Common& c) {
  const Scenario sc = load(c);
  const CaseModel cm = build_case(sc, sc.kind);
  const Equilibrium eq = initialize(cm.model, pf_tol(c));
  const auto& pf = eq.power_flow;
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%5s %6s %10s %10s %10s %10s\n", "bus", "region", "V(pu)",
                "ang(deg)", "P(pu)", "Q(pu)");
  os << buf;
  Json rows = Json::array();
  for (std::size_t i = 0; i < pf.bus_ids.size(); ++i) {
    const int id = pf.bus_ids[i];
    const auto& region = cm.model.network.buses[cm.model.network.bus_index(id)].region;
    const double deg = pf.v_ang[i] * 180.0 / std::numbers::pi;
    std::snprintf(buf, sizeof buf, "%5d %6s %10.5f %10.4f %10.4f %10.4f\n", id, region.c_str(),
                  pf.v_mag[i], deg, pf.injection[i].real(), pf.injection[i].imag());
    os << buf;
    rows.push_back({{"bus", id}, {"region", region}, {"v_pu", pf.v_mag[i]}, {"angle_deg", deg},
                    {"p_pu", pf.injection[i].real()}, {"q_pu", pf.injection[i].imag()}});
  }
  std::snprintf(buf, sizeof buf, "iterations %d, max mismatch %.3e pu\n", pf.iterations,
                pf.max_mismatch);
  os << buf;
  Json links = Json::array();
  for (const auto& l : eq.model.hvdc_links) {
    std::snprintf(buf, sizeof buf, "link %s: P(%d) = %.4f pu, P(%d) = %.4f pu (station base)\n",
                  l.name.c_str(), l.station_1.bus, l.station_1.p_set0, l.station_2.bus,
                  l.station_2.p_set0);
    os << buf;
    links.push_back({{"name", l.name},
                     {"station_1", {{"bus", l.station_1.bus}, {"p_set_pu", l.station_1.p_set0}}},
                     {"station_2", {{"bus", l.station_2.bus}, {"p_set_pu", l.station_2.p_set0}}}});
  }
  Json j{{"case", to_string(sc.kind)}, {"buses", rows}, {"iterations", pf.iterations},
         {"max_mismatch_pu", pf.max_mismatch}, {"links", links}};
  emit(c, "powerflow", os.str(), j);
  return 0;
}

int cmd_modes(const Common& c) {
  const Scenario sc = load(c);
  const CaseModel cm = build_case(sc, sc.kind);
  const Equilibrium eq = initialize(cm.model, pf_tol(c));
  const ModalAnalysis an = analyze(eq.model, eq.x);
  const auto rows = mode_table(an);
  std::string text = "case " + to_string(sc.kind) + "\n" + format_mode_table(rows);
  if (!cm.designs.empty()) text += format_design_table(cm.designs);
  Json j{{"case", to_string(sc.kind)}, {"modes", to_json(rows)}};
  if (!cm.designs.empty()) j["designs"] = to_json(cm.designs);
  emit(c, "modes", text, j);
  return 0;
}

int cmd_simulate(const Common& c) {
  const Scenario sc = load(c);
  const CaseModel cm = build_case(sc, sc.kind);
  const Equilibrium eq = initialize(cm.model, pf_tol(c));
  const TimeSeries ts = simulate(eq.model, eq.x, sc.events, sc.sim);
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "case %s, %zu samples to t = %.3f s\n", to_string(sc.kind).c_str(),
                ts.time.size(), ts.time.empty() ? 0.0 : ts.time.back());
  os << buf;
  std::snprintf(buf, sizeof buf, "%6s %12s %12s %14s\n", "region", "f_min(Hz)", "f_final(Hz)",
                "df/dt end(Hz/s)");
  os << buf;
  Json jr = Json::object();
  for (const auto& r : eq.model.regions()) {
    const std::string ch = "region." + r + ".fcoi_pu";
    if (!ts.has(ch)) continue;
    const NadirResult n = nadir(ts, ch);
    const double fb = eq.model.base_frequency;
    std::snprintf(buf, sizeof buf, "%6s %12.4f %12.4f %14.2e\n", r.c_str(), fb * n.f_min,
                  fb * n.f_final, fb * n.settle_rate);
    os << buf;
    jr[r] = {{"f_min_pu", n.f_min}, {"f_final_pu", n.f_final}, {"settle_rate_pu_s", n.settle_rate}};
  }
  Json j{{"case", to_string(sc.kind)}, {"regions", jr}, {"samples", ts.time.size()}};
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    std::ofstream csv(fs::path(c.out) / "timeseries.csv");
    ts.write_csv(csv);
  }
  emit(c, "simulate", os.str(), j);
  return 0;
}

int cmd_segment(const Common& c) {
  const Scenario sc = load(c);
  if (!sc.plan) fail(ErrorKind::InvalidInput, "scenario has no segmentation plan");
  const SystemModel seg = segment(sc.system, *sc.plan);
  const Equilibrium eq = initialize(seg, pf_tol(c));
  std::ostringstream os;
  char buf[200];
  const auto islands = seg.network.islands();
  std::snprintf(buf, sizeof buf, "%zu islands after removing %zu AC corridor(s)\n", islands.size(),
                sc.plan->links.size());
  os << buf;
  Json jl = Json::array();
  for (const auto& l : eq.model.hvdc_links) {
    const double s = l.base_mva();
    std::snprintf(buf, sizeof buf,
                  "link %-3s %3d(%s) -> %3d(%s): P = %8.2f MW, rated %6.0f MVA\n", l.name.c_str(),
                  l.station_1.bus, l.station_1.mode == VscMode::PControl ? "P" : "Vdc",
                  l.station_2.bus, l.station_2.mode == VscMode::PControl ? "P" : "Vdc",
                  -l.station_1.p_set0 * s, s);
    os << buf;
    jl.push_back({{"name", l.name},
                  {"from_bus", l.station_1.bus},
                  {"to_bus", l.station_2.bus},
                  {"p_transfer_mw", -l.station_1.p_set0 * s},
                  {"s_rated_mva", s}});
  }
  std::snprintf(buf, sizeof buf, "power flow: %d iterations, max mismatch %.3e pu\n",
                eq.power_flow.iterations, eq.power_flow.max_mismatch);
  os << buf;
  Json j{{"islands", islands}, {"links", jl}};
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    save_system(seg, fs::path(c.out) / "segmented_system.json");
  }
  emit(c, "segment", os.str(), j);
  return 0;
}

struct DesignArgs {
  std::string variant;
  std::optional<std::string> region;
  std::optional<double> f_lo, f_hi, zeta_d, k_max;
};

int cmd_design(const Common& c, const DesignArgs& d) {
  Scenario sc = load(c);
  if (d.variant == "lf") {
    sc.kind = CaseKind::DcsFcPodLF;
  } else if (d.variant == "fcoi") {
    sc.kind = CaseKind::DcsFcPodFCOI;
  } else if (sc.kind != CaseKind::DcsFcPodLF && sc.kind != CaseKind::DcsFcPodFCOI) {
    sc.kind = CaseKind::DcsFcPodFCOI;
  }
  if (d.region) sc.design_regions = {*d.region};
  if (d.f_lo) sc.target.f_lo = *d.f_lo;
  if (d.f_hi) sc.target.f_hi = *d.f_hi;
  if (d.zeta_d) sc.design.zeta_d = *d.zeta_d;
  if (d.k_max) sc.design.k_max = *d.k_max;
  const CaseModel cm = build_case(sc, sc.kind);
  std::ostringstream os;
  os << "case " << to_string(sc.kind) << ", target zeta " << 100.0 * sc.design.zeta_d << " %\n";
  if (cm.designs.empty()) {
    os << "target mode already meets the damping goal; nothing designed\n";
  } else {
    const auto& t = cm.designs.front().target;
    char buf[160];
    std::snprintf(buf, sizeof buf, "target mode: %.4f %+.4fj (zeta %.2f %%, f %.3f Hz)\n",
                  t.lambda0.real(), t.lambda0.imag(), 100.0 * t.zeta0,
                  t.lambda0.imag() / (2.0 * std::numbers::pi));
    os << buf << format_design_table(cm.designs);
  }
  const Json controllers = to_json(cm.designs);
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    write_text_file(fs::path(c.out) / "controllers.json", canonical_dump(controllers));
  }
  emit(c, "pod_design", os.str(), Json{{"case", to_string(sc.kind)}, {"controllers", controllers}});
  return 0;
}

int cmd_case_study(const Common& c) {
  const Scenario sc = load(c);
  const CaseStudyReport rep = run_case_study(sc);
  fs::path dir = c.out.empty() ? sc.output_dir : fs::path(c.out);
  if (dir.empty()) dir = "case_study";
  write_case_study(rep, dir);
  if (c.json) {
    std::cout << read_json_file(dir / "summary.json").dump(2) << "\n";
  } else {
    std::ifstream in(dir / "summary.txt");
    std::cout << in.rdbuf();
    std::cout << "written to " << dir.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DC segmentation and POD-Q design toolkit"};
  app.require_subcommand(1);
  Common common;
  DesignArgs design;

  auto* pf = app.add_subcommand("powerflow", "Solve the power flow of a case");
  auto* modes = app.add_subcommand("modes", "Eigenvalue table of a case");
  auto* sim = app.add_subcommand("simulate", "Time-domain simulation of the scenario events");
  auto* seg = app.add_subcommand("segment", "Apply the segmentation plan and report the links");
  auto* des = app.add_subcommand("design-pod", "Design POD-Q controllers for a target mode");
  auto* cs = app.add_subcommand("case-study", "Run the four-case comparison");
  for (auto* cmd : {pf, modes, sim, seg, des, cs}) add_common(cmd, common);
  des->add_option("--variant", design.variant, "lf | fcoi")->check(CLI::IsMember({"lf", "fcoi"}));
  des->add_option("--region", design.region, "Region hosting the target mode");
  des->add_option("--f-lo", design.f_lo, "Lower edge of the target frequency window, Hz");
  des->add_option("--f-hi", design.f_hi, "Upper edge of the target frequency window, Hz");
  des->add_option("--zeta-d", design.zeta_d, "Desired damping ratio")->check(CLI::Range(0.0, 1.0));
  des->add_option("--k-max", design.k_max, "Gain limit, pu")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    if (*pf) return cmd_powerflow(common);
    if (*modes) return cmd_modes(common);
    if (*sim) return cmd_simulate(common);
    if (*seg) return cmd_segment(common);
    if (*des) return cmd_design(common, design);
    if (*cs) return cmd_case_study(common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_convergence_failure(e.kind()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
