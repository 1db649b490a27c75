#include "dcseg/casestudy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "dcseg/error.hpp"

namespace dcseg {

namespace fs = std::filesystem;

std::string to_string(CaseKind kind) {
  switch (kind) {
    case CaseKind::AcBase: return "ac_base";
    case CaseKind::DcsConstPQ: return "dcs_const_pq";
    case CaseKind::DcsFcPodLF: return "dcs_fc_pod_lf";
    case CaseKind::DcsFcPodFCOI: return "dcs_fc_pod_fcoi";
  }
  return "?";
}

CaseKind parse_case(const std::string& name) {
  for (auto k : {CaseKind::AcBase, CaseKind::DcsConstPQ, CaseKind::DcsFcPodLF, CaseKind::DcsFcPodFCOI}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::InvalidInput, "unknown case '" + name + "'");
}

const Mode& select_target(const ModalAnalysis& an, const TargetSelector& sel) {
  const Mode* best = nullptr;
  for (const auto& m : an.modes) {
    if (m.region_class.kind != ModeClassKind::Intra || m.region_class.region != sel.region) continue;
    if (m.freq < sel.f_lo || m.freq > sel.f_hi) continue;
    if (!best || m.zeta < best->zeta) best = &m;
  }
  if (!best) {
    std::ostringstream os;
    os << "no " << sel.region << " mode between " << sel.f_lo << " and " << sel.f_hi << " Hz";
    fail(ErrorKind::TargetNotFound, os.str());
  }
  return *best;
}

namespace {

std::vector<Event> events_from(const Json& j, const char* key) {
  std::vector<Event> out;
  if (j.contains(key)) {
    for (const auto& e : j.at(key)) out.push_back(event_from_json(e));
  }
  return out;
}

Json events_to(const std::vector<Event>& ev) {
  Json a = Json::array();
  for (const auto& e : ev) a.push_back(to_json(e));
  return a;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

Scenario scenario_from_json(const Json& j, const fs::path& base_dir) {
  try {
    Scenario sc;
    if (!j.contains("system")) fail(ErrorKind::InvalidInput, "scenario needs a 'system' entry");
    const auto& sys = j.at("system");
    if (sys.is_string()) {
      sc.system_file = resolve(base_dir, sys.get<std::string>());
      sc.system = load_system(sc.system_file);
    } else {
      sc.system = system_from_json(sys);
    }
    if (j.contains("segmentation") && !j.at("segmentation").is_null()) {
      const auto& seg = j.at("segmentation");
      if (seg.is_string()) {
        sc.plan_file = resolve(base_dir, seg.get<std::string>());
        sc.plan = plan_from_json(read_json_file(sc.plan_file));
      } else {
        sc.plan = plan_from_json(seg);
      }
    }
    sc.kind = parse_case(j.value("case", std::string("ac_base")));
    sc.events = events_from(j, "events");
    if (j.contains("sim")) sc.sim = sim_config_from_json(j.at("sim"));
    if (j.contains("record")) sc.sim.record = j.at("record").get<std::vector<std::string>>();
    if (j.contains("controllers")) {
      for (const auto& c : j.at("controllers")) sc.controllers.push_back(control_from_json(c));
    }
    sc.design_regions = j.value("design_regions", std::vector<std::string>{});
    if (j.contains("target")) {
      const auto& t = j.at("target");
      sc.target.region = t.value("region", sc.target.region);
      sc.target.f_lo = t.value("f_lo", sc.target.f_lo);
      sc.target.f_hi = t.value("f_hi", sc.target.f_hi);
    }
    if (j.contains("design")) {
      const auto& d = j.at("design");
      sc.design.delta_k = d.value("delta_k", sc.design.delta_k);
      sc.design.zeta_d = d.value("zeta_d", sc.design.zeta_d);
      sc.design.n_qs = d.value("n_qs", sc.design.n_qs);
      sc.design.k_max = d.value("k_max", sc.design.k_max);
      sc.design.t_qf = d.value("t_qf", sc.design.t_qf);
      sc.design.t_qw = d.value("t_qw", sc.design.t_qw);
      sc.design.dq_max = d.value("dq_max", sc.design.dq_max);
    }
    if (j.contains("fc")) {
      const auto& f = j.at("fc");
      sc.fc.k_fc = f.value("k_fc", sc.fc.k_fc);
      sc.fc.t_fc = f.value("t_fc", sc.fc.t_fc);
      sc.fc.dp_max = f.value("dp_max", sc.fc.dp_max);
      sc.fc.validate();
    }
    sc.delays = j.value("delays", sc.delays);
    sc.line_trip = events_from(j, "line_trip");
    sc.gen_trip = events_from(j, "gen_trip");
    if (j.contains("output")) sc.output_dir = resolve(base_dir, j.at("output").get<std::string>());
    return sc;
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("malformed scenario: ") + e.what());
  }
}

Scenario load_scenario(const fs::path& path) {
  return scenario_from_json(read_json_file(path), path.parent_path());
}

Json to_json(const Scenario& sc) {
  Json j;
  j["system"] = sc.system_file.empty() ? to_json(sc.system) : Json(sc.system_file.string());
  if (sc.plan) {
    j["segmentation"] = sc.plan_file.empty() ? to_json(*sc.plan) : Json(sc.plan_file.string());
  }
  j["case"] = to_string(sc.kind);
  j["events"] = events_to(sc.events);
  j["sim"] = to_json(sc.sim);
  Json ctl = Json::array();
  for (const auto& c : sc.controllers) ctl.push_back(to_json(c));
  j["controllers"] = ctl;
  j["design_regions"] = sc.design_regions;
  j["target"] = {{"region", sc.target.region}, {"f_lo", sc.target.f_lo}, {"f_hi", sc.target.f_hi}};
  j["design"] = {{"delta_k", sc.design.delta_k}, {"zeta_d", sc.design.zeta_d},
                 {"n_qs", sc.design.n_qs},       {"k_max", sc.design.k_max},
                 {"t_qf", sc.design.t_qf},       {"t_qw", sc.design.t_qw},
                 {"dq_max", sc.design.dq_max}};
  j["fc"] = {{"k_fc", sc.fc.k_fc}, {"t_fc", sc.fc.t_fc}, {"dp_max", sc.fc.dp_max}};
  j["delays"] = sc.delays;
  j["line_trip"] = events_to(sc.line_trip);
  j["gen_trip"] = events_to(sc.gen_trip);
  if (!sc.output_dir.empty()) j["output"] = sc.output_dir.string();
  return j;
}

CaseModel build_case(const Scenario& sc, CaseKind kind) {
  CaseModel cm;
  cm.kind = kind;
  if (kind == CaseKind::AcBase) {
    cm.model = sc.system;
  } else {
    if (!sc.plan) fail(ErrorKind::InvalidInput, "case " + to_string(kind) + " needs a segmentation plan");
    cm.model = segment(sc.system, *sc.plan);
  }
  if (kind == CaseKind::DcsFcPodLF || kind == CaseKind::DcsFcPodFCOI) {
    for (const auto& l : cm.model.hvdc_links) {
      cm.model.controllers.at(l.pcontrol().bus).fc = sc.fc;
    }
    cm.baseline = cm.model;
    const auto eq = initialize(cm.baseline);
    const auto an = analyze(eq.model, eq.x);
    std::vector<std::string> regions = sc.design_regions;
    if (regions.empty()) {
      std::set<std::string> r;
      for (const auto& l : cm.model.hvdc_links) {
        r.insert(cm.model.region_of_bus(l.station_1.bus));
        r.insert(cm.model.region_of_bus(l.station_2.bus));
      }
      regions.assign(r.begin(), r.end());
    }
    const auto variant = kind == CaseKind::DcsFcPodLF ? PodVariant::LF : PodVariant::FCOI;
    for (const auto& region : regions) {
      TargetSelector sel = sc.target;
      sel.region = region;
      const Mode& target = select_target(an, sel);
      if (target.zeta >= sc.design.zeta_d) continue;
      for (const auto& l : cm.model.hvdc_links) {
        for (const auto* st : {&l.station_1, &l.station_2}) {
          if (cm.model.region_of_bus(st->bus) != region) continue;
          cm.designs.push_back(
              design_station(cm.baseline, st->bus, variant, target, an.lin.state_labels, sc.design));
        }
      }
    }
    cm.model = install_designs(cm.baseline, cm.designs);
  } else {
    cm.baseline = cm.model;
  }
  for (const auto& c : sc.controllers) {
    auto& dst = cm.model.controllers.at(c.bus);
    if (c.fc) dst.fc = c.fc;
    if (c.podq) dst.podq = c.podq;
    if (c.delay.enabled || c.delay.tau != 0.0) dst.delay = c.delay;
  }
  return cm;
}

std::vector<ModeRow> mode_table(const ModalAnalysis& an) {
  std::vector<ModeRow> rows;
  int n = 0;
  for (const Mode* m : an.electromechanical()) {
    ModeRow r;
    r.number = ++n;
    r.lambda = m->lambda;
    r.zeta = m->zeta;
    r.freq = m->freq;
    r.region = m->region_class.str();
    rows.push_back(r);
  }
  return rows;
}

std::string format_mode_table(const std::vector<ModeRow>& rows) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%4s %9s %9s  %s\n", "No.", "zeta(%)", "f(Hz)", "region");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%4d %9.2f %9.3f  %s\n", r.number, 100.0 * r.zeta, r.freq,
                  r.region.c_str());
    os << buf;
  }
  return os.str();
}

Json to_json(const std::vector<ModeRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows) {
    a.push_back({{"no", r.number},
                 {"lambda_re", r.lambda.real()},
                 {"lambda_im", r.lambda.imag()},
                 {"zeta", r.zeta},
                 {"freq_hz", r.freq},
                 {"region", r.region}});
  }
  return a;
}

NadirResult nadir(const TimeSeries& ts, const std::string& channel) {
  const auto& c = ts.channel(channel);
  if (c.empty()) fail(ErrorKind::InvalidInput, "empty channel " + channel);
  NadirResult r;
  r.f_min = *std::min_element(c.begin(), c.end());
  r.f_final = c.back();
  if (c.size() >= 2) {
    const double dt = ts.time[ts.time.size() - 1] - ts.time[ts.time.size() - 2];
    r.settle_rate = std::abs(c[c.size() - 1] - c[c.size() - 2]) / dt;
  }
  return r;
}

CaseStudyReport run_case_study(const Scenario& sc) {
  CaseStudyReport rep;
  for (auto kind : {CaseKind::AcBase, CaseKind::DcsConstPQ, CaseKind::DcsFcPodLF, CaseKind::DcsFcPodFCOI}) {
    const auto cm = build_case(sc, kind);
    const auto eq = initialize(cm.model);
    const auto an = analyze(eq.model, eq.x);
    CaseReport cr;
    cr.kind = kind;
    cr.modes = mode_table(an);
    cr.designs = cm.designs;
    if (!sc.line_trip.empty()) cr.line_trip = simulate(eq.model, eq.x, sc.line_trip, sc.sim);
    if (!sc.gen_trip.empty()) {
      SimConfig cfg = sc.sim;
      cr.gen_trip = simulate(eq.model, eq.x, sc.gen_trip, cfg);
      for (const auto& r : eq.model.regions()) {
        const std::string ch = "region." + r + ".fcoi_pu";
        if (cr.gen_trip.has(ch)) cr.nadir[r] = nadir(cr.gen_trip, ch);
      }
    }
    if (kind == CaseKind::DcsConstPQ) rep.baseline_zeta = select_target(an, sc.target).zeta;
    if (kind == CaseKind::DcsFcPodFCOI) {
      const auto beq = initialize(cm.baseline);
      const auto ban = analyze(beq.model, beq.x);
      const Mode& target = select_target(ban, sc.target);
      for (double tau : sc.delays) {
        SystemModel m = cm.model;
        for (const auto& d : cm.designs) m.controllers.at(d.bus).delay = {tau, tau > 0.0};
        const auto deq = initialize(m);
        const auto dan = analyze(deq.model, deq.x);
        const auto k = match_mode(target, ban.lin.state_labels, dan.modes, dan.lin.state_labels);
        rep.delay_sweep.push_back({tau, dan.modes[k].zeta, dan.modes[k].freq});
      }
    }
    rep.cases.push_back(std::move(cr));
  }
  return rep;
}

std::string format_design_table(const std::vector<StationDesign>& designs) {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%6s %6s %10s %9s %9s %10s %9s\n", "bus", "input", "K_Q(pu)",
                "T_Q1(s)", "a_Q", "phi_NC(deg)", "sat");
  os << buf;
  for (const auto& d : designs) {
    std::snprintf(buf, sizeof buf, "%6d %6s %10.2f %9.4f %9.4f %10.2f %9s\n", d.bus,
                  d.variant == PodVariant::LF ? "LF" : "FCOI", d.params.k_q, d.params.t_q1,
                  d.params.a_q, d.sensitivity.phase_nc * 180.0 / std::numbers::pi,
                  d.gain.saturated ? "yes" : "no");
    os << buf;
  }
  return os.str();
}

Json to_json(const std::vector<StationDesign>& designs) {
  Json a = Json::array();
  for (const auto& d : designs) {
    StationControl c;
    c.bus = d.bus;
    c.podq = d.params;
    Json j = to_json(c);
    j["design"] = {{"lambda0", {d.target.lambda0.real(), d.target.lambda0.imag()}},
                   {"lambda_d", {d.target.lambda_d.real(), d.target.lambda_d.imag()}},
                   {"s_nc", {d.sensitivity.s_nc.real(), d.sensitivity.s_nc.imag()}},
                   {"phase_nc_deg", d.sensitivity.phase_nc * 180.0 / std::numbers::pi},
                   {"gamma", d.gain.gamma},
                   {"saturated", d.gain.saturated},
                   {"predicted_lambda", {d.gain.predicted_lambda.real(), d.gain.predicted_lambda.imag()}}};
    a.push_back(j);
  }
  return a;
}

void write_case_study(const CaseStudyReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  Json summary;
  std::ostringstream text;
  char buf[200];
  for (const auto& c : report.cases) {
    const auto name = to_string(c.kind);
    const fs::path sub = dir / name;
    fs::create_directories(sub);
    write_text_file(sub / "modes.txt", format_mode_table(c.modes));
    text << "== " << name << " ==\n" << format_mode_table(c.modes);
    if (!c.designs.empty()) {
      write_text_file(sub / "pod_design.txt", format_design_table(c.designs));
      write_text_file(sub / "controllers.json", canonical_dump(to_json(c.designs)));
      text << format_design_table(c.designs);
    }
    for (const auto& [label, ts] : {std::pair{"line_trip", &c.line_trip}, std::pair{"gen_trip", &c.gen_trip}}) {
      if (ts->time.empty()) continue;
      std::ofstream out(sub / (std::string(label) + ".csv"));
      ts->write_csv(out);
    }
    Json jc{{"modes", to_json(c.modes)}};
    Json jn = Json::object();
    for (const auto& [r, n] : c.nadir) {
      jn[r] = {{"f_min_pu", n.f_min}, {"f_final_pu", n.f_final}, {"settle_rate_pu_s", n.settle_rate}};
    }
    jc["nadir"] = jn;
    summary[name] = jc;
  }
  text << "\n== frequency after generator trip (region COI) ==\n";
  std::snprintf(buf, sizeof buf, "%-18s %6s %12s %12s\n", "case", "region", "f_min(Hz)", "f_final(Hz)");
  text << buf;
  for (const auto& c : report.cases) {
    for (const auto& [r, n] : c.nadir) {
      std::snprintf(buf, sizeof buf, "%-18s %6s %12.4f %12.4f\n", to_string(c.kind).c_str(), r.c_str(),
                    50.0 * n.f_min, 50.0 * n.f_final);
      text << buf;
    }
  }
  if (!report.delay_sweep.empty()) {
    text << "\n== target mode vs. damping-signal delay (FCOI) ==\n";
    std::snprintf(buf, sizeof buf, "%8s %9s %9s\n", "tau(s)", "zeta(%)", "f(Hz)");
    text << buf;
    Json jd = Json::array();
    for (const auto& d : report.delay_sweep) {
      std::snprintf(buf, sizeof buf, "%8.3f %9.2f %9.3f\n", d.tau, 100.0 * d.zeta, d.freq);
      text << buf;
      jd.push_back({{"tau_s", d.tau}, {"zeta", d.zeta}, {"freq_hz", d.freq}});
    }
    std::snprintf(buf, sizeof buf, "constant-PQ baseline zeta: %.2f %%\n", 100.0 * report.baseline_zeta);
    text << buf;
    summary["delay_sweep"] = jd;
  }
  summary["baseline_zeta"] = report.baseline_zeta;
  write_text_file(dir / "summary.txt", text.str());
  write_text_file(dir / "summary.json", canonical_dump(summary));
}

}  // namespace dcseg
