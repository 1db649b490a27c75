#include "dcseg/io.hpp"

#include <fstream>
#include <sstream>

#include "dcseg/error.hpp"

namespace dcseg {

namespace {

std::string kind_name(BusKind k) {
  switch (k) {
    case BusKind::Slack: return "slack";
    case BusKind::PV: return "pv";
    case BusKind::PQ: return "pq";
  }
  return "pq";
}

BusKind parse_kind(const std::string& s) {
  if (s == "slack") return BusKind::Slack;
  if (s == "pv") return BusKind::PV;
  if (s == "pq") return BusKind::PQ;
  fail(ErrorKind::InvalidInput, "unknown bus kind '" + s + "'");
}

template <typename T>
T field(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

template <typename T>
T required(const Json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorKind::InvalidInput, std::string("missing field '") + key + "'");
  return j.at(key).get<T>();
}

template <typename F>
auto guarded(F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

Json to_json(const VscStation& st) {
  return Json{{"bus", st.bus},
              {"s_rated", st.s_rated},
              {"mode", st.mode == VscMode::PControl ? "p" : "vdc"},
              {"rs", st.rs},
              {"xs", st.xs},
              {"tau_i", st.tau_i},
              {"kp_vdc", st.kp_vdc},
              {"ki_vdc", st.ki_vdc},
              {"loss_a", st.loss_a},
              {"loss_b", st.loss_b},
              {"loss_c", st.loss_c},
              {"i_max", st.i_max},
              {"p_max", st.p_max},
              {"q_max", st.q_max},
              {"vdc_min", st.vdc_min},
              {"vdc_max", st.vdc_max},
              {"vdc_ref", st.vdc_ref},
              {"c_dc", st.c_dc},
              {"p_set0", st.p_set0},
              {"q_set0", st.q_set0}};
}

VscStation station_from_json(const Json& j) {
  return guarded([&] {
    VscStation st;
    st.bus = required<int>(j, "bus");
    st.s_rated = field(j, "s_rated", st.s_rated);
    const auto mode = field<std::string>(j, "mode", "p");
    if (mode == "p") {
      st.mode = VscMode::PControl;
    } else if (mode == "vdc") {
      st.mode = VscMode::VdcControl;
    } else {
      fail(ErrorKind::InvalidInput, "unknown station mode '" + mode + "'");
    }
    st.rs = field(j, "rs", st.rs);
    st.xs = field(j, "xs", st.xs);
    st.tau_i = field(j, "tau_i", st.tau_i);
    st.kp_vdc = field(j, "kp_vdc", st.kp_vdc);
    st.ki_vdc = field(j, "ki_vdc", st.ki_vdc);
    st.loss_a = field(j, "loss_a", st.loss_a);
    st.loss_b = field(j, "loss_b", st.loss_b);
    st.loss_c = field(j, "loss_c", st.loss_c);
    st.i_max = field(j, "i_max", st.i_max);
    st.p_max = field(j, "p_max", st.p_max);
    st.q_max = field(j, "q_max", st.q_max);
    st.vdc_min = field(j, "vdc_min", st.vdc_min);
    st.vdc_max = field(j, "vdc_max", st.vdc_max);
    st.vdc_ref = field(j, "vdc_ref", st.vdc_ref);
    st.c_dc = field(j, "c_dc", st.c_dc);
    st.p_set0 = field(j, "p_set0", st.p_set0);
    st.q_set0 = field(j, "q_set0", st.q_set0);
    return st;
  });
}

Json to_json(const HvdcLink& link) {
  return Json{{"name", link.name},
              {"station_1", to_json(link.station_1)},
              {"station_2", to_json(link.station_2)},
              {"line",
               {{"r_dc", link.line.r_dc}, {"l_dc", link.line.l_dc}, {"v_base_dc", link.line.v_base_dc}}}};
}

HvdcLink link_from_json(const Json& j) {
  return guarded([&] {
    HvdcLink l;
    l.name = required<std::string>(j, "name");
    l.station_1 = station_from_json(required<Json>(j, "station_1"));
    l.station_2 = station_from_json(required<Json>(j, "station_2"));
    if (j.contains("line")) {
      const auto& d = j.at("line");
      l.line.r_dc = field(d, "r_dc", l.line.r_dc);
      l.line.l_dc = field(d, "l_dc", l.line.l_dc);
      l.line.v_base_dc = field(d, "v_base_dc", l.line.v_base_dc);
    }
    return l;
  });
}

Json to_json(const StationControl& c) {
  Json j{{"bus", c.bus}};
  if (c.fc) j["fc"] = {{"k_fc", c.fc->k_fc}, {"t_fc", c.fc->t_fc}, {"dp_max", c.fc->dp_max}};
  if (c.podq) {
    const auto& p = *c.podq;
    j["podq"] = {{"variant", p.variant == PodVariant::LF ? "lf" : "fcoi"},
                 {"k_q", p.k_q},
                 {"t_qf", p.t_qf},
                 {"t_qw", p.t_qw},
                 {"t_q1", p.t_q1},
                 {"a_q", p.a_q},
                 {"n_qs", p.n_qs},
                 {"dq_max", p.dq_max}};
  }
  if (c.delay.enabled || c.delay.tau != 0.0) {
    j["delay"] = {{"tau", c.delay.tau}, {"enabled", c.delay.enabled}};
  }
  return j;
}

StationControl control_from_json(const Json& j) {
  return guarded([&] {
    StationControl c;
    c.bus = required<int>(j, "bus");
    if (j.contains("fc") && !j.at("fc").is_null()) {
      const auto& f = j.at("fc");
      FcParams p;
      p.k_fc = field(f, "k_fc", p.k_fc);
      p.t_fc = field(f, "t_fc", p.t_fc);
      p.dp_max = field(f, "dp_max", p.dp_max);
      c.fc = p;
    }
    if (j.contains("podq") && !j.at("podq").is_null()) {
      const auto& q = j.at("podq");
      PodQParams p;
      const auto v = field<std::string>(q, "variant", "lf");
      if (v == "lf") {
        p.variant = PodVariant::LF;
      } else if (v == "fcoi") {
        p.variant = PodVariant::FCOI;
      } else {
        fail(ErrorKind::InvalidInput, "unknown POD-Q variant '" + v + "'");
      }
      p.k_q = field(q, "k_q", p.k_q);
      p.t_qf = field(q, "t_qf", p.t_qf);
      p.t_qw = field(q, "t_qw", p.t_qw);
      p.t_q1 = field(q, "t_q1", p.t_q1);
      p.a_q = field(q, "a_q", p.a_q);
      p.n_qs = field(q, "n_qs", p.n_qs);
      p.dq_max = field(q, "dq_max", p.dq_max);
      c.podq = p;
    }
    if (j.contains("delay")) {
      c.delay.tau = field(j.at("delay"), "tau", 0.0);
      c.delay.enabled = field(j.at("delay"), "enabled", c.delay.tau > 0.0);
    }
    return c;
  });
}

Json to_json(const SystemModel& model) {
  Json buses = Json::array();
  for (const auto& b : model.network.buses) {
    buses.push_back({{"id", b.id},
                     {"kind", kind_name(b.kind)},
                     {"v_mag", b.v_mag},
                     {"v_ang", b.v_ang},
                     {"p_load", b.p_load},
                     {"q_load", b.q_load},
                     {"p_gen", b.p_gen},
                     {"q_gen", b.q_gen},
                     {"region", b.region}});
  }
  Json branches = Json::array();
  for (const auto& br : model.network.branches) {
    branches.push_back({{"from", br.from},
                        {"to", br.to},
                        {"r", br.r},
                        {"x", br.x},
                        {"b_sh", br.b_sh},
                        {"status", br.status}});
  }
  Json machines = Json::array();
  for (const auto& m : model.machines) {
    Json jm{{"bus", m.bus},       {"unit", m.unit},   {"s_rated", m.s_rated}, {"h", m.h},
            {"d", m.d},           {"xd", m.xd},       {"xq", m.xq},           {"xd_p", m.xd_p},
            {"xq_p", m.xq_p},     {"td0_p", m.td0_p}, {"tq0_p", m.tq0_p},     {"in_service", m.in_service}};
    if (m.exciter) {
      jm["exciter"] = {{"ka", m.exciter->ka},
                       {"ta", m.exciter->ta},
                       {"efd_min", m.exciter->efd_min},
                       {"efd_max", m.exciter->efd_max}};
    }
    if (m.governor) {
      jm["governor"] = {{"r_droop", m.governor->r_droop},
                        {"t1", m.governor->t1},
                        {"p_max", m.governor->p_max},
                        {"p_min", m.governor->p_min}};
    }
    machines.push_back(jm);
  }
  Json links = Json::array();
  for (const auto& l : model.hvdc_links) links.push_back(to_json(l));
  Json controllers = Json::array();
  for (const auto& c : model.controllers.stations) controllers.push_back(to_json(c));
  return Json{{"base_frequency", model.base_frequency},
              {"system_base_mva", model.network.system_base},
              {"freq_filter_tf", model.freq_filter_tf},
              {"buses", buses},
              {"branches", branches},
              {"machines", machines},
              {"hvdc_links", links},
              {"controllers", controllers}};
}

SystemModel system_from_json(const Json& j) {
  return guarded([&] {
    SystemModel m;
    m.base_frequency = field(j, "base_frequency", m.base_frequency);
    m.freq_filter_tf = field(j, "freq_filter_tf", m.freq_filter_tf);
    m.network.system_base = field(j, "system_base", m.network.system_base);
    m.network.system_base = field(j, "system_base_mva", m.network.system_base);
    for (const auto& jb : required<Json>(j, "buses")) {
      Bus b;
      b.id = required<int>(jb, "id");
      b.kind = parse_kind(field<std::string>(jb, "kind", "pq"));
      b.v_mag = field(jb, "v_mag", b.v_mag);
      b.v_ang = field(jb, "v_ang", b.v_ang);
      b.p_load = field(jb, "p_load", b.p_load);
      b.q_load = field(jb, "q_load", b.q_load);
      b.p_gen = field(jb, "p_gen", b.p_gen);
      b.q_gen = field(jb, "q_gen", b.q_gen);
      b.region = field<std::string>(jb, "region", "");
      m.network.buses.push_back(b);
    }
    for (const auto& jb : field(j, "branches", Json::array())) {
      Branch br;
      br.from = required<int>(jb, "from");
      br.to = required<int>(jb, "to");
      br.r = field(jb, "r", 0.0);
      br.x = field(jb, "x", 0.0);
      br.b_sh = field(jb, "b_sh", 0.0);
      br.status = field(jb, "status", true);
      m.network.branches.push_back(br);
    }
    for (const auto& jm : field(j, "machines", Json::array())) {
      SynchronousMachine g;
      g.bus = required<int>(jm, "bus");
      g.unit = field(jm, "unit", g.unit);
      g.s_rated = field(jm, "s_rated", g.s_rated);
      g.h = field(jm, "h", g.h);
      g.d = field(jm, "d", g.d);
      g.xd = field(jm, "xd", g.xd);
      g.xq = field(jm, "xq", g.xq);
      g.xd_p = field(jm, "xd_p", g.xd_p);
      g.xq_p = field(jm, "xq_p", g.xq_p);
      g.td0_p = field(jm, "td0_p", g.td0_p);
      g.tq0_p = field(jm, "tq0_p", g.tq0_p);
      g.in_service = field(jm, "in_service", true);
      if (jm.contains("exciter") && !jm.at("exciter").is_null()) {
        const auto& e = jm.at("exciter");
        ExciterIEEEsimple x;
        x.ka = field(e, "ka", x.ka);
        x.ta = field(e, "ta", x.ta);
        x.efd_min = field(e, "efd_min", x.efd_min);
        x.efd_max = field(e, "efd_max", x.efd_max);
        g.exciter = x;
      }
      if (jm.contains("governor") && !jm.at("governor").is_null()) {
        const auto& e = jm.at("governor");
        GovernorDroop x;
        x.r_droop = field(e, "r_droop", x.r_droop);
        x.t1 = field(e, "t1", x.t1);
        x.p_max = field(e, "p_max", x.p_max);
        x.p_min = field(e, "p_min", x.p_min);
        g.governor = x;
      }
      if (!m.network.has_bus(g.bus)) {
        fail(ErrorKind::InvalidInput, "machine at missing bus " + std::to_string(g.bus));
      }
      g.region = m.region_of_bus(g.bus);
      m.machines.push_back(g);
    }
    for (const auto& jl : field(j, "hvdc_links", Json::array())) m.hvdc_links.push_back(link_from_json(jl));
    for (const auto& jc : field(j, "controllers", Json::array())) {
      m.controllers.stations.push_back(control_from_json(jc));
    }
    m.validate();
    return m;
  });
}

Json to_json(const SegmentationPlan& plan) {
  Json links = Json::array();
  for (const auto& rep : plan.links) {
    Json br = Json::array();
    for (const auto& [a, b] : rep.branches) br.push_back({a, b});
    links.push_back({{"branches", br}, {"link", to_json(rep.link)}});
  }
  return Json{{"rule", "match_ac_flow"}, {"links", links}};
}

SegmentationPlan plan_from_json(const Json& j) {
  return guarded([&] {
    SegmentationPlan plan;
    const auto rule = field<std::string>(j, "rule", "match_ac_flow");
    if (rule != "match_ac_flow") fail(ErrorKind::InvalidInput, "unknown set-point rule '" + rule + "'");
    for (const auto& jl : required<Json>(j, "links")) {
      LinkReplacement rep;
      for (const auto& p : required<Json>(jl, "branches")) {
        rep.branches.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
      }
      rep.link = link_from_json(required<Json>(jl, "link"));
      plan.links.push_back(rep);
    }
    return plan;
  });
}

Json to_json(const Event& e) {
  if (e.kind == EventKind::TripBranch) {
    return Json{{"time", e.time}, {"kind", "trip_branch"}, {"from", e.from}, {"to", e.to}};
  }
  return Json{{"time", e.time}, {"kind", "trip_machine"}, {"bus", e.bus}, {"unit", e.unit}};
}

Event event_from_json(const Json& j) {
  return guarded([&] {
    const auto kind = required<std::string>(j, "kind");
    const double t = required<double>(j, "time");
    if (kind == "trip_branch") {
      return Event::trip_branch(t, required<int>(j, "from"), required<int>(j, "to"));
    }
    if (kind == "trip_machine") {
      return Event::trip_machine(t, required<int>(j, "bus"), field(j, "unit", 1));
    }
    fail(ErrorKind::InvalidInput, "unknown event kind '" + kind + "'");
  });
}

Json to_json(const SimConfig& cfg) {
  return Json{{"dt", cfg.dt},
              {"t_stop", cfg.t_stop},
              {"method", "trapezoidal"},
              {"newton_tol", cfg.newton_tol},
              {"max_newton_iter", cfg.max_newton_iter},
              {"decimation", cfg.decimation},
              {"record", cfg.record}};
}

SimConfig sim_config_from_json(const Json& j, SimConfig cfg) {
  return guarded([&] {
    const auto method = field<std::string>(j, "method", "trapezoidal");
    if (method != "trapezoidal") fail(ErrorKind::InvalidInput, "unknown method '" + method + "'");
    cfg.dt = field(j, "dt", cfg.dt);
    cfg.t_stop = field(j, "t_stop", cfg.t_stop);
    cfg.newton_tol = field(j, "newton_tol", cfg.newton_tol);
    cfg.max_newton_iter = field(j, "max_newton_iter", cfg.max_newton_iter);
    cfg.decimation = field(j, "decimation", cfg.decimation);
    cfg.record = field(j, "record", cfg.record);
    cfg.validate();
    return cfg;
  });
}

std::string canonical_dump(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidInput, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::InvalidInput, "cannot write " + path.string());
  out << text;
}

SystemModel load_system(const std::filesystem::path& path) {
  return system_from_json(read_json_file(path));
}

void save_system(const SystemModel& model, const std::filesystem::path& path) {
  write_text_file(path, canonical_dump(to_json(model)));
}

}  // namespace dcseg
