#include "dcseg/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "dcseg/assembly.hpp"
#include "dcseg/error.hpp"

namespace dcseg {

const StationControl* ControllerBank::find(int bus) const {
  for (const auto& s : stations) {
    if (s.bus == bus) return &s;
  }
  return nullptr;
}

StationControl& ControllerBank::at(int bus) {
  for (auto& s : stations) {
    if (s.bus == bus) return s;
  }
  stations.push_back(StationControl{bus, std::nullopt, std::nullopt, {}});
  return stations.back();
}

double SystemModel::omega_s() const { return 2.0 * std::numbers::pi * base_frequency; }

std::vector<std::string> SystemModel::regions() const {
  std::set<std::string> r;
  for (const auto& b : network.buses) r.insert(b.region);
  return {r.begin(), r.end()};
}

const std::string& SystemModel::region_of_bus(int bus) const {
  return network.buses[network.bus_index(bus)].region;
}

std::size_t SystemModel::machine_index(int bus, int unit) const {
  for (std::size_t k = 0; k < machines.size(); ++k) {
    if (machines[k].bus == bus && machines[k].unit == unit) return k;
  }
  fail(ErrorKind::TargetNotFound,
       "no machine at bus " + std::to_string(bus) + " unit " + std::to_string(unit));
}

std::pair<std::size_t, int> SystemModel::station_at(int bus) const {
  for (std::size_t l = 0; l < hvdc_links.size(); ++l) {
    if (hvdc_links[l].station_1.bus == bus) return {l, 1};
    if (hvdc_links[l].station_2.bus == bus) return {l, 2};
  }
  fail(ErrorKind::TargetNotFound, "no converter station at bus " + std::to_string(bus));
}

const VscStation& SystemModel::station(int bus) const {
  const auto [l, side] = station_at(bus);
  return side == 1 ? hvdc_links[l].station_1 : hvdc_links[l].station_2;
}

void SystemModel::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvalidInput, what); };
  if (!(base_frequency > 0.0)) bad("base frequency must be > 0");
  if (!(freq_filter_tf > 0.0)) bad("frequency filter time constant must be > 0");
  if (network.buses.empty()) bad("network has no buses");
  std::set<int> ids;
  for (const auto& b : network.buses) {
    if (!ids.insert(b.id).second) bad("duplicate bus id " + std::to_string(b.id));
  }
  for (const auto& br : network.branches) {
    if (!ids.count(br.from) || !ids.count(br.to)) {
      bad("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
          " references a missing bus");
    }
  }
  std::set<std::pair<int, int>> units;
  for (const auto& m : machines) {
    if (!ids.count(m.bus)) bad("machine at missing bus " + std::to_string(m.bus));
    if (!units.insert({m.bus, m.unit}).second) bad("duplicate machine " + m.label());
    if (m.region != region_of_bus(m.bus)) bad("machine " + m.label() + " region differs from its bus");
    if (!(m.h > 0.0) || !(m.s_rated > 0.0) || !(m.xd_p > 0.0) || !(m.xq_p > 0.0) ||
        !(m.td0_p > 0.0) || !(m.tq0_p > 0.0)) {
      bad("machine " + m.label() + " has non-positive parameters");
    }
  }
  std::set<int> station_buses;
  std::set<std::string> names;
  for (const auto& l : hvdc_links) {
    l.validate();
    if (!names.insert(l.name).second) bad("duplicate link name " + l.name);
    for (const auto* st : {&l.station_1, &l.station_2}) {
      if (!ids.count(st->bus)) bad("converter at missing bus " + std::to_string(st->bus));
      if (!station_buses.insert(st->bus).second) {
        bad("more than one converter at bus " + std::to_string(st->bus));
      }
    }
  }
  for (const auto& c : controllers.stations) {
    if (!station_buses.count(c.bus)) {
      bad("controller at bus " + std::to_string(c.bus) + " has no converter station");
    }
    if (c.fc) {
      c.fc->validate();
      if (station(c.bus).mode != VscMode::PControl) {
        bad("frequency controller at bus " + std::to_string(c.bus) +
            " needs an active-power controlled station");
      }
    }
    if (c.podq) c.podq->validate();
    if (c.delay.tau < 0.0) bad("negative delay at bus " + std::to_string(c.bus));
  }
}

Event Event::trip_branch(double t, int from, int to) {
  Event e;
  e.time = t;
  e.kind = EventKind::TripBranch;
  e.from = from;
  e.to = to;
  return e;
}

Event Event::trip_machine(double t, int bus, int unit) {
  Event e;
  e.time = t;
  e.kind = EventKind::TripMachine;
  e.bus = bus;
  e.unit = unit;
  return e;
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || dt > 0.02) fail(ErrorKind::InvalidInput, "dt must be in (0, 0.02] s");
  if (!(t_stop > 0.0)) fail(ErrorKind::InvalidInput, "t_stop must be > 0");
  if (!(newton_tol > 0.0)) fail(ErrorKind::InvalidInput, "newton_tol must be > 0");
  if (max_newton_iter < 1) fail(ErrorKind::InvalidInput, "max_newton_iter must be >= 1");
  if (decimation < 1) fail(ErrorKind::InvalidInput, "decimation must be >= 1");
}

bool TimeSeries::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

const std::vector<double>& TimeSeries::channel(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail(ErrorKind::TargetNotFound, "no channel " + name);
  return channels[static_cast<std::size_t>(it - names.begin())];
}

void TimeSeries::write_csv(std::ostream& os) const {
  char buf[32];
  os << "time_s";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t k = 0; k < time.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.9g", time[k]);
    os << buf;
    for (const auto& c : channels) {
      std::snprintf(buf, sizeof buf, "%.9g", c[k]);
      os << ',' << buf;
    }
    os << '\n';
  }
}

namespace {

struct DcOperatingPoint {
  double p_bus_vdc = 0.0;  // Vdc station AC injection, station pu
  double v_dc1 = 1.0;
  double v_dc2 = 1.0;
  double i_dc = 0.0;       // station_1 -> station_2, link pu
};

double station_loss(const VscStation& st, double i) {
  return st.loss_a + st.loss_b * i + st.loss_c * i * i;
}

// Steady state of a link given AC voltage magnitudes at both stations.
DcOperatingPoint dc_steady_state(const HvdcLink& link, double v_ac_p, double v_ac_v) {
  const auto& sp = link.pcontrol();
  const auto& sv = link.vdccontrol();
  const double i_p = std::hypot(sp.p_set0, sp.q_set0) / v_ac_p;
  const double p_conv_p = sp.p_set0 + sp.rs * i_p * i_p;
  const double p_dc_p = (-p_conv_p - station_loss(sp, i_p)) * sp.s_rated / link.base_mva();

  const double vv = sv.vdc_ref;
  const double r = link.r_pu();
  double vp = vv;
  if (r > 0.0) {
    const double disc = vv * vv + 4.0 * r * p_dc_p;
    if (disc < 0.0) {
      fail(ErrorKind::InitResidualTooLarge,
           "link " + link.name + " cannot carry the scheduled power at the DC voltage set point");
    }
    vp = 0.5 * (vv + std::sqrt(disc));
  }
  const double i_pv = p_dc_p / vp;
  const double p_dc_v = -vv * i_pv * link.base_mva() / sv.s_rated;

  double p_bus = -p_dc_v;
  for (int k = 0; k < 100; ++k) {
    const double i = std::hypot(p_bus, sv.q_set0) / v_ac_v;
    const double next = -p_dc_v - sv.rs * i * i - station_loss(sv, i);
    if (std::abs(next - p_bus) < 1e-15) {
      p_bus = next;
      break;
    }
    p_bus = next;
  }

  DcOperatingPoint op;
  op.p_bus_vdc = p_bus;
  const bool p_is_1 = link.station_1.mode == VscMode::PControl;
  op.v_dc1 = p_is_1 ? vp : vv;
  op.v_dc2 = p_is_1 ? vv : vp;
  op.i_dc = p_is_1 ? i_pv : -i_pv;
  return op;
}

void set_state(std::vector<double>& x, const DaeSystem& sys, const std::string& dev,
               const std::string& name, double value) {
  if (auto k = sys.find_state(dev, name)) x[*k] = value;
}

}  // namespace

Equilibrium initialize(const SystemModel& input, double pf_tol) {
  input.validate();
  SystemModel model = input;
  const auto& net = model.network;
  const double sb = net.system_base;
  const std::size_t nb = net.buses.size();

  std::vector<double> p_vdc(model.hvdc_links.size());
  for (std::size_t l = 0; l < model.hvdc_links.size(); ++l) {
    const auto& link = model.hvdc_links[l];
    p_vdc[l] = -link.pcontrol().p_set0 * link.pcontrol().s_rated / link.vdccontrol().s_rated;
  }

  PowerFlowOptions opts;
  opts.tol = pf_tol;
  PowerFlowSolution pf;
  std::vector<DcOperatingPoint> dc(model.hvdc_links.size());
  for (int outer = 0;; ++outer) {
    opts.injections.clear();
    for (std::size_t l = 0; l < model.hvdc_links.size(); ++l) {
      const auto& link = model.hvdc_links[l];
      const auto& sp = link.pcontrol();
      const auto& sv = link.vdccontrol();
      opts.injections.push_back({sp.bus, Complex(sp.p_set0, sp.q_set0) * (sp.s_rated / sb)});
      opts.injections.push_back({sv.bus, Complex(p_vdc[l], sv.q_set0) * (sv.s_rated / sb)});
    }
    pf = solve_power_flow(net, opts);
    double change = 0.0;
    for (std::size_t l = 0; l < model.hvdc_links.size(); ++l) {
      const auto& link = model.hvdc_links[l];
      dc[l] = dc_steady_state(link, pf.v_mag[pf.index_of(link.pcontrol().bus)],
                              pf.v_mag[pf.index_of(link.vdccontrol().bus)]);
      change = std::max(change, std::abs(dc[l].p_bus_vdc - p_vdc[l]));
      p_vdc[l] = dc[l].p_bus_vdc;
    }
    if (change < 1e-14) break;
    if (outer > 50) fail(ErrorKind::NoConvergence, "HVDC loss iteration did not settle");
    std::vector<Complex> warm(nb);
    for (std::size_t i = 0; i < nb; ++i) warm[i] = Complex(pf.v_mag[i], pf.v_ang[i]);
    opts.warm_start = warm;
  }

  std::vector<Complex> s_hvdc(nb, Complex(0.0, 0.0));
  for (const auto& inj : opts.injections) s_hvdc[net.bus_index(inj.bus)] += inj.s;
  for (std::size_t l = 0; l < model.hvdc_links.size(); ++l) {
    auto& link = model.hvdc_links[l];
    auto& sv = link.station_1.mode == VscMode::VdcControl ? link.station_1 : link.station_2;
    sv.p_set0 = dc[l].p_bus_vdc;
  }

  model.load_admittance.assign(nb, Complex(0.0, 0.0));
  model.bus_voltage0.assign(nb, Complex(0.0, 0.0));
  std::vector<double> rating_at_bus(nb, 0.0);
  for (const auto& m : model.machines) {
    if (m.in_service) rating_at_bus[net.bus_index(m.bus)] += m.s_rated;
  }
  std::vector<Complex> s_machines(nb, Complex(0.0, 0.0));
  for (std::size_t i = 0; i < nb; ++i) {
    const auto& b = net.buses[i];
    const std::size_t pi = pf.index_of(b.id);
    const Complex v = pf.voltage(pi);
    const double v2 = std::norm(v);
    model.bus_voltage0[i] = v;
    if (rating_at_bus[i] > 0.0) {
      const Complex s_load(b.p_load, b.q_load);
      s_machines[i] = pf.injection[pi] + s_load - s_hvdc[i];
      model.load_admittance[i] = std::conj(s_load) / v2;
    } else {
      if (b.kind != BusKind::PQ) {
        fail(ErrorKind::InvalidInput,
             "bus " + std::to_string(b.id) + " regulates voltage but has no machine");
      }
      const Complex s_other = pf.injection[pi] - s_hvdc[i];
      model.load_admittance[i] = -std::conj(s_other) / v2;
    }
  }

  std::vector<MachineState> mstates(model.machines.size());
  for (std::size_t k = 0; k < model.machines.size(); ++k) {
    auto& m = model.machines[k];
    if (!m.in_service) continue;
    const std::size_t i = net.bus_index(m.bus);
    const Complex share = s_machines[i] * (m.s_rated / rating_at_bus[i]);
    const auto init = init_from_powerflow(m, model.bus_voltage0[i], share, sb);
    m.v_ref = init.v_ref;
    m.p_ref = init.p_ref;
    m.efd_set = init.state.efd;
    mstates[k] = init.state;
  }
  model.initialized = true;

  DaeSystem sys(model);
  std::vector<double> x(sys.n_x(), 0.0);
  for (std::size_t k = 0; k < model.machines.size(); ++k) {
    const auto& m = model.machines[k];
    const std::string dev = "gen." + m.label();
    const auto& s = mstates[k];
    set_state(x, sys, dev, "delta", s.delta);
    set_state(x, sys, dev, "omega", 1.0);
    set_state(x, sys, dev, "eq_p", s.eq_p);
    set_state(x, sys, dev, "ed_p", s.ed_p);
    set_state(x, sys, dev, "efd", s.efd);
    set_state(x, sys, dev, "pm", s.pm);
  }
  for (std::size_t l = 0; l < model.hvdc_links.size(); ++l) {
    const auto& link = model.hvdc_links[l];
    for (const auto* st : {&link.station_1, &link.station_2}) {
      const std::string dev = "vsc." + std::to_string(st->bus);
      const double v = std::abs(model.bus_voltage0[net.bus_index(st->bus)]);
      set_state(x, sys, dev, "i_d", st->p_set0 / v);
      set_state(x, sys, dev, "i_q", -st->q_set0 / v);
      set_state(x, sys, dev, "vdc_pi", st->p_set0);
    }
    const std::string dev = "link." + link.name;
    set_state(x, sys, dev, "v_dc1", dc[l].v_dc1);
    set_state(x, sys, dev, "v_dc2", dc[l].v_dc2);
    set_state(x, sys, dev, "i_dc", dc[l].i_dc);
  }
  for (std::size_t i = 0; i < nb; ++i) {
    set_state(x, sys, "bus." + std::to_string(net.buses[i].id), "theta_f",
              std::arg(model.bus_voltage0[i]));
  }

  std::vector<double> y = sys.voltages_to_y(model.bus_voltage0);
  sys.solve_algebraic(x, y);
  std::vector<double> dx(sys.n_x());
  sys.f(x, y, dx);
  double worst = 0.0;
  std::size_t worst_k = 0;
  for (std::size_t k = 0; k < dx.size(); ++k) {
    if (std::abs(dx[k]) > worst) {
      worst = std::abs(dx[k]);
      worst_k = k;
    }
  }
  if (!(worst < 1e-7)) {
    std::ostringstream os;
    os << "max |dx/dt| = " << worst << " at " << sys.labels()[worst_k].str();
    fail(ErrorKind::InitResidualTooLarge, os.str());
  }

  Equilibrium eq;
  eq.x = std::move(x);
  eq.y = std::move(y);
  eq.max_residual = worst;
  eq.power_flow = std::move(pf);
  eq.model = std::move(model);
  return eq;
}

double max_derivative(const SystemModel& model, std::span<const double> x) {
  DaeSystem sys(model);
  std::vector<double> y = sys.voltages_to_y(model.bus_voltage0);
  sys.solve_algebraic(x, y);
  std::vector<double> dx(sys.n_x());
  sys.f(x, y, dx);
  double worst = 0.0;
  for (double d : dx) worst = std::max(worst, std::abs(d));
  return worst;
}

SystemModel apply_event(const SystemModel& model, const Event& event) {
  SystemModel out = model;
  if (event.kind == EventKind::TripMachine) {
    auto& m = out.machines[out.machine_index(event.bus, event.unit)];
    if (!m.in_service) fail(ErrorKind::AlreadyOut, "machine " + m.label() + " is already out");
    m.in_service = false;
    return out;
  }

  auto& branches = out.network.branches;
  bool exists = false;
  for (auto& br : branches) {
    const bool match = (br.from == event.from && br.to == event.to) ||
                       (br.from == event.to && br.to == event.from);
    if (!match) continue;
    exists = true;
    if (!br.status) continue;
    const std::size_t before = out.network.islands().size();
    br.status = false;
    const auto islands = out.network.islands();
    if (islands.size() > before) {
      const auto original = model.network.islands();
      std::vector<const std::vector<int>*> pieces;
      for (const auto& isl : islands) {
        if (std::find(original.begin(), original.end(), isl) == original.end()) {
          pieces.push_back(&isl);
        }
      }
      std::sort(pieces.begin(), pieces.end(),
                [](const auto* a, const auto* b) { return a->size() > b->size(); });
      const std::string what = "tripping " + std::to_string(event.from) + "-" +
                               std::to_string(event.to);
      for (std::size_t p = 1; p < pieces.size(); ++p) {
        for (const auto& m : out.machines) {
          if (m.in_service && std::find(pieces[p]->begin(), pieces[p]->end(), m.bus) !=
                                  pieces[p]->end()) {
            fail(ErrorKind::IslandedMachine, what + " islands machine " + m.label());
          }
        }
      }
      fail(ErrorKind::InvalidInput, what + " isolates part of the network");
    }
    return out;
  }
  if (exists) {
    fail(ErrorKind::AlreadyOut,
         "branch " + std::to_string(event.from) + "-" + std::to_string(event.to) + " is already out");
  }
  fail(ErrorKind::TargetNotFound,
       "no branch " + std::to_string(event.from) + "-" + std::to_string(event.to));
}

namespace {

class Recorder {
 public:
  Recorder(const DaeSystem& sys, const SimConfig& cfg, TimeSeries& ts) : ts_(ts) {
    const auto& model = sys.model();
    auto want = [&cfg](const std::string& name) {
      if (cfg.record.empty()) return true;
      for (const auto& p : cfg.record) {
        if (name.compare(0, p.size(), p) == 0) return true;
      }
      return false;
    };
    auto add = [&](const std::string& name, Getter g) {
      if (!want(name)) return;
      ts_.names.push_back(name);
      getters_.push_back(std::move(g));
    };
    const auto& net = model.network;
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
      const std::string dev = "bus." + std::to_string(net.buses[i].id);
      add(dev + ".freq_pu", [i](const Sample& s) { return s.out.bus_freq[i]; });
      add(dev + ".vmag_pu", [i](const Sample& s) { return s.out.bus_vmag[i]; });
    }
    for (std::size_t k = 0; k < model.machines.size(); ++k) {
      const std::string dev = "gen." + model.machines[k].label();
      const auto off = *sys.find_state(dev, "omega");
      add(dev + ".freq_pu", [off](const Sample& s) { return s.x[off]; });
      add(dev + ".delta_rad", [off](const Sample& s) { return s.x[off - 1]; });
      const double to_machine = net.system_base / model.machines[k].s_rated;
      add(dev + ".pe_pu", [k, to_machine](const Sample& s) { return s.out.machine_pe[k] * to_machine; });
    }
    std::size_t slot = 0;
    for (const auto& link : model.hvdc_links) {
      for (const auto* st : {&link.station_1, &link.station_2}) {
        const std::string dev = "vsc." + std::to_string(st->bus);
        add(dev + ".p_pu", [slot](const Sample& s) { return s.out.stations[slot].p_bus; });
        add(dev + ".q_pu", [slot](const Sample& s) { return s.out.stations[slot].q_bus; });
        add(dev + ".vdc_pu", [slot](const Sample& s) { return s.out.stations[slot].v_dc; });
        add(dev + ".i_pu", [slot](const Sample& s) { return s.out.stations[slot].i_mag; });
        add(dev + ".dp_fc_pu", [slot](const Sample& s) { return s.out.stations[slot].dp_fc; });
        add(dev + ".dq_pod_pu", [slot](const Sample& s) { return s.out.stations[slot].dq_pod; });
        ++slot;
      }
    }
    for (std::size_t l = 0; l < model.hvdc_links.size(); ++l) {
      const std::string dev = "link." + model.hvdc_links[l].name;
      add(dev + ".p_pu", [l](const Sample& s) { return s.out.links[l].p_transfer; });
      add(dev + ".idc_pu", [l](const Sample& s) { return s.out.links[l].i_dc; });
    }
    for (const auto& r : model.regions()) {
      add("region." + r + ".fcoi_pu", [r](const Sample& s) {
        const auto it = s.out.region_coi.find(r);
        return it == s.out.region_coi.end() ? std::nan("") : it->second;
      });
    }
    ts_.channels.assign(ts_.names.size(), {});
  }

  void record(double t, const DaeSystem& sys, std::span<const double> x,
              std::span<const double> y) {
    const Sample s{x, sys.outputs(x, y)};
    ts_.time.push_back(t);
    for (std::size_t c = 0; c < getters_.size(); ++c) ts_.channels[c].push_back(getters_[c](s));
  }

 private:
  struct Sample {
    std::span<const double> x;
    SystemOutputs out;
  };
  using Getter = std::function<double(const Sample&)>;

  TimeSeries& ts_;
  std::vector<Getter> getters_;
};

// One trapezoidal step; first-order lag states use the exact exponential
// solution with a linearly varying reference.
class Stepper {
 public:
  Stepper(const SimConfig& cfg) : cfg_(cfg) {}

  void reset() { have_jacobian_ = false; }

  void step(const DaeSystem& sys, double t, std::vector<double>& x, std::vector<double>& y) {
    double nr = 0.0;
    if (!advance(sys, x, y, cfg_.dt, 0, nr)) {
      std::ostringstream os;
      os << "t = " << t + cfg_.dt << " s, residual " << nr;
      fail(ErrorKind::StepNonConvergence, os.str());
    }
  }

 private:
  static constexpr int kMaxHalvings = 5;

  bool advance(const DaeSystem& sys, std::vector<double>& x, std::vector<double>& y, double h,
               int depth, double& nr) {
    const auto xs = x;
    const auto ys = y;
    if (attempt(sys, x, y, h, nr)) return true;
    x = xs;
    y = ys;
    if (depth >= kMaxHalvings) return false;
    have_jacobian_ = false;
    if (!advance(sys, x, y, 0.5 * h, depth + 1, nr)) return false;
    if (!advance(sys, x, y, 0.5 * h, depth + 1, nr)) return false;
    have_jacobian_ = false;
    return true;
  }

  bool attempt(const DaeSystem& sys, std::vector<double>& x, std::vector<double>& y, double h,
               double& nr) {
    const std::size_t nx = sys.n_x();
    const std::size_t ny = sys.n_y();
    const std::size_t n = nx + ny;
    const auto& tau = sys.lag_time_constants();
    if (h != h_) have_jacobian_ = false;
    h_ = h;

    x0_ = x;
    f0_.assign(nx, 0.0);
    sys.f(x0_, y, f0_);
    coef_.assign(nx, {});
    for (std::size_t i = 0; i < nx; ++i) {
      if (tau[i] > 0.0) {
        const double a = h / tau[i];
        const double e = std::exp(-a);
        const double c0 = (1.0 - e) / a - e;
        const double c1 = 1.0 - (1.0 - e) / a;
        coef_[i] = {e, c0, c1, tau[i]};
      }
    }

    Eigen::VectorXd z(n);
    for (std::size_t i = 0; i < nx; ++i) z(i) = x[i];
    for (std::size_t i = 0; i < ny; ++i) z(nx + i) = y[i];
    Eigen::VectorXd r(n);
    residual(sys, z, r);
    nr = r.lpNorm<Eigen::Infinity>();
    double prev = std::numeric_limits<double>::infinity();
    bool fresh = false;
    for (int it = 0; it < cfg_.max_newton_iter && !(nr < cfg_.newton_tol); ++it) {
      if (!have_jacobian_ || (!fresh && nr > 0.25 * prev)) {
        jacobian(sys, z, r);
        fresh = true;
      } else {
        fresh = false;
      }
      prev = nr;
      z -= lu_.solve(r);
      residual(sys, z, r);
      nr = r.lpNorm<Eigen::Infinity>();
      if (!std::isfinite(nr)) break;
    }
    if (!(nr < cfg_.newton_tol)) return false;
    for (std::size_t i = 0; i < nx; ++i) x[i] = z(i);
    for (std::size_t i = 0; i < ny; ++i) y[i] = z(nx + i);
    sys.clamp_limited_states(x);
    return true;
  }

  struct LagCoef {
    double e = 0.0, c0 = 0.0, c1 = 0.0, tau = 0.0;
  };

  void residual(const DaeSystem& sys, const Eigen::VectorXd& z, Eigen::VectorXd& r) {
    const std::size_t nx = sys.n_x();
    const std::size_t ny = sys.n_y();
    std::span<const double> x1(z.data(), nx);
    std::span<const double> y1(z.data() + nx, ny);
    f1_.assign(nx, 0.0);
    g1_.assign(ny, 0.0);
    sys.f(x1, y1, f1_);
    sys.g(x1, y1, g1_);
    const double h = h_;
    for (std::size_t i = 0; i < nx; ++i) {
      const auto& c = coef_[i];
      if (c.tau > 0.0) {
        const double r0 = x0_[i] + c.tau * f0_[i];
        const double r1 = x1[i] + c.tau * f1_[i];
        r(i) = x1[i] - (c.e * x0_[i] + c.c0 * r0 + c.c1 * r1);
      } else {
        r(i) = x1[i] - x0_[i] - 0.5 * h * (f0_[i] + f1_[i]);
      }
    }
    for (std::size_t i = 0; i < ny; ++i) r(nx + i) = g1_[i];
  }

  void jacobian(const DaeSystem& sys, const Eigen::VectorXd& z, const Eigen::VectorXd& r) {
    const auto n = z.size();
    Eigen::MatrixXd jac(n, n);
    Eigen::VectorXd zp = z;
    Eigen::VectorXd rp(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = 1e-7 * std::max(1.0, std::abs(z(j)));
      zp(j) = z(j) + d;
      residual(sys, zp, rp);
      zp(j) = z(j);
      jac.col(j) = (rp - r) / d;
    }
    lu_.compute(jac);
    have_jacobian_ = true;
  }

  const SimConfig& cfg_;
  std::vector<double> x0_, f0_, f1_, g1_;
  std::vector<LagCoef> coef_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool have_jacobian_ = false;
  double h_ = 0.0;
};

}  // namespace

TimeSeries simulate(const SystemModel& model, std::span<const double> x0,
                    const std::vector<Event>& events, const SimConfig& cfg) {
  cfg.validate();
  for (std::size_t k = 0; k < events.size(); ++k) {
    if (events[k].time < 0.0) fail(ErrorKind::InvalidInput, "event time < 0");
    if (k > 0 && events[k].time < events[k - 1].time) {
      fail(ErrorKind::InvalidInput, "events must be sorted by time");
    }
  }
  auto sys = std::make_unique<DaeSystem>(model);
  if (x0.size() != sys->n_x()) fail(ErrorKind::InvalidInput, "initial state has the wrong size");

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> y = sys->voltages_to_y(model.bus_voltage0);
  sys->solve_algebraic(x, y);

  TimeSeries ts;
  Recorder rec(*sys, cfg, ts);
  Stepper stepper(cfg);
  const auto steps = static_cast<long>(std::llround(cfg.t_stop / cfg.dt));
  std::size_t next_event = 0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    bool changed = false;
    while (next_event < events.size() && events[next_event].time <= t + 1e-9 * cfg.dt) {
      const auto& ev = events[next_event];
      const double off = ev.time / cfg.dt - std::round(ev.time / cfg.dt);
      if (std::abs(off) > 1e-6) {
        fail(ErrorKind::InvalidInput, "event time is not a multiple of dt");
      }
      sys = std::make_unique<DaeSystem>(apply_event(sys->model(), ev));
      ++next_event;
      changed = true;
    }
    if (changed) {
      sys->solve_algebraic(x, y);
      stepper.reset();
    }
    if (k % cfg.decimation == 0) rec.record(t, *sys, x, y);
    if (k >= steps) break;
    stepper.step(*sys, t, x, y);
  }
  ts.x_final = x;
  return ts;
}

}  // namespace dcseg
