#include "dcseg/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "dcseg/error.hpp"

namespace dcseg {

namespace {

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

MachineState read_machine(std::span<const double> x, std::size_t off) {
  MachineState s;
  s.delta = x[off];
  s.omega = x[off + 1];
  s.eq_p = x[off + 2];
  s.ed_p = x[off + 3];
  return s;
}

}  // namespace

struct DaeSystem::Work {
  std::vector<Complex> v;
  std::vector<Complex> inj;
  std::vector<double> dx;
  SystemOutputs out;
};

DaeSystem::DaeSystem(const SystemModel& model) : model_(model) {
  model_.validate();
  if (!model_.initialized) fail(ErrorKind::InvalidInput, "system model has not been initialized");
  const auto& net = model_.network;
  const std::size_t nb = net.buses.size();
  if (model_.load_admittance.size() != nb || model_.bus_voltage0.size() != nb) {
    fail(ErrorKind::InvalidInput, "operating-point data does not match the bus count");
  }
  ybus_ = build_admittance(net);
  for (std::size_t i = 0; i < nb; ++i) ybus_(i, i) += model_.load_admittance[i];

  auto add = [this](const std::string& device, const std::string& name, double tau = 0.0) {
    labels_.push_back({device, name});
    lag_tau_.push_back(tau);
    return labels_.size() - 1;
  };

  for (std::size_t k = 0; k < model_.machines.size(); ++k) {
    const auto& m = model_.machines[k];
    const std::string dev = "gen." + m.label();
    MachineSlot slot;
    slot.index = k;
    slot.bus = net.bus_index(m.bus);
    slot.offset = add(dev, "delta");
    add(dev, "omega");
    add(dev, "eq_p");
    add(dev, "ed_p");
    if (m.exciter) slot.efd = add(dev, "efd");
    if (m.governor) slot.pm = add(dev, "pm");
    machine_slots_.push_back(slot);
  }

  for (std::size_t l = 0; l < model_.hvdc_links.size(); ++l) {
    const auto& link = model_.hvdc_links[l];
    for (int side = 1; side <= 2; ++side) {
      const auto& st = side == 1 ? link.station_1 : link.station_2;
      const auto& other = side == 1 ? link.station_2 : link.station_1;
      const std::string dev = "vsc." + std::to_string(st.bus);
      StationSlot slot;
      slot.link = l;
      slot.side = side;
      slot.bus = net.bus_index(st.bus);
      slot.remote_bus = net.bus_index(other.bus);
      slot.region = net.buses[slot.bus].region;
      slot.control = model_.controllers.find(st.bus);
      slot.i_d = add(dev, "i_d", st.tau_i);
      add(dev, "i_q", st.tau_i);
      if (st.mode == VscMode::VdcControl) slot.pi = add(dev, "vdc_pi");
      if (slot.control && slot.control->fc && st.mode == VscMode::PControl) {
        slot.fc = add(dev, "fc");
      }
      if (slot.control && slot.control->podq) {
        const auto& p = *slot.control->podq;
        slot.pod = add(dev, "pod_lp");
        add(dev, "pod_wo");
        for (std::size_t s = 2; s < p.state_size(); ++s) add(dev, "pod_ll" + std::to_string(s - 1));
        if (p.variant == PodVariant::FCOI && slot.control->delay.active()) {
          slot.pade = add(dev, "pade");
        }
      }
      station_slots_.push_back(slot);
    }
    LinkSlot ls;
    ls.offset = add("link." + link.name, "v_dc1");
    add("link." + link.name, "v_dc2");
    add("link." + link.name, "i_dc");
    link_slots_.push_back(ls);
  }

  bus_est_offset_ = labels_.size();
  for (const auto& b : net.buses) add("bus." + std::to_string(b.id), "theta_f");

  regions_ = model_.regions();
}

std::optional<std::size_t> DaeSystem::find_state(const std::string& device,
                                                 const std::string& name) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].device == device && labels_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<double> DaeSystem::voltages_to_y(const std::vector<Complex>& v) const {
  std::vector<double> y(2 * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    y[2 * i] = v[i].real();
    y[2 * i + 1] = v[i].imag();
  }
  return y;
}

void DaeSystem::evaluate(std::span<const double> x, std::span<const double> y, Work& w) const {
  const auto& net = model_.network;
  const std::size_t nb = net.buses.size();
  const double sb = net.system_base;
  const double ws = model_.omega_s();
  const double tf = model_.freq_filter_tf;

  w.v.resize(nb);
  for (std::size_t i = 0; i < nb; ++i) w.v[i] = Complex(y[2 * i], y[2 * i + 1]);
  w.inj.assign(nb, Complex(0.0, 0.0));
  w.dx.assign(n_x(), 0.0);
  auto& out = w.out;
  out.bus_freq.resize(nb);
  out.bus_vmag.resize(nb);
  out.machine_pe.assign(machine_slots_.size(), 0.0);
  out.stations.resize(station_slots_.size());
  out.links.resize(link_slots_.size());
  out.region_coi.clear();

  for (std::size_t i = 0; i < nb; ++i) {
    const std::size_t k = bus_est_offset_ + i;
    const double diff = wrap_angle(std::arg(w.v[i]) - x[k]);
    w.dx[k] = diff / tf;
    out.bus_freq[i] = 1.0 + diff / (tf * ws);
    out.bus_vmag[i] = std::abs(w.v[i]);
  }

  std::vector<MachineState> states(machine_slots_.size());
  for (std::size_t k = 0; k < machine_slots_.size(); ++k) {
    const auto& slot = machine_slots_[k];
    const auto& m = model_.machines[slot.index];
    auto& s = states[k];
    s = read_machine(x, slot.offset);
    s.efd = slot.efd ? x[*slot.efd] : m.efd_set;
    s.pm = slot.pm ? x[*slot.pm] : m.p_ref;
    if (!m.in_service) continue;
    const Complex v = w.v[slot.bus];
    const auto d = machine_derivatives(m, s, v, ws);
    const auto t = machine_terminal(m, s, v);
    const double scale = m.s_rated / sb;
    w.inj[slot.bus] += t.current * scale;
    out.machine_pe[k] = t.pe * scale;
    w.dx[slot.offset] = d.delta;
    w.dx[slot.offset + 1] = d.omega;
    w.dx[slot.offset + 2] = d.eq_p;
    w.dx[slot.offset + 3] = d.ed_p;
    if (slot.efd) w.dx[*slot.efd] = d.efd;
    if (slot.pm) w.dx[*slot.pm] = d.pm;
  }
  for (const auto& r : regions_) {
    bool any = false;
    for (const auto& m : model_.machines) any = any || (m.in_service && m.region == r);
    if (any) out.region_coi[r] = coi_frequency(states, model_.machines, r);
  }

  for (std::size_t s = 0; s < station_slots_.size(); ++s) {
    const auto& slot = station_slots_[s];
    const auto& link = model_.hvdc_links[slot.link];
    const auto& st = slot.side == 1 ? link.station_1 : link.station_2;
    const std::size_t lo = link_slots_[slot.link].offset;
    auto& so = out.stations[s];
    so.bus = st.bus;
    so.v_dc = x[lo + (slot.side == 1 ? 0 : 1)];
    so.omega_meas = out.bus_freq[slot.bus];

    double p_ref = st.p_set0;
    if (slot.pi) {
      const auto pi = vdc_pi_controller(st, so.v_dc, st.vdc_ref, x[*slot.pi]);
      p_ref = pi.output;
      w.dx[*slot.pi] = pi.d_integral;
    }
    if (slot.fc) {
      const auto fc = fc_reference(out.bus_freq[slot.bus], out.bus_freq[slot.remote_bus],
                                   *slot.control->fc, x[*slot.fc]);
      w.dx[*slot.fc] = fc.d_state;
      so.dp_fc = fc.dp;
      p_ref += fc.dp;
    }
    double q_ref = st.q_set0;
    if (slot.pod) {
      const auto& p = *slot.control->podq;
      std::optional<double> coi;
      if (auto it = out.region_coi.find(slot.region); it != out.region_coi.end()) coi = it->second;
      double err = podq_setpoint(p.variant, coi) - so.omega_meas;
      if (slot.pade) {
        const auto pd = pade_delay(err, slot.control->delay, x[*slot.pade]);
        w.dx[*slot.pade] = pd.d_state;
        err = pd.y;
      }
      const std::size_t n = p.state_size();
      so.dq_pod = podq_output(err, p, x.subspan(*slot.pod, n),
                              std::span<double>(w.dx).subspan(*slot.pod, n));
      q_ref += so.dq_pod;
    }
    p_ref = std::clamp(p_ref, -st.p_max, st.p_max);
    q_ref = std::clamp(q_ref, -st.q_max, st.q_max);

    const Complex v = w.v[slot.bus];
    const auto refs = current_references(p_ref, q_ref, std::abs(v), st.i_max);
    VscState vs;
    vs.i_d = x[slot.i_d];
    vs.i_q = x[slot.i_d + 1];
    const auto resp = vsc_dynamics(st, vs, refs, v);
    w.dx[slot.i_d] = resp.di_d;
    w.dx[slot.i_d + 1] = resp.di_q;
    w.inj[slot.bus] += resp.injection * (st.s_rated / sb);
    so.p_bus = resp.p_bus;
    so.q_bus = resp.q_bus;
    so.p_conv = resp.p_conv;
    so.i_mag = std::hypot(vs.i_d, vs.i_q);
  }

  for (std::size_t l = 0; l < link_slots_.size(); ++l) {
    const auto& link = model_.hvdc_links[l];
    const std::size_t lo = link_slots_[l].offset;
    auto& lo_out = out.links[l];
    lo_out.name = link.name;
    double p_dc[2] = {0.0, 0.0};
    double p_conv[2] = {0.0, 0.0};
    for (std::size_t s = 0; s < station_slots_.size(); ++s) {
      const auto& slot = station_slots_[s];
      if (slot.link != l) continue;
      const auto& st = slot.side == 1 ? link.station_1 : link.station_2;
      const auto& so = out.stations[s];
      const double to_link = st.s_rated / link.base_mva();
      p_conv[slot.side - 1] = so.p_conv * to_link;
      p_dc[slot.side - 1] =
          ac_dc_power_coupling(-so.p_conv, so.i_mag, st.loss_a, st.loss_b, st.loss_c) * to_link;
    }
    const double i_dc = x[lo + 2];
    const auto d = dc_grid_dynamics(link, x[lo], x[lo + 1], i_dc, p_dc[0], p_dc[1]);
    w.dx[lo] = d.dv_dc1;
    w.dx[lo + 1] = d.dv_dc2;
    w.dx[lo + 2] = d.di_line;
    lo_out.i_dc = i_dc;
    lo_out.p_conv_1 = p_conv[0];
    lo_out.p_conv_2 = p_conv[1];
    lo_out.p_dc_1 = p_dc[0];
    lo_out.p_dc_2 = p_dc[1];
    lo_out.line_loss = link.r_pu() * i_dc * i_dc;
    for (std::size_t s = 0; s < station_slots_.size(); ++s) {
      const auto& slot = station_slots_[s];
      if (slot.link == l && slot.side == 1) {
        lo_out.p_transfer = -out.stations[s].p_bus * link.station_1.s_rated / model_.network.system_base;
      }
    }
  }
}

void DaeSystem::f(std::span<const double> x, std::span<const double> y,
                  std::span<double> dx) const {
  Work w;
  evaluate(x, y, w);
  std::copy(w.dx.begin(), w.dx.end(), dx.begin());
}

void DaeSystem::g(std::span<const double> x, std::span<const double> y,
                  std::span<double> res) const {
  Work w;
  evaluate(x, y, w);
  const std::size_t nb = w.v.size();
  Eigen::Map<const Eigen::VectorXcd> v(w.v.data(), static_cast<Eigen::Index>(nb));
  const Eigen::VectorXcd yv = ybus_ * v;
  for (std::size_t i = 0; i < nb; ++i) {
    const Complex r = yv(static_cast<Eigen::Index>(i)) - w.inj[i];
    res[2 * i] = r.real();
    res[2 * i + 1] = r.imag();
  }
}

SystemOutputs DaeSystem::outputs(std::span<const double> x, std::span<const double> y) const {
  Work w;
  evaluate(x, y, w);
  return w.out;
}

void DaeSystem::solve_algebraic(std::span<const double> x, std::vector<double>& y,
                                double tol) const {
  const std::size_t n = n_y();
  std::vector<double> r(n), rp(n);
  Eigen::MatrixXd jac(n, n);
  double best = 0.0;
  for (int it = 0; it < 30; ++it) {
    g(x, y, r);
    double nr = 0.0;
    for (double v : r) nr = std::max(nr, std::abs(v));
    if (!std::isfinite(nr)) break;
    best = nr;
    if (nr < tol) return;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(y[j]));
      const double keep = y[j];
      y[j] = keep + h;
      g(x, y, rp);
      y[j] = keep;
      for (std::size_t i = 0; i < n; ++i) jac(i, j) = (rp[i] - r[i]) / h;
    }
    Eigen::Map<Eigen::VectorXd> rv(r.data(), n);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    const Eigen::VectorXd dy = lu.solve(rv);
    double step = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      y[j] -= dy(j);
      step = std::max(step, std::abs(dy(j)));
    }
    // Below the rounding floor of the residual: accept a stalled iterate.
    if (step < 1e-15 && nr < 1e3 * tol) return;
  }
  if (best < 1e3 * tol) return;
  fail(ErrorKind::AlgebraicSolveFailed,
       "network solve did not converge (residual " + std::to_string(best) + ")");
}

void DaeSystem::clamp_limited_states(std::span<double> x) const {
  for (const auto& slot : machine_slots_) {
    const auto& m = model_.machines[slot.index];
    if (slot.efd) x[*slot.efd] = std::clamp(x[*slot.efd], m.exciter->efd_min, m.exciter->efd_max);
    if (slot.pm) x[*slot.pm] = std::clamp(x[*slot.pm], m.governor->p_min, m.governor->p_max);
  }
}

}  // namespace dcseg
