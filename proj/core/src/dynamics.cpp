#include "dcseg/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dcseg/error.hpp"

namespace dcseg {

namespace {

constexpr Complex kJ(0.0, 1.0);

// Rotor frame: (vd + j vq) = V * exp(-j(delta - pi/2)).
Complex to_rotor(Complex v, double delta) {
  return v * std::polar(1.0, -(delta - std::numbers::pi / 2));
}

Complex to_network(Complex v, double delta) {
  return v * std::polar(1.0, delta - std::numbers::pi / 2);
}

double non_windup(double value, double rate, double lo, double hi) {
  if (value >= hi && rate > 0.0) return 0.0;
  if (value <= lo && rate < 0.0) return 0.0;
  return rate;
}

}  // namespace

std::string SynchronousMachine::label() const {
  return unit == 1 ? std::to_string(bus) : std::to_string(bus) + "u" + std::to_string(unit);
}

MachineTerminal machine_terminal(const SynchronousMachine& m, const MachineState& s,
                                 Complex v_bus) {
  MachineTerminal t;
  const Complex vdq = to_rotor(v_bus, s.delta);
  t.vd = vdq.real();
  t.vq = vdq.imag();
  t.id = (s.eq_p - t.vq) / m.xd_p;
  t.iq = (t.vd - s.ed_p) / m.xq_p;
  t.pe = t.vd * t.id + t.vq * t.iq;
  t.current = to_network(Complex(t.id, t.iq), s.delta);
  return t;
}

MachineState machine_derivatives(const SynchronousMachine& m, const MachineState& s,
                                 Complex v_bus, double omega_s) {
  const auto t = machine_terminal(m, s, v_bus);
  MachineState d{};
  d.delta = omega_s * (s.omega - 1.0);
  d.omega = (s.pm - t.pe - m.d * (s.omega - 1.0)) / (2.0 * m.h);
  d.eq_p = (-s.eq_p - (m.xd - m.xd_p) * t.id + s.efd) / m.td0_p;
  d.ed_p = (-s.ed_p + (m.xq - m.xq_p) * t.iq) / m.tq0_p;
  d.efd = 0.0;
  d.pm = 0.0;
  if (m.exciter) {
    const auto& e = *m.exciter;
    const double rate = (e.ka * (m.v_ref - std::abs(v_bus)) - s.efd) / e.ta;
    d.efd = non_windup(s.efd, rate, e.efd_min, e.efd_max);
  }
  if (m.governor) {
    const auto& g = *m.governor;
    const double rate = (m.p_ref - (s.omega - 1.0) / g.r_droop - s.pm) / g.t1;
    d.pm = non_windup(s.pm, rate, g.p_min, g.p_max);
  }
  return d;
}

MachineInit init_from_powerflow(const SynchronousMachine& m, Complex v_bus, Complex s_gen,
                                double system_base) {
  const Complex s = s_gen * (system_base / m.s_rated);
  const Complex i = std::conj(s / v_bus);
  const Complex eq_axis = v_bus + kJ * m.xq * i;

  MachineInit init;
  auto& st = init.state;
  st.delta = std::arg(eq_axis);
  st.omega = 1.0;
  const Complex vdq = to_rotor(v_bus, st.delta);
  const Complex idq = to_rotor(i, st.delta);
  st.ed_p = (m.xq - m.xq_p) * idq.imag();
  st.eq_p = vdq.imag() + m.xd_p * idq.real();
  st.efd = st.eq_p + (m.xd - m.xd_p) * idq.real();
  st.pm = vdq.real() * idq.real() + vdq.imag() * idq.imag();

  if (m.exciter) {
    const auto& e = *m.exciter;
    if (st.efd < e.efd_min || st.efd > e.efd_max) {
      std::ostringstream os;
      os << "machine " << m.label() << " needs efd=" << st.efd << " outside [" << e.efd_min
         << ", " << e.efd_max << "]";
      fail(ErrorKind::InfeasibleInit, os.str());
    }
    init.v_ref = std::abs(v_bus) + st.efd / e.ka;
  } else {
    init.v_ref = std::abs(v_bus);
  }
  if (m.governor) {
    const auto& g = *m.governor;
    if (st.pm < g.p_min || st.pm > g.p_max) {
      std::ostringstream os;
      os << "machine " << m.label() << " needs pm=" << st.pm << " outside [" << g.p_min << ", "
         << g.p_max << "]";
      fail(ErrorKind::InfeasibleInit, os.str());
    }
  }
  init.p_ref = st.pm;
  return init;
}

MachineInit init_from_powerflow(const SynchronousMachine& m, const PowerFlowSolution& pf,
                                const NetworkModel& network) {
  const auto i = pf.index_of(m.bus);
  const auto& bus = network.buses[network.bus_index(m.bus)];
  const Complex s_gen = pf.injection[i] + Complex(bus.p_load, bus.q_load);
  return init_from_powerflow(m, pf.voltage(i), s_gen, network.system_base);
}

double coi_frequency(std::span<const MachineState> states,
                     std::span<const SynchronousMachine> machines, const std::string& region) {
  double h_total = 0.0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < machines.size(); ++k) {
    const auto& m = machines[k];
    if (!m.in_service || m.region != region) continue;
    // Any common base works; the MVA rating puts every H on the same one.
    const double h = m.h * m.s_rated;
    h_total += h;
    weighted += h * states[k].omega;
  }
  if (h_total <= 0.0) fail(ErrorKind::EmptyRegion, "no in-service machine in region " + region);
  return weighted / h_total;
}

FrequencyEstimator::FrequencyEstimator(double t_f, double f_base)
    : t_f_(t_f), omega_s_(2.0 * std::numbers::pi * f_base) {
  if (!(t_f >= 0.0)) fail(ErrorKind::InvalidInput, "frequency filter time constant < 0");
}

double FrequencyEstimator::update(double theta, double dt) {
  if (last_theta_) {
    const double raw = (theta - *last_theta_) / dt;
    rate_ = (dt * raw + t_f_ * rate_) / (t_f_ + dt);
  }
  last_theta_ = theta;
  return 1.0 + rate_ / omega_s_;
}

void FrequencyEstimator::reset() {
  last_theta_.reset();
  rate_ = 0.0;
}

std::vector<double> bus_frequency(FrequencyEstimator& est, std::span<const double> v_ang,
                                  double dt) {
  std::vector<double> out;
  out.reserve(v_ang.size());
  for (double th : v_ang) out.push_back(est.update(th, dt));
  return out;
}

}  // namespace dcseg
