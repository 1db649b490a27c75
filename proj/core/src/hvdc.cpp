#include "dcseg/hvdc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dcseg/error.hpp"

namespace dcseg {

void VscStation::validate() const {
  auto bad = [this](const char* what) {
    fail(ErrorKind::InvalidInput, "VSC at bus " + std::to_string(bus) + ": " + what);
  };
  if (!(tau_i > 0.0)) bad("tau_i must be > 0");
  if (!(i_max > 0.0)) bad("i_max must be > 0");
  if (!(vdc_min < vdc_max)) bad("vdc_min must be < vdc_max");
  if (loss_a < 0.0 || loss_b < 0.0 || loss_c < 0.0) bad("loss coefficients must be >= 0");
  if (!(s_rated > 0.0)) bad("s_rated must be > 0");
  if (!(c_dc > 0.0)) bad("c_dc must be > 0");
}

void HvdcLink::validate() const {
  station_1.validate();
  station_2.validate();
  if (station_1.mode == station_2.mode) {
    fail(ErrorKind::InvalidInput,
         "link " + name + " needs one PControl and one VdcControl station");
  }
  if (line.r_dc < 0.0 || !(line.l_dc > 0.0) || !(line.v_base_dc > 0.0)) {
    fail(ErrorKind::InvalidInput, "link " + name + " has invalid DC line data");
  }
}

const VscStation& HvdcLink::pcontrol() const {
  return station_1.mode == VscMode::PControl ? station_1 : station_2;
}

const VscStation& HvdcLink::vdccontrol() const {
  return station_1.mode == VscMode::VdcControl ? station_1 : station_2;
}

CurrentRefs current_references(double p_ref, double q_ref, double v_ac, double i_max) {
  if (!(v_ac > 0.1)) {
    std::ostringstream os;
    os << "AC voltage " << v_ac << " pu at converter terminal";
    fail(ErrorKind::VoltageCollapse, os.str());
  }
  CurrentRefs r;
  r.i_d = p_ref / v_ac;
  r.i_q = -q_ref / v_ac;
  if (std::abs(r.i_d) > i_max) {
    r.i_d = std::copysign(i_max, r.i_d);
    r.limited = true;
  }
  const double iq_max = std::sqrt(std::max(0.0, i_max * i_max - r.i_d * r.i_d));
  if (std::abs(r.i_q) > iq_max) {
    r.i_q = std::copysign(iq_max, r.i_q);
    r.limited = true;
  }
  return r;
}

VscResponse vsc_dynamics(const VscStation& st, const VscState& x, const CurrentRefs& refs,
                         Complex v_bus) {
  VscResponse out;
  out.di_d = (refs.i_d - x.i_d) / st.tau_i;
  out.di_q = (refs.i_q - x.i_q) / st.tau_i;
  const double v = std::abs(v_bus);
  const Complex unit = v > 0.0 ? v_bus / v : Complex(1.0, 0.0);
  out.injection = Complex(x.i_d, x.i_q) * unit;
  out.p_bus = v * x.i_d;
  out.q_bus = -v * x.i_q;
  out.p_conv = out.p_bus + st.rs * (x.i_d * x.i_d + x.i_q * x.i_q);
  return out;
}

double ac_dc_power_coupling(double p_ac, double i_mag, double loss_a, double loss_b,
                            double loss_c) {
  const double loss = loss_a + loss_b * i_mag + loss_c * i_mag * i_mag;
  return p_ac - loss;
}

DcDerivatives dc_grid_dynamics(const HvdcLink& link, double v_dc1, double v_dc2, double i_line,
                               double p_dc1, double p_dc2) {
  auto guard = [&link](const VscStation& st, double v) {
    if (v > 1.5 * st.vdc_max) {
      std::ostringstream os;
      os << "link " << link.name << " DC bus at AC bus " << st.bus << ": " << v << " pu";
      fail(ErrorKind::DcOvervoltage, os.str());
    }
    if (v < 0.5 * st.vdc_min) {
      std::ostringstream os;
      os << "link " << link.name << " DC bus at AC bus " << st.bus << ": " << v << " pu";
      fail(ErrorKind::DcUndervoltage, os.str());
    }
  };
  guard(link.station_1, v_dc1);
  guard(link.station_2, v_dc2);

  DcDerivatives d;
  d.dv_dc1 = (p_dc1 / v_dc1 - i_line) / link.c1_pu();
  d.dv_dc2 = (p_dc2 / v_dc2 + i_line) / link.c2_pu();
  d.di_line = (v_dc1 - v_dc2 - link.r_pu() * i_line) / link.l_pu();
  return d;
}

PiResult vdc_pi_controller(const VscStation& st, double v_dc, double v_dc_ref, double integral) {
  const double err = v_dc - v_dc_ref;
  const double raw = st.kp_vdc * err + integral;
  PiResult r;
  r.output = std::clamp(raw, -st.p_max, st.p_max);
  r.saturated = raw != r.output;
  const bool pushing_out = (raw >= st.p_max && err > 0.0) || (raw <= -st.p_max && err < 0.0);
  r.d_integral = pushing_out ? 0.0 : st.ki_vdc * err;
  return r;
}

}  // namespace dcseg
