#pragma once

#include <string>

#include "dcseg/grid.hpp"

namespace dcseg {

enum class VscMode { PControl, VdcControl };

/// Converter station of a point-to-point link. Per-unit values are on the
/// station rating. Defaults are the 3500 MVA / +-535 kV link parameters.
struct VscStation {
  int bus = 0;
  double s_rated = 3500.0;  // MVA
  VscMode mode = VscMode::PControl;
  double rs = 0.004;
  double xs = 0.2;
  double tau_i = 0.002;     // s
  double kp_vdc = 10.0;     // pu
  double ki_vdc = 20.0;     // pu/s
  double loss_a = 0.0;
  double loss_b = 0.0;
  double loss_c = 0.0;
  double i_max = 1.0;
  double p_max = 1.0;
  double q_max = 0.4;
  double vdc_min = 0.9;
  double vdc_max = 1.1;
  double vdc_ref = 1.0;
  double c_dc = 305e-6;     // F
  double p_set0 = 0.0;      // AC injection into the grid
  double q_set0 = 0.0;

  void validate() const;
};

struct DcLine {
  double r_dc = 1.6;        // ohm
  double l_dc = 0.067;      // H
  double v_base_dc = 1070;  // kV pole-to-pole
};

struct HvdcLink {
  std::string name;
  VscStation station_1;
  VscStation station_2;
  DcLine line;

  void validate() const;
  /// DC per-unit system: station_1 rating and pole-to-pole voltage.
  double base_mva() const { return station_1.s_rated; }
  double z_base() const { return line.v_base_dc * line.v_base_dc / base_mva(); }
  double r_pu() const { return line.r_dc / z_base(); }
  double l_pu() const { return line.l_dc / z_base(); }          // s
  double c1_pu() const { return station_1.c_dc * z_base(); }    // s
  double c2_pu() const { return station_2.c_dc * z_base(); }    // s
  const VscStation& pcontrol() const;
  const VscStation& vdccontrol() const;
};

/// Converter currents in the frame aligned with the bus voltage, station pu.
struct VscState {
  double i_d = 0.0;
  double i_q = 0.0;
  double v_dc = 1.0;
  double vdc_pi_integral = 0.0;
};

struct CurrentRefs {
  double i_d = 0.0;
  double i_q = 0.0;
  bool limited = false;
};

/// i_d = p/v, i_q = -q/v, then limited to i_max keeping the active current.
CurrentRefs current_references(double p_ref, double q_ref, double v_ac, double i_max);

struct VscResponse {
  double di_d = 0.0;
  double di_q = 0.0;
  Complex injection;     // current into the bus, station pu
  double p_bus = 0.0;    // at the point of connection
  double q_bus = 0.0;
  double p_conv = 0.0;   // at the converter terminal, includes the reactor loss
};

VscResponse vsc_dynamics(const VscStation& st, const VscState& x, const CurrentRefs& refs,
                         Complex v_bus);

/// Power delivered into the DC bus for `p_ac` drawn from the AC side.
double ac_dc_power_coupling(double p_ac, double i_mag, double loss_a, double loss_b,
                            double loss_c);

struct DcDerivatives {
  double dv_dc1 = 0.0;
  double dv_dc2 = 0.0;
  double di_line = 0.0;
};

/// Capacitor and series R-L line equations on the link base. p_dc1/p_dc2
/// are the powers the converters push into their DC buses.
DcDerivatives dc_grid_dynamics(const HvdcLink& link, double v_dc1, double v_dc2, double i_line,
                               double p_dc1, double p_dc2);

struct PiResult {
  double output = 0.0;
  double d_integral = 0.0;
  bool saturated = false;
};

/// DC-voltage PI. Positive output raises the station's AC injection.
PiResult vdc_pi_controller(const VscStation& st, double v_dc, double v_dc_ref, double integral);

}  // namespace dcseg
