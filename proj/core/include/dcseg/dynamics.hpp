#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcseg/grid.hpp"

namespace dcseg {

/// First-order static exciter: ta * defd/dt = ka * (v_ref - |V|) - efd.
struct ExciterIEEEsimple {
  double ka = 50.0;
  double ta = 0.05;
  double efd_min = -5.0;
  double efd_max = 5.0;
};

/// Droop governor with one lag: t1 * dpm/dt = p_ref - (omega - 1)/r_droop - pm.
struct GovernorDroop {
  double r_droop = 0.05;
  double t1 = 0.5;
  double p_max = 1.1;
  double p_min = 0.0;
};

/// Two-axis machine, parameters on its own MVA base.
struct SynchronousMachine {
  int bus = 0;
  int unit = 1;
  double s_rated = 100.0;
  double h = 5.0;
  double d = 0.0;
  double xd = 1.8;
  double xq = 1.7;
  double xd_p = 0.3;
  double xq_p = 0.55;
  double td0_p = 8.0;
  double tq0_p = 0.4;
  std::string region;
  std::optional<ExciterIEEEsimple> exciter;
  std::optional<GovernorDroop> governor;
  bool in_service = true;

  // Operating set points, filled in by init_from_powerflow.
  double v_ref = 1.0;
  double p_ref = 0.0;
  double efd_set = 1.0;  // held field voltage when there is no exciter

  /// Inertia on the system base: h * s_rated / system_base.
  double inertia_on(double system_base) const { return h * s_rated / system_base; }
  std::string label() const;
};

struct MachineState {
  double delta = 0.0;
  double omega = 1.0;
  double eq_p = 1.0;
  double ed_p = 0.0;
  double efd = 1.0;
  double pm = 0.0;
};

/// Stator quantities in the rotor frame and the network injection.
struct MachineTerminal {
  double vd = 0.0;
  double vq = 0.0;
  double id = 0.0;
  double iq = 0.0;
  double pe = 0.0;          // machine base
  Complex current;          // injected into the bus, machine base
};

MachineTerminal machine_terminal(const SynchronousMachine& m, const MachineState& s,
                                 Complex v_bus);

/// Time derivatives of every MachineState field. Absent exciter or governor
/// leave efd or pm constant.
MachineState machine_derivatives(const SynchronousMachine& m, const MachineState& s,
                                 Complex v_bus, double omega_s);

struct MachineInit {
  MachineState state;
  double v_ref = 1.0;
  double p_ref = 0.0;
};

/// Equilibrium for a machine delivering `s_gen` (system pu) at terminal
/// voltage `v_bus`. Throws InfeasibleInit if efd or pm fall outside limits.
MachineInit init_from_powerflow(const SynchronousMachine& m, Complex v_bus, Complex s_gen,
                                double system_base);

/// Convenience overload: the machine takes the whole generation of its bus.
MachineInit init_from_powerflow(const SynchronousMachine& m, const PowerFlowSolution& pf,
                                const NetworkModel& network);

/// Inertia-weighted speed over the in-service machines of `region`.
double coi_frequency(std::span<const MachineState> states,
                     std::span<const SynchronousMachine> machines, const std::string& region);

/// Filtered angle-derivative frequency estimate for sampled angles.
class FrequencyEstimator {
 public:
  explicit FrequencyEstimator(double t_f = 0.02, double f_base = 50.0);

  double t_f() const { return t_f_; }
  /// Feeds one unwrapped angle sample and returns the estimate in pu.
  double update(double theta, double dt);
  void reset();

 private:
  double t_f_;
  double omega_s_;
  std::optional<double> last_theta_;
  double rate_ = 0.0;  // filtered d(theta)/dt, rad/s
};

std::vector<double> bus_frequency(FrequencyEstimator& est, std::span<const double> v_ang,
                                  double dt);

}  // namespace dcseg
