#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dcseg/grid.hpp"

namespace dcseg {

/// Frequency controller on the active-power station of a link.
struct FcParams {
  double k_fc = 100.0;   // pu power / pu frequency
  double t_fc = 0.1;     // s
  double dp_max = 1.0;   // pu

  void validate() const;
};

enum class PodVariant { LF, FCOI };

/// Reactive-power damping controller: lowpass, washout, n_qs lead/lag
/// stages, gain, saturation. t_q1 == 0 bypasses the lead/lag stages.
struct PodQParams {
  PodVariant variant = PodVariant::LF;
  double k_q = 0.0;
  double t_qf = 0.1;
  double t_qw = 5.0;
  double t_q1 = 0.0;
  double a_q = 1.0;
  int n_qs = 2;
  double dq_max = 0.1;

  void validate() const;
  bool leadlag_bypassed() const { return t_q1 == 0.0; }
  std::size_t state_size() const;
};

struct DelayParams {
  double tau = 0.0;  // s
  bool enabled = false;

  bool active() const { return enabled && tau > 0.0; }
};

/// Filter states of one station's controllers.
struct ControllerState {
  double fc = 0.0;
  std::vector<double> pod;
  double pade = 0.0;

  static ControllerState zeros(const PodQParams& pod);
};

struct FcResult {
  double dp = 0.0;        // supplementary P set point, pu
  double d_state = 0.0;
};

FcResult fc_reference(double omega_i, double omega_j, const FcParams& p, double state);

/// Frequency set point of the damping controller: nominal for LF, the
/// region COI for FCOI (MissingCoi when none is supplied).
double podq_setpoint(PodVariant variant, std::optional<double> omega_coi);

/// Evaluates the damping chain for input `err`. `state` and `d_state`
/// have PodQParams::state_size() entries: lowpass, washout, lead/lag stages.
double podq_output(double err, const PodQParams& p, std::span<const double> state,
                   std::span<double> d_state);

/// Unsaturated transfer function of the damping chain at complex s.
Complex podq_transfer(const PodQParams& p, Complex s);

/// [(1 + s t1)/(1 + s a t1)]^n
Complex leadlag_transfer(double t_q1, double a_q, int n_qs, Complex s);

struct PadeResult {
  double y = 0.0;
  double d_state = 0.0;
};

/// First-order Pade all-pass (1 - s tau/2)/(1 + s tau/2).
PadeResult pade_delay(double u, const DelayParams& d, double state);

}  // namespace dcseg
