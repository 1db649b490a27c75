#include "dcseg/suppctrl.hpp"

#include <algorithm>
#include <cmath>

#include "dcseg/error.hpp"

namespace dcseg {

void FcParams::validate() const {
  if (!(t_fc > 0.0)) fail(ErrorKind::InvalidInput, "FC t_fc must be > 0");
  if (!(dp_max > 0.0)) fail(ErrorKind::InvalidInput, "FC dp_max must be > 0");
}

void PodQParams::validate() const {
  if (!(t_qf > 0.0) || !(t_qw > 0.0)) {
    fail(ErrorKind::InvalidInput, "POD-Q filter time constants must be > 0");
  }
  if (t_q1 < 0.0) fail(ErrorKind::InvalidInput, "POD-Q t_q1 must be >= 0");
  if (!(a_q > 0.0)) fail(ErrorKind::InvalidInput, "POD-Q a_q must be > 0");
  if (n_qs < 1) fail(ErrorKind::InvalidInput, "POD-Q n_qs must be >= 1");
  if (!(dq_max > 0.0)) fail(ErrorKind::InvalidInput, "POD-Q dq_max must be > 0");
}

std::size_t PodQParams::state_size() const {
  return 2 + (leadlag_bypassed() ? 0 : static_cast<std::size_t>(n_qs));
}

ControllerState ControllerState::zeros(const PodQParams& pod) {
  ControllerState s;
  s.pod.assign(pod.state_size(), 0.0);
  return s;
}

FcResult fc_reference(double omega_i, double omega_j, const FcParams& p, double state) {
  const double omega_avg = 0.5 * (omega_i + omega_j);
  const double u = p.k_fc * (omega_avg - omega_i);
  FcResult r;
  r.d_state = (u - state) / p.t_fc;
  r.dp = std::clamp(state, -p.dp_max, p.dp_max);
  return r;
}

double podq_setpoint(PodVariant variant, std::optional<double> omega_coi) {
  if (variant == PodVariant::LF) return 1.0;
  if (!omega_coi) fail(ErrorKind::MissingCoi, "FCOI damping controller without a COI input");
  return *omega_coi;
}

double podq_output(double err, const PodQParams& p, std::span<const double> state,
                   std::span<double> d_state) {
  const double lowpass = state[0];
  d_state[0] = (err - lowpass) / p.t_qf;
  const double washed = lowpass - state[1];
  d_state[1] = washed / p.t_qw;
  double signal = washed;
  if (!p.leadlag_bypassed()) {
    const double t2 = p.a_q * p.t_q1;
    for (int k = 0; k < p.n_qs; ++k) {
      const double x = state[2 + k];
      d_state[2 + k] = (signal - x) / t2;
      signal = x + (p.t_q1 / t2) * (signal - x);
    }
  }
  return std::clamp(p.k_q * signal, -p.dq_max, p.dq_max);
}

Complex leadlag_transfer(double t_q1, double a_q, int n_qs, Complex s) {
  const Complex stage = (1.0 + s * t_q1) / (1.0 + s * a_q * t_q1);
  return std::pow(stage, n_qs);
}

Complex podq_transfer(const PodQParams& p, Complex s) {
  const Complex lowpass = 1.0 / (1.0 + s * p.t_qf);
  const Complex washout = s * p.t_qw / (1.0 + s * p.t_qw);
  const Complex ll =
      p.leadlag_bypassed() ? Complex(1.0, 0.0) : leadlag_transfer(p.t_q1, p.a_q, p.n_qs, s);
  return p.k_q * lowpass * washout * ll;
}

PadeResult pade_delay(double u, const DelayParams& d, double state) {
  if (!d.active()) return {u, 0.0};
  const double half = 0.5 * d.tau;
  return {2.0 * state - u, (u - state) / half};
}

}  // namespace dcseg
