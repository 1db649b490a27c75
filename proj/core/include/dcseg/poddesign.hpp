#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dcseg/simcore.hpp"
#include "dcseg/smallsignal.hpp"

namespace dcseg {

struct DesignTarget {
  Complex lambda0;
  double zeta0 = 0.0;
  double zeta_d = 0.15;
  Complex lambda_d;

  /// lambda_d = -zeta_d * omega0 + j omega0 with omega0 = Im(lambda0).
  static DesignTarget make(Complex lambda0, double zeta_d);
};

struct SensitivityEstimate {
  Complex s_nc;
  double delta_k = 0.0;
  Complex lambda_nc;
  double phase_nc = 0.0;  // rad

  static SensitivityEstimate from_eigenvalues(Complex lambda0, Complex lambda_nc, double delta_k);
};

struct LeadLagDesign {
  double a_q = 1.0;
  double t_q1 = 0.0;
  double t_q2 = 0.0;
  int n_qs = 2;
  double phi_per_stage = 0.0;  // rad
  bool lead = true;
};

struct GainResult {
  double k_q = 0.0;
  int gamma = 1;
  bool saturated = false;
  Complex predicted_lambda;
  double achieved_zeta = 0.0;  // filled in by verification
};

/// Picks the mode in `candidates` that continues `target` (eigenvector
/// correlation over common state labels, nearest eigenvalue as tie-break).
/// Throws ModeMatchAmbiguous when neither criterion separates candidates.
std::size_t match_mode(const Mode& target, const std::vector<StateLabel>& target_labels,
                       const std::vector<Mode>& candidates,
                       const std::vector<StateLabel>& candidate_labels);

/// Generic form: `eigen_at_gain(k)` returns the modes and state labels of
/// the system with the damping gain set to k.
SensitivityEstimate numerical_sensitivity(
    const std::function<std::pair<std::vector<Mode>, std::vector<StateLabel>>(double)>& eigen_at_gain,
    const Mode& target, const std::vector<StateLabel>& target_labels, double delta_k);

/// Installs POD-Q (lead/lag bypassed, gain delta_k) at the station on
/// `station_bus` and estimates the mode's gain sensitivity.
SensitivityEstimate numerical_sensitivity(const SystemModel& model, int station_bus,
                                          PodVariant variant, const Mode& target,
                                          const std::vector<StateLabel>& target_labels,
                                          double delta_k = 20.0, const PodQParams& base = {});

LeadLagDesign design_leadlag(double phase_nc, int n_qs, double omega0);

Complex compensated_sensitivity(const SensitivityEstimate& est, const LeadLagDesign& ll,
                                Complex lambda0);

GainResult compute_gain(Complex lambda0, Complex lambda_d, Complex s_hat, double k_max = 400.0);

struct DesignOptions {
  double delta_k = 20.0;
  double zeta_d = 0.15;
  int n_qs = 2;
  double k_max = 400.0;
  double t_qf = 0.1;
  double t_qw = 5.0;
  double dq_max = 0.1;
};

struct StationDesign {
  int bus = 0;
  PodVariant variant = PodVariant::LF;
  DesignTarget target;
  SensitivityEstimate sensitivity;
  LeadLagDesign leadlag;
  Complex s_compensated;
  GainResult gain;
  PodQParams params;
};

/// Full design pipeline for one station and one target mode.
StationDesign design_station(const SystemModel& model, int station_bus, PodVariant variant,
                             const Mode& target, const std::vector<StateLabel>& target_labels,
                             const DesignOptions& opt = {});

struct ModeComparison {
  Complex lambda_before;
  Complex lambda_after;
  double zeta_before = 0.0;
  double zeta_after = 0.0;
  double freq_after = 0.0;
  ModeClass region_class;
};

/// Installs the designs, relinearizes and pairs every electromechanical
/// baseline mode with its closed-loop counterpart.
std::vector<ModeComparison> verify_design(const SystemModel& model,
                                          const std::vector<StationDesign>& designs,
                                          const ModalAnalysis& baseline);

/// Copy of `model` with the designed POD-Q controllers installed.
SystemModel install_designs(const SystemModel& model, const std::vector<StationDesign>& designs);

}  // namespace dcseg
