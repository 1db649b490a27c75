#include "dcseg/poddesign.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "dcseg/error.hpp"

namespace dcseg {

namespace {

constexpr double kMaxStagePhase = 85.0 * std::numbers::pi / 180.0;

double correlation(const Mode& a, const std::vector<StateLabel>& la, const Mode& b,
                   const std::map<StateLabel, std::size_t>& lb) {
  Complex dot(0.0, 0.0);
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < la.size(); ++i) {
    const auto it = lb.find(la[i]);
    if (it == lb.end()) continue;
    const Complex va = a.right(static_cast<Eigen::Index>(i));
    const Complex vb = b.right(static_cast<Eigen::Index>(it->second));
    dot += std::conj(va) * vb;
    na += std::norm(va);
    nb += std::norm(vb);
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::abs(dot) / std::sqrt(na * nb);
}

}  // namespace

DesignTarget DesignTarget::make(Complex lambda0, double zeta_d) {
  DesignTarget t;
  t.lambda0 = lambda0;
  t.zeta0 = damping_frequency(lambda0).first;
  t.zeta_d = zeta_d;
  const double w0 = lambda0.imag();
  if (!(w0 > 0.0)) fail(ErrorKind::InvalidInput, "target mode is not oscillatory");
  if (!(zeta_d > t.zeta0)) {
    std::ostringstream os;
    os << "target damping " << zeta_d << " does not exceed the mode's damping " << t.zeta0;
    fail(ErrorKind::InvalidInput, os.str());
  }
  t.lambda_d = Complex(-zeta_d * w0, w0);
  return t;
}

SensitivityEstimate SensitivityEstimate::from_eigenvalues(Complex lambda0, Complex lambda_nc,
                                                          double delta_k) {
  if (delta_k == 0.0) fail(ErrorKind::ZeroGainStep, "sensitivity gain step is zero");
  SensitivityEstimate e;
  e.delta_k = delta_k;
  e.lambda_nc = lambda_nc;
  e.s_nc = (lambda_nc - lambda0) / delta_k;
  e.phase_nc = std::arg(e.s_nc);
  return e;
}

std::size_t match_mode(const Mode& target, const std::vector<StateLabel>& target_labels,
                       const std::vector<Mode>& candidates,
                       const std::vector<StateLabel>& candidate_labels) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if ((candidates[k].lambda.imag() > 0.0) == (target.lambda.imag() > 0.0)) idx.push_back(k);
  }
  if (idx.empty()) fail(ErrorKind::ModeMatchAmbiguous, "no candidate mode of the same kind");
  if (idx.size() == 1) return idx.front();

  std::map<StateLabel, std::size_t> lookup;
  for (std::size_t i = 0; i < candidate_labels.size(); ++i) lookup[candidate_labels[i]] = i;
  std::vector<std::pair<double, std::size_t>> corr;
  for (auto k : idx) corr.push_back({correlation(target, target_labels, candidates[k], lookup), k});
  std::sort(corr.begin(), corr.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (corr[0].first - corr[1].first >= 0.05) return corr[0].second;

  std::vector<std::pair<double, std::size_t>> near;
  for (const auto& [c, k] : corr) {
    if (c >= corr[0].first - 0.05) near.push_back({std::abs(candidates[k].lambda - target.lambda), k});
  }
  std::sort(near.begin(), near.end());
  if (near[1].first > 2.0 * near[0].first) return near[0].second;
  std::ostringstream os;
  os << "cannot tell modes apart near lambda = " << target.lambda.real() << " + j"
     << target.lambda.imag();
  fail(ErrorKind::ModeMatchAmbiguous, os.str());
}

SensitivityEstimate numerical_sensitivity(
    const std::function<std::pair<std::vector<Mode>, std::vector<StateLabel>>(double)>& eigen_at_gain,
    const Mode& target, const std::vector<StateLabel>& target_labels, double delta_k) {
  if (delta_k == 0.0) fail(ErrorKind::ZeroGainStep, "sensitivity gain step is zero");
  const auto [modes, labels] = eigen_at_gain(delta_k);
  const auto k = match_mode(target, target_labels, modes, labels);
  return SensitivityEstimate::from_eigenvalues(target.lambda, modes[k].lambda, delta_k);
}

SensitivityEstimate numerical_sensitivity(const SystemModel& model, int station_bus,
                                          PodVariant variant, const Mode& target,
                                          const std::vector<StateLabel>& target_labels,
                                          double delta_k, const PodQParams& base) {
  model.station(station_bus);
  auto eigen_at_gain = [&](double k) {
    SystemModel m = model;
    PodQParams p = base;
    p.variant = variant;
    p.k_q = k;
    p.t_q1 = 0.0;
    m.controllers.at(station_bus).podq = p;
    const auto eq = initialize(m);
    auto an = analyze(eq.model, eq.x);
    return std::make_pair(std::move(an.modes), std::move(an.lin.state_labels));
  };
  return numerical_sensitivity(eigen_at_gain, target, target_labels, delta_k);
}

LeadLagDesign design_leadlag(double phase_nc, int n_qs, double omega0) {
  const double pi = std::numbers::pi;
  if (n_qs < 1) fail(ErrorKind::InvalidInput, "n_qs must be >= 1");
  if (!(omega0 > 0.0)) fail(ErrorKind::InvalidInput, "omega0 must be > 0");
  if (!(phase_nc > -pi - 1e-12 && phase_nc <= pi + 1e-12)) {
    fail(ErrorKind::InvalidInput, "phase must lie in (-pi, pi]");
  }
  LeadLagDesign d;
  d.n_qs = n_qs;
  d.lead = phase_nc >= 0.0;
  if (d.lead) {
    d.phi_per_stage = (pi - phase_nc) / n_qs;
    const double s = std::sin(d.phi_per_stage);
    d.a_q = (1.0 - s) / (1.0 + s);
  } else {
    d.phi_per_stage = (pi + phase_nc) / n_qs;
    const double s = std::sin(d.phi_per_stage);
    d.a_q = (1.0 + s) / (1.0 - s);
  }
  if (d.phi_per_stage >= kMaxStagePhase) {
    std::ostringstream os;
    os << "per-stage compensation " << d.phi_per_stage * 180.0 / pi << " deg with " << n_qs
       << " stages";
    fail(ErrorKind::ExcessivePhaseRequirement, os.str());
  }
  d.t_q1 = 1.0 / (omega0 * std::sqrt(d.a_q));
  d.t_q2 = d.a_q * d.t_q1;
  return d;
}

Complex compensated_sensitivity(const SensitivityEstimate& est, const LeadLagDesign& ll,
                                Complex lambda0) {
  return est.s_nc * leadlag_transfer(ll.t_q1, ll.a_q, ll.n_qs, lambda0);
}

GainResult compute_gain(Complex lambda0, Complex lambda_d, Complex s_hat, double k_max) {
  if (!(std::abs(s_hat) > 0.0)) fail(ErrorKind::ZeroSensitivity, "sensitivity is zero");
  const double k_abs = std::abs(lambda_d - lambda0) / std::abs(s_hat);
  const double miss_pos = std::abs(lambda_d - (lambda0 + k_abs * s_hat));
  const double miss_neg = std::abs(lambda_d - (lambda0 - k_abs * s_hat));
  GainResult g;
  g.gamma = miss_pos <= miss_neg ? 1 : -1;
  g.k_q = g.gamma * k_abs;
  if (std::abs(g.k_q) > k_max) {
    g.k_q = std::copysign(k_max, g.k_q);
    g.saturated = true;
  }
  g.predicted_lambda = lambda0 + g.k_q * s_hat;
  return g;
}

StationDesign design_station(const SystemModel& model, int station_bus, PodVariant variant,
                             const Mode& target, const std::vector<StateLabel>& target_labels,
                             const DesignOptions& opt) {
  StationDesign d;
  d.bus = station_bus;
  d.variant = variant;
  d.target = DesignTarget::make(target.lambda, opt.zeta_d);
  PodQParams base;
  base.t_qf = opt.t_qf;
  base.t_qw = opt.t_qw;
  base.n_qs = opt.n_qs;
  base.dq_max = opt.dq_max;
  d.sensitivity = numerical_sensitivity(model, station_bus, variant, target, target_labels,
                                        opt.delta_k, base);
  d.leadlag = design_leadlag(d.sensitivity.phase_nc, opt.n_qs, target.lambda.imag());
  d.s_compensated = compensated_sensitivity(d.sensitivity, d.leadlag, target.lambda);
  d.gain = compute_gain(d.target.lambda0, d.target.lambda_d, d.s_compensated, opt.k_max);
  d.params = base;
  d.params.variant = variant;
  d.params.k_q = d.gain.k_q;
  d.params.t_q1 = d.leadlag.t_q1;
  d.params.a_q = d.leadlag.a_q;
  return d;
}

SystemModel install_designs(const SystemModel& model, const std::vector<StationDesign>& designs) {
  SystemModel m = model;
  for (const auto& d : designs) m.controllers.at(d.bus).podq = d.params;
  return m;
}

std::vector<ModeComparison> verify_design(const SystemModel& model,
                                          const std::vector<StationDesign>& designs,
                                          const ModalAnalysis& baseline) {
  const auto eq = initialize(install_designs(model, designs));
  const auto after = analyze(eq.model, eq.x);
  std::vector<ModeComparison> out;
  for (const Mode* m : baseline.electromechanical()) {
    const auto k = match_mode(*m, baseline.lin.state_labels, after.modes, after.lin.state_labels);
    ModeComparison c;
    c.lambda_before = m->lambda;
    c.lambda_after = after.modes[k].lambda;
    c.zeta_before = m->zeta;
    c.zeta_after = after.modes[k].zeta;
    c.freq_after = after.modes[k].freq;
    c.region_class = m->region_class;
    out.push_back(c);
  }
  return out;
}

}  // namespace dcseg
