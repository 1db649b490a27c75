#include "dcseg/smallsignal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "dcseg/error.hpp"

namespace dcseg {

std::string ModeClass::str() const {
  switch (kind) {
    case ModeClassKind::InterArea: return "inter-area";
    case ModeClassKind::Intra: return region;
    case ModeClassKind::NonElectromech: return "-";
  }
  return "?";
}

Eigen::MatrixXd numerical_jacobian(
    const std::function<void(std::span<const double>, std::span<double>)>& rhs,
    std::span<const double> x_eq, double h_rel) {
  const auto n = static_cast<Eigen::Index>(x_eq.size());
  Eigen::MatrixXd a(n, n);
  std::vector<double> x(x_eq.begin(), x_eq.end());
  std::vector<double> fp(x.size()), fm(x.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = h_rel * std::max(std::abs(x_eq[k]), 1.0);
    x[k] = x_eq[k] + h;
    rhs(x, fp);
    x[k] = x_eq[k] - h;
    rhs(x, fm);
    x[k] = x_eq[k];
    for (Eigen::Index i = 0; i < n; ++i) a(i, k) = (fp[i] - fm[i]) / (2.0 * h);
  }
  return a;
}

LinearModel linearize(const SystemModel& model, std::span<const double> x_eq, double h_rel) {
  DaeSystem sys(model);
  if (x_eq.size() != sys.n_x()) fail(ErrorKind::InvalidInput, "equilibrium has the wrong size");
  std::vector<double> y_eq = sys.voltages_to_y(model.bus_voltage0);
  sys.solve_algebraic(x_eq, y_eq, 1e-13);
  std::vector<double> y;
  auto rhs = [&](std::span<const double> x, std::span<double> dx) {
    y = y_eq;
    sys.solve_algebraic(x, y, 1e-13);
    sys.f(x, y, dx);
  };
  LinearModel lin;
  lin.a = numerical_jacobian(rhs, x_eq, h_rel);
  lin.state_labels = sys.labels();
  lin.x_eq.assign(x_eq.begin(), x_eq.end());
  return lin;
}

std::pair<double, double> damping_frequency(Complex lambda) {
  const double mag = std::abs(lambda);
  if (mag == 0.0) fail(ErrorKind::ZeroEigenvalue, "damping ratio of a zero eigenvalue");
  return {-lambda.real() / mag, lambda.imag() / (2.0 * std::numbers::pi)};
}

std::vector<Mode> eigensolve(const LinearModel& lin) {
  const auto n = lin.a.rows();
  if (lin.a.cols() != n) fail(ErrorKind::InvalidInput, "state matrix is not square");
  if (!lin.a.allFinite()) fail(ErrorKind::InvalidInput, "state matrix has non-finite entries");
  std::vector<Mode> modes;
  if (n == 0) return modes;

  Eigen::EigenSolver<Eigen::MatrixXd> es(lin.a, true);
  if (es.info() != Eigen::Success) {
    fail(ErrorKind::NoConvergence, "eigenvalue iteration did not converge");
  }
  const Eigen::VectorXcd lambdas = es.eigenvalues();
  const Eigen::MatrixXcd v = es.eigenvectors();
  const Eigen::FullPivLU<Eigen::MatrixXcd> lu(v);
  Eigen::MatrixXcd w;
  if (lu.isInvertible()) {
    w = lu.inverse();
  } else {
    w = Eigen::MatrixXcd::Constant(n, n, Complex(std::nan(""), 0.0));
  }

  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex lam = lambdas(k);
    if (lam.imag() < 0.0) continue;
    Mode m;
    m.lambda = lam;
    if (std::abs(lam) > 0.0) {
      std::tie(m.zeta, m.freq) = damping_frequency(lam);
    }
    m.right = v.col(k);
    m.left = w.row(k).transpose();
    modes.push_back(std::move(m));
  }
  std::stable_sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    if (a.freq != b.freq) return a.freq < b.freq;
    return a.lambda.real() < b.lambda.real();
  });
  return modes;
}

Eigen::VectorXcd complex_participations(const Mode& mode) {
  return mode.left.cwiseProduct(mode.right);
}

std::vector<double> participation_factors(const Mode& mode) {
  const double denom = std::abs(mode.left.cwiseProduct(mode.right).sum());
  const double cond = mode.left.norm() * mode.right.norm() / denom;
  if (!std::isfinite(cond) || cond > 1e8) {
    fail(ErrorKind::DefectiveMode, "ill-conditioned eigenvector pair at lambda = " +
                                       std::to_string(mode.lambda.real()) + " + j" +
                                       std::to_string(mode.lambda.imag()));
  }
  const Eigen::VectorXcd p = complex_participations(mode);
  std::vector<double> out(static_cast<std::size_t>(p.size()));
  double mx = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    out[k] = std::abs(p(k));
    mx = std::max(mx, out[k]);
  }
  if (mx > 0.0) {
    for (double& x : out) x /= mx;
  }
  return out;
}

ModeClass classify_mode(const Mode& mode, const std::vector<StateLabel>& labels,
                        const std::map<std::string, std::string>& machine_region,
                        const ClassifyOptions& opt) {
  ModeClass nc;
  if (mode.freq < opt.band_lo || mode.freq > opt.band_hi) return nc;
  if (mode.participations.size() != labels.size()) return nc;
  double best = 0.0;
  std::string best_region;
  std::set<std::string> strong;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k].name != "omega") continue;
    const auto it = machine_region.find(labels[k].device);
    if (it == machine_region.end()) continue;
    const double p = mode.participations[k];
    if (p > best) {
      best = p;
      best_region = it->second;
    }
    if (p >= opt.thresh) strong.insert(it->second);
  }
  if (best < opt.min_speed_participation) return nc;
  if (strong.size() >= 2) return {ModeClassKind::InterArea, ""};
  return {ModeClassKind::Intra, best_region};
}

std::map<std::string, std::string> machine_regions(const SystemModel& model) {
  std::map<std::string, std::string> out;
  for (const auto& m : model.machines) {
    if (m.in_service) out["gen." + m.label()] = m.region;
  }
  return out;
}

std::vector<const Mode*> ModalAnalysis::electromechanical() const {
  std::vector<const Mode*> out;
  for (const auto& m : modes) {
    if (m.region_class.kind != ModeClassKind::NonElectromech) out.push_back(&m);
  }
  return out;
}

ModalAnalysis analyze(const SystemModel& model, std::span<const double> x_eq,
                      const ClassifyOptions& opt, double h_rel) {
  ModalAnalysis out;
  out.lin = linearize(model, x_eq, h_rel);
  out.modes = eigensolve(out.lin);
  const auto regions = machine_regions(model);
  for (auto& m : out.modes) {
    const bool in_band = m.freq >= opt.band_lo && m.freq <= opt.band_hi;
    try {
      m.participations = participation_factors(m);
    } catch (const Error& e) {
      if (in_band) throw;
      m.participations.clear();
    }
    m.region_class = classify_mode(m, out.lin.state_labels, regions, opt);
  }
  return out;
}

}  // namespace dcseg
