#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcseg/assembly.hpp"
#include "dcseg/simcore.hpp"

namespace dcseg {

struct LinearModel {
  Eigen::MatrixXd a;
  std::vector<StateLabel> state_labels;
  std::vector<double> x_eq;
};

enum class ModeClassKind { InterArea, Intra, NonElectromech };

struct ModeClass {
  ModeClassKind kind = ModeClassKind::NonElectromech;
  std::string region;  // for Intra

  std::string str() const;
  bool operator==(const ModeClass&) const = default;
};

struct Mode {
  Complex lambda;
  double zeta = 1.0;
  double freq = 0.0;  // Hz
  Eigen::VectorXcd right;
  Eigen::VectorXcd left;  // scaled so that left^T right = 1
  std::vector<double> participations;  // normalized to max 1
  ModeClass region_class;
};

/// Central-difference Jacobian of `rhs` at x_eq; column k uses
/// h = h_rel * max(|x_k|, 1).
Eigen::MatrixXd numerical_jacobian(
    const std::function<void(std::span<const double>, std::span<double>)>& rhs,
    std::span<const double> x_eq, double h_rel = 1e-5);

/// Linearization of the full system with the network solved inside each
/// perturbation.
LinearModel linearize(const SystemModel& model, std::span<const double> x_eq,
                      double h_rel = 1e-5);

/// All eigenvalues with right/left eigenvectors; each conjugate pair is
/// reported once (Im >= 0). Sorted by frequency, then real part.
std::vector<Mode> eigensolve(const LinearModel& lin);

/// (zeta, f_hz) for lambda; ZeroEigenvalue when lambda == 0.
std::pair<double, double> damping_frequency(Complex lambda);

/// Complex participations w_k v_k (they sum to 1).
Eigen::VectorXcd complex_participations(const Mode& mode);

/// |w_k v_k| normalized to max 1. DefectiveMode when the eigenvector pair
/// is ill-conditioned (|w||v|/|w^T v| > 1e8).
std::vector<double> participation_factors(const Mode& mode);

struct ClassifyOptions {
  double band_lo = 0.1;  // Hz
  double band_hi = 2.0;
  double thresh = 0.3;
  double min_speed_participation = 0.1;
};

/// `machine_region` maps a machine device ("gen.<label>") to its region.
ModeClass classify_mode(const Mode& mode, const std::vector<StateLabel>& labels,
                        const std::map<std::string, std::string>& machine_region,
                        const ClassifyOptions& opt = {});

std::map<std::string, std::string> machine_regions(const SystemModel& model);

struct ModalAnalysis {
  LinearModel lin;
  std::vector<Mode> modes;

  /// Oscillatory modes inside the electromechanical band.
  std::vector<const Mode*> electromechanical() const;
};

/// linearize + eigensolve + participations + classification.
ModalAnalysis analyze(const SystemModel& model, std::span<const double> x_eq,
                      const ClassifyOptions& opt = {}, double h_rel = 1e-5);

}  // namespace dcseg
