#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcseg/simcore.hpp"

namespace dcseg {

struct StateLabel {
  std::string device;  // e.g. "gen.1", "vsc.7", "link.A", "bus.7"
  std::string name;    // e.g. "omega", "i_d"

  std::string str() const { return device + "." + name; }
  bool operator==(const StateLabel&) const = default;
  auto operator<=>(const StateLabel&) const = default;
};

/// Per-station quantities evaluated at one (x, y) point.
struct StationOutputs {
  int bus = 0;
  double p_bus = 0.0;  // station pu, injected into the grid
  double q_bus = 0.0;
  double p_conv = 0.0;
  double i_mag = 0.0;
  double v_dc = 1.0;
  double dp_fc = 0.0;
  double dq_pod = 0.0;
  double omega_meas = 1.0;
};

struct LinkOutputs {
  std::string name;
  double p_transfer = 0.0;  // system pu, drawn at station_1 and carried to station_2
  double i_dc = 0.0;
  double p_conv_1 = 0.0;    // link pu, injected into AC at converter terminals
  double p_conv_2 = 0.0;
  double p_dc_1 = 0.0;      // link pu, pushed into the DC buses
  double p_dc_2 = 0.0;
  double line_loss = 0.0;   // link pu
};

struct SystemOutputs {
  std::vector<double> bus_freq;
  std::vector<double> bus_vmag;
  std::vector<double> machine_pe;  // system pu
  std::vector<StationOutputs> stations;
  std::vector<LinkOutputs> links;
  std::map<std::string, double> region_coi;
};

/// The assembled differential-algebraic system x' = f(x, y), 0 = g(x, y).
/// y holds (Re V, Im V) per bus.
class DaeSystem {
 public:
  explicit DaeSystem(const SystemModel& model);
  DaeSystem(const DaeSystem&) = delete;
  DaeSystem& operator=(const DaeSystem&) = delete;
  DaeSystem(DaeSystem&&) = default;
  DaeSystem& operator=(DaeSystem&&) = default;

  const SystemModel& model() const { return model_; }
  std::size_t n_x() const { return labels_.size(); }
  std::size_t n_y() const { return 2 * model_.network.buses.size(); }
  const std::vector<StateLabel>& labels() const { return labels_; }
  std::optional<std::size_t> find_state(const std::string& device, const std::string& name) const;
  /// Time constant of states integrated as exact first-order lags (0 otherwise).
  const std::vector<double>& lag_time_constants() const { return lag_tau_; }

  void f(std::span<const double> x, std::span<const double> y, std::span<double> dx) const;
  void g(std::span<const double> x, std::span<const double> y, std::span<double> res) const;

  /// Newton solve of g(x, y) = 0 for y, starting from `y`.
  void solve_algebraic(std::span<const double> x, std::vector<double>& y,
                       double tol = 1e-12) const;

  SystemOutputs outputs(std::span<const double> x, std::span<const double> y) const;

  /// Post-step clamp of states with hard (non-windup) limits.
  void clamp_limited_states(std::span<double> x) const;

  std::vector<double> voltages_to_y(const std::vector<Complex>& v) const;

 private:
  struct MachineSlot {
    std::size_t index = 0;
    std::size_t bus = 0;
    std::size_t offset = 0;
    std::optional<std::size_t> efd;
    std::optional<std::size_t> pm;
  };
  struct StationSlot {
    std::size_t link = 0;
    int side = 1;
    std::size_t bus = 0;
    std::size_t remote_bus = 0;
    std::size_t i_d = 0;
    std::optional<std::size_t> pi;
    std::optional<std::size_t> fc;
    std::optional<std::size_t> pod;
    std::optional<std::size_t> pade;
    const StationControl* control = nullptr;
    std::string region;
  };
  struct LinkSlot {
    std::size_t offset = 0;
  };

  struct Work;
  void evaluate(std::span<const double> x, std::span<const double> y, Work& w) const;

  SystemModel model_;
  ComplexMatrix ybus_;
  std::vector<StateLabel> labels_;
  std::vector<double> lag_tau_;
  std::vector<MachineSlot> machine_slots_;
  std::vector<StationSlot> station_slots_;
  std::vector<LinkSlot> link_slots_;
  std::size_t bus_est_offset_ = 0;
  std::vector<std::string> regions_;
};

}  // namespace dcseg
