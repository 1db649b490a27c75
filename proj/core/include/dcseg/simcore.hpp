#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcseg/dynamics.hpp"
#include "dcseg/grid.hpp"
#include "dcseg/hvdc.hpp"
#include "dcseg/suppctrl.hpp"

namespace dcseg {

/// Supplementary controllers attached to the converter station at `bus`.
struct StationControl {
  int bus = 0;
  std::optional<FcParams> fc;
  std::optional<PodQParams> podq;
  DelayParams delay;
};

struct ControllerBank {
  std::vector<StationControl> stations;

  const StationControl* find(int bus) const;
  /// Returns the entry for `bus`, creating an empty one if needed.
  StationControl& at(int bus);
};

struct SystemModel {
  NetworkModel network;
  std::vector<SynchronousMachine> machines;
  std::vector<HvdcLink> hvdc_links;
  ControllerBank controllers;
  double base_frequency = 50.0;  // Hz
  double freq_filter_tf = 0.02;  // s, bus frequency estimators

  // Operating point data established by initialize().
  bool initialized = false;
  std::vector<Complex> load_admittance;  // per bus, system pu
  std::vector<Complex> bus_voltage0;     // per bus

  double omega_s() const;
  void validate() const;
  std::vector<std::string> regions() const;
  const std::string& region_of_bus(int bus) const;
  /// Machine position by (bus, unit); throws TargetNotFound.
  std::size_t machine_index(int bus, int unit = 1) const;
  /// Finds the link and side (1 or 2) of the station at `bus`.
  std::pair<std::size_t, int> station_at(int bus) const;
  const VscStation& station(int bus) const;
};

enum class EventKind { TripBranch, TripMachine };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::TripBranch;
  int from = 0;  // TripBranch
  int to = 0;
  int bus = 0;   // TripMachine
  int unit = 1;

  static Event trip_branch(double t, int from, int to);
  static Event trip_machine(double t, int bus, int unit = 1);
};

struct SimConfig {
  double dt = 0.005;
  double t_stop = 10.0;
  double newton_tol = 1e-9;
  int max_newton_iter = 30;
  /// Channel-name prefixes to record; empty records everything.
  std::vector<std::string> record;
  int decimation = 1;

  void validate() const;
};

struct TimeSeries {
  std::vector<double> time;
  std::vector<std::string> names;
  std::vector<std::vector<double>> channels;
  /// Dynamic state at t_stop.
  std::vector<double> x_final;

  bool has(const std::string& name) const;
  const std::vector<double>& channel(const std::string& name) const;
  /// CSV with a `time_s` column and 9 significant digits.
  void write_csv(std::ostream& os) const;
};

struct Equilibrium {
  SystemModel model;         // with operating set points filled in
  std::vector<double> x;
  std::vector<double> y;
  double max_residual = 0.0;
  PowerFlowSolution power_flow;
};

/// Power flow plus device initialization; throws InitResidualTooLarge when
/// the resulting state is not an equilibrium within 1e-7.
Equilibrium initialize(const SystemModel& model, double pf_tol = 1e-10);

/// Implicit trapezoidal simulation with a simultaneous network solve.
TimeSeries simulate(const SystemModel& model, std::span<const double> x0,
                    const std::vector<Event>& events, const SimConfig& cfg);

/// Returns a copy of `model` with the event applied.
SystemModel apply_event(const SystemModel& model, const Event& event);

/// Largest |dx/dt| over all states at the operating point (x, y solved).
double max_derivative(const SystemModel& model, std::span<const double> x);

}  // namespace dcseg
