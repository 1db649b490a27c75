#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dcseg {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

enum class BusKind { Slack, PV, PQ };

/// Network node. Powers are per unit on the system base; `p_gen`/`q_gen`
/// are the scheduled generation used by the power flow (q_gen only for PQ
/// buses, PV buses solve for it).
struct Bus {
  int id = 0;
  BusKind kind = BusKind::PQ;
  double v_mag = 1.0;
  double v_ang = 0.0;
  double p_load = 0.0;
  double q_load = 0.0;
  double p_gen = 0.0;
  double q_gen = 0.0;
  std::string region;
};

/// Standard pi-model line.
struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b_sh = 0.0;
  bool status = true;

  Complex series_admittance() const { return 1.0 / Complex(r, x); }
};

struct NetworkModel {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  double system_base = 100.0;  // MVA

  /// Position of bus `id` in `buses`; throws TargetNotFound.
  std::size_t bus_index(int id) const;
  bool has_bus(int id) const;
  std::map<int, std::size_t> index_map() const;

  /// Connected components over in-service branches, as lists of bus ids.
  std::vector<std::vector<int>> islands() const;
};

/// Extra fixed injection (HVDC terminals during initialization), system pu.
struct Injection {
  int bus = 0;
  Complex s;
};

struct PowerFlowOptions {
  double tol = 1e-8;
  int max_iter = 30;
  std::vector<Injection> injections;
  /// Per-bus (v_mag, v_ang) warm start in bus order; flat start when empty.
  std::vector<Complex> warm_start;
};

struct PowerFlowSolution {
  std::vector<int> bus_ids;
  std::vector<double> v_mag;
  std::vector<double> v_ang;
  std::vector<Complex> injection;  // net complex injection per bus
  int iterations = 0;
  double max_mismatch = 0.0;

  Complex voltage(std::size_t i) const { return std::polar(v_mag[i], v_ang[i]); }
  std::size_t index_of(int bus_id) const;
};

/// Complex bus-admittance matrix in bus order. Out-of-service branches
/// contribute nothing.
ComplexMatrix build_admittance(const NetworkModel& network);

/// Adds a single branch stamp to an existing admittance matrix.
void stamp_branch(ComplexMatrix& y, const Branch& branch, std::size_t from, std::size_t to,
                  double sign = 1.0);

/// Newton-Raphson power flow in polar coordinates. Each AC island needs its
/// own slack bus.
PowerFlowSolution solve_power_flow(const NetworkModel& network,
                                   const PowerFlowOptions& options = {});

/// Max |S_spec - S_calc| over non-slack buses (P everywhere, Q on PQ buses).
double power_mismatch(const NetworkModel& network, const PowerFlowSolution& solution,
                      const std::vector<Injection>& injections = {});

/// Complex power leaving `from` into the branch, and leaving `to` into it.
std::pair<Complex, Complex> branch_flow(const Branch& branch, Complex v_from, Complex v_to);

}  // namespace dcseg
