#include "dcseg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dcseg/error.hpp"

namespace dcseg {

std::size_t NetworkModel::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  fail(ErrorKind::TargetNotFound, "bus " + std::to_string(id));
}

bool NetworkModel::has_bus(int id) const {
  return std::any_of(buses.begin(), buses.end(), [id](const Bus& b) { return b.id == id; });
}

std::map<int, std::size_t> NetworkModel::index_map() const {
  std::map<int, std::size_t> m;
  for (std::size_t i = 0; i < buses.size(); ++i) m[buses[i].id] = i;
  return m;
}

std::vector<std::vector<int>> NetworkModel::islands() const {
  const auto idx = index_map();
  std::vector<std::size_t> parent(buses.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& br : branches) {
    if (!br.status) continue;
    auto a = find(idx.at(br.from));
    auto b = find(idx.at(br.to));
    if (a != b) parent[a] = b;
  }
  std::map<std::size_t, std::vector<int>> groups;
  for (std::size_t i = 0; i < buses.size(); ++i) groups[find(i)].push_back(buses[i].id);
  std::vector<std::vector<int>> out;
  for (auto& [root, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    out.push_back(std::move(ids));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t PowerFlowSolution::index_of(int bus_id) const {
  for (std::size_t i = 0; i < bus_ids.size(); ++i) {
    if (bus_ids[i] == bus_id) return i;
  }
  fail(ErrorKind::TargetNotFound, "bus " + std::to_string(bus_id) + " not in solution");
}

void stamp_branch(ComplexMatrix& y, const Branch& branch, std::size_t from, std::size_t to,
                  double sign) {
  const Complex ys = branch.series_admittance();
  const Complex ysh(0.0, 0.5 * branch.b_sh);
  y(from, from) += sign * (ys + ysh);
  y(to, to) += sign * (ys + ysh);
  y(from, to) -= sign * ys;
  y(to, from) -= sign * ys;
}

ComplexMatrix build_admittance(const NetworkModel& network) {
  const auto n = static_cast<Eigen::Index>(network.buses.size());
  ComplexMatrix y = ComplexMatrix::Zero(n, n);
  const auto idx = network.index_map();
  for (const auto& br : network.branches) {
    if (!br.status) continue;
    if (br.r == 0.0 && br.x == 0.0) {
      fail(ErrorKind::ZeroImpedanceBranch,
           "branch " + std::to_string(br.from) + "-" + std::to_string(br.to));
    }
    if (br.from == br.to) {
      fail(ErrorKind::InvalidInput, "branch endpoints coincide at bus " + std::to_string(br.from));
    }
    stamp_branch(y, br, idx.at(br.from), idx.at(br.to));
  }
  return y;
}

std::pair<Complex, Complex> branch_flow(const Branch& branch, Complex v_from, Complex v_to) {
  const Complex ys = branch.series_admittance();
  const Complex ysh(0.0, 0.5 * branch.b_sh);
  const Complex i_from = (v_from - v_to) * ys + v_from * ysh;
  const Complex i_to = (v_to - v_from) * ys + v_to * ysh;
  return {v_from * std::conj(i_from), v_to * std::conj(i_to)};
}

namespace {

std::vector<Complex> scheduled_injection(const NetworkModel& network,
                                         const std::vector<Injection>& injections) {
  std::vector<Complex> s(network.buses.size());
  for (std::size_t i = 0; i < network.buses.size(); ++i) {
    const auto& b = network.buses[i];
    s[i] = Complex(b.p_gen - b.p_load, b.q_gen - b.q_load);
  }
  for (const auto& inj : injections) s[network.bus_index(inj.bus)] += inj.s;
  return s;
}

void check_slacks(const NetworkModel& network) {
  const auto idx = network.index_map();
  for (const auto& island : network.islands()) {
    int slacks = 0;
    for (int id : island) {
      if (network.buses[idx.at(id)].kind == BusKind::Slack) ++slacks;
    }
    if (slacks != 1) {
      std::ostringstream os;
      os << "island starting at bus " << island.front() << " has " << slacks
         << " slack buses (exactly one required)";
      fail(ErrorKind::InvalidInput, os.str());
    }
  }
}

}  // namespace

PowerFlowSolution solve_power_flow(const NetworkModel& network, const PowerFlowOptions& options) {
  check_slacks(network);
  const ComplexMatrix ybus = build_admittance(network);
  const auto n = network.buses.size();
  const auto s_spec = scheduled_injection(network, options.injections);

  Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = network.buses[i];
    if (!options.warm_start.empty()) {
      v[i] = options.warm_start.at(i);
    } else {
      // Flat start keeps regulated magnitudes on slack and PV buses.
      const double mag = b.kind == BusKind::PQ ? 1.0 : b.v_mag;
      const double ang = b.kind == BusKind::Slack ? b.v_ang : 0.0;
      v[i] = std::polar(mag, ang);
    }
    if (b.kind != BusKind::PQ) v[i] = std::polar(b.v_mag, std::arg(v[i]));
    if (b.kind == BusKind::Slack) v[i] = std::polar(b.v_mag, b.v_ang);
  }

  std::vector<std::size_t> pvpq, pq;
  for (std::size_t i = 0; i < n; ++i) {
    if (network.buses[i].kind != BusKind::Slack) pvpq.push_back(i);
    if (network.buses[i].kind == BusKind::PQ) pq.push_back(i);
  }
  const auto npvpq = static_cast<Eigen::Index>(pvpq.size());
  const auto npq = static_cast<Eigen::Index>(pq.size());
  const Eigen::Index dim = npvpq + npq;

  auto mismatch = [&](Eigen::VectorXd& f) {
    const Eigen::VectorXcd s = v.cwiseProduct((ybus * v).conjugate());
    f.resize(dim);
    for (Eigen::Index k = 0; k < npvpq; ++k) f[k] = s[pvpq[k]].real() - s_spec[pvpq[k]].real();
    for (Eigen::Index k = 0; k < npq; ++k) f[npvpq + k] = s[pq[k]].imag() - s_spec[pq[k]].imag();
    return dim == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
  };

  Eigen::VectorXd f;
  double norm = mismatch(f);
  int iter = 0;
  while (!(norm <= options.tol)) {
    if (iter >= options.max_iter || !std::isfinite(norm)) {
      std::ostringstream os;
      os << "power flow did not converge after " << iter << " iterations (mismatch " << norm
         << " pu)";
      fail(ErrorKind::NoConvergence, os.str());
    }
    const Eigen::VectorXcd ibus = ybus * v;
    const Eigen::VectorXcd vnorm = v.cwiseQuotient(v.cwiseAbs().cast<Complex>());
    const ComplexMatrix dv = v.asDiagonal();
    const ComplexMatrix ds_dva =
        Complex(0, 1) * dv * (ComplexMatrix(ibus.asDiagonal()) - ybus * dv).conjugate();
    const ComplexMatrix ds_dvm = dv * (ybus * vnorm.asDiagonal()).conjugate() +
                                 ComplexMatrix(ibus.conjugate().asDiagonal()) * vnorm.asDiagonal();

    Eigen::MatrixXd jac(dim, dim);
    for (Eigen::Index r = 0; r < npvpq; ++r) {
      for (Eigen::Index c = 0; c < npvpq; ++c) jac(r, c) = ds_dva(pvpq[r], pvpq[c]).real();
      for (Eigen::Index c = 0; c < npq; ++c) jac(r, npvpq + c) = ds_dvm(pvpq[r], pq[c]).real();
    }
    for (Eigen::Index r = 0; r < npq; ++r) {
      for (Eigen::Index c = 0; c < npvpq; ++c) jac(npvpq + r, c) = ds_dva(pq[r], pvpq[c]).imag();
      for (Eigen::Index c = 0; c < npq; ++c)
        jac(npvpq + r, npvpq + c) = ds_dvm(pq[r], pq[c]).imag();
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) {
      fail(ErrorKind::SingularJacobian,
           "power-flow Jacobian singular at iteration " + std::to_string(iter));
    }
    const Eigen::VectorXd dx = lu.solve(-f);
    for (Eigen::Index k = 0; k < npvpq; ++k) {
      const auto i = pvpq[k];
      v[i] = std::polar(std::abs(v[i]), std::arg(v[i]) + dx[k]);
    }
    for (Eigen::Index k = 0; k < npq; ++k) {
      const auto i = pq[k];
      v[i] = std::polar(std::abs(v[i]) + dx[npvpq + k], std::arg(v[i]));
    }
    ++iter;
    norm = mismatch(f);
  }

  PowerFlowSolution sol;
  sol.iterations = iter;
  sol.max_mismatch = norm;
  const Eigen::VectorXcd s = v.cwiseProduct((ybus * v).conjugate());
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(v[i]) <= 0.0) {
      fail(ErrorKind::NoConvergence, "non-positive voltage at bus " +
                                         std::to_string(network.buses[i].id));
    }
    sol.bus_ids.push_back(network.buses[i].id);
    sol.v_mag.push_back(std::abs(v[i]));
    sol.v_ang.push_back(std::arg(v[i]));
    sol.injection.push_back(s[i]);
  }
  return sol;
}

double power_mismatch(const NetworkModel& network, const PowerFlowSolution& solution,
                      const std::vector<Injection>& injections) {
  const ComplexMatrix ybus = build_admittance(network);
  const auto s_spec = scheduled_injection(network, injections);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(network.buses.size()));
  for (std::size_t i = 0; i < network.buses.size(); ++i) {
    v[i] = solution.voltage(solution.index_of(network.buses[i].id));
  }
  const Eigen::VectorXcd s = v.cwiseProduct((ybus * v).conjugate());
  double worst = 0.0;
  for (std::size_t i = 0; i < network.buses.size(); ++i) {
    const auto kind = network.buses[i].kind;
    if (kind == BusKind::Slack) continue;
    worst = std::max(worst, std::abs(s[i].real() - s_spec[i].real()));
    if (kind == BusKind::PQ) worst = std::max(worst, std::abs(s[i].imag() - s_spec[i].imag()));
  }
  return worst;
}

}  // namespace dcseg
