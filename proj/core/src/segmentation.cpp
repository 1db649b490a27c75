#include "dcseg/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "dcseg/error.hpp"

namespace dcseg {

namespace {

bool same_branch(const Branch& br, const std::pair<int, int>& p) {
  return (br.from == p.first && br.to == p.second) || (br.from == p.second && br.to == p.first);
}

}  // namespace

SystemModel segment(const SystemModel& model, const SegmentationPlan& plan) {
  model.validate();
  if (plan.links.empty()) fail(ErrorKind::InvalidInput, "segmentation plan has no links");
  const auto& net = model.network;
  const double sb = net.system_base;

  PowerFlowOptions opts;
  for (const auto& l : model.hvdc_links) {
    for (const auto* st : {&l.station_1, &l.station_2}) {
      opts.injections.push_back({st->bus, Complex(st->p_set0, st->q_set0) * (st->s_rated / sb)});
    }
  }
  opts.tol = 1e-10;
  const auto pf = solve_power_flow(net, opts);

  SystemModel out = model;
  auto& branches = out.network.branches;
  for (const auto& rep : plan.links) {
    HvdcLink link = rep.link;
    link.validate();
    const int a = link.station_1.bus;
    const int b = link.station_2.bus;
    if (rep.branches.empty()) fail(ErrorKind::InvalidInput, "link " + link.name + " replaces no branch");
    Complex s_a(0.0, 0.0);  // leaving bus a into the corridor
    Complex s_b(0.0, 0.0);
    for (const auto& p : rep.branches) {
      if (!((p.first == a && p.second == b) || (p.first == b && p.second == a))) {
        fail(ErrorKind::InvalidInput, "branch " + std::to_string(p.first) + "-" +
                                          std::to_string(p.second) + " does not join the stations of link " +
                                          link.name);
      }
      auto it = std::find_if(branches.begin(), branches.end(), [&](const Branch& br) {
        return br.status && same_branch(br, p);
      });
      if (it == branches.end()) {
        fail(ErrorKind::TargetNotFound, "no in-service branch " + std::to_string(p.first) + "-" +
                                            std::to_string(p.second));
      }
      const auto [s_from, s_to] = branch_flow(*it, pf.voltage(pf.index_of(it->from)),
                                              pf.voltage(pf.index_of(it->to)));
      if (it->from == a) {
        s_a += s_from;
        s_b += s_to;
      } else {
        s_a += s_to;
        s_b += s_from;
      }
      branches.erase(it);
    }
    // Each station injects what the corridor used to draw at its end.
    auto set = [&](VscStation& st, Complex drawn) {
      const Complex s = -drawn * (sb / st.s_rated);
      if (std::abs(s.real()) > st.p_max || std::abs(s) > st.i_max * 1.0) {
        std::ostringstream os;
        os << "link " << link.name << " station at bus " << st.bus << " needs " << std::abs(s) * st.s_rated
           << " MVA, rated " << st.s_rated;
        fail(ErrorKind::RatingExceeded, os.str());
      }
      st.p_set0 = s.real();
      st.q_set0 = s.imag();
      if (std::abs(st.q_set0) > st.q_max) {
        std::ostringstream os;
        os << "link " << link.name << " station at bus " << st.bus << " needs Q = " << st.q_set0
           << " pu beyond q_max";
        fail(ErrorKind::RatingExceeded, os.str());
      }
    };
    set(link.station_1, s_a);
    set(link.station_2, s_b);
    out.hvdc_links.push_back(link);
  }

  const auto islands = out.network.islands();
  std::set<std::string> seen;
  for (const auto& isl : islands) {
    std::set<std::string> regions;
    for (int id : isl) regions.insert(out.region_of_bus(id));
    if (regions.size() != 1) {
      fail(ErrorKind::NotASeparator, "removed branches leave regions connected through AC");
    }
    if (!seen.insert(*regions.begin()).second) {
      fail(ErrorKind::NotASeparator, "region " + *regions.begin() + " is split into several islands");
    }
  }
  if (islands.size() < 2) fail(ErrorKind::NotASeparator, "network remains one AC island");

  for (const auto& isl : islands) {
    bool has_slack = false;
    for (int id : isl) has_slack = has_slack || net.buses[net.bus_index(id)].kind == BusKind::Slack;
    if (has_slack) continue;
    const SynchronousMachine* best = nullptr;
    for (const auto& m : out.machines) {
      if (!m.in_service || std::find(isl.begin(), isl.end(), m.bus) == isl.end()) continue;
      if (!best || m.h * m.s_rated > best->h * best->s_rated) best = &m;
    }
    if (!best) {
      fail(ErrorKind::InvalidInput, "island of region " + out.region_of_bus(isl.front()) +
                                        " has no machine to act as slack");
    }
    auto& bus = out.network.buses[out.network.bus_index(best->bus)];
    const std::size_t pi = pf.index_of(bus.id);
    bus.kind = BusKind::Slack;
    bus.v_mag = pf.v_mag[pi];
    bus.v_ang = pf.v_ang[pi];
  }
  out.initialized = false;
  out.load_admittance.clear();
  out.bus_voltage0.clear();
  return out;
}

}  // namespace dcseg
