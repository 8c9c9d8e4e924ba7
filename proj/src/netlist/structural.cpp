#include <algorithm>
#include <map>
#include <numeric>

#include "netlist/netlist.hpp"

namespace crl {

std::string_view violation_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::MissingPort: return "MissingPort";
    case ViolationKind::SelfLoop: return "SelfLoop";
    case ViolationKind::DisconnectedGraph: return "DisconnectedGraph";
    case ViolationKind::DanglingInternal: return "DanglingInternal";
    case ViolationKind::EmptyNetlist: return "EmptyNetlist";
    case ViolationKind::ControlNetTerminal: return "ControlNetTerminal";
  }
  return "?";
}

bool has_errors(const std::vector<Violation>& v) {
  return std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.severity == Severity::Error; });
}

std::vector<Violation> structural_check(const Netlist& n) {
  std::vector<Violation> out;
  if (n.empty()) out.push_back({ViolationKind::EmptyNetlist, Severity::Error, "no devices"});

  // Ports reachable through explicit or implied (gate/body) terminals.
  bool has_in = false, has_out = false, has_gnd = false;
  std::map<NodeId, int> touches;
  for (const auto& e : n.entries()) {
    for (const auto& node : e.nodes) {
      ++touches[node];
      has_in |= node == NodeId::in();
      has_out |= node == NodeId::out();
      has_gnd |= node == NodeId::gnd();
    }
    has_gnd |= e.device.kind == Kind::FetA;
    has_in |= e.device.kind == Kind::FetB;
  }
  if (!has_in) out.push_back({ViolationKind::MissingPort, Severity::Error, "IN"});
  if (!has_out) out.push_back({ViolationKind::MissingPort, Severity::Error, "OUT"});
  if (!has_gnd) out.push_back({ViolationKind::MissingPort, Severity::Error, "0"});

  for (const auto& e : n.entries())
    if (e.nodes[0] == e.nodes[1])
      out.push_back({ViolationKind::SelfLoop, Severity::Error, e.device.name()});

  for (const auto& [node, count] : touches) {
    if (!node.is_external() && count < 2)
      out.push_back({ViolationKind::DanglingInternal, Severity::Error, node.str()});
    if (node.is_control())
      out.push_back({ViolationKind::ControlNetTerminal, Severity::Warning, node.str()});
  }

  // Connectivity of the device-node incidence graph over explicit terminals.
  if (!touches.empty()) {
    std::map<NodeId, std::size_t> index;
    for (const auto& [node, _] : touches) index.emplace(node, index.size());
    std::vector<std::size_t> parent(index.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& e : n.entries()) parent[find(index[e.nodes[0]])] = find(index[e.nodes[1]]);
    std::size_t roots = 0;
    for (std::size_t i = 0; i < parent.size(); ++i) roots += find(i) == i;
    if (roots > 1)
      out.push_back({ViolationKind::DisconnectedGraph, Severity::Error,
                     std::to_string(roots) + " components"});
  }

  std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.kind, a.detail) < std::tie(b.kind, b.detail);
  });
  return out;
}

}  // namespace crl
