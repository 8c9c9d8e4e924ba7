// Triple-list and incident text encodings of a netlist.

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "netlist/netlist.hpp"
#include "util/error.hpp"

namespace crl {
namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) syntax(std::string("expected '") + c + "'");
    ++pos_;
  }
  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }
  std::string_view quoted() {
    skip_ws();
    if (pos_ >= s_.size() || (s_[pos_] != '\'' && s_[pos_] != '"')) syntax("expected quoted string");
    char q = s_[pos_++];
    auto end = s_.find(q, pos_);
    if (end == std::string_view::npos) syntax("unterminated string");
    auto out = s_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return out;
  }
  bool at_end() {
    skip_ws();
    return pos_ == s_.size();
  }
  [[noreturn]] void syntax(const std::string& msg) const {
    fail(ErrorCode::MalformedSyntax, msg + " at offset " + std::to_string(pos_));
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Netlist parse_triple_list(std::string_view text) {
  Cursor c(text);
  std::vector<Entry> entries;
  c.expect('[');
  if (!c.accept(']')) {
    do {
      c.expect('[');
      auto name = c.quoted();
      auto dev = Device::from_name(name);
      if (!dev) fail(ErrorCode::UnknownDeviceName, "unknown device name '" + std::string(name) + "'");
      std::vector<NodeId> nodes;
      while (c.accept(',')) {
        auto ns = c.quoted();
        auto node = NodeId::from_string(ns);
        if (!node) c.syntax("bad node name '" + std::string(ns) + "'");
        nodes.push_back(*node);
      }
      c.expect(']');
      if (nodes.size() != kExplicitPorts)
        fail(ErrorCode::ArityMismatch, dev->name() + " needs exactly 2 terminals, got " +
                                           std::to_string(nodes.size()));
      entries.push_back(Entry{*dev, {nodes[0], nodes[1]}});
    } while (c.accept(','));
    c.expect(']');
  }
  if (!c.at_end()) c.syntax("trailing characters");
  return Netlist(std::move(entries));
}

std::string emit_triple_list(const Netlist& n) {
  std::string out = "[";
  bool first = true;
  for (const auto& e : n.entries()) {
    if (!first) out += ",";
    first = false;
    out += "['" + e.device.name() + "'";
    for (const auto& node : e.nodes) out += ",'" + node.str() + "'";
    out += "]";
  }
  out += "]";
  return out;
}

std::string encode_incident(const Netlist& n, Duty d) {
  std::ostringstream os;
  for (const auto& node : n.nodes()) {
    os << "Node " << node.str() << " connects: ";
    bool first = true;
    for (const auto& e : n.entries()) {
      for (int t = 0; t < kExplicitPorts; ++t) {
        if (e.nodes[static_cast<std::size_t>(t)] != node) continue;
        if (!first) os << ", ";
        first = false;
        os << e.device.name() << ':' << terminal_role(e.device.kind, t);
      }
    }
    os << ".\n";
  }
  os << "Duty cycle: " << d.str() << ".\n";
  return os.str();
}

std::pair<Netlist, Duty> parse_incident(std::string_view text) {
  struct Partial {
    Device device;
    std::array<std::optional<NodeId>, kExplicitPorts> nodes;
  };
  std::vector<Partial> order;
  std::map<Device, std::size_t> slot;
  std::optional<Duty> duty;

  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    if (duty) fail(ErrorCode::MalformedSyntax, "content after duty line");
    if (line.back() != '.') fail(ErrorCode::MalformedSyntax, "line must end with '.'");
    line.remove_suffix(1);

    constexpr std::string_view kDuty = "Duty cycle: ";
    if (line.substr(0, kDuty.size()) == kDuty) {
      std::string value(line.substr(kDuty.size()));
      try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        duty = Duty::from_value(v);
      } catch (const std::logic_error&) {
        fail(ErrorCode::MalformedSyntax, "bad duty value '" + value + "'");
      }
      continue;
    }

    constexpr std::string_view kNode = "Node ";
    constexpr std::string_view kConn = " connects: ";
    if (line.substr(0, kNode.size()) != kNode) fail(ErrorCode::MalformedSyntax, "expected 'Node'");
    line.remove_prefix(kNode.size());
    auto sep = line.find(kConn);
    if (sep == std::string_view::npos) fail(ErrorCode::MalformedSyntax, "expected 'connects:'");
    auto node = NodeId::from_string(line.substr(0, sep));
    if (!node) fail(ErrorCode::MalformedSyntax, "bad node name");
    auto rest = line.substr(sep + kConn.size());

    while (!rest.empty()) {
      auto comma = rest.find(',');
      auto item = trim(rest.substr(0, comma));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      auto colon = item.find(':');
      if (colon == std::string_view::npos) fail(ErrorCode::MalformedSyntax, "expected device:role");
      auto dev = Device::from_name(item.substr(0, colon));
      if (!dev) fail(ErrorCode::UnknownDeviceName, "unknown device '" + std::string(item.substr(0, colon)) + "'");
      auto role = item.substr(colon + 1);
      int terminal = -1;
      for (int t = 0; t < kExplicitPorts; ++t)
        if (terminal_role(dev->kind, t) == role) terminal = t;
      if (terminal < 0)
        fail(ErrorCode::InconsistentIncidence, "role '" + std::string(role) + "' invalid for " + dev->name());
      auto [it, inserted] = slot.try_emplace(*dev, order.size());
      if (inserted) order.push_back(Partial{*dev, {}});
      auto& cell = order[it->second].nodes[static_cast<std::size_t>(terminal)];
      if (cell) fail(ErrorCode::InconsistentIncidence, dev->name() + " terminal listed on two nodes");
      cell = *node;
    }
  }
  if (!duty) fail(ErrorCode::MalformedSyntax, "missing duty line");

  std::vector<Entry> entries;
  for (const auto& p : order) {
    if (!p.nodes[0] || !p.nodes[1])
      fail(ErrorCode::InconsistentIncidence, p.device.name() + " has an unassigned terminal");
    entries.push_back(Entry{p.device, {*p.nodes[0], *p.nodes[1]}});
  }
  return {Netlist(std::move(entries)), *duty};
}

}  // namespace crl
