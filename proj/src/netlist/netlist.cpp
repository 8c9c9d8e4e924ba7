#include "netlist/netlist.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "util/error.hpp"

namespace crl {

std::string_view kind_prefix(Kind k) {
  switch (k) {
    case Kind::Capacitor: return "capacitor";
    case Kind::Inductor: return "inductor";
    case Kind::FetA: return "FET-A";
    case Kind::FetB: return "FET-B";
  }
  return "?";
}

std::string_view terminal_role(Kind k, int terminal) {
  if (is_switch(k)) return terminal == 0 ? "drain" : "source";
  return terminal == 0 ? "pos" : "neg";
}

bool is_switch(Kind k) { return k == Kind::FetA || k == Kind::FetB; }

NodeId NodeId::internal(std::int64_t label) {
  if (label < 1) fail(ErrorCode::InvalidInput, "internal node labels start at 1");
  return NodeId(label);
}

std::optional<NodeId> NodeId::from_string(std::string_view s) {
  if (s == "IN") return in();
  if (s == "OUT") return out();
  if (s == "0") return gnd();
  if (s == "GATEN") return port(Port::GateN);
  if (s == "GATEP") return port(Port::GateP);
  if (s.empty() || s.front() == '-' || s.front() == '+') return std::nullopt;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v < 1) return std::nullopt;
  return NodeId(v);
}

std::string NodeId::str() const {
  if (!is_external()) return std::to_string(code_);
  switch (as_port()) {
    case Port::In: return "IN";
    case Port::Out: return "OUT";
    case Port::Gnd: return "0";
    case Port::GateN: return "GATEN";
    case Port::GateP: return "GATEP";
  }
  return "?";
}

std::string Device::name() const {
  return std::string(kind_prefix(kind)) + "-" + std::to_string(index);
}

std::optional<Device> Device::from_name(std::string_view s) {
  for (Kind k : kAllKinds) {
    auto prefix = kind_prefix(k);
    if (s.size() > prefix.size() + 1 && s.substr(0, prefix.size()) == prefix &&
        s[prefix.size()] == '-') {
      auto digits = s.substr(prefix.size() + 1);
      int idx = 0;
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
      if (ec != std::errc{} || ptr != digits.data() + digits.size() || idx < 0 ||
          digits.front() == '+')
        return std::nullopt;
      return Device{k, idx};
    }
  }
  return std::nullopt;
}

Netlist::Netlist(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::set<Device> seen;
  for (const auto& e : entries_) {
    if (!seen.insert(e.device).second)
      fail(ErrorCode::DuplicateDevice, "duplicate device " + e.device.name());
  }
}

std::array<int, kNumKinds> Netlist::kind_counts() const {
  std::array<int, kNumKinds> c{};
  for (const auto& e : entries_) ++c[static_cast<int>(e.device.kind)];
  return c;
}

std::vector<NodeId> Netlist::nodes() const {
  std::vector<NodeId> out;
  for (const auto& e : entries_)
    for (const auto& n : e.nodes) out.push_back(n);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Duty Duty::from_value(double d) {
  for (int i = 0; i < kCount; ++i)
    if (std::abs(kValues[static_cast<std::size_t>(i)] - d) < 1e-9) return Duty(i);
  fail(ErrorCode::InvalidDuty, "duty cycle must be one of 0.1, 0.3, 0.5, 0.7, 0.9");
}

Duty Duty::from_index(int i) {
  if (i < 0 || i >= kCount) fail(ErrorCode::InvalidDuty, "duty index out of range");
  return Duty(i);
}

std::array<Duty, Duty::kCount> Duty::all() {
  return {Duty(0), Duty(1), Duty(2), Duty(3), Duty(4)};
}

std::string Duty::str() const {
  static constexpr std::array<const char*, kCount> kText = {"0.1", "0.3", "0.5", "0.7", "0.9"};
  return kText[static_cast<std::size_t>(index_)];
}

}  // namespace crl
