#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crl {

enum class Kind : std::uint8_t { Capacitor = 0, Inductor = 1, FetA = 2, FetB = 3 };

inline constexpr int kNumKinds = 4;
inline constexpr std::array<Kind, kNumKinds> kAllKinds = {
    Kind::Capacitor, Kind::Inductor, Kind::FetA, Kind::FetB};

// Every kind exposes two explicit terminals. FET gate and body are implied:
// FetA -> (GATEN, 0), FetB -> (GATEP, IN).
inline constexpr int kExplicitPorts = 2;

std::string_view kind_prefix(Kind k);  // "capacitor", "inductor", "FET-A", "FET-B"
std::string_view terminal_role(Kind k, int terminal);  // pos/neg or drain/source
bool is_switch(Kind k);

// A circuit net. External ports are fixed names; internal nets carry a
// positive integer label ("0" is ground, so internal labels start at 1).
class NodeId {
 public:
  enum class Port : std::int8_t { In = 0, Out, Gnd, GateN, GateP };
  static constexpr int kNumPorts = 5;

  static NodeId port(Port p) { return NodeId(static_cast<std::int64_t>(p) - kNumPorts); }
  static NodeId internal(std::int64_t label);
  static NodeId in() { return port(Port::In); }
  static NodeId out() { return port(Port::Out); }
  static NodeId gnd() { return port(Port::Gnd); }

  // Accepts IN, OUT, 0, GATEN, GATEP or a positive decimal integer.
  static std::optional<NodeId> from_string(std::string_view s);

  bool is_external() const { return code_ < 0; }
  bool is_control() const {
    return is_external() && (as_port() == Port::GateN || as_port() == Port::GateP);
  }
  Port as_port() const { return static_cast<Port>(code_ + kNumPorts); }
  std::int64_t label() const { return code_; }
  std::string str() const;

  // Externals first in the order IN, OUT, 0, GATEN, GATEP, then internals ascending.
  auto operator<=>(const NodeId&) const = default;

 private:
  explicit NodeId(std::int64_t code) : code_(code) {}
  std::int64_t code_;
};

struct Device {
  Kind kind = Kind::Capacitor;
  int index = 0;

  std::string name() const;
  static std::optional<Device> from_name(std::string_view s);
  auto operator<=>(const Device&) const = default;
};

struct Entry {
  Device device;
  std::array<NodeId, kExplicitPorts> nodes{NodeId::gnd(), NodeId::gnd()};
  bool operator==(const Entry&) const = default;
};

// Ordered list of device-to-node assignments. Device identifiers are unique.
class Netlist {
 public:
  Netlist() = default;
  explicit Netlist(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::array<int, kNumKinds> kind_counts() const;
  // Distinct nodes touched by explicit terminals, sorted.
  std::vector<NodeId> nodes() const;

  bool operator==(const Netlist&) const = default;

 private:
  std::vector<Entry> entries_;
};

// One of the five swept duty cycles.
class Duty {
 public:
  static constexpr int kCount = 5;
  static constexpr std::array<double, kCount> kValues = {0.1, 0.3, 0.5, 0.7, 0.9};

  static Duty from_value(double d);  // throws InvalidDuty
  static Duty from_index(int i);
  static std::array<Duty, kCount> all();

  double value() const { return kValues[static_cast<std::size_t>(index_)]; }
  int index() const { return index_; }
  std::string str() const;  // "0.1", "0.3", ...
  auto operator<=>(const Duty&) const = default;

 private:
  explicit Duty(int i) : index_(i) {}
  int index_ = 0;
};

// ---- triple-list text ----
Netlist parse_triple_list(std::string_view text);
std::string emit_triple_list(const Netlist& n);

// ---- incident encoding ----
std::string encode_incident(const Netlist& n, Duty d);
std::pair<Netlist, Duty> parse_incident(std::string_view text);

// ---- structural checks ----
enum class ViolationKind {
  MissingPort,
  SelfLoop,
  DisconnectedGraph,
  DanglingInternal,
  EmptyNetlist,
  ControlNetTerminal,
};
enum class Severity { Warning, Error };

struct Violation {
  ViolationKind kind;
  Severity severity;
  std::string detail;
  bool operator==(const Violation&) const = default;
};

std::string_view violation_name(ViolationKind k);
std::vector<Violation> structural_check(const Netlist& n);
bool has_errors(const std::vector<Violation>& v);

}  // namespace crl
