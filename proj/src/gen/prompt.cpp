#include "gen/prompt.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "util/error.hpp"

namespace crl {
namespace {

std::string_view group_label(Kind k, bool plural) {
  switch (k) {
    case Kind::Capacitor: return plural ? "capacitors" : "capacitor";
    case Kind::Inductor: return plural ? "inductors" : "inductor";
    case Kind::FetA: return plural ? "n-type MOSFETs" : "n-type MOSFET";
    case Kind::FetB: return plural ? "p-type MOSFETs" : "p-type MOSFET";
  }
  return "?";
}

// "a", "a and b", "a, b and c" with sep ", " and last " and ".
std::string join_and(const std::vector<std::string>& items, std::string_view sep, std::string_view last) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += (i + 1 == items.size()) ? last : sep;
    out += items[i];
  }
  return out;
}

std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

const char* category_name(Category c) {
  switch (c) {
    case Category::C: return "C";
    case Category::CE: return "CE";
    case Category::CV: return "CV";
  }
  return "?";
}

std::optional<Category> category_from_name(std::string_view s) {
  for (auto c : {Category::C, Category::CE, Category::CV})
    if (s == category_name(c)) return c;
  return std::nullopt;
}

std::array<int, kNumKinds> Prompt::pool() const {
  std::array<int, kNumKinds> counts{};
  for (const auto& d : names) ++counts[static_cast<std::size_t>(d.kind)];
  return counts;
}

void validate_prompt(const Prompt& p) {
  auto missing = [](const char* what) { fail(ErrorCode::MissingConstraint, what); };
  if (p.names.empty()) missing("prompt has an empty component pool");
  std::vector<Device> sorted = p.names;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    fail(ErrorCode::DuplicateDevice, "prompt names a device twice");
  switch (p.category) {
    case Category::C:
      if (p.eff_floor || p.vout_bound || p.vin) missing("C prompt carries a value constraint");
      break;
    case Category::CE:
      if (!p.eff_floor) missing("CE prompt needs an efficiency floor");
      if (!(*p.eff_floor > 0 && *p.eff_floor < 1)) fail(ErrorCode::InvalidInput, "efficiency floor must be in (0, 1)");
      if (p.vout_bound || p.vin) missing("CE prompt carries a voltage constraint");
      break;
    case Category::CV:
      if (!p.vout_bound || !p.vin) missing("CV prompt needs a vout bound and vin");
      if (p.eff_floor) missing("CV prompt carries an efficiency constraint");
      break;
  }
}

std::string render_prompt(const Prompt& p) {
  validate_prompt(p);
  std::vector<Kind> order;
  std::map<Kind, std::vector<int>> by_kind;
  for (const auto& d : p.names) {
    if (!by_kind.count(d.kind)) order.push_back(d.kind);
    by_kind[d.kind].push_back(d.index);
  }
  std::vector<std::string> groups;
  for (Kind k : order) {
    auto idx = by_kind[k];
    std::sort(idx.begin(), idx.end());
    std::vector<std::string> names;
    for (int i : idx) names.push_back(Device{k, i}.name());
    groups.push_back(std::string(group_label(k, idx.size() > 1)) + ": " + join_and(names, ", ", " and "));
  }

  std::string text = "Generate a " + std::to_string(p.names.size()) + "-component circuit with ";
  text += join_and(groups, "; ", "; and ");
  text += "; representing different nodes: [";
  for (std::size_t i = 0; i < p.names.size(); ++i) {
    if (i > 0) text += ", ";
    text += "'" + p.names[i].name() + "'";
  }
  text += "]";
  if (p.category == Category::CE) text += " with efficiency greater than " + shortest(*p.eff_floor);
  if (p.category == Category::CV) {
    text += " with Vout ";
    text += p.vout_bound->relation == Relation::Less ? "less than " : "greater than ";
    text += shortest(p.vout_bound->volts) + "V when Vin equals " + shortest(*p.vin) + "V";
  }
  return text;
}

bool component_constraint_met(const Prompt& p, const Netlist& n) {
  std::vector<Device> want = p.names, got;
  for (const auto& e : n.entries()) got.push_back(e.device);
  std::sort(want.begin(), want.end());
  std::sort(got.begin(), got.end());
  return want == got;
}

bool value_constraint_met(const Prompt& p, const SimResult& sim) {
  if (!sim.valid) return false;
  switch (p.category) {
    case Category::C: return true;
    case Category::CE: return sim.efficiency > *p.eff_floor;
    case Category::CV:
      return p.vout_bound->relation == Relation::Less ? sim.vout < p.vout_bound->volts
                                                       : sim.vout > p.vout_bound->volts;
  }
  return false;
}

bool prompt_satisfied(const Prompt& p, const Design& d, const SimResult& sim) {
  return sim.valid && component_constraint_met(p, d.netlist) && value_constraint_met(p, sim);
}

Prompt make_prompt(Category c, const Netlist& n, std::optional<double> eff_floor, std::optional<VoutBound> bound,
                   std::optional<double> vin) {
  Prompt p;
  p.category = c;
  for (const auto& e : n.entries()) p.names.push_back(e.device);
  p.eff_floor = eff_floor;
  p.vout_bound = bound;
  p.vin = vin;
  validate_prompt(p);
  return p;
}

Prompt prompt_for_target(const Netlist& n, const SimResult& sim, double vin, const PromptMix& mix,
                         std::mt19937_64& rng) {
  std::discrete_distribution<int> pick_category(mix.weights.begin(), mix.weights.end());
  const auto c = static_cast<Category>(pick_category(rng));
  if (!sim.valid || c == Category::C) return make_prompt(Category::C, n);
  if (c == Category::CE) {
    std::vector<double> floors;
    for (double f : kEffFloors)
      if (sim.efficiency > f) floors.push_back(f);
    if (floors.empty()) return make_prompt(Category::C, n);
    std::uniform_int_distribution<std::size_t> pick(0, floors.size() - 1);
    return make_prompt(Category::CE, n, floors[pick(rng)]);
  }
  std::uniform_int_distribution<std::size_t> pick(0, kVoutGrid.size() - 1);
  const double b = kVoutGrid[pick(rng)];
  if (sim.vout == b) return make_prompt(Category::C, n);
  return make_prompt(Category::CV, n, std::nullopt, VoutBound{sim.vout < b ? Relation::Less : Relation::Greater, b},
                     vin);
}

}  // namespace crl
