#pragma once

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "netlist/netlist.hpp"
#include "sim/simulator.hpp"

namespace crl {

enum class Category { C = 0, CE, CV };
inline constexpr int kNumCategories = 3;
const char* category_name(Category c);
std::optional<Category> category_from_name(std::string_view s);

enum class Relation { Less, Greater };

struct VoutBound {
  Relation relation = Relation::Less;
  double volts = 0.0;
  bool operator==(const VoutBound&) const = default;
};

struct Prompt {
  Category category = Category::C;
  // Device names in the order the prompt lists them. The pool multiset is
  // derived from it.
  std::vector<Device> names;
  std::optional<double> eff_floor;     // CE only
  std::optional<VoutBound> vout_bound;  // CV only
  std::optional<double> vin;            // CV only

  std::array<int, kNumKinds> pool() const;
  int size() const { return static_cast<int>(names.size()); }
  bool operator==(const Prompt&) const = default;
};

// Throws MissingConstraint when category-required fields are absent, the
// name list is empty, or fields of another category are present.
void validate_prompt(const Prompt& p);

// "Generate a <n>-component circuit with <groups> representing different
// nodes: [...]" plus the category suffix. Groups appear in first-mention
// order of the name list; names inside a group ascend by index.
std::string render_prompt(const Prompt& p);

inline constexpr std::array<double, 5> kEffFloors = {0.3, 0.5, 0.6, 0.7, 0.8};
inline constexpr std::array<double, 3> kVoutGrid = {0.5, 1.0, 1.5};

struct PromptMix {
  std::array<double, kNumCategories> weights = {0.2, 0.4, 0.4};
};

// Whether a simulated design satisfies the prompt's constraints: the netlist
// uses exactly the named devices and, for CE/CV, the strict inequality holds.
bool component_constraint_met(const Prompt& p, const Netlist& n);
bool value_constraint_met(const Prompt& p, const SimResult& sim);
bool prompt_satisfied(const Prompt& p, const Design& d, const SimResult& sim);

// Prompt whose constraints the given target satisfies. The category is drawn
// from the mix; a CE draw whose efficiency clears no floor falls back to C.
Prompt prompt_for_target(const Netlist& n, const SimResult& sim, double vin, const PromptMix& mix,
                         std::mt19937_64& rng);
Prompt make_prompt(Category c, const Netlist& n, std::optional<double> eff_floor = std::nullopt,
                   std::optional<VoutBound> bound = std::nullopt, std::optional<double> vin = std::nullopt);

}  // namespace crl
