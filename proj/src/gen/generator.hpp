#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gen/prompt.hpp"
#include "netlist/netlist.hpp"
#include "sim/simulator.hpp"

namespace crl {

using Rng = std::mt19937_64;

inline constexpr int kMinComponents = 4;
inline constexpr int kMaxComponents = 10;

struct SearchBudget {
  int retries_per_topology = 10000;  // node redraws before ExhaustedRetries
  std::int64_t max_draws = 5'000'000;
  // Consecutive draws without a new canonical key before the space is
  // declared exhausted.
  std::int64_t stall_draws = 200'000;
};

Netlist random_topology(int n, Rng& rng, const SearchBudget& budget = {});
Netlist random_topology(int n, std::uint64_t seed);

struct UniqueSearch {
  std::vector<Netlist> netlists;  // pairwise-distinct canonical keys, discovery order
  std::int64_t draws = 0;
  bool exhausted = false;  // stopped by budget or stall before reaching target
};

// Never throws SpaceExhausted; callers decide whether a short result is fatal.
UniqueSearch search_unique(int n, std::int64_t target, std::uint64_t seed, const SearchBudget& budget = {});
// Throws SpaceExhausted when the target is not reached.
std::vector<Netlist> generate_unique(int n, std::int64_t target, std::uint64_t seed,
                                     const SearchBudget& budget = {});

std::vector<Design> sweep_duties(const Netlist& n);

enum class Group { G1 = 0, G2, G3, G4 };
inline constexpr int kNumGroups = 4;
inline constexpr std::array<double, kNumGroups> kGroupWeights = {0.1, 0.25, 0.25, 0.4};
// |vout - vin| below this, at high efficiency, is Group 3.
inline constexpr double kGroup3Band = 0.2;
inline constexpr double kLowEfficiency = 0.05;
inline constexpr double kHighEfficiency = 0.7;

const char* group_name(Group g);
std::optional<Group> group_from_name(std::string_view s);
Group assign_group(const SimResult& sim, double vin);  // throws InvalidInput if !sim.valid

struct DatasetRecord {
  Prompt prompt;
  Design design;
  SimResult sim;
  std::optional<Group> group;  // set iff sim.valid
};

// Group-weighted draws with replacement: a group is chosen by kGroupWeights
// (renormalized over nonempty groups), then a member uniformly. Ungrouped
// entries are never drawn.
std::vector<std::size_t> weighted_sample_indices(const std::vector<std::optional<Group>>& groups, std::size_t batch,
                                                Rng& rng);
std::vector<DatasetRecord> weighted_sample(const std::vector<DatasetRecord>& records, std::size_t batch, Rng& rng);

struct DatasetOptions {
  std::vector<int> sizes = {4};
  std::int64_t per_size = 1000;  // unique netlists per component count
  std::uint64_t seed = 0;
  PromptMix mix;
  SearchBudget budget;
};

struct DatasetStats {
  std::vector<std::pair<int, std::int64_t>> unique_per_size;  // (n, unique netlists)
  std::vector<std::pair<int, bool>> exhausted_per_size;
  std::array<std::int64_t, kNumGroups> group_histogram{};
  std::int64_t invalid = 0;
  std::int64_t records = 0;
};

// Random search, dedup, five-duty sweep, simulation, grouping and prompt
// synthesis. Invalid designs are kept with no group and a C prompt.
std::vector<DatasetRecord> build_dataset(const DatasetOptions& opts, const SimConfig& cfg, DatasetStats* stats);

}  // namespace crl
