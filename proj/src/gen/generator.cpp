#include "gen/generator.hpp"

#include <algorithm>
#include <unordered_set>

#include "netlist/canonical.hpp"
#include "util/error.hpp"

namespace crl {
namespace {

// Kind-count vectors summing to n with at least one switch.
std::vector<std::array<int, kNumKinds>> feasible_multisets(int n) {
  std::vector<std::array<int, kNumKinds>> out;
  for (int c = 0; c <= n; ++c)
    for (int l = 0; c + l <= n; ++l)
      for (int a = 0; c + l + a <= n; ++a) {
        const int b = n - c - l - a;
        if (a + b >= 1) out.push_back({c, l, a, b});
      }
  return out;
}

void check_size(int n) {
  if (n < kMinComponents || n > kMaxComponents)
    fail(ErrorCode::InvalidInput, "component count must be in [4, 10], got " + std::to_string(n));
}

}  // namespace

Netlist random_topology(int n, Rng& rng, const SearchBudget& budget) {
  check_size(n);
  static thread_local std::vector<std::array<int, kNumKinds>> cache[kMaxComponents + 1];
  auto& sets = cache[n];
  if (sets.empty()) sets = feasible_multisets(n);
  std::uniform_int_distribution<std::size_t> pick_set(0, sets.size() - 1);
  const auto counts = sets[pick_set(rng)];

  std::vector<Device> devices;
  for (int k = 0; k < kNumKinds; ++k)
    for (int i = 0; i < counts[static_cast<std::size_t>(k)]; ++i) devices.push_back({static_cast<Kind>(k), i});
  std::shuffle(devices.begin(), devices.end(), rng);

  // Node choices: IN, OUT, 0, then internal labels 1..n.
  std::uniform_int_distribution<int> pick_node(0, n + 2);
  auto node = [&] {
    const int v = pick_node(rng);
    if (v == 0) return NodeId::in();
    if (v == 1) return NodeId::out();
    if (v == 2) return NodeId::gnd();
    return NodeId::internal(v - 2);
  };
  for (int attempt = 0; attempt < budget.retries_per_topology; ++attempt) {
    std::vector<Entry> entries;
    entries.reserve(devices.size());
    for (const auto& d : devices) entries.push_back({d, {node(), node()}});
    Netlist candidate(std::move(entries));
    if (!has_errors(structural_check(candidate))) return candidate;
  }
  fail(ErrorCode::ExhaustedRetries, "no structurally valid topology after " +
                                        std::to_string(budget.retries_per_topology) + " draws");
}

Netlist random_topology(int n, std::uint64_t seed) {
  Rng rng(seed);
  return random_topology(n, rng);
}

UniqueSearch search_unique(int n, std::int64_t target, std::uint64_t seed, const SearchBudget& budget) {
  if (target < 1) fail(ErrorCode::InvalidInput, "target must be >= 1");
  check_size(n);
  Rng rng(seed);
  UniqueSearch out;
  std::unordered_set<std::string> seen;
  std::int64_t since_new = 0;
  while (static_cast<std::int64_t>(out.netlists.size()) < target) {
    if (out.draws >= budget.max_draws || since_new >= budget.stall_draws) {
      out.exhausted = true;
      break;
    }
    Netlist candidate = random_topology(n, rng, budget);
    ++out.draws;
    if (seen.insert(canonical_key(candidate).bytes).second) {
      out.netlists.push_back(std::move(candidate));
      since_new = 0;
    } else {
      ++since_new;
    }
  }
  return out;
}

std::vector<Netlist> generate_unique(int n, std::int64_t target, std::uint64_t seed, const SearchBudget& budget) {
  auto r = search_unique(n, target, seed, budget);
  if (r.exhausted)
    fail(ErrorCode::SpaceExhausted, "found " + std::to_string(r.netlists.size()) + " unique " + std::to_string(n) +
                                        "-component topologies before the budget ran out (target " +
                                        std::to_string(target) + ")");
  return std::move(r.netlists);
}

std::vector<Design> sweep_duties(const Netlist& n) {
  std::vector<Design> out;
  for (auto d : Duty::all()) out.push_back({n, d});
  return out;
}

const char* group_name(Group g) {
  static const char* names[] = {"G1", "G2", "G3", "G4"};
  return names[static_cast<int>(g)];
}

std::optional<Group> group_from_name(std::string_view s) {
  for (int g = 0; g < kNumGroups; ++g)
    if (s == group_name(static_cast<Group>(g))) return static_cast<Group>(g);
  return std::nullopt;
}

Group assign_group(const SimResult& sim, double vin) {
  if (!sim.valid) fail(ErrorCode::InvalidInput, "assign_group needs a valid simulation result");
  if (sim.efficiency < kLowEfficiency) return Group::G1;
  if (sim.efficiency <= kHighEfficiency) return Group::G2;
  return std::abs(sim.vout - vin) < kGroup3Band ? Group::G3 : Group::G4;
}

std::vector<std::size_t> weighted_sample_indices(const std::vector<std::optional<Group>>& groups, std::size_t batch,
                                                Rng& rng) {
  std::array<std::vector<std::size_t>, kNumGroups> members;
  for (std::size_t i = 0; i < groups.size(); ++i)
    if (groups[i]) members[static_cast<std::size_t>(*groups[i])].push_back(i);
  // Empty groups get weight zero; the rest renormalize proportionally.
  std::array<double, kNumGroups> w{};
  double total = 0;
  for (int g = 0; g < kNumGroups; ++g) {
    if (!members[static_cast<std::size_t>(g)].empty()) w[static_cast<std::size_t>(g)] = kGroupWeights[static_cast<std::size_t>(g)];
    total += w[static_cast<std::size_t>(g)];
  }
  if (total == 0) fail(ErrorCode::EmptyDataset, "no grouped records to sample from");
  std::vector<std::size_t> out;
  out.reserve(batch);
  std::discrete_distribution<int> pick_group(w.begin(), w.end());
  for (std::size_t i = 0; i < batch; ++i) {
    const auto& pool = members[static_cast<std::size_t>(pick_group(rng))];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    out.push_back(pool[pick(rng)]);
  }
  return out;
}

std::vector<DatasetRecord> weighted_sample(const std::vector<DatasetRecord>& records, std::size_t batch, Rng& rng) {
  std::vector<std::optional<Group>> groups;
  groups.reserve(records.size());
  for (const auto& r : records) groups.push_back(r.group);
  std::vector<DatasetRecord> out;
  out.reserve(batch);
  for (auto i : weighted_sample_indices(groups, batch, rng)) out.push_back(records[i]);
  return out;
}

std::vector<DatasetRecord> build_dataset(const DatasetOptions& opts, const SimConfig& cfg, DatasetStats* stats) {
  cfg.validate();
  std::vector<DatasetRecord> out;
  DatasetStats local;
  Rng prompt_rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int n : opts.sizes) {
    auto found = search_unique(n, opts.per_size, opts.seed + static_cast<std::uint64_t>(n), opts.budget);
    local.unique_per_size.emplace_back(n, static_cast<std::int64_t>(found.netlists.size()));
    local.exhausted_per_size.emplace_back(n, found.exhausted);
    for (const auto& net : found.netlists) {
      for (auto& design : sweep_duties(net)) {
        DatasetRecord r;
        r.sim = simulate(design, cfg);
        r.design = std::move(design);
        if (r.sim.valid) {
          r.group = assign_group(r.sim, cfg.vin);
          ++local.group_histogram[static_cast<std::size_t>(*r.group)];
        } else {
          ++local.invalid;
        }
        r.prompt = prompt_for_target(r.design.netlist, r.sim, cfg.vin, opts.mix, prompt_rng);
        out.push_back(std::move(r));
      }
    }
  }
  local.records = static_cast<std::int64_t>(out.size());
  if (stats) *stats = local;
  return out;
}

}  // namespace crl
