#include "policy/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "util/error.hpp"

namespace crl {

namespace {

constexpr int kSlots = 6;
constexpr int kCountBins = 11;  // 0..10

struct Layout {
  int next = 0;
  int take(int n) {
    const int at = next;
    next += n;
    return at;
  }
  // Prompt blocks.
  int bias = take(1);
  int category = take(kNumCategories);
  int floor = take(static_cast<int>(kEffFloors.size()));
  int bound = take(2 * static_cast<int>(kVoutGrid.size()));
  int pool = take(kNumKinds * kCountBins);
  int size = take(kCountBins);
  // State blocks.
  int slot = take(kSlots);
  int entry = take(kCountBins);
  int expect = take(kNumKinds * (kMaxDeviceIndex + 1) + 1);
  int expect_kind = take(kNumKinds + 1);
  int remain = take(kNumKinds * kCountBins);
  int extra = take(4);
  int complete = take(2);
  int cur_kind = take(kNumKinds);
  int cur_index = take(kMaxDeviceIndex + 1);
  int node1 = take(kNumNodeTokens);
  int kind_node1 = take(kNumKinds * kNumNodeTokens);
  int incidence = take(kNumKinds * kNumNodeTokens * 2);
  int degree = take(kNumNodeTokens * 3);
  int max_internal = take(kMaxInternalLabel + 1);
  int triples = take(kNumKinds * kNumNodeTokens * kNumNodeTokens);
  int dangling = take(4);
  int ports = take(3);
};

const Layout& layout() {
  static const Layout l;
  return l;
}

int nearest(const auto& grid, double v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(grid.size()); ++i)
    if (std::abs(grid[static_cast<std::size_t>(i)] - v) < std::abs(grid[static_cast<std::size_t>(best)] - v)) best = i;
  return best;
}

int slot_index(Grammar::Slot s) {
  switch (s) {
    case Grammar::Slot::Kind: return 0;
    case Grammar::Slot::Index: return 1;
    case Grammar::Slot::Node1: return 2;
    case Grammar::Slot::Node2: return 3;
    case Grammar::Slot::End: return 4;
    default: return 5;
  }
}

int bin(int v) { return std::clamp(v, 0, kCountBins - 1); }

}  // namespace

int decoder_input_dim() { return layout().next; }

Decoder::Decoder(const Prompt& p) : prompt_(p) {
  const auto& L = layout();
  auto& f = prompt_features_;
  f.push_back(L.bias);
  f.push_back(L.category + static_cast<int>(p.category));
  if (p.eff_floor) f.push_back(L.floor + nearest(kEffFloors, *p.eff_floor));
  if (p.vout_bound)
    f.push_back(L.bound + (p.vout_bound->relation == Relation::Greater ? 3 : 0) +
                nearest(kVoutGrid, p.vout_bound->volts));
  const auto pool = p.pool();
  for (int k = 0; k < kNumKinds; ++k) f.push_back(L.pool + k * kCountBins + bin(pool[static_cast<std::size_t>(k)]));
  f.push_back(L.size + bin(p.size()));
}

Mask Decoder::mask() const {
  const auto legal = g_.legal();
  Mask m(legal.begin(), legal.end());
  const auto s = g_.slot();
  if (s == Grammar::Slot::Node1 || s == Grammar::Slot::Node2)
    for (int label = max_internal_ + 2; label <= kMaxInternalLabel; ++label)
      m[static_cast<std::size_t>(kNodeBase + 2 + label)] = 0;
  return m;
}

SparseInput Decoder::features() const {
  const auto& L = layout();
  SparseInput x;
  for (int i : prompt_features_) x.add(i);
  const auto s = g_.slot();
  x.add(L.slot + slot_index(s));
  const int entries = g_.entries();
  x.add(L.entry + bin(entries));
  // The entry being written (or next to be written) is entries().
  const bool in_entry = s == Grammar::Slot::Index || s == Grammar::Slot::Node1 || s == Grammar::Slot::Node2;
  const int pos = entries;
  if (pos < prompt_.size()) {
    const auto& d = prompt_.names[static_cast<std::size_t>(pos)];
    x.add(L.expect + static_cast<int>(d.kind) * (kMaxDeviceIndex + 1) + std::min(d.index, kMaxDeviceIndex));
    x.add(L.expect_kind + static_cast<int>(d.kind));
  } else {
    x.add(L.expect + kNumKinds * (kMaxDeviceIndex + 1));
    x.add(L.expect_kind + kNumKinds);
  }
  const auto pool = prompt_.pool();
  int remaining = 0;
  for (int k = 0; k < kNumKinds; ++k) {
    const int r = std::max(0, pool[static_cast<std::size_t>(k)] - placed_[static_cast<std::size_t>(k)]);
    remaining += r;
    x.add(L.remain + k * kCountBins + bin(r));
  }
  x.add(L.extra + std::min(extra_devices_, 3));
  x.add(L.complete + (remaining == 0 ? 1 : 0));
  if (in_entry) x.add(L.cur_kind + static_cast<int>(g_.current_kind()));
  if (s == Grammar::Slot::Node1 || s == Grammar::Slot::Node2) x.add(L.cur_index + g_.current_index());
  if (s == Grammar::Slot::Node2) {
    const int n1 = g_.node1() - kNodeBase;
    x.add(L.node1 + n1);
    x.add(L.kind_node1 + static_cast<int>(g_.current_kind()) * kNumNodeTokens + n1);
  }
  int dangling = 0;
  for (int n = 0; n < kNumNodeTokens; ++n) {
    for (int k = 0; k < kNumKinds; ++k) {
      const int c = incidence_[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
      const int base = L.incidence + (k * kNumNodeTokens + n) * 2;
      if (c >= 1) x.add(base);
      if (c >= 2) x.add(base + 1);
    }
    const int deg = degree_[static_cast<std::size_t>(n)];
    for (int t = 0; t < 3; ++t)
      if (deg > t) x.add(L.degree + n * 3 + t);
    if (n >= 3 && deg == 1) ++dangling;
  }
  x.add(L.max_internal + max_internal_);
  for (int t : triples_) x.add(L.triples + t);
  x.add(L.dangling + std::min(dangling, 3));
  for (int n = 0; n < 3; ++n)
    if (degree_[static_cast<std::size_t>(n)] > 0) x.add(L.ports + n);
  return x;
}

void Decoder::advance(Token t) {
  const auto m = mask();
  if (t < 0 || t >= kVocabSize || !m[static_cast<std::size_t>(t)])
    fail(ErrorCode::MalformedSequence, "token " + token_str(t) + " is not allowed here");
  const auto s = g_.slot();
  g_.advance(t);
  if (s == Grammar::Slot::Index) {
    const Device d{g_.current_kind(), g_.current_index()};
    ++placed_[static_cast<std::size_t>(d.kind)];
    if (std::find(prompt_.names.begin(), prompt_.names.end(), d) == prompt_.names.end()) ++extra_devices_;
  }
  if (s == Grammar::Slot::Node1 || s == Grammar::Slot::Node2) {
    const int n = t - kNodeBase;
    ++incidence_[static_cast<std::size_t>(g_.current_kind())][static_cast<std::size_t>(n)];
    ++degree_[static_cast<std::size_t>(n)];
    if (n >= 3) max_internal_ = std::max(max_internal_, n - 2);
  }
  if (s == Grammar::Slot::Node2) {
    const int n1 = g_.node1() - kNodeBase, n2 = t - kNodeBase;
    triples_.push_back((static_cast<int>(g_.current_kind()) * kNumNodeTokens + n1) * kNumNodeTokens + n2);
  }
}

TokenSequence policy_sequence(const Netlist& n, Duty d) { return tokenize(relabel_first_appearance(n), d); }

Trajectory build_trajectory(const Prompt& x, const TokenSequence& y) {
  Decoder dec(x);
  Trajectory t;
  t.reserve(y.size());
  for (Token tok : y) {
    if (dec.done()) fail(ErrorCode::MalformedSequence, "tokens after end of sequence");
    t.push_back({dec.features(), dec.mask(), tok});
    dec.advance(tok);
  }
  if (!dec.done()) fail(ErrorCode::MalformedSequence, "sequence is incomplete");
  return t;
}

}  // namespace crl
