#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "netlist/netlist.hpp"

namespace crl {

// Vocabulary: 4 kinds, device indices 0..9, 13 nodes (IN, OUT, 0, 1..10),
// entry separator, 5 duties, end of sequence.
using Token = int;
inline constexpr int kMaxEntries = 10;
inline constexpr int kMaxDeviceIndex = 9;
inline constexpr int kMaxInternalLabel = 10;
inline constexpr Token kKindBase = 0;
inline constexpr Token kIndexBase = kKindBase + kNumKinds;
inline constexpr Token kNodeBase = kIndexBase + kMaxDeviceIndex + 1;
inline constexpr int kNumNodeTokens = 3 + kMaxInternalLabel;
inline constexpr Token kSep = kNodeBase + kNumNodeTokens;
inline constexpr Token kDutyBase = kSep + 1;
inline constexpr Token kEos = kDutyBase + Duty::kCount;
inline constexpr int kVocabSize = kEos + 1;
// Longest grammatical sequence: 10 entries of 4 tokens, 9 separators, duty, EOS.
inline constexpr int kMaxSequenceLength = kMaxEntries * 4 + (kMaxEntries - 1) + 2;

using TokenSequence = std::vector<Token>;

std::string token_str(Token t);
// Stable hash of the vocabulary layout, stored in checkpoints.
std::string vocab_hash();

Token node_token(NodeId n);  // throws OutOfVocabulary
NodeId token_node(Token t);

TokenSequence tokenize(const Netlist& n, Duty d);
std::pair<Netlist, Duty> detokenize(const TokenSequence& ts);  // throws MalformedSequence

// Internal labels renumbered 1, 2, ... by first appearance in entry order.
Netlist relabel_first_appearance(const Netlist& n);

// Incremental grammar state. legal() lists tokens allowed next.
class Grammar {
 public:
  enum class Slot { Kind, Index, Node1, Node2, End, Eos, Done };

  Slot slot() const { return slot_; }
  int entries() const { return entries_; }  // completed entries
  Kind current_kind() const { return kind_; }
  int current_index() const { return index_; }
  Token node1() const { return node1_; }
  bool used(Kind k, int index) const { return used_[static_cast<std::size_t>(k)][static_cast<std::size_t>(index)]; }
  bool done() const { return slot_ == Slot::Done; }

  std::array<bool, kVocabSize> legal() const;
  bool is_legal(Token t) const;
  void advance(Token t);  // throws MalformedSequence for illegal tokens

 private:
  Slot slot_ = Slot::Kind;
  int entries_ = 0;
  Kind kind_ = Kind::Capacitor;
  int index_ = 0;
  Token node1_ = -1;
  std::array<std::array<bool, kMaxDeviceIndex + 1>, kNumKinds> used_{};
};

}  // namespace crl
