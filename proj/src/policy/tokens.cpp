#include "policy/tokens.hpp"

#include <map>

#include "util/error.hpp"

namespace crl {

std::string token_str(Token t) {
  if (t >= kKindBase && t < kIndexBase) return std::string(kind_prefix(static_cast<Kind>(t - kKindBase)));
  if (t >= kIndexBase && t < kNodeBase) return "#" + std::to_string(t - kIndexBase);
  if (t >= kNodeBase && t < kSep) return "@" + token_node(t).str();
  if (t == kSep) return "<sep>";
  if (t >= kDutyBase && t < kEos) return "D" + Duty::from_index(t - kDutyBase).str();
  if (t == kEos) return "<eos>";
  return "<?>";
}

std::string vocab_hash() {
  std::string layout;
  for (Token t = 0; t < kVocabSize; ++t) layout += token_str(t) + ";";
  // FNV-1a, 64 bit.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : layout) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Token node_token(NodeId n) {
  if (n == NodeId::in()) return kNodeBase;
  if (n == NodeId::out()) return kNodeBase + 1;
  if (n == NodeId::gnd()) return kNodeBase + 2;
  if (n.is_external()) fail(ErrorCode::OutOfVocabulary, "node " + n.str() + " has no token");
  if (n.label() < 1 || n.label() > kMaxInternalLabel)
    fail(ErrorCode::OutOfVocabulary, "internal node " + n.str() + " is outside 1..10");
  return kNodeBase + 2 + static_cast<Token>(n.label());
}

NodeId token_node(Token t) {
  if (t < kNodeBase || t >= kSep) fail(ErrorCode::MalformedSequence, "token is not a node");
  const int i = t - kNodeBase;
  if (i == 0) return NodeId::in();
  if (i == 1) return NodeId::out();
  if (i == 2) return NodeId::gnd();
  return NodeId::internal(i - 2);
}

TokenSequence tokenize(const Netlist& n, Duty d) {
  if (n.empty()) fail(ErrorCode::MalformedSequence, "cannot tokenize an empty netlist");
  if (static_cast<int>(n.size()) > kMaxEntries) fail(ErrorCode::OutOfVocabulary, "more than 10 devices");
  TokenSequence ts;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const auto& e = n.entries()[i];
    if (e.device.index > kMaxDeviceIndex) fail(ErrorCode::OutOfVocabulary, "device index above 9: " + e.device.name());
    if (i > 0) ts.push_back(kSep);
    ts.push_back(kKindBase + static_cast<Token>(e.device.kind));
    ts.push_back(kIndexBase + e.device.index);
    ts.push_back(node_token(e.nodes[0]));
    ts.push_back(node_token(e.nodes[1]));
  }
  ts.push_back(kDutyBase + d.index());
  ts.push_back(kEos);
  return ts;
}

std::pair<Netlist, Duty> detokenize(const TokenSequence& ts) {
  Grammar g;
  std::vector<Entry> entries;
  std::optional<Duty> duty;
  for (Token t : ts) {
    if (g.done()) fail(ErrorCode::MalformedSequence, "tokens after end of sequence");
    const auto slot = g.slot();
    g.advance(t);
    if (slot == Grammar::Slot::Node2)
      entries.push_back({Device{g.current_kind(), g.current_index()}, {token_node(g.node1()), token_node(t)}});
    if (slot == Grammar::Slot::End && t != kSep) duty = Duty::from_index(t - kDutyBase);
  }
  if (!g.done() || !duty) fail(ErrorCode::MalformedSequence, "sequence does not end with a duty and EOS");
  return {Netlist(std::move(entries)), *duty};
}

Netlist relabel_first_appearance(const Netlist& n) {
  std::map<NodeId, NodeId> relabel;
  std::vector<Entry> entries = n.entries();
  for (auto& e : entries)
    for (auto& node : e.nodes) {
      if (node.is_external()) continue;
      auto it = relabel.find(node);
      if (it == relabel.end()) it = relabel.emplace(node, NodeId::internal(static_cast<std::int64_t>(relabel.size()) + 1)).first;
      node = it->second;
    }
  return Netlist(std::move(entries));
}

std::array<bool, kVocabSize> Grammar::legal() const {
  std::array<bool, kVocabSize> m{};
  switch (slot_) {
    case Slot::Kind:
      for (int k = 0; k < kNumKinds; ++k) {
        bool any = false;
        for (int i = 0; i <= kMaxDeviceIndex; ++i) any = any || !used_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
        m[static_cast<std::size_t>(kKindBase + k)] = any;
      }
      break;
    case Slot::Index:
      for (int i = 0; i <= kMaxDeviceIndex; ++i)
        m[static_cast<std::size_t>(kIndexBase + i)] = !used_[static_cast<std::size_t>(kind_)][static_cast<std::size_t>(i)];
      break;
    case Slot::Node1:
    case Slot::Node2:
      for (int i = 0; i < kNumNodeTokens; ++i) m[static_cast<std::size_t>(kNodeBase + i)] = true;
      break;
    case Slot::End:
      m[kSep] = entries_ < kMaxEntries;
      for (int i = 0; i < Duty::kCount; ++i) m[static_cast<std::size_t>(kDutyBase + i)] = true;
      break;
    case Slot::Eos: m[kEos] = true; break;
    case Slot::Done: break;
  }
  return m;
}

bool Grammar::is_legal(Token t) const { return t >= 0 && t < kVocabSize && legal()[static_cast<std::size_t>(t)]; }

void Grammar::advance(Token t) {
  if (!is_legal(t)) fail(ErrorCode::MalformedSequence, "token " + token_str(t) + " is not legal here");
  switch (slot_) {
    case Slot::Kind:
      kind_ = static_cast<Kind>(t - kKindBase);
      slot_ = Slot::Index;
      break;
    case Slot::Index:
      index_ = t - kIndexBase;
      used_[static_cast<std::size_t>(kind_)][static_cast<std::size_t>(index_)] = true;
      slot_ = Slot::Node1;
      break;
    case Slot::Node1:
      node1_ = t;
      slot_ = Slot::Node2;
      break;
    case Slot::Node2:
      ++entries_;
      slot_ = Slot::End;
      break;
    case Slot::End: slot_ = t == kSep ? Slot::Kind : Slot::Eos; break;
    case Slot::Eos: slot_ = Slot::Done; break;
    case Slot::Done: break;
  }
}

}  // namespace crl
