#pragma once

#include <array>
#include <vector>

#include "gen/prompt.hpp"
#include "policy/model.hpp"
#include "policy/tokens.hpp"

namespace crl {

// Dimension of the per-step sparse features produced by Decoder.
int decoder_input_dim();

// Prompt-conditioned decoding state. The policy mask is the grammar mask
// narrowed so a fresh internal node always takes the next unused label;
// targets must therefore use first-appearance labels (policy_sequence).
class Decoder {
 public:
  explicit Decoder(const Prompt& p);

  const Grammar& grammar() const { return g_; }
  bool done() const { return g_.done(); }
  Mask mask() const;
  SparseInput features() const;
  void advance(Token t);  // throws MalformedSequence when masked

 private:
  Prompt prompt_;
  std::vector<int> prompt_features_;
  Grammar g_;
  std::array<int, kNumKinds> placed_{};
  std::array<std::array<int, kNumNodeTokens>, kNumKinds> incidence_{};
  std::array<int, kNumNodeTokens> degree_{};
  std::vector<int> triples_;
  int max_internal_ = 0;
  int extra_devices_ = 0;
};

TokenSequence policy_sequence(const Netlist& n, Duty d);

// Replays a sequence through the decoder, recording features, masks and
// actions. Throws MalformedSequence if the sequence is not decodable.
Trajectory build_trajectory(const Prompt& x, const TokenSequence& y);

}  // namespace crl
