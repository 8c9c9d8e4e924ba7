#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gen/generator.hpp"
#include "policy/train.hpp"
#include "sim/simulator.hpp"

namespace crl {

// Everything a CLI run reads from its config file. Every field has a
// default. Keys are flat (e.g. "vin", "eta", "components"); see kv_keys().
struct RunConfig {
  SimConfig sim;
  TrainConfig train;
  std::vector<int> components = {4};
  std::int64_t target = 1000;  // unique netlists per component count
  PromptMix mix;
  SearchBudget budget;
  std::string reward_backend = "learned";  // learned | oracle
  int eval_prompts = 100;                  // prompts written next to a generated dataset
  std::uint64_t seed = 0;                  // seeds generation and training
  std::string out = "out";

  DatasetOptions dataset_options() const;
  TrainConfig train_config() const;  // train with seed applied
  void validate() const;             // throws Usage
};

std::vector<std::string> kv_keys();

// Throws Usage for unknown keys or unparsable values.
void set_key(RunConfig& c, const std::string& key, const std::string& value);
std::string get_key(const RunConfig& c, const std::string& key);

// "key = value" lines; '#' starts a comment; blank lines ignored.
// Throws Usage naming the offending line.
void apply_kv_text(RunConfig& c, const std::string& text);
// Every key in kv_keys() order, one per line; apply_kv_text round-trips it.
std::string to_kv_text(const RunConfig& c);

}  // namespace crl
