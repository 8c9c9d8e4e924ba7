#include "io/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

#include "util/error.hpp"

namespace crl {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    fail(ErrorCode::Usage, "config key '" + key + "': cannot parse '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorCode::Usage, "config key '" + key + "': expected true or false, got '" + v + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
  if (out.empty()) fail(ErrorCode::Usage, "config key '" + key + "': empty list");
  return out;
}

std::string fmt(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}
template <class T>
std::string fmt_int(T v) {
  return std::to_string(v);
}
template <class T>
std::string fmt_list(const T& xs) {
  std::string s;
  for (const auto& x : xs) {
    if (!s.empty()) s += ',';
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(x)>>) s += fmt(x);
    else s += std::to_string(x);
  }
  return s;
}

struct Key {
  const char* name;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CRL_DOUBLE(k, member)                                                                                  \
  Key{k, [](RunConfig& c, const std::string& n, const std::string& v) { c.member = parse_number<double>(n, v); }, \
      [](const RunConfig& c) { return fmt(c.member); }}
#define CRL_INT(k, member, T)                                                                                \
  Key{k, [](RunConfig& c, const std::string& n, const std::string& v) { c.member = parse_number<T>(n, v); }, \
      [](const RunConfig& c) { return fmt_int(c.member); }}
#define CRL_BOOL(k, member)                                                                             \
  Key{k, [](RunConfig& c, const std::string& n, const std::string& v) { c.member = parse_bool(n, v); }, \
      [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }}

const std::vector<Key>& table() {
  static const std::vector<Key> keys = {
      // simulator
      CRL_DOUBLE("vin", sim.vin),
      CRL_DOUBLE("f_sw", sim.f_sw),
      CRL_DOUBLE("c_val", sim.c_val),
      CRL_DOUBLE("l_val", sim.l_val),
      CRL_DOUBLE("r_on", sim.r_on),
      CRL_DOUBLE("r_off", sim.r_off),
      CRL_DOUBLE("r_load", sim.r_load),
      CRL_DOUBLE("g_min", sim.g_min),
      CRL_DOUBLE("dt", sim.dt),
      CRL_INT("max_periods", sim.max_periods, int),
      CRL_DOUBLE("ss_tol", sim.ss_tol),
      // generator
      Key{"components",
          [](RunConfig& c, const std::string& n, const std::string& v) { c.components = parse_list<int>(n, v); },
          [](const RunConfig& c) { return fmt_list(c.components); }},
      CRL_INT("target", target, std::int64_t),
      Key{"mix",
          [](RunConfig& c, const std::string& n, const std::string& v) {
            const auto w = parse_list<double>(n, v);
            if (w.size() != kNumCategories) fail(ErrorCode::Usage, "config key 'mix': expected three weights");
            for (std::size_t i = 0; i < w.size(); ++i) c.mix.weights[i] = w[i];
          },
          [](const RunConfig& c) { return fmt_list(c.mix.weights); }},
      CRL_INT("retries_per_topology", budget.retries_per_topology, int),
      CRL_INT("max_draws", budget.max_draws, std::int64_t),
      CRL_INT("stall_draws", budget.stall_draws, std::int64_t),
      CRL_INT("eval_prompts", eval_prompts, int),
      // training
      CRL_DOUBLE("eta", train.eta),
      CRL_DOUBLE("clip_eps", train.clip_eps),
      CRL_DOUBLE("lr", train.lr),
      CRL_INT("batch", train.batch, int),
      CRL_INT("ppo_epochs", train.ppo_epochs, int),
      CRL_INT("rl_steps", train.rl_steps, int),
      CRL_DOUBLE("nucleus_p", train.nucleus_p),
      CRL_INT("top_k", train.top_k, int),
      CRL_INT("max_len", train.max_len, int),
      CRL_INT("ia_iters", train.ia_iters, int),
      CRL_INT("ia_pool", train.ia_pool, int),
      CRL_DOUBLE("ia_eff_floor", train.ia_eff_floor),
      CRL_INT("ia_sample_factor", train.ia_sample_factor, int),
      CRL_INT("ia_passes", train.ia_passes, int),
      CRL_BOOL("ia_refreeze", train.ia_refreeze),
      CRL_BOOL("ia_dedup", train.ia_dedup),
      CRL_DOUBLE("sft_lr", train.sft_lr),
      CRL_INT("sft_epochs", train.sft_epochs, int),
      CRL_INT("sft_batch", train.sft_batch, int),
      Key{"hidden", [](RunConfig& c, const std::string& n, const std::string& v) { c.train.hidden = parse_list<int>(n, v); },
          [](const RunConfig& c) { return fmt_list(c.train.hidden); }},
      Key{"reward_backend",
          [](RunConfig& c, const std::string&, const std::string& v) {
            if (v != "learned" && v != "oracle")
              fail(ErrorCode::Usage, "config key 'reward_backend': expected learned or oracle, got '" + v + "'");
            c.reward_backend = v;
          },
          [](const RunConfig& c) { return c.reward_backend; }},
      // run
      CRL_INT("seed", seed, std::uint64_t),
      Key{"out", [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; },
          [](const RunConfig& c) { return c.out; }},
  };
  return keys;
}

#undef CRL_DOUBLE
#undef CRL_INT
#undef CRL_BOOL

const Key& find_key(const std::string& key) {
  for (const auto& k : table())
    if (key == k.name) return k;
  fail(ErrorCode::Usage, "unknown config key '" + key + "'");
}

}  // namespace

DatasetOptions RunConfig::dataset_options() const {
  DatasetOptions o;
  o.sizes = components;
  o.per_size = target;
  o.seed = seed;
  o.mix = mix;
  o.budget = budget;
  return o;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

void RunConfig::validate() const {
  try {
    sim.validate();
    train_config().validate();
  } catch (const Error& e) {
    fail(ErrorCode::Usage, e.what());
  }
  for (int n : components)
    if (n < 4 || n > 10) fail(ErrorCode::Usage, "components must lie in [4, 10], got " + std::to_string(n));
  if (target < 1) fail(ErrorCode::Usage, "target must be positive");
  if (eval_prompts < 1) fail(ErrorCode::Usage, "eval_prompts must be positive");
  double total = 0.0;
  for (double w : mix.weights) {
    if (w < 0.0) fail(ErrorCode::Usage, "mix weights must be non-negative");
    total += w;
  }
  if (total <= 0.0) fail(ErrorCode::Usage, "mix weights must not all be zero");
}

std::vector<std::string> kv_keys() {
  std::vector<std::string> out;
  for (const auto& k : table()) out.emplace_back(k.name);
  return out;
}

void set_key(RunConfig& c, const std::string& key, const std::string& value) {
  find_key(key).set(c, key, value);
}

std::string get_key(const RunConfig& c, const std::string& key) { return find_key(key).get(c); }

void apply_kv_text(RunConfig& c, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Usage, "config line " + std::to_string(no) + ": expected key = value");
    try {
      set_key(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(ErrorCode::Usage, "config line " + std::to_string(no) + ": " + e.what());
    }
  }
}

std::string to_kv_text(const RunConfig& c) {
  std::string out;
  for (const auto& k : table()) out += std::string(k.name) + " = " + k.get(c) + "\n";
  return out;
}

}  // namespace crl
