// circuitrl: dataset generation, simulation, training and evaluation.
// Talks to the library only through the C interface.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "circuitrl/circuitrl.h"
#include "json.hpp"

#ifndef CRL_GIT_DESCRIBE
#define CRL_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kDiverged = 4 };

// Thrown to unwind to main with an exit code after printing a message.
struct Failure {
  int code;
};

int exit_code(crl_status s) {
  switch (s) {
    case CRL_OK: return kOk;
    case CRL_E_USAGE:
    case CRL_E_PHASE_ORDER:
    case CRL_E_EMPTY_PROMPT_SET: return kUsage;
    case CRL_E_DIVERGED: return kDiverged;
    default: return kData;
  }
}

void check(crl_status s, const std::string& what) {
  if (s == CRL_OK) return;
  std::cerr << "error: " << what << ": " << crl_status_name(s) << ": " << crl_last_error() << "\n";
  throw Failure{exit_code(s)};
}

[[noreturn]] void usage(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  throw Failure{kUsage};
}

// Owns a string returned by the library.
struct Str {
  char* p = nullptr;
  ~Str() { crl_string_free(p); }
  std::string get() const { return p ? p : ""; }
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read '" << path << "'\n";
    throw Failure{kData};
  }
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// temp + rename so an interrupted run never leaves a truncated file.
void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      std::cerr << "error: cannot write '" << tmp.string() << "'\n";
      throw Failure{kData};
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::cerr << "error: cannot rename to '" << path.string() << "': " << ec.message() << "\n";
    throw Failure{kData};
  }
}

struct ConfigHandle {
  crl_config* c = nullptr;
  ConfigHandle() { check(crl_config_new(&c), "config"); }
  ~ConfigHandle() { crl_config_free(c); }
  void set(const std::string& k, const std::string& v) { check(crl_config_set(c, k.c_str(), v.c_str()), "--" + k); }
  std::string get(const std::string& k) const {
    Str s;
    check(crl_config_get(c, k.c_str(), &s.p), k);
    return s.get();
  }
  std::string text() const {
    Str s;
    check(crl_config_to_text(c, &s.p), "config");
    return s.get();
  }
};

// Shared options: config file, key=value overrides, seed. Flags win over the file.
struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::string seed;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_file, "key = value config file");
    app->add_option("--set", sets, "override a config key (key=value), repeatable");
    app->add_option("--seed", seed, "random seed");
  }
  void apply(ConfigHandle& cfg) const {
    if (!config_file.empty()) check(crl_config_apply_text(cfg.c, read_text(config_file).c_str()), config_file);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) usage("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!seed.empty()) cfg.set("seed", seed);
  }
};

void write_run_manifest(const fs::path& path, const std::string& command, const ConfigHandle& cfg,
                        const nlohmann::json& artifacts) {
  nlohmann::json config = nlohmann::json::object();
  std::istringstream in(cfg.text());
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) config[line.substr(0, eq)] = line.substr(eq + 3);
  }
  const nlohmann::json m = {{"command", command},
                            {"seed", cfg.get("seed")},
                            {"git_describe", CRL_GIT_DESCRIBE},
                            {"config", config},
                            {"artifacts", artifacts}};
  write_atomic(path, m.dump(2) + "\n");
}

void log_line(const char* line, void*) { std::cerr << line << "\n"; }

struct DatasetHandle {
  crl_dataset* d = nullptr;
  ~DatasetHandle() { crl_dataset_free(d); }
};
struct CheckpointHandle {
  crl_checkpoint* k = nullptr;
  ~CheckpointHandle() { crl_checkpoint_free(k); }
};

// ---- gen ----
struct GenArgs {
  Common common;
  int components = 0;
  long long target = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  ConfigHandle cfg;
  a.common.apply(cfg);
  if (a.components != 0) {
    if (a.components < 4 || a.components > 10) usage("--components must lie in [4, 10]");
    cfg.set("components", std::to_string(a.components));
  }
  if (a.target != 0) cfg.set("target", std::to_string(a.target));
  if (!a.out.empty()) cfg.set("out", a.out);
  check(crl_config_validate(cfg.c), "config");
  const fs::path dir = cfg.get("out");

  DatasetHandle ds;
  const crl_status gs = crl_dataset_generate(cfg.c, &ds.d, log_line, nullptr);
  if (gs != CRL_OK && gs != CRL_E_SPACE_EXHAUSTED) check(gs, "gen");
  const std::string exhausted_msg = gs == CRL_OK ? "" : crl_last_error();

  Str jsonl, manifest;
  check(crl_dataset_to_jsonl(ds.d, &jsonl.p), "dataset");
  check(crl_dataset_manifest(ds.d, &manifest.p), "manifest");
  write_atomic(dir / "dataset.jsonl", jsonl.get());
  write_atomic(dir / "manifest.json", manifest.get());
  nlohmann::json artifacts = {"dataset.jsonl", "manifest.json"};
  if (gs == CRL_OK) {
    Str prompts;
    check(crl_dataset_eval_prompts(ds.d, cfg.c, &prompts.p), "eval prompts");
    write_atomic(dir / "eval_prompts.jsonl", prompts.get());
    artifacts.push_back("eval_prompts.jsonl");
  }
  write_run_manifest(dir / "run_manifest.json", "gen", cfg, artifacts);

  const auto m = nlohmann::json::parse(manifest.get());
  std::cout << "unique:";
  for (const auto& [n, c] : m.at("unique_per_size").items()) std::cout << " " << n << "-component=" << c.get<long long>();
  std::cout << "\ngroups:";
  for (const auto& [g, c] : m.at("group_histogram").items()) std::cout << " " << g << "=" << c.get<long long>();
  std::cout << " invalid=" << m.at("invalid").get<long long>() << "\nrecords: " << crl_dataset_size(ds.d) << "\n";
  if (gs != CRL_OK) {
    std::cerr << "error: " << crl_status_name(gs) << ": " << exhausted_msg << " (partial dataset written)\n";
    return kData;
  }
  return kOk;
}

// ---- simulate ----
struct SimArgs {
  Common common;
  std::string in, out;
};

int cmd_simulate(const SimArgs& a) {
  ConfigHandle cfg;
  a.common.apply(cfg);
  Str results;
  check(crl_simulate_jsonl(cfg.c, read_text(a.in).c_str(), &results.p), "simulate");
  const fs::path out = a.out;
  write_atomic(out, results.get());
  write_run_manifest(out.string() + ".manifest.json", "simulate", cfg, {out.filename().string()});
  return kOk;
}

// ---- train ----
struct TrainArgs {
  Common common;
  std::string phase, data, out, init;
};

fs::path dataset_file(const std::string& data) {
  const fs::path p = data;
  return fs::is_directory(p) ? p / "dataset.jsonl" : p;
}

int cmd_train(const TrainArgs& a) {
  ConfigHandle cfg;
  a.common.apply(cfg);
  check(crl_config_validate(cfg.c), "config");
  if (a.phase != "sft" && a.phase != "rl" && a.phase != "ia") usage("--phase must be sft, rl or ia");

  CheckpointHandle prior;
  if (a.phase != "sft") {
    if (a.init.empty()) {
      std::cerr << "error: PhaseOrder: train --phase " << a.phase << " needs --init with a checkpoint from --phase "
                << (a.phase == "rl" ? "sft" : "rl") << " (order: sft -> rl -> ia)\n";
      return kUsage;
    }
    check(crl_checkpoint_from_json(read_text(a.init).c_str(), &prior.k), a.init);
  }
  DatasetHandle ds;
  check(crl_dataset_from_jsonl(read_text(dataset_file(a.data).string()).c_str(), &ds.d), a.data);

  CheckpointHandle next;
  Str csv;
  check(crl_train(cfg.c, a.phase.c_str(), ds.d, prior.k, &next.k, &csv.p, log_line, nullptr), "train");
  Str text;
  check(crl_checkpoint_to_json(next.k, &text.p), "checkpoint");
  const fs::path out = a.out;
  const fs::path metrics = out.string() + ".metrics.csv";
  write_atomic(out, text.get());
  write_atomic(metrics, csv.get());
  write_run_manifest(out.string() + ".manifest.json", "train --phase " + a.phase, cfg,
                     {out.filename().string(), metrics.filename().string()});
  std::cout << "wrote " << out.string() << " and " << metrics.string() << "\n";
  return kOk;
}

// ---- eval ----
struct EvalArgs {
  Common common;
  std::string ckpt, prompts, ms = "1,3,5", out = "eval";
  int samples = 200;
};

int cmd_eval(const EvalArgs& a) {
  ConfigHandle cfg;
  a.common.apply(cfg);
  std::vector<int> ms;
  {
    std::stringstream ss(a.ms);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        ms.push_back(std::stoi(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        usage("--m expects a comma-separated list of integers, got '" + a.ms + "'");
      }
    }
  }
  if (ms.empty()) usage("--m must list at least one value");
  const std::string prompts = read_text(a.prompts);
  if (prompts.find_first_not_of(" \t\r\n") == std::string::npos) usage("prompt file '" + a.prompts + "' is empty");

  CheckpointHandle k;
  check(crl_checkpoint_from_json(read_text(a.ckpt).c_str(), &k.k), a.ckpt);
  Str json, csv;
  check(crl_evaluate(cfg.c, k.k, prompts.c_str(), ms.data(), ms.size(), a.samples, &json.p, &csv.p), "eval");
  const fs::path dir = a.out;
  write_atomic(dir / "report.json", json.get());
  write_atomic(dir / "report.csv", csv.get());
  write_run_manifest(dir / "run_manifest.json", "eval", cfg, {"report.json", "report.csv"});
  std::cout << json.get();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"circuitrl: power-converter netlist generation with a reward-trained policy"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate and simulate a dataset");
  gen.common.add_to(g);
  g->add_option("--components", gen.components, "devices per netlist (4..10)");
  g->add_option("--target", gen.target, "unique netlists to collect");
  g->add_option("--out", gen.out, "output directory");

  SimArgs sim;
  auto* s = app.add_subcommand("simulate", "simulate designs from JSONL");
  sim.common.add_to(s);
  s->add_option("--in", sim.in, "input JSONL of designs")->required();
  s->add_option("--out", sim.out, "output JSONL of results")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train a policy phase");
  train.common.add_to(t);
  t->add_option("--phase", train.phase, "sft, rl or ia")->required();
  t->add_option("--data", train.data, "dataset directory or JSONL file")->required();
  t->add_option("--out", train.out, "checkpoint file to write")->required();
  t->add_option("--init", train.init, "checkpoint of the previous phase (rl, ia)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
  ev.common.add_to(e);
  e->add_option("--ckpt", ev.ckpt, "checkpoint file")->required();
  e->add_option("--prompts", ev.prompts, "prompt JSONL")->required();
  e->add_option("--m", ev.ms, "SuccessRate@m values, comma-separated");
  e->add_option("--samples", ev.samples, "generations for DGR and expectation columns");
  e->add_option("--out", ev.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*s) return cmd_simulate(sim);
    if (*t) return cmd_train(train);
    if (*e) return cmd_eval(ev);
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kData;
  }
  return kUsage;
}
