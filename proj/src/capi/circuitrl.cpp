#include "circuitrl/circuitrl.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "eval/eval.hpp"
#include "io/run_config.hpp"
#include "io/serialize.hpp"
#include "util/error.hpp"

struct crl_config {
  crl::RunConfig cfg;
};

struct crl_dataset {
  std::vector<crl::DatasetRecord> records;
  crl::DatasetOptions options;
  crl::DatasetStats stats;
};

// A policy checkpoint plus the learned reward estimator fitted alongside it.
struct crl_checkpoint {
  crl::Checkpoint ckpt;
  std::optional<crl::LearnedParams> estimator;
};

namespace {

thread_local std::string g_last_error;

crl_status record(crl_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
crl_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CRL_OK;
  } catch (const crl::Error& e) {
    return record(static_cast<crl_status>(static_cast<int>(e.code())), e.what());
  } catch (const nlohmann::json::exception& e) {
    return record(CRL_E_INVALID_INPUT, e.what());
  } catch (const std::bad_alloc&) {
    return record(CRL_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(CRL_E_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void require(const void* p, const char* what) {
  if (!p) crl::fail(crl::ErrorCode::InvalidInput, std::string("null argument: ") + what);
}

void emit(crl_log_fn log, void* user, const std::string& line) {
  if (log) log(line.c_str(), user);
}

crl::DatasetStats stats_of(const std::vector<crl::DatasetRecord>& records) {
  crl::DatasetStats s;
  std::map<int, std::int64_t> per_size;
  for (const auto& r : records) {
    ++s.records;
    if (r.group) ++s.group_histogram[static_cast<std::size_t>(*r.group)];
    else ++s.invalid;
    ++per_size[static_cast<int>(r.design.netlist.size())];
  }
  // Each netlist appears once per duty.
  for (const auto& [n, c] : per_size) s.unique_per_size.emplace_back(n, c / crl::Duty::kCount);
  return s;
}

std::vector<crl::Prompt> training_prompts(const crl_dataset& d) {
  std::vector<crl::Prompt> out;
  for (const auto& r : d.records)
    if (r.group) out.push_back(r.prompt);
  if (out.empty()) crl::fail(crl::ErrorCode::EmptyDataset, "dataset has no valid records to prompt from");
  return out;
}

crl::Estimator reward_backend(const crl::RunConfig& c, const crl_checkpoint& k) {
  if (c.reward_backend == "oracle") return crl::Estimator::oracle(c.sim);
  if (!k.estimator) crl::fail(crl::ErrorCode::UntrainedBackend, "checkpoint carries no learned estimator");
  return crl::Estimator::learned(*k.estimator, c.sim);
}

std::string sft_csv(const std::vector<double>& loss) {
  std::ostringstream s;
  s.precision(10);
  s << "epoch,loss\n";
  for (std::size_t i = 0; i < loss.size(); ++i) s << i + 1 << ',' << loss[i] << '\n';
  return s.str();
}

}  // namespace

extern "C" {

const char* crl_status_name(crl_status s) {
  switch (s) {
    case CRL_OK: return "Ok";
    case CRL_E_NULL_ARGUMENT: return "NullArgument";
    case CRL_E_INTERNAL: return "Internal";
    default: break;
  }
  const int v = static_cast<int>(s);
  if (v >= static_cast<int>(crl::ErrorCode::MalformedSyntax) && v <= static_cast<int>(crl::ErrorCode::PoolStarvation))
    return crl::error_code_name(static_cast<crl::ErrorCode>(v));
  return "Unknown";
}

const char* crl_last_error(void) { return g_last_error.c_str(); }

void crl_string_free(char* s) { std::free(s); }

crl_status crl_config_new(crl_config** out) {
  if (!out) return record(CRL_E_NULL_ARGUMENT, "out");
  return guarded([&] { *out = new crl_config(); });
}

void crl_config_free(crl_config* c) { delete c; }

crl_status crl_config_apply_text(crl_config* c, const char* text) {
  if (!c || !text) return record(CRL_E_NULL_ARGUMENT, "config or text");
  return guarded([&] { crl::apply_kv_text(c->cfg, text); });
}

crl_status crl_config_set(crl_config* c, const char* key, const char* value) {
  if (!c || !key || !value) return record(CRL_E_NULL_ARGUMENT, "config, key or value");
  return guarded([&] { crl::set_key(c->cfg, key, value); });
}

crl_status crl_config_get(const crl_config* c, const char* key, char** out) {
  if (!c || !key || !out) return record(CRL_E_NULL_ARGUMENT, "config, key or out");
  return guarded([&] { *out = dup(crl::get_key(c->cfg, key)); });
}

crl_status crl_config_to_text(const crl_config* c, char** out) {
  if (!c || !out) return record(CRL_E_NULL_ARGUMENT, "config or out");
  return guarded([&] { *out = dup(crl::to_kv_text(c->cfg)); });
}

crl_status crl_config_validate(const crl_config* c) {
  if (!c) return record(CRL_E_NULL_ARGUMENT, "config");
  return guarded([&] { c->cfg.validate(); });
}

crl_status crl_dataset_generate(const crl_config* c, crl_dataset** out, crl_log_fn log, void* user) {
  if (!c || !out) return record(CRL_E_NULL_ARGUMENT, "config or out");
  *out = nullptr;
  const crl_status s = guarded([&] {
    c->cfg.validate();
    auto d = std::make_unique<crl_dataset>();
    d->options = c->cfg.dataset_options();
    emit(log, user, "generating " + std::to_string(d->options.per_size) + " unique netlists per size");
    d->records = crl::build_dataset(d->options, c->cfg.sim, &d->stats);
    *out = d.release();
  });
  if (s != CRL_OK) return s;
  for (const auto& [n, exhausted] : (*out)->stats.exhausted_per_size)
    if (exhausted)
      return record(CRL_E_SPACE_EXHAUSTED, "search stalled before reaching the target for " + std::to_string(n) +
                                               "-component netlists");
  return CRL_OK;
}

crl_status crl_dataset_from_jsonl(const char* text, crl_dataset** out) {
  if (!text || !out) return record(CRL_E_NULL_ARGUMENT, "text or out");
  return guarded([&] {
    auto d = std::make_unique<crl_dataset>();
    const auto rows = crl::parse_jsonl(text);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      try {
        d->records.push_back(crl::record_from_json(rows[i]));
      } catch (const crl::Error& e) {
        crl::fail(crl::ErrorCode::InvalidInput, "record " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    d->stats = stats_of(d->records);
    *out = d.release();
  });
}

void crl_dataset_free(crl_dataset* d) { delete d; }

size_t crl_dataset_size(const crl_dataset* d) { return d ? d->records.size() : 0; }

crl_status crl_dataset_to_jsonl(const crl_dataset* d, char** out) {
  if (!d || !out) return record(CRL_E_NULL_ARGUMENT, "dataset or out");
  return guarded([&] {
    std::vector<nlohmann::json> rows;
    rows.reserve(d->records.size());
    for (const auto& r : d->records) rows.push_back(crl::record_to_json(r));
    *out = dup(crl::to_jsonl(rows));
  });
}

crl_status crl_dataset_manifest(const crl_dataset* d, char** out_json) {
  if (!d || !out_json) return record(CRL_E_NULL_ARGUMENT, "dataset or out");
  return guarded([&] { *out_json = dup(crl::dataset_manifest(d->options, d->stats).dump(2) + "\n"); });
}

crl_status crl_dataset_eval_prompts(const crl_dataset* d, const crl_config* c, char** out_jsonl) {
  if (!d || !c || !out_jsonl) return record(CRL_E_NULL_ARGUMENT, "dataset, config or out");
  return guarded([&] {
    const auto prompts = crl::make_eval_prompts(d->records, c->cfg.eval_prompts, c->cfg.mix, c->cfg.seed + 1);
    std::vector<nlohmann::json> rows;
    for (const auto& p : prompts) rows.push_back(crl::prompt_to_json(p));
    *out_jsonl = dup(crl::to_jsonl(rows));
  });
}

crl_status crl_simulate_jsonl(const crl_config* c, const char* in_jsonl, char** out_jsonl) {
  if (!c || !in_jsonl || !out_jsonl) return record(CRL_E_NULL_ARGUMENT, "config, input or out");
  return guarded([&] {
    c->cfg.sim.validate();
    std::istringstream in(in_jsonl);
    std::string line, out;
    for (int no = 1; std::getline(in, line); ++no) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json row;
      try {
        const auto d = crl::design_from_json(nlohmann::json::parse(line));
        row = crl::sim_result_to_json(crl::simulate(d, c->cfg.sim));
      } catch (const crl::Error& e) {
        row = {{"line", no}, {"error", crl::error_code_name(e.code())}, {"message", e.what()}};
      } catch (const nlohmann::json::exception& e) {
        row = {{"line", no}, {"error", "MalformedSyntax"}, {"message", e.what()}};
      }
      out += row.dump();
      out += '\n';
    }
    *out_jsonl = dup(out);
  });
}

crl_status crl_checkpoint_from_json(const char* text, crl_checkpoint** out) {
  if (!text || !out) return record(CRL_E_NULL_ARGUMENT, "text or out");
  return guarded([&] {
    auto k = std::make_unique<crl_checkpoint>();
    k->ckpt = crl::load_checkpoint_json(text);
    const auto j = nlohmann::json::parse(text);
    if (j.contains("estimator") && !j.at("estimator").is_null())
      k->estimator = crl::load_learned_json(j.at("estimator").dump());
    *out = k.release();
  });
}

crl_status crl_checkpoint_to_json(const crl_checkpoint* k, char** out) {
  if (!k || !out) return record(CRL_E_NULL_ARGUMENT, "checkpoint or out");
  return guarded([&] {
    auto j = nlohmann::json::parse(crl::save_checkpoint_json(k->ckpt));
    j["estimator"] = k->estimator ? nlohmann::json::parse(crl::save_learned_json(*k->estimator)) : nlohmann::json();
    *out = dup(j.dump() + "\n");
  });
}

crl_status crl_checkpoint_phase(const crl_checkpoint* k, char** out) {
  if (!k || !out) return record(CRL_E_NULL_ARGUMENT, "checkpoint or out");
  return guarded([&] { *out = dup(k->ckpt.phase); });
}

void crl_checkpoint_free(crl_checkpoint* k) { delete k; }

crl_status crl_train(const crl_config* c, const char* phase, const crl_dataset* data, const crl_checkpoint* prior,
                     crl_checkpoint** out, char** metrics_csv, crl_log_fn log, void* user) {
  if (!c || !phase || !out || !metrics_csv) return record(CRL_E_NULL_ARGUMENT, "config, phase or outputs");
  *out = nullptr;
  *metrics_csv = nullptr;
  return guarded([&] {
    const std::string ph = phase;
    if (ph != "sft" && ph != "rl" && ph != "ia")
      crl::fail(crl::ErrorCode::Usage, "phase must be sft, rl or ia, got '" + ph + "'");
    c->cfg.validate();
    require(data, "dataset");
    const auto cfg = c->cfg.train_config();
    auto next = std::make_unique<crl_checkpoint>();
    std::string csv;

    if (ph == "sft") {
      const auto examples = crl::sft_examples(data->records);
      emit(log, user, "sft on " + std::to_string(examples.size()) + " valid records");
      auto r = crl::sft_train(examples, cfg);
      emit(log, user, "fitting learned reward estimator");
      next->estimator = crl::train_learned(data->records, {}, c->cfg.sim.vin);
      next->ckpt = {"sft", cfg, std::move(r.policy), std::move(r.reference)};
      csv = sft_csv(r.epoch_loss);
    } else {
      const char* need = ph == "rl" ? "sft" : "rl";
      if (!prior || prior->ckpt.phase != need)
        crl::fail(crl::ErrorCode::PhaseOrder, "train --phase " + ph + " needs a checkpoint from --phase " + need +
                                                  " (order: sft -> rl -> ia)" +
                                                  (prior ? "; got a '" + prior->ckpt.phase + "' checkpoint" : ""));
      const auto prompts = training_prompts(*data);
      const auto backend = reward_backend(c->cfg, *prior);
      const auto oracle = crl::Estimator::oracle(c->cfg.sim);
      next->estimator = prior->estimator;
      if (ph == "rl") {
        auto r = crl::rl_train(prior->ckpt.policy, prior->ckpt.reference, prompts, backend, oracle, cfg,
                               [&](const crl::StepMetrics& m) {
                                 if (m.step % 50 == 0)
                                   emit(log, user, "rl step " + std::to_string(m.step) +
                                                       " sim_reward=" + std::to_string(m.sim_reward_mean) +
                                                       " kl=" + std::to_string(m.kl_mean));
                               });
        next->ckpt = {"rl", cfg, std::move(r.policy), prior->ckpt.reference};
        csv = crl::metrics_csv(r.metrics);
      } else if (cfg.ia_iters == 0) {
        *next = *prior;  // nothing to adapt: the checkpoint passes through unchanged
        csv = crl::metrics_csv({});
      } else {
        auto r = crl::iterative_adapt(prior->ckpt.policy, prior->ckpt.reference, prompts, backend, oracle, cfg,
                                      [&](const std::string& s) { emit(log, user, s); });
        next->ckpt = {"ia", cfg, std::move(r.policy), std::move(r.reference)};
        csv = crl::metrics_csv(r.metrics);
      }
    }
    *metrics_csv = dup(csv);
    *out = next.release();
  });
}

crl_status crl_evaluate(const crl_config* c, const crl_checkpoint* k, const char* prompts_jsonl, const int* ms,
                        size_t n_ms, int samples, char** report_json, char** report_csv) {
  if (!c || !k || !prompts_jsonl || !report_json || !report_csv)
    return record(CRL_E_NULL_ARGUMENT, "config, checkpoint, prompts or outputs");
  if (n_ms > 0 && !ms) return record(CRL_E_NULL_ARGUMENT, "ms");
  return guarded([&] {
    std::vector<crl::Prompt> prompts;
    const auto rows = crl::parse_jsonl(prompts_jsonl);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      try {
        prompts.push_back(crl::prompt_from_json(rows[i]));
      } catch (const crl::Error& e) {
        crl::fail(crl::ErrorCode::InvalidInput, "prompt " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    if (prompts.empty()) crl::fail(crl::ErrorCode::EmptyPromptSet, "no prompts to evaluate");
    if (samples < 1) crl::fail(crl::ErrorCode::Usage, "samples must be positive");
    crl::EvalOptions opts;
    opts.samples = samples;
    opts.seed = c->cfg.seed;
    opts.mix = c->cfg.mix;
    if (n_ms > 0) opts.ms.assign(ms, ms + n_ms);
    for (int m : opts.ms)
      if (m < 1) crl::fail(crl::ErrorCode::Usage, "m values must be positive");
    const auto oracle = crl::Estimator::oracle(c->cfg.sim);
    // Without a fitted estimator the classifier columns fall back to the simulator.
    const auto learned = k->estimator ? crl::Estimator::learned(*k->estimator, c->cfg.sim) : oracle;
    const auto gen = crl::policy_generator(k->ckpt.policy, crl::SampleConfig::from(c->cfg.train_config()));
    const auto r = crl::evaluate(gen, prompts, learned, oracle, opts);
    *report_json = dup(crl::eval_report_json(r) + "\n");
    *report_csv = dup(crl::eval_report_csv_header() + "\n" + crl::eval_report_csv_row(k->ckpt.phase, r) + "\n");
  });
}

}  // extern "C"
