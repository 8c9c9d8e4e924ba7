// Exercises the library only through its C interface.

#include <cstring>
#include <string>

#include "circuitrl/circuitrl.h"
#include "doctest.h"
#include "json.hpp"

namespace {

struct Owned {
  char* p = nullptr;
  ~Owned() { crl_string_free(p); }
  std::string s() const { return p ? p : ""; }
};

struct Config {
  crl_config* c = nullptr;
  Config() { REQUIRE(crl_config_new(&c) == CRL_OK); }
  ~Config() { crl_config_free(c); }
};

const char* kBuckDesign =
    R"({"netlist":"[['FET-B-0','IN','1'],['FET-A-0','1','0'],['inductor-0','1','OUT'],['capacitor-0','OUT','0']]","duty":0.5})";

}  // namespace

TEST_CASE("config: defaults, overrides, unknown keys and round-trip") {
  Config cfg;
  Owned v;
  REQUIRE(crl_config_get(cfg.c, "eta", &v.p) == CRL_OK);
  CHECK(std::stod(v.s()) == 0.1);
  CHECK(crl_config_set(cfg.c, "no_such_key", "1") == CRL_E_USAGE);
  CHECK(std::string(crl_last_error()).find("no_such_key") != std::string::npos);
  CHECK(crl_config_set(cfg.c, "batch", "sixteen") == CRL_E_USAGE);
  CHECK(crl_config_apply_text(cfg.c, "eta = 0.25  # comment\n\nhidden = 32,16\nreward_backend = oracle\n") == CRL_OK);
  CHECK(crl_config_apply_text(cfg.c, "eta 0.3\n") == CRL_E_USAGE);
  CHECK(crl_config_apply_text(cfg.c, "reward_backend = magic\n") == CRL_E_USAGE);
  CHECK(crl_config_set(cfg.c, "components", "3") == CRL_OK);
  CHECK(crl_config_validate(cfg.c) == CRL_E_USAGE);
  CHECK(crl_config_set(cfg.c, "components", "4") == CRL_OK);
  CHECK(crl_config_validate(cfg.c) == CRL_OK);

  Owned text;
  REQUIRE(crl_config_to_text(cfg.c, &text.p) == CRL_OK);
  Config copy;
  REQUIRE(crl_config_apply_text(copy.c, text.p) == CRL_OK);
  Owned text2;
  REQUIRE(crl_config_to_text(copy.c, &text2.p) == CRL_OK);
  CHECK(text.s() == text2.s());
  CHECK(text.s().find("eta = 0.25\n") != std::string::npos);
  CHECK(text.s().find("hidden = 32,16\n") != std::string::npos);
}

TEST_CASE("simulate_jsonl: valid line, in-line errors, empty input") {
  Config cfg;
  const std::string in = std::string(kBuckDesign) + "\nnot json\n{\"netlist\":\"[['capacitor-0','IN']]\",\"duty\":0.5}\n";
  Owned out;
  REQUIRE(crl_simulate_jsonl(cfg.c, in.c_str(), &out.p) == CRL_OK);
  std::vector<nlohmann::json> rows;
  std::string line;
  for (char ch : out.s()) {
    if (ch == '\n') {
      rows.push_back(nlohmann::json::parse(line));
      line.clear();
    } else {
      line += ch;
    }
  }
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].at("valid").get<bool>());
  CHECK(rows[0].at("vout").get<double>() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(rows[1].at("line").get<int>() == 2);
  CHECK(rows[1].contains("error"));
  CHECK(rows[2].at("error").get<std::string>() == "ArityMismatch");

  Owned empty;
  REQUIRE(crl_simulate_jsonl(cfg.c, "", &empty.p) == CRL_OK);
  CHECK(empty.s().empty());
}

TEST_CASE("dataset, training phase order and evaluation through the C API") {
  Config cfg;
  REQUIRE(crl_config_apply_text(cfg.c, "target = 60\nseed = 3\nsft_epochs = 2\nrl_steps = 3\nhidden = 16\n"
                                       "ia_iters = 0\neval_prompts = 10\n") == CRL_OK);
  crl_dataset* ds = nullptr;
  REQUIRE(crl_dataset_generate(cfg.c, &ds, nullptr, nullptr) == CRL_OK);
  CHECK(crl_dataset_size(ds) == 300);

  Owned jsonl, manifest;
  REQUIRE(crl_dataset_to_jsonl(ds, &jsonl.p) == CRL_OK);
  REQUIRE(crl_dataset_manifest(ds, &manifest.p) == CRL_OK);
  CHECK(nlohmann::json::parse(manifest.s()).at("unique_per_size").at("4").get<int>() == 60);
  crl_dataset* back = nullptr;
  REQUIRE(crl_dataset_from_jsonl(jsonl.p, &back) == CRL_OK);
  Owned jsonl2;
  REQUIRE(crl_dataset_to_jsonl(back, &jsonl2.p) == CRL_OK);
  CHECK(jsonl.s() == jsonl2.s());
  crl_dataset* broken = nullptr;
  CHECK(crl_dataset_from_jsonl("{\"prompt\":1}\n", &broken) == CRL_E_INVALID_INPUT);
  CHECK(broken == nullptr);

  crl_checkpoint *sft = nullptr, *rl = nullptr, *ia = nullptr, *bad = nullptr;
  Owned csv1, csv2, csv3, csv4;
  CHECK(crl_train(cfg.c, "rl", back, nullptr, &bad, &csv4.p, nullptr, nullptr) == CRL_E_PHASE_ORDER);
  CHECK(std::string(crl_last_error()).find("sft") != std::string::npos);
  REQUIRE(crl_train(cfg.c, "sft", back, nullptr, &sft, &csv1.p, nullptr, nullptr) == CRL_OK);
  CHECK(csv1.s().rfind("epoch,loss\n", 0) == 0);
  CHECK(crl_train(cfg.c, "ia", back, sft, &bad, &csv4.p, nullptr, nullptr) == CRL_E_PHASE_ORDER);
  REQUIRE(crl_train(cfg.c, "rl", back, sft, &rl, &csv2.p, nullptr, nullptr) == CRL_OK);
  CHECK(csv2.s().rfind("step,reward_mean,sim_reward_mean,kl_mean,validity,efficiency\n", 0) == 0);
  REQUIRE(crl_train(cfg.c, "ia", back, rl, &ia, &csv3.p, nullptr, nullptr) == CRL_OK);
  CHECK(crl_train(cfg.c, "xyz", back, rl, &bad, &csv4.p, nullptr, nullptr) == CRL_E_USAGE);

  // ia_iters = 0 passes the rl checkpoint through unchanged.
  Owned rl_json, ia_json, phase;
  REQUIRE(crl_checkpoint_to_json(rl, &rl_json.p) == CRL_OK);
  REQUIRE(crl_checkpoint_to_json(ia, &ia_json.p) == CRL_OK);
  CHECK(rl_json.s() == ia_json.s());
  crl_checkpoint* reloaded = nullptr;
  REQUIRE(crl_checkpoint_from_json(rl_json.p, &reloaded) == CRL_OK);
  REQUIRE(crl_checkpoint_phase(reloaded, &phase.p) == CRL_OK);
  CHECK(phase.s() == "rl");

  Owned prompts, report, report_csv;
  REQUIRE(crl_dataset_eval_prompts(back, cfg.c, &prompts.p) == CRL_OK);
  const int ms[] = {1, 3, 5};
  REQUIRE(crl_evaluate(cfg.c, reloaded, prompts.p, ms, 3, 20, &report.p, &report_csv.p) == CRL_OK);
  const auto r = nlohmann::json::parse(report.s());
  CHECK(r.at("sample_count").get<int>() == 20);
  const double s1 = r.at("success_at_m").at("1").get<double>();
  const double s3 = r.at("success_at_m").at("3").get<double>();
  const double s5 = r.at("success_at_m").at("5").get<double>();
  CHECK(s1 <= s3);
  CHECK(s3 <= s5);
  Owned r2, c2;
  CHECK(crl_evaluate(cfg.c, reloaded, "", ms, 3, 20, &r2.p, &c2.p) == CRL_E_EMPTY_PROMPT_SET);

  crl_checkpoint_free(sft);
  crl_checkpoint_free(rl);
  crl_checkpoint_free(ia);
  crl_checkpoint_free(reloaded);
  crl_dataset_free(ds);
  crl_dataset_free(back);
}

TEST_CASE("null arguments and status names") {
  CHECK(crl_config_new(nullptr) == CRL_E_NULL_ARGUMENT);
  CHECK(std::strcmp(crl_status_name(CRL_E_PHASE_ORDER), "PhaseOrder") == 0);
  CHECK(std::strcmp(crl_status_name(CRL_OK), "Ok") == 0);
  crl_config_free(nullptr);
  crl_dataset_free(nullptr);
  crl_checkpoint_free(nullptr);
}
