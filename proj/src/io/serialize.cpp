#include "io/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "util/error.hpp"

namespace crl {

namespace {

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::InvalidInput, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::InvalidInput, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

json design_to_json(const Design& d) {
  return {{"netlist", emit_triple_list(d.netlist)}, {"duty", d.duty.value()}};
}

Design design_from_json(const json& j) {
  return {parse_triple_list(field<std::string>(j, "netlist")), Duty::from_value(field<double>(j, "duty"))};
}

json sim_result_to_json(const SimResult& r) {
  json j = {{"valid", r.valid}, {"vout", r.vout}, {"efficiency", r.efficiency}, {"periods_run", r.periods_run}};
  j["failure"] = r.failure ? json(sim_failure_name(*r.failure)) : json(nullptr);
  return j;
}

SimResult sim_result_from_json(const json& j) {
  SimResult r;
  r.valid = field<bool>(j, "valid");
  r.vout = field<double>(j, "vout");
  r.efficiency = field<double>(j, "efficiency");
  r.periods_run = field<int>(j, "periods_run");
  if (j.contains("failure") && !j.at("failure").is_null()) {
    r.failure = sim_failure_from_name(field<std::string>(j, "failure"));
    if (!r.failure) fail(ErrorCode::InvalidInput, "unknown failure kind");
  }
  return r;
}

json prompt_to_json(const Prompt& p) {
  json names = json::array();
  for (const auto& d : p.names) names.push_back(d.name());
  json j = {{"category", category_name(p.category)}, {"names", names}};
  j["eff_floor"] = p.eff_floor ? json(*p.eff_floor) : json(nullptr);
  if (p.vout_bound)
    j["vout_bound"] = {{"relation", p.vout_bound->relation == Relation::Less ? "<" : ">"},
                       {"volts", p.vout_bound->volts}};
  else
    j["vout_bound"] = nullptr;
  j["vin"] = p.vin ? json(*p.vin) : json(nullptr);
  j["text"] = render_prompt(p);
  return j;
}

Prompt prompt_from_json(const json& j) {
  Prompt p;
  const auto cat = category_from_name(field<std::string>(j, "category"));
  if (!cat) fail(ErrorCode::InvalidInput, "unknown prompt category");
  p.category = *cat;
  for (const auto& n : field<std::vector<std::string>>(j, "names")) {
    const auto d = Device::from_name(n);
    if (!d) fail(ErrorCode::InvalidInput, "unknown device name '" + n + "'");
    p.names.push_back(*d);
  }
  if (j.contains("eff_floor") && !j.at("eff_floor").is_null()) p.eff_floor = field<double>(j, "eff_floor");
  if (j.contains("vout_bound") && !j.at("vout_bound").is_null()) {
    const auto& b = j.at("vout_bound");
    const auto rel = field<std::string>(b, "relation");
    if (rel != "<" && rel != ">") fail(ErrorCode::InvalidInput, "vout_bound relation must be '<' or '>'");
    p.vout_bound = VoutBound{rel == "<" ? Relation::Less : Relation::Greater, field<double>(b, "volts")};
  }
  if (j.contains("vin") && !j.at("vin").is_null()) p.vin = field<double>(j, "vin");
  validate_prompt(p);
  return p;
}

json record_to_json(const DatasetRecord& r) {
  json j = {{"prompt", prompt_to_json(r.prompt)},
            {"design", design_to_json(r.design)},
            {"sim", sim_result_to_json(r.sim)}};
  j["group"] = r.group ? json(group_name(*r.group)) : json(nullptr);
  return j;
}

DatasetRecord record_from_json(const json& j) {
  DatasetRecord r;
  r.prompt = prompt_from_json(field<json>(j, "prompt"));
  r.design = design_from_json(field<json>(j, "design"));
  r.sim = sim_result_from_json(field<json>(j, "sim"));
  if (j.contains("group") && !j.at("group").is_null()) {
    r.group = group_from_name(field<std::string>(j, "group"));
    if (!r.group) fail(ErrorCode::InvalidInput, "unknown group");
  }
  if (r.group.has_value() != r.sim.valid) fail(ErrorCode::InvalidInput, "group must be set exactly for valid designs");
  return r;
}

json dataset_manifest(const DatasetOptions& opts, const DatasetStats& stats) {
  json sizes = json::object(), exhausted = json::object(), groups = json::object();
  for (const auto& [n, c] : stats.unique_per_size) sizes[std::to_string(n)] = c;
  for (const auto& [n, e] : stats.exhausted_per_size) exhausted[std::to_string(n)] = e;
  for (int g = 0; g < kNumGroups; ++g)
    groups[group_name(static_cast<Group>(g))] = stats.group_histogram[static_cast<std::size_t>(g)];
  return {{"seed", opts.seed},
          {"target_per_size", opts.per_size},
          {"unique_per_size", sizes},
          {"exhausted_per_size", exhausted},
          {"group_histogram", groups},
          {"invalid", stats.invalid},
          {"records", stats.records}};
}

std::string to_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::vector<json> parse_jsonl(const std::string& text) {
  std::vector<json> rows;
  std::istringstream in(text);
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      fail(ErrorCode::InvalidInput, "line " + std::to_string(no) + ": " + e.what());
    }
  }
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write '" + tmp + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorCode::Io, "write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    fail(ErrorCode::Io, "cannot rename '" + tmp + "' to '" + path + "'");
  }
}

}  // namespace crl
