#pragma once

#include <string>
#include <vector>

#include "gen/generator.hpp"
#include "json.hpp"
#include "sim/simulator.hpp"

namespace crl {

using nlohmann::json;

// Field names match the domain types. Netlists travel as triple-list text.
// Decoders throw InvalidInput (or the netlist parser's errors) on bad input.
json design_to_json(const Design& d);
Design design_from_json(const json& j);

json sim_result_to_json(const SimResult& r);
SimResult sim_result_from_json(const json& j);

// Carries the rendered text alongside the structured fields; decoding uses
// the structured fields only.
json prompt_to_json(const Prompt& p);
Prompt prompt_from_json(const json& j);

json record_to_json(const DatasetRecord& r);
DatasetRecord record_from_json(const json& j);

json dataset_manifest(const DatasetOptions& opts, const DatasetStats& stats);

// One compact JSON object per line, '\n' terminated.
std::string to_jsonl(const std::vector<json>& rows);
// Blank lines are skipped. Throws InvalidInput naming the 1-based line.
std::vector<json> parse_jsonl(const std::string& text);

std::string read_file(const std::string& path);  // throws Io
// Writes to a sibling temporary file and renames it over path. Throws Io.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace crl
