#pragma once

#include <string>
#include <vector>

#include "sim/simulator.hpp"

namespace crl {

// Bumped whenever the feature layout changes; persisted estimators carry it.
inline constexpr const char* kFeatureVersion = "graph-avg-v1";

// Relabel-invariant design features. Layout: bias, structural features
// (counts, degrees, paths, per-phase conduction analysis), the structural
// features scaled by duty, then the duty one-hot.
std::vector<double> featurize(const Design& d, double vin = 2.0);
const std::vector<std::string>& feature_names();
std::size_t feature_count();

// Named lookups used by tests and diagnostics.
double feature_value(const std::vector<double>& f, const std::string& name);

}  // namespace crl
