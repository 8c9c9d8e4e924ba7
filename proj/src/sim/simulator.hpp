#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netlist/netlist.hpp"

namespace crl {

struct SimConfig {
  double vin = 2.0;          // V
  double f_sw = 200e3;       // Hz
  double c_val = 10e-6;      // F
  double l_val = 10e-6;      // H
  double r_on = 50e-3;       // ohm
  double r_off = 10e6;       // ohm
  double r_load = 10.0;      // ohm, OUT to 0
  double g_min = 1e-9;       // S, every node to 0
  double dt = 1.0 / (200e3 * 1000);
  int max_periods = 2000;
  double ss_tol = 1e-4;

  void validate() const;  // throws InvalidInput
  int steps_per_period() const;
};

struct Design {
  Netlist netlist;
  Duty duty = Duty::from_value(0.5);
};

enum class SimFailure { Structural, SingularSystem, NoSteadyState, NonFinite, DegenerateOutput };
const char* sim_failure_name(SimFailure f);
std::optional<SimFailure> sim_failure_from_name(std::string_view s);

struct SimResult {
  bool valid = false;
  double vout = 0.0;        // period-averaged V(OUT)
  double efficiency = 0.0;  // p_out / p_in, in [0, 1] when valid
  int periods_run = 0;
  std::optional<SimFailure> failure;
  // Period-averaged powers in watts; diagnostics only, not serialized.
  double p_in = 0.0;
  double p_out = 0.0;
  bool operator==(const SimResult&) const = default;
};

// Switch phase A: FET-A conducts. Phase B: FET-B conducts. Within a period,
// phase B lasts `duty` of the period and phase A the remainder.
enum class Phase { A, B };

// Backward-Euler MNA system for one switch phase:
//   matrix * x[n+1] = history * x[n] + source
// Unknowns: non-ground node voltages, then source branch currents (input
// source first, then gate drivers), then inductor currents.
struct LinearSystem {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd history;  // = to_history * from_solution
  Eigen::VectorXd source;
  // Dynamic state z (capacitor voltages, then inductor currents):
  // z = from_solution * x and history * x = to_history * z.
  Eigen::MatrixXd from_solution;
  Eigen::MatrixXd to_history;
  std::map<NodeId, int> node_index;  // ground excluded
  int input_current = -1;            // current flowing from IN into the input source
  std::vector<std::pair<int, NodeId>> gate_sources;  // (current index, driven net)
  std::vector<int> inductor_currents;                // in netlist order

  int size() const { return static_cast<int>(matrix.rows()); }
  int index_of(NodeId n) const;  // -1 for ground
  // One time step from `prev`; throws SingularSystem if the matrix is singular.
  Eigen::VectorXd step(const Eigen::VectorXd& prev) const;
  double voltage(const Eigen::VectorXd& x, NodeId n) const;
};

LinearSystem build_phase_system(const Netlist& n, Phase phase, const SimConfig& cfg);

// |cur - prev| <= tol * max(|cur|, floor)
bool steady_state_reached(const Eigen::VectorXd& prev, const Eigen::VectorXd& cur, double tol,
                          double floor = 1e-9);

SimResult simulate(const Design& d, const SimConfig& cfg);

// First-order state-space average: the per-step phase maps weighted by their
// share of the period, solved for a fixed point. Cheap approximation of the
// steady state; `ok` is false when the averaged system has no unique fixed
// point or the netlist fails the structural check.
struct AveragedPoint {
  bool ok = false;
  double vout = 0.0;
  double p_in = 0.0;
  double p_out = 0.0;
};
AveragedPoint averaged_operating_point(const Design& d, const SimConfig& cfg);

}  // namespace crl
