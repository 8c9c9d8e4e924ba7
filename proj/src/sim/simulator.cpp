#include "sim/simulator.hpp"

#include <cmath>

#include "util/error.hpp"

namespace crl {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Minimum input power and output magnitude for a meaningful efficiency.
constexpr double kMinInputPower = 1e-6;
constexpr double kMinOutputVolts = 1e-3;
// Smallest singular value of (I - period map) for a well-posed fixed point.
constexpr double kMinPeriodGap = 1e-12;

// x -> map * x + offset
struct AffineMap {
  MatrixXd map;
  VectorXd offset;

  AffineMap then(const AffineMap& next) const {
    return {next.map * map, next.map * offset + next.offset};
  }
  static AffineMap identity(int n) { return {MatrixXd::Identity(n, n), VectorXd::Zero(n)}; }
};

AffineMap power(AffineMap base, int times) {
  AffineMap acc = AffineMap::identity(static_cast<int>(base.map.rows()));
  while (times > 0) {
    if (times & 1) acc = acc.then(base);
    base = base.then(base);
    times >>= 1;
  }
  return acc;
}

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

// Per-step maps of one phase: the full solution x[n+1] = solve * z[n] + bias
// and the reduced state update z[n+1] = step(z[n]).
struct PhaseStep {
  LinearSystem system;
  MatrixXd solve;
  VectorXd bias;
  AffineMap step;
};

PhaseStep make_phase(const Netlist& n, Phase phase, const SimConfig& cfg) {
  PhaseStep p{build_phase_system(n, phase, cfg), {}, {}, {}};
  Eigen::FullPivLU<MatrixXd> lu(p.system.matrix);
  if (!lu.isInvertible()) fail(ErrorCode::SingularSystem, "phase matrix is singular");
  p.solve = lu.solve(p.system.to_history);
  p.bias = lu.solve(p.system.source);
  p.step.map = p.system.from_solution * p.solve;
  p.step.offset = p.system.from_solution * p.bias;
  return p;
}

struct PeriodAverages {
  double vout = 0, p_in = 0, p_out = 0;
  VectorXd end_state;
};

// Steps one full period from `x0`, averaging output voltage and powers.
PeriodAverages measure_period(const PhaseStep& a, const PhaseStep& b, int steps_b, int steps,
                              const VectorXd& z0, const SimConfig& cfg) {
  PeriodAverages avg;
  VectorXd z = z0;
  const int out = a.system.index_of(NodeId::out());
  for (int s = 0; s < steps; ++s) {
    const PhaseStep& p = s < steps_b ? b : a;
    const VectorXd x = p.solve * z + p.bias;
    z = p.system.from_solution * x;
    const double v_out = x[out];
    // The source current variable flows from IN into the source; supplied current is its negative.
    double p_in = -cfg.vin * x[p.system.input_current];
    for (const auto& [idx, net] : p.system.gate_sources) {
      (void)net;
      p_in -= p.system.source[idx] * x[idx];
    }
    avg.vout += v_out;
    avg.p_in += p_in;
    avg.p_out += v_out * v_out / cfg.r_load;
  }
  avg.vout /= steps;
  avg.p_in /= steps;
  avg.p_out /= steps;
  avg.end_state = std::move(z);
  return avg;
}

SimResult invalid(SimFailure f, int periods = 0) {
  SimResult r;
  r.failure = f;
  r.periods_run = periods;
  return r;
}

}  // namespace

void SimConfig::validate() const {
  auto bad = [](const char* what) { fail(ErrorCode::InvalidInput, std::string("SimConfig: ") + what); };
  if (!(vin > 0)) bad("vin must be > 0");
  if (!(f_sw > 0)) bad("f_sw must be > 0");
  if (!(c_val > 0) || !(l_val > 0)) bad("c_val and l_val must be > 0");
  if (!(dt > 0) || dt > 1.0 / (f_sw * 200.0) * (1 + 1e-12)) bad("dt must be in (0, 1/(f_sw*200)]");
  if (!(r_on > 0 && r_on < r_load && r_load < r_off)) bad("require 0 < r_on < r_load < r_off");
  if (!(g_min >= 0)) bad("g_min must be >= 0");
  if (max_periods < 1) bad("max_periods must be >= 1");
  if (!(ss_tol > 0 && ss_tol < 1)) bad("ss_tol must be in (0, 1)");
}

int SimConfig::steps_per_period() const {
  return static_cast<int>(std::lround(1.0 / (f_sw * dt)));
}

const char* sim_failure_name(SimFailure f) {
  switch (f) {
    case SimFailure::Structural: return "Structural";
    case SimFailure::SingularSystem: return "SingularSystem";
    case SimFailure::NoSteadyState: return "NoSteadyState";
    case SimFailure::NonFinite: return "NonFinite";
    case SimFailure::DegenerateOutput: return "DegenerateOutput";
  }
  return "?";
}

std::optional<SimFailure> sim_failure_from_name(std::string_view s) {
  for (auto f : {SimFailure::Structural, SimFailure::SingularSystem, SimFailure::NoSteadyState,
                 SimFailure::NonFinite, SimFailure::DegenerateOutput})
    if (s == sim_failure_name(f)) return f;
  return std::nullopt;
}

int LinearSystem::index_of(NodeId n) const {
  auto it = node_index.find(n);
  return it == node_index.end() ? -1 : it->second;
}

VectorXd LinearSystem::step(const VectorXd& prev) const {
  Eigen::FullPivLU<MatrixXd> lu(matrix);
  if (!lu.isInvertible()) fail(ErrorCode::SingularSystem, "phase matrix is singular");
  return lu.solve(history * prev + source);
}

double LinearSystem::voltage(const VectorXd& x, NodeId n) const {
  int i = index_of(n);
  return i < 0 ? 0.0 : x[i];
}

LinearSystem build_phase_system(const Netlist& n, Phase phase, const SimConfig& cfg) {
  LinearSystem sys;
  // IN and OUT always carry the source and load even when no device touches them.
  sys.node_index.emplace(NodeId::in(), 0);
  sys.node_index.emplace(NodeId::out(), 1);
  for (const auto& node : n.nodes())
    if (node != NodeId::gnd() && !sys.node_index.count(node))
      sys.node_index.emplace(node, static_cast<int>(sys.node_index.size()));
  const int num_nodes = static_cast<int>(sys.node_index.size());

  int next = num_nodes;
  sys.input_current = next++;
  for (const auto& [node, idx] : sys.node_index) {
    (void)idx;
    if (node.is_control()) sys.gate_sources.emplace_back(next++, node);
  }
  for (const auto& e : n.entries())
    if (e.device.kind == Kind::Inductor) sys.inductor_currents.push_back(next++);
  const int size = next;

  const auto counts = n.kind_counts();
  const int num_caps = counts[static_cast<std::size_t>(Kind::Capacitor)];
  const int num_states = num_caps + counts[static_cast<std::size_t>(Kind::Inductor)];

  sys.matrix = MatrixXd::Zero(size, size);
  sys.source = VectorXd::Zero(size);
  sys.from_solution = MatrixXd::Zero(num_states, size);
  sys.to_history = MatrixXd::Zero(size, num_states);
  auto& G = sys.matrix;
  auto& Q = sys.from_solution;
  auto& E = sys.to_history;

  auto stamp_conductance = [&](int a, int b, double g) {
    if (a >= 0) G(a, a) += g;
    if (b >= 0) G(b, b) += g;
    if (a >= 0 && b >= 0) {
      G(a, b) -= g;
      G(b, a) -= g;
    }
  };
  auto stamp_voltage_source = [&](int node, int branch, double volts) {
    G(node, branch) += 1.0;
    G(branch, node) += 1.0;
    sys.source[branch] = volts;
  };

  for (int i = 0; i < num_nodes; ++i) G(i, i) += cfg.g_min;
  stamp_conductance(sys.index_of(NodeId::out()), -1, 1.0 / cfg.r_load);
  stamp_voltage_source(sys.index_of(NodeId::in()), sys.input_current, cfg.vin);
  // Gate drivers: high while FET-A conducts, low while FET-B conducts.
  for (const auto& [branch, node] : sys.gate_sources)
    stamp_voltage_source(sys.index_of(node), branch, phase == Phase::A ? cfg.vin : 0.0);

  int cap_state = 0;
  int ind_state = num_caps;
  std::size_t inductor = 0;
  for (const auto& e : n.entries()) {
    const int a = sys.index_of(e.nodes[0]);
    const int b = sys.index_of(e.nodes[1]);
    switch (e.device.kind) {
      case Kind::FetA:
      case Kind::FetB: {
        const bool on = (e.device.kind == Kind::FetA) == (phase == Phase::A);
        stamp_conductance(a, b, 1.0 / (on ? cfg.r_on : cfg.r_off));
        break;
      }
      case Kind::Capacitor: {
        // i = C/dt (v[n+1] - v[n]), state is v_a - v_b
        const double g = cfg.c_val / cfg.dt;
        const int z = cap_state++;
        stamp_conductance(a, b, g);
        if (a >= 0) {
          Q(z, a) = 1.0;
          E(a, z) += g;
        }
        if (b >= 0) {
          Q(z, b) = -1.0;
          E(b, z) -= g;
        }
        break;
      }
      case Kind::Inductor: {
        // v_a - v_b = L/dt (i[n+1] - i[n]); current flows a -> b.
        const int k = sys.inductor_currents[inductor++];
        const int z = ind_state++;
        const double r = cfg.l_val / cfg.dt;
        if (a >= 0) {
          G(a, k) += 1.0;
          G(k, a) += 1.0;
        }
        if (b >= 0) {
          G(b, k) -= 1.0;
          G(k, b) -= 1.0;
        }
        G(k, k) -= r;
        Q(z, k) = 1.0;
        E(k, z) -= r;
        break;
      }
    }
  }
  sys.history = E * Q;
  return sys;
}

bool steady_state_reached(const VectorXd& prev, const VectorXd& cur, double tol, double floor) {
  return (cur - prev).norm() <= tol * std::max(cur.norm(), floor);
}

SimResult simulate(const Design& d, const SimConfig& cfg) {
  cfg.validate();
  if (has_errors(structural_check(d.netlist))) return invalid(SimFailure::Structural);

  PhaseStep a, b;
  try {
    a = make_phase(d.netlist, Phase::A, cfg);
    b = make_phase(d.netlist, Phase::B, cfg);
  } catch (const Error&) {
    return invalid(SimFailure::SingularSystem);
  }
  if (!all_finite(a.solve) || !all_finite(b.solve)) return invalid(SimFailure::NonFinite);

  const int steps = cfg.steps_per_period();
  const int steps_b = static_cast<int>(std::lround(d.duty.value() * steps));
  const AffineMap period = power(b.step, steps_b).then(power(a.step, steps - steps_b));
  const int size = static_cast<int>(a.step.map.rows());

  // Periodic steady state: fixed point of the one-period map, confirmed by
  // integrating one period from it. Falls back to plain period-by-period
  // integration from rest when the fixed point is ill-posed.
  std::optional<VectorXd> start;
  int periods = 0;
  if (size == 0) {
    start = VectorXd::Zero(0);
    periods = 1;
  } else {
    // The state is in volts and amperes, so an absolute bound on the smallest
    // singular value separates slow but decaying modes from undamped ones.
    const MatrixXd lhs = MatrixXd::Identity(size, size) - period.map;
    Eigen::JacobiSVD<MatrixXd> svd(lhs);
    if (svd.singularValues().minCoeff() > kMinPeriodGap) {
      Eigen::FullPivLU<MatrixXd> lu(lhs);
      VectorXd fixed = lu.solve(period.offset);
      if (fixed.allFinite()) {
        VectorXd next = period.map * fixed + period.offset;
        periods = 1;
        if (steady_state_reached(fixed, next, cfg.ss_tol)) start = std::move(fixed);
      }
    }
  }
  if (!start) {
    VectorXd x = VectorXd::Zero(size);
    periods = 0;
    while (periods < cfg.max_periods) {
      VectorXd next = period.map * x + period.offset;
      ++periods;
      if (!next.allFinite()) return invalid(SimFailure::NonFinite, periods);
      const bool done = steady_state_reached(x, next, cfg.ss_tol);
      x = std::move(next);
      if (done) {
        start = x;
        break;
      }
    }
    if (!start) return invalid(SimFailure::NoSteadyState, periods);
  }

  auto avg = measure_period(a, b, steps_b, steps, *start, cfg);
  if (!std::isfinite(avg.vout) || !std::isfinite(avg.p_in) || !std::isfinite(avg.p_out))
    return invalid(SimFailure::NonFinite, periods);

  SimResult r;
  r.periods_run = periods;
  r.vout = avg.vout;
  r.p_in = avg.p_in;
  r.p_out = avg.p_out;
  if (avg.p_in < kMinInputPower || std::abs(avg.vout) < kMinOutputVolts) {
    r.failure = SimFailure::DegenerateOutput;
    r.efficiency = 0.0;
    return r;
  }
  r.valid = true;
  r.efficiency = std::clamp(avg.p_out / avg.p_in, 0.0, 1.0);
  return r;
}

AveragedPoint averaged_operating_point(const Design& d, const SimConfig& cfg) {
  AveragedPoint out;
  if (has_errors(structural_check(d.netlist))) return out;
  PhaseStep a, b;
  try {
    a = make_phase(d.netlist, Phase::A, cfg);
    b = make_phase(d.netlist, Phase::B, cfg);
  } catch (const Error&) {
    return out;
  }
  const double wb = d.duty.value(), wa = 1.0 - wb;
  const auto size = a.step.map.rows();
  VectorXd z = VectorXd::Zero(size);
  if (size > 0) {
    const MatrixXd lhs = MatrixXd::Identity(size, size) - (wa * a.step.map + wb * b.step.map);
    Eigen::JacobiSVD<MatrixXd> svd(lhs);
    if (!(svd.singularValues().minCoeff() > kMinPeriodGap)) return out;
    z = lhs.fullPivLu().solve(wa * a.step.offset + wb * b.step.offset);
  }
  const int node_out = a.system.index_of(NodeId::out());
  for (const auto& [p, w] : {std::pair<const PhaseStep*, double>{&a, wa}, std::pair<const PhaseStep*, double>{&b, wb}}) {
    const VectorXd x = p->solve * z + p->bias;
    double p_in = -cfg.vin * x[p->system.input_current];
    for (const auto& [idx, net] : p->system.gate_sources) {
      (void)net;
      p_in -= p->system.source[idx] * x[idx];
    }
    out.vout += w * x[node_out];
    out.p_in += w * p_in;
    out.p_out += w * x[node_out] * x[node_out] / cfg.r_load;
  }
  out.ok = std::isfinite(out.vout) && std::isfinite(out.p_in) && std::isfinite(out.p_out);
  return out;
}

}  // namespace crl
