#include "reward/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <numeric>
#include <queue>

#include "util/error.hpp"

namespace crl {
namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void join(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
  bool same(int a, int b) { return find(a) == find(b); }
};

struct Edge {
  Kind kind;
  int a, b;
};

// Dense node numbering with IN=0, OUT=1, 0=2.
struct Graph {
  int num_nodes = 3;
  std::vector<Edge> edges;
  std::vector<int> degree;
  std::vector<bool> internal;
  int gate_n = -1, gate_p = -1;
};

constexpr int kIn = 0, kOut = 1, kGnd = 2;

Graph build_graph(const Netlist& n) {
  Graph g;
  std::map<NodeId, int> index{{NodeId::in(), kIn}, {NodeId::out(), kOut}, {NodeId::gnd(), kGnd}};
  auto id = [&](NodeId node) {
    auto [it, fresh] = index.emplace(node, g.num_nodes);
    if (fresh) ++g.num_nodes;
    return it->second;
  };
  for (const auto& e : n.entries()) g.edges.push_back({e.device.kind, id(e.nodes[0]), id(e.nodes[1])});
  g.degree.assign(static_cast<std::size_t>(g.num_nodes), 0);
  g.internal.assign(static_cast<std::size_t>(g.num_nodes), false);
  for (const auto& [node, i] : index) {
    g.internal[static_cast<std::size_t>(i)] = !node.is_external();
    if (node.is_control()) (node.as_port() == NodeId::Port::GateN ? g.gate_n : g.gate_p) = i;
  }
  for (const auto& e : g.edges) {
    ++g.degree[static_cast<std::size_t>(e.a)];
    ++g.degree[static_cast<std::size_t>(e.b)];
  }
  return g;
}

bool conducts(Kind k, Phase p) {
  if (k == Kind::FetA) return p == Phase::A;
  if (k == Kind::FetB) return p == Phase::B;
  return false;
}

// Union-find over the given edge filter; gate drivers tie to IN in phase A
// and to ground in phase B.
template <typename Pred>
UnionFind connect(const Graph& g, Phase p, Pred keep, int skip = -1) {
  UnionFind uf(g.num_nodes);
  const int rail = p == Phase::A ? kIn : kGnd;
  if (g.gate_n >= 0) uf.join(g.gate_n, rail);
  if (g.gate_p >= 0) uf.join(g.gate_p, rail);
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    if (static_cast<int>(i) != skip && keep(g.edges[i])) uf.join(g.edges[i].a, g.edges[i].b);
  return uf;
}

// Exists an edge of `kind` whose removal leaves IN-u and v-OUT (either
// orientation) connected through switches and inductors.
bool in_out_path_through(const Graph& g, Kind kind) {
  auto keep = [](const Edge& e) { return e.kind != Kind::Capacitor; };
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& e = g.edges[i];
    if (e.kind != kind) continue;
    auto uf = connect(g, Phase::A, keep, static_cast<int>(i));
    if ((uf.same(kIn, e.a) && uf.same(e.b, kOut)) || (uf.same(kIn, e.b) && uf.same(e.a, kOut))) return true;
  }
  return false;
}

int diameter(const Graph& g) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.num_nodes));
  for (const auto& e : g.edges) {
    adj[static_cast<std::size_t>(e.a)].push_back(e.b);
    adj[static_cast<std::size_t>(e.b)].push_back(e.a);
  }
  int best = 0;
  for (int s = 0; s < g.num_nodes; ++s) {
    std::vector<int> dist(static_cast<std::size_t>(g.num_nodes), -1);
    std::queue<int> q;
    dist[static_cast<std::size_t>(s)] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[static_cast<std::size_t>(u)])
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          best = std::max(best, dist[static_cast<std::size_t>(v)]);
          q.push(v);
        }
    }
  }
  return best;
}

struct PhaseFacts {
  double shoot_through = 0, out_to_in = 0, out_to_gnd = 0, driven = 0, floating = 0;
  double interrupted_inductors = 0, inductors_across_source = 0, out_ac_to_in = 0, caps_across_source = 0;
  double vout_level = 0;  // vin when driven, 0 when pulled low; floating resolved later
};

PhaseFacts analyze_phase(const Graph& g, Phase p, double vin) {
  PhaseFacts f;
  auto dc = connect(g, p, [&](const Edge& e) { return e.kind == Kind::Inductor || conducts(e.kind, p); });
  f.shoot_through = dc.same(kIn, kGnd);
  f.out_to_in = dc.same(kOut, kIn);
  f.out_to_gnd = dc.same(kOut, kGnd);
  f.driven = f.out_to_in && !f.shoot_through && !f.out_to_gnd;
  f.floating = !f.out_to_in && !f.out_to_gnd;
  f.vout_level = f.driven ? vin : 0.0;

  auto sw = connect(g, p, [&](const Edge& e) { return conducts(e.kind, p); });
  auto across = [&](UnionFind& uf, const Edge& e) {
    return (uf.same(e.a, kIn) && uf.same(e.b, kGnd)) || (uf.same(e.a, kGnd) && uf.same(e.b, kIn));
  };
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& e = g.edges[i];
    if (e.kind == Kind::Inductor) {
      if (across(sw, e)) f.inductors_across_source += 1;
      // Current path exists iff the inductor closes a loop through conducting
      // devices, capacitors, the load and the source.
      auto loop = connect(g, p, [&](const Edge& x) { return x.kind != Kind::FetA && x.kind != Kind::FetB ? true : conducts(x.kind, p); },
                          static_cast<int>(i));
      loop.join(kOut, kGnd);
      loop.join(kIn, kGnd);
      if (!loop.same(e.a, e.b)) f.interrupted_inductors += 1;
    }
    if (e.kind == Kind::Capacitor && across(dc, e)) f.caps_across_source += 1;
  }
  auto ac = connect(g, p, [&](const Edge& e) { return e.kind != Kind::FetA && e.kind != Kind::FetB ? true : conducts(e.kind, p); });
  f.out_ac_to_in = ac.same(kOut, kIn);
  return f;
}

// Resistive operating point of one phase: switches at r_on / r_off,
// inductors as near-shorts, capacitors open (dc) or near-shorts (ac).
struct OperatingPoint {
  double vout = 0, p_in = 0, p_load = 0;
};

OperatingPoint operating_point(const Graph& g, Phase p, bool caps_short, double vin) {
  constexpr double kShort = 1e3, kOn = 20.0, kOff = 1e-7, kLoad = 0.1, kLeak = 1e-9;
  const int n = g.num_nodes;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  auto stamp = [&](int a, int b, double c) {
    lap(a, a) += c;
    lap(b, b) += c;
    lap(a, b) -= c;
    lap(b, a) -= c;
  };
  for (int i = 0; i < n; ++i) lap(i, i) += kLeak;
  stamp(kOut, kGnd, kLoad);
  for (const auto& e : g.edges) {
    if (e.a == e.b) continue;
    switch (e.kind) {
      case Kind::Inductor: stamp(e.a, e.b, kShort); break;
      case Kind::Capacitor:
        if (caps_short) stamp(e.a, e.b, kShort);
        break;
      default: stamp(e.a, e.b, conducts(e.kind, p) ? kOn : kOff);
    }
  }
  // Fixed potentials: IN, ground and gate drivers.
  Eigen::VectorXd fixed = Eigen::VectorXd::Constant(n, std::nan(""));
  fixed[kIn] = vin;
  fixed[kGnd] = 0.0;
  const double gate = p == Phase::A ? vin : 0.0;
  if (g.gate_n >= 0) fixed[g.gate_n] = gate;
  if (g.gate_p >= 0) fixed[g.gate_p] = gate;
  std::vector<int> free_nodes;
  for (int i = 0; i < n; ++i)
    if (std::isnan(fixed[i])) free_nodes.push_back(i);
  Eigen::VectorXd v = fixed;
  if (!free_nodes.empty()) {
    const auto m = static_cast<Eigen::Index>(free_nodes.size());
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) a(r, c) = lap(free_nodes[static_cast<std::size_t>(r)], free_nodes[static_cast<std::size_t>(c)]);
      for (int j = 0; j < n; ++j)
        if (!std::isnan(fixed[j])) rhs[r] -= lap(free_nodes[static_cast<std::size_t>(r)], j) * fixed[j];
    }
    Eigen::VectorXd sol = a.ldlt().solve(rhs);
    for (Eigen::Index r = 0; r < m; ++r) v[free_nodes[static_cast<std::size_t>(r)]] = sol[r];
  }
  OperatingPoint op;
  op.vout = v[kOut];
  op.p_load = v[kOut] * v[kOut] * kLoad;
  // Current leaving the IN node into the network.
  op.p_in = vin * (lap.row(kIn).dot(v));
  return op;
}

std::vector<std::string> structural_names() {
  std::vector<std::string> n = {"count_capacitor", "count_inductor", "count_fet_a", "count_fet_b", "num_devices",
                                "internal_deg2", "internal_deg3", "internal_deg4", "internal_deg5plus",
                                "deg_in", "deg_out", "deg_gnd", "in_out_path_switch", "in_out_path_inductor",
                                "caps_on_out", "diameter", "cap_out_gnd", "inductor_on_out", "inductor_on_in"};
  for (const char* phase : {"a", "b"})
    for (const char* what : {"shoot_through", "out_to_in", "out_to_gnd", "out_driven", "out_floating",
                             "interrupted_inductors", "inductors_across_source", "out_ac_to_in",
                             "caps_across_source"})
      n.push_back(std::string(what) + "_" + phase);
  n.push_back("vout_estimate");
  for (const char* mode : {"dc", "ac"}) {
    for (const char* phase : {"a", "b"}) {
      n.push_back(std::string("op_vout_") + mode + "_" + phase);
      n.push_back(std::string("op_eff_") + mode + "_" + phase);
    }
    n.push_back(std::string("op_vout_") + mode + "_avg");
  }
  for (const char* what : {"avg_ok", "avg_vout", "avg_eff", "avg_vout_sq", "avg_log_p_in",
                           "avg_vout*interrupted", "avg_eff*interrupted", "vout_estimate*interrupted"}) n.push_back(what);
  n.push_back("any_shoot_through");
  n.push_back("any_interrupted_inductor");
  return n;
}

}  // namespace

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out{"bias"};
    auto s = structural_names();
    out.insert(out.end(), s.begin(), s.end());
    for (const auto& x : s) out.push_back(x + "*duty");
    for (auto d : Duty::all()) out.push_back("duty_" + d.str());
    return out;
  }();
  return names;
}

std::size_t feature_count() { return feature_names().size(); }

double feature_value(const std::vector<double>& f, const std::string& name) {
  const auto& names = feature_names();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail(ErrorCode::InvalidInput, "unknown feature " + name);
  return f.at(static_cast<std::size_t>(it - names.begin()));
}

std::vector<double> featurize(const Design& d, double vin) {
  const Graph g = build_graph(d.netlist);
  std::vector<double> s;
  const auto counts = d.netlist.kind_counts();
  for (int c : counts) s.push_back(c);
  s.push_back(static_cast<double>(d.netlist.size()));
  std::array<double, 4> hist{};
  for (int i = 0; i < g.num_nodes; ++i) {
    if (!g.internal[static_cast<std::size_t>(i)]) continue;
    const int deg = g.degree[static_cast<std::size_t>(i)];
    if (deg >= 2) hist[static_cast<std::size_t>(std::min(deg, 5) - 2)] += 1;
  }
  s.insert(s.end(), hist.begin(), hist.end());
  s.push_back(g.degree[kIn]);
  s.push_back(g.degree[kOut]);
  s.push_back(g.degree[kGnd]);
  if (g.edges.empty()) {
    s.resize(structural_names().size(), 0.0);
  } else {
    s.push_back(in_out_path_through(g, Kind::FetA) || in_out_path_through(g, Kind::FetB));
    s.push_back(in_out_path_through(g, Kind::Inductor));
    double caps_on_out = 0, cap_out_gnd = 0, ind_out = 0, ind_in = 0;
    for (const auto& e : g.edges) {
      const bool on_out = e.a == kOut || e.b == kOut;
      if (e.kind == Kind::Capacitor && on_out) caps_on_out += 1;
      if (e.kind == Kind::Capacitor && ((e.a == kOut && e.b == kGnd) || (e.a == kGnd && e.b == kOut))) cap_out_gnd = 1;
      if (e.kind == Kind::Inductor && on_out) ind_out = 1;
      if (e.kind == Kind::Inductor && (e.a == kIn || e.b == kIn)) ind_in = 1;
    }
    s.push_back(caps_on_out);
    s.push_back(diameter(g));
    s.push_back(cap_out_gnd);
    s.push_back(ind_out);
    s.push_back(ind_in);

    const PhaseFacts a = analyze_phase(g, Phase::A, vin);
    const PhaseFacts b = analyze_phase(g, Phase::B, vin);
    for (const PhaseFacts* f : {&a, &b})
      for (double v : {f->shoot_through, f->out_to_in, f->out_to_gnd, f->driven, f->floating,
                       f->interrupted_inductors, f->inductors_across_source, f->out_ac_to_in, f->caps_across_source})
        s.push_back(v);
    // Phase B holds the first `duty` of each period. A floating output keeps
    // the level set by the other phase.
    double va = a.vout_level, vb = b.vout_level;
    if (a.floating && !b.floating) va = vb;
    if (b.floating && !a.floating) vb = va;
    const double vout_estimate = d.duty.value() * vb + (1.0 - d.duty.value()) * va;
    s.push_back(vout_estimate);
    for (bool caps_short : {false, true}) {
      const auto oa = operating_point(g, Phase::A, caps_short, vin);
      const auto ob = operating_point(g, Phase::B, caps_short, vin);
      for (const auto& o : {oa, ob}) {
        s.push_back(o.vout);
        s.push_back(o.p_in > 1e-9 ? std::clamp(o.p_load / o.p_in, 0.0, 1.0) : 0.0);
      }
      s.push_back(d.duty.value() * ob.vout + (1.0 - d.duty.value()) * oa.vout);
    }
    SimConfig cfg;
    cfg.vin = vin;
    const auto avg = averaged_operating_point(d, cfg);
    const double v = avg.ok ? std::clamp(avg.vout, -5 * vin, 5 * vin) : 0.0;
    const double eff = avg.ok && avg.p_in > 1e-9 ? std::clamp(avg.p_out / avg.p_in, 0.0, 1.0) : 0.0;
    // Averaging is poor when a phase cuts an inductor's current path.
    const double interrupted = a.interrupted_inductors + b.interrupted_inductors > 0 ? 1.0 : 0.0;
    s.push_back(avg.ok);
    s.push_back(v);
    s.push_back(eff);
    s.push_back(v * v);
    s.push_back(avg.ok ? std::log10(std::max(std::abs(avg.p_in), 1e-12)) : -12.0);
    s.push_back(v * interrupted);
    s.push_back(eff * interrupted);
    s.push_back(vout_estimate * interrupted);
    s.push_back(a.shoot_through || b.shoot_through);
    s.push_back(interrupted);
  }
  if (s.size() != structural_names().size()) fail(ErrorCode::InvalidInput, "feature layout mismatch");

  std::vector<double> out;
  out.reserve(feature_count());
  out.push_back(1.0);
  out.insert(out.end(), s.begin(), s.end());
  for (double v : s) out.push_back(v * d.duty.value());
  for (auto x : Duty::all()) out.push_back(x == d.duty ? 1.0 : 0.0);
  return out;
}

}  // namespace crl
