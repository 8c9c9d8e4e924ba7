// Canonical labeling by colour refinement + individualization. The graph is
// split into pieces glued only at external ports (which are fixed points), so
// each piece is labeled independently and the key is the sorted piece list.

#include "netlist/canonical.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

namespace crl {
namespace {

// Terminal reference: externals are 0..4, internal node u is kInternalBase + u.
constexpr int kInternalBase = NodeId::kNumPorts;

struct Tuple {
  int kind;
  int a;
  int b;
  auto operator<=>(const Tuple&) const = default;
};
using Cert = std::vector<Tuple>;

struct Incidence {
  int kind;
  int role;
  int other;  // terminal ref of the other end
};

class PieceLabeler {
 public:
  PieceLabeler(int num_nodes, std::vector<Tuple> devices)
      : m_(num_nodes), devices_(std::move(devices)), adj_(static_cast<std::size_t>(num_nodes)) {
    for (const auto& d : devices_) {
      if (d.a >= kInternalBase) adj_[idx(d.a - kInternalBase)].push_back({d.kind, 0, d.b});
      if (d.b >= kInternalBase) adj_[idx(d.b - kInternalBase)].push_back({d.kind, 1, d.a});
    }
  }

  // Returns the minimal certificate over all canonical leaves.
  Cert run() {
    std::vector<int> colors(idx(m_), 0);
    refine(colors);
    std::vector<int> path;
    search(colors, path);
    return best_;
  }

 private:
  static std::size_t idx(int i) { return static_cast<std::size_t>(i); }

  int other_code(int ref, const std::vector<int>& colors) const {
    return ref < kInternalBase ? ref : 100 + colors[idx(ref - kInternalBase)];
  }

  void refine(std::vector<int>& colors) const {
    int distinct = -1;
    while (true) {
      std::vector<std::pair<int, std::vector<std::tuple<int, int, int>>>> sig(idx(m_));
      for (int v = 0; v < m_; ++v) {
        auto& s = sig[idx(v)];
        s.first = colors[idx(v)];
        for (const auto& inc : adj_[idx(v)])
          s.second.emplace_back(inc.kind, inc.role, other_code(inc.other, colors));
        std::sort(s.second.begin(), s.second.end());
      }
      auto sorted = sig;
      std::sort(sorted.begin(), sorted.end());
      sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
      for (int v = 0; v < m_; ++v)
        colors[idx(v)] = static_cast<int>(
            std::lower_bound(sorted.begin(), sorted.end(), sig[idx(v)]) - sorted.begin());
      int now = static_cast<int>(sorted.size());
      if (now == distinct) return;
      distinct = now;
    }
  }

  Cert certificate(const std::vector<int>& colors) const {
    Cert c;
    c.reserve(devices_.size());
    auto code = [&](int ref) {
      return ref < kInternalBase ? ref : kInternalBase + colors[idx(ref - kInternalBase)];
    };
    for (const auto& d : devices_) c.push_back({d.kind, code(d.a), code(d.b)});
    std::sort(c.begin(), c.end());
    return c;
  }

  // Union-find orbits of `cell` under stored automorphisms fixing `path`.
  std::vector<int> orbit_roots(const std::vector<int>& cell, const std::vector<int>& path) const {
    std::vector<int> parent(idx(m_));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[idx(x)] != x) x = parent[idx(x)] = parent[idx(parent[idx(x)])];
      return x;
    };
    for (const auto& g : autos_) {
      bool fixes = std::all_of(path.begin(), path.end(), [&](int p) { return g[idx(p)] == p; });
      if (!fixes) continue;
      for (int v = 0; v < m_; ++v) parent[idx(find(v))] = find(g[idx(v)]);
    }
    std::vector<int> roots;
    for (int v : cell) roots.push_back(find(v));
    return roots;
  }

  void record_automorphism(const std::vector<int>& from, const std::vector<int>& to) {
    // Node with colour c in `from` maps to the node with colour c in `to`.
    std::vector<int> by_color(idx(m_));
    for (int v = 0; v < m_; ++v) by_color[idx(to[idx(v)])] = v;
    std::vector<int> g(idx(m_));
    for (int v = 0; v < m_; ++v) g[idx(v)] = by_color[idx(from[idx(v)])];
    autos_.push_back(std::move(g));
  }

  void search(const std::vector<int>& colors, std::vector<int>& path) {
    // Target cell: smallest colour shared by more than one node.
    std::vector<int> count(idx(m_), 0);
    for (int c : colors) ++count[idx(c)];
    int target = -1;
    for (int c = 0; c < m_; ++c)
      if (count[idx(c)] > 1) {
        target = c;
        break;
      }
    if (target < 0) {
      Cert cert = certificate(colors);
      if (!have_leaf_) {
        have_leaf_ = true;
        first_leaf_ = colors;
        first_cert_ = cert;
        best_ = cert;
        best_leaf_ = colors;
        return;
      }
      if (cert == first_cert_) record_automorphism(first_leaf_, colors);
      if (cert == best_ && colors != best_leaf_) record_automorphism(best_leaf_, colors);
      if (cert < best_) {
        best_ = cert;
        best_leaf_ = colors;
      }
      return;
    }

    std::vector<int> cell;
    for (int v = 0; v < m_; ++v)
      if (colors[idx(v)] == target) cell.push_back(v);
    std::vector<std::size_t> explored;
    for (std::size_t i = 0; i < cell.size(); ++i) {
      // Orbits grow as automorphisms are found, so recompute each time.
      auto roots = orbit_roots(cell, path);
      bool covered = std::any_of(explored.begin(), explored.end(),
                                 [&](std::size_t j) { return roots[j] == roots[i]; });
      if (covered) continue;
      explored.push_back(i);

      std::vector<int> next(colors.size());
      for (std::size_t u = 0; u < colors.size(); ++u) next[u] = colors[u] * 2 + 1;
      next[idx(cell[i])] -= 1;
      refine(next);
      path.push_back(cell[i]);
      search(next, path);
      path.pop_back();
    }
  }

  int m_;
  std::vector<Tuple> devices_;
  std::vector<std::vector<Incidence>> adj_;
  std::vector<std::vector<int>> autos_;
  bool have_leaf_ = false;
  std::vector<int> first_leaf_, best_leaf_;
  Cert first_cert_, best_;
};

struct Piece {
  Cert cert;
  std::string text;
};

char kind_char(int k) { return "CLAB"[k]; }

std::string ref_text(int ref) {
  static constexpr const char* kPorts[] = {"I", "O", "G", "N", "P"};
  if (ref < kInternalBase) return kPorts[ref];
  return "#" + std::to_string(ref - kInternalBase);
}

std::string cert_text(const Cert& c) {
  std::string s;
  for (const auto& t : c) s += std::string(1, kind_char(t.kind)) + "(" + ref_text(t.a) + "," + ref_text(t.b) + ")";
  return s;
}

std::vector<Piece> canonical_pieces(const Netlist& n) {
  std::map<NodeId, int> internal;
  for (const auto& node : n.nodes())
    if (!node.is_external()) internal.emplace(node, static_cast<int>(internal.size()));
  auto ref = [&](NodeId node) {
    return node.is_external() ? static_cast<int>(node.as_port()) : kInternalBase + internal.at(node);
  };

  const int k = static_cast<int>(internal.size());
  std::vector<int> parent(static_cast<std::size_t>(k));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x)
      x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  };
  for (const auto& e : n.entries()) {
    int a = ref(e.nodes[0]), b = ref(e.nodes[1]);
    if (a >= kInternalBase && b >= kInternalBase)
      parent[static_cast<std::size_t>(find(a - kInternalBase))] = find(b - kInternalBase);
  }

  std::map<int, std::vector<Tuple>> by_root;  // root -> devices (global refs)
  std::vector<Piece> pieces;
  for (const auto& e : n.entries()) {
    Tuple t{static_cast<int>(e.device.kind), ref(e.nodes[0]), ref(e.nodes[1])};
    int inner = t.a >= kInternalBase ? t.a : (t.b >= kInternalBase ? t.b : -1);
    if (inner < 0) {
      Cert c{t};
      pieces.push_back({c, cert_text(c)});
    } else {
      by_root[find(inner - kInternalBase)].push_back(t);
    }
  }
  for (auto& [root, devs] : by_root) {
    std::map<int, int> local;
    for (auto& d : devs)
      for (int* r : {&d.a, &d.b})
        if (*r >= kInternalBase) {
          auto [it, _] = local.try_emplace(*r, static_cast<int>(local.size()));
          *r = kInternalBase + it->second;
        }
    PieceLabeler labeler(static_cast<int>(local.size()), devs);
    Cert c = labeler.run();
    pieces.push_back({c, cert_text(c)});
  }
  std::sort(pieces.begin(), pieces.end(),
            [](const Piece& a, const Piece& b) { return a.cert < b.cert; });
  return pieces;
}

}  // namespace

CanonicalKey canonical_key(const Netlist& n) {
  CanonicalKey key;
  for (const auto& p : canonical_pieces(n)) {
    if (!key.bytes.empty()) key.bytes += '|';
    key.bytes += p.text;
  }
  return key;
}

Netlist canonical_form(const Netlist& n) {
  std::vector<std::tuple<Kind, int, int>> flat;  // kind, refs with global internal numbering
  int offset = 0;
  for (const auto& p : canonical_pieces(n)) {
    int max_local = -1;
    for (const auto& t : p.cert) {
      auto shift = [&](int r) {
        if (r < kInternalBase) return r;
        max_local = std::max(max_local, r - kInternalBase);
        return r + offset;
      };
      flat.emplace_back(static_cast<Kind>(t.kind), shift(t.a), shift(t.b));
    }
    offset += max_local + 1;
  }
  std::map<int, std::int64_t> relabel;
  std::array<int, kNumKinds> next_index{};
  std::vector<Entry> entries;
  auto node_of = [&](int r) {
    if (r < kInternalBase) return NodeId::port(static_cast<NodeId::Port>(r));
    auto [it, _] = relabel.try_emplace(r, static_cast<std::int64_t>(relabel.size()) + 1);
    return NodeId::internal(it->second);
  };
  for (const auto& [kind, a, b] : flat) {
    Entry e;
    e.device = Device{kind, next_index[static_cast<std::size_t>(kind)]++};
    e.nodes = {node_of(a), node_of(b)};
    entries.push_back(e);
  }
  return Netlist(std::move(entries));
}

}  // namespace crl
