#ifndef DNAMIX_JUNCTION_TREE_HPP
#define DNAMIX_JUNCTION_TREE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnamix/errors.hpp"
#include "dnamix/log_scalar.hpp"
#include "dnamix/network.hpp"

namespace dnamix {

/// Cliques (node-id sets) and the tree edges joining them. Separators are
/// the intersections of adjacent cliques.
struct CliqueTreeSpec {
  std::vector<std::vector<NodeId>> cliques;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t add_clique(std::vector<NodeId> nodes) {
    cliques.push_back(std::move(nodes));
    return cliques.size() - 1;
  }
  void connect(std::size_t a, std::size_t b) { edges.emplace_back(a, b); }
};

enum class TreeViolation {
  none,
  invalid_node,
  duplicate_node,
  invalid_edge,
  not_a_tree,
  running_intersection,
  family_not_covered,
};

struct TreeCheck {
  TreeViolation violation = TreeViolation::none;
  std::string detail;

  bool ok() const { return violation == TreeViolation::none; }
  explicit operator bool() const { return ok(); }
};

namespace detail {

inline std::vector<NodeId> sorted_intersection(std::vector<NodeId> a, std::vector<NodeId> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<NodeId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool contains_all(const std::vector<NodeId>& set, const std::vector<NodeId>& items) {
  for (NodeId v : items)
    if (std::find(set.begin(), set.end(), v) == set.end()) return false;
  return true;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

// Row-major strides for a variable list (last variable fastest).
inline std::vector<std::size_t> strides_for(const std::vector<std::size_t>& cards) {
  std::vector<std::size_t> strides(cards.size());
  std::size_t s = 1;
  for (std::size_t i = cards.size(); i-- > 0;) {
    strides[i] = s;
    s *= cards[i];
  }
  return strides;
}

// For every cell of the `from` table, the index of the matching cell of a
// table over `to_vars` (a subset of `from_vars`) with the given strides.
inline std::vector<std::uint32_t> index_map(const std::vector<NodeId>& from_vars,
                                            const std::vector<std::size_t>& from_cards,
                                            const std::vector<NodeId>& to_vars,
                                            const std::vector<std::size_t>& to_strides) {
  const std::size_t m = from_vars.size();
  std::vector<std::size_t> weight(m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    auto it = std::find(to_vars.begin(), to_vars.end(), from_vars[j]);
    if (it != to_vars.end()) weight[j] = to_strides[static_cast<std::size_t>(it - to_vars.begin())];
  }
  std::size_t cells = 1;
  for (std::size_t c : from_cards) cells *= c;
  std::vector<std::uint32_t> map(cells);
  std::vector<std::size_t> digit(m, 0);
  std::size_t idx = 0;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    map[cell] = static_cast<std::uint32_t>(idx);
    for (std::size_t j = m; j-- > 0;) {
      if (++digit[j] < from_cards[j]) {
        idx += weight[j];
        break;
      }
      idx -= (from_cards[j] - 1) * weight[j];
      digit[j] = 0;
    }
  }
  return map;
}

}  // namespace detail

/// Checks tree-ness, the running intersection property and family coverage.
/// The first violation found is reported.
inline TreeCheck validate_clique_tree(const DiscreteNetwork& net, const CliqueTreeSpec& spec) {
  const std::size_t nc = spec.cliques.size();
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& clique = spec.cliques[c];
    for (std::size_t i = 0; i < clique.size(); ++i) {
      if (clique[i] >= net.size())
        return {TreeViolation::invalid_node, "clique " + std::to_string(c) + " references node " +
                                                 std::to_string(clique[i])};
      for (std::size_t j = i + 1; j < clique.size(); ++j)
        if (clique[i] == clique[j])
          return {TreeViolation::duplicate_node, "clique " + std::to_string(c) + " lists node " +
                                                     net.name(clique[i]) + " twice"};
    }
  }
  if (nc == 0) {
    if (net.size() == 0) return {};
    return {TreeViolation::family_not_covered, "tree has no cliques"};
  }
  for (const auto& [a, b] : spec.edges)
    if (a >= nc || b >= nc || a == b)
      return {TreeViolation::invalid_edge, "edge (" + std::to_string(a) + "," + std::to_string(b) + ")"};
  if (spec.edges.size() != nc - 1)
    return {TreeViolation::not_a_tree, std::to_string(spec.edges.size()) + " edges for " +
                                           std::to_string(nc) + " cliques"};
  detail::UnionFind uf(nc);
  for (const auto& [a, b] : spec.edges)
    if (!uf.unite(a, b)) return {TreeViolation::not_a_tree, "edges contain a cycle"};

  // In a tree, the cliques holding v induce a subtree iff they are joined by
  // exactly (count - 1) edges whose both ends hold v.
  for (NodeId v = 0; v < net.size(); ++v) {
    std::vector<char> has(nc, 0);
    std::size_t count = 0;
    for (std::size_t c = 0; c < nc; ++c)
      if (std::find(spec.cliques[c].begin(), spec.cliques[c].end(), v) != spec.cliques[c].end()) {
        has[c] = 1;
        ++count;
      }
    if (count == 0) continue;
    std::size_t inner = 0;
    for (const auto& [a, b] : spec.edges)
      if (has[a] && has[b]) ++inner;
    if (inner != count - 1)
      return {TreeViolation::running_intersection, "cliques containing " + net.name(v) + " are not connected"};
  }
  for (NodeId v = 0; v < net.size(); ++v) {
    const auto fam = net.family(v);
    bool covered = false;
    for (const auto& clique : spec.cliques)
      if (detail::contains_all(clique, fam)) {
        covered = true;
        break;
      }
    if (!covered)
      return {TreeViolation::family_not_covered, "no clique contains the family of " + net.name(v)};
  }
  return {};
}

/// Adds a clique {aux} ∪ parents(aux) joined to a clique that contains the
/// parent set. Returns the new clique index.
inline std::size_t attach_aux_clique(CliqueTreeSpec& spec, const DiscreteNetwork& net, NodeId aux,
                                     std::optional<std::size_t> host = std::nullopt) {
  const auto& parents = net.parents(aux);
  if (!host) {
    std::size_t best_cells = std::numeric_limits<std::size_t>::max();
    for (std::size_t c = 0; c < spec.cliques.size(); ++c) {
      if (!detail::contains_all(spec.cliques[c], parents)) continue;
      std::size_t cells = 1;
      for (NodeId v : spec.cliques[c]) cells *= net.states(v);
      if (cells < best_cells) {
        best_cells = cells;
        host = c;
      }
    }
  }
  std::vector<NodeId> clique = parents;
  clique.push_back(aux);
  const std::size_t idx = spec.add_clique(std::move(clique));
  if (host) {
    if (!detail::contains_all(spec.cliques[*host], parents))
      throw ValidationError("host clique does not contain the parent set of " + net.name(aux));
    spec.connect(*host, idx);
  } else if (idx > 0) {
    throw ValidationError("no clique contains the parent set of " + net.name(aux));
  }
  return idx;
}

/// Compiled, immutable junction tree: index maps, rooted traversal and CPT
/// placement for one network structure. Shared between charges.
class JunctionTree {
 public:
  struct Table {
    std::vector<NodeId> vars;
    std::vector<std::size_t> cards;
    std::vector<std::size_t> strides;
    std::size_t cells = 1;
  };
  struct Separator {
    std::size_t left = 0, right = 0;  // clique indices
    Table table;
    std::vector<std::uint32_t> left_map, right_map;  // clique cell -> separator cell
  };

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  static std::shared_ptr<const JunctionTree> compile(const DiscreteNetwork& net, const CliqueTreeSpec& spec) {
    if (auto check = validate_clique_tree(net, spec); !check)
      throw ValidationError("invalid junction tree: " + check.detail);
    auto jt = std::shared_ptr<JunctionTree>(new JunctionTree());
    jt->build(net, spec);
    return jt;
  }

  std::size_t clique_count() const { return cliques_.size(); }
  std::size_t separator_count() const { return separators_.size(); }
  const Table& clique(std::size_t c) const { return cliques_[c]; }
  const Separator& separator(std::size_t s) const { return separators_[s]; }
  std::size_t node_count() const { return node_states_.size(); }
  std::size_t node_states(NodeId v) const { return node_states_.at(v); }

  const std::vector<std::size_t>& order() const { return order_; }
  std::size_t parent_separator(std::size_t c) const { return parent_sep_[c]; }
  std::size_t home_clique(NodeId v) const { return home_[v]; }
  const std::vector<std::uint32_t>& cpt_map(NodeId v) const { return cpt_map_[v]; }
  std::size_t evidence_clique(NodeId v) const { return evidence_clique_.at(v); }
  std::size_t minimal_separator() const { return min_sep_; }

  /// Sum of clique and separator state-space sizes.
  std::size_t total_size() const {
    std::size_t total = 0;
    for (const auto& c : cliques_) total += c.cells;
    for (const auto& s : separators_) total += s.table.cells;
    return total;
  }

  /// Smallest clique containing every node of `nodes`, or npos.
  std::size_t covering_clique(std::span<const NodeId> nodes) const {
    std::size_t best = npos;
    for (std::size_t c = 0; c < cliques_.size(); ++c) {
      const auto& vars = cliques_[c].vars;
      bool all = std::all_of(nodes.begin(), nodes.end(), [&](NodeId v) {
        return std::find(vars.begin(), vars.end(), v) != vars.end();
      });
      if (all && (best == npos || cliques_[c].cells < cliques_[best].cells)) best = c;
    }
    return best;
  }

  bool matches(const DiscreteNetwork& net) const {
    if (net.size() != node_states_.size()) return false;
    for (NodeId v = 0; v < net.size(); ++v)
      if (net.states(v) != node_states_[v] || net.parents(v) != node_parents_[v]) return false;
    return true;
  }

 private:
  JunctionTree() = default;

  Table make_table(std::vector<NodeId> vars, const DiscreteNetwork& net) {
    Table t;
    t.vars = std::move(vars);
    for (NodeId v : t.vars) t.cards.push_back(net.states(v));
    t.strides = detail::strides_for(t.cards);
    long double cells = 1;
    for (std::size_t c : t.cards) cells *= static_cast<long double>(c);
    if (cells > static_cast<long double>(std::numeric_limits<std::uint32_t>::max()))
      throw ValidationError("clique state space too large to allocate");
    t.cells = static_cast<std::size_t>(cells);
    return t;
  }

  void build(const DiscreteNetwork& net, const CliqueTreeSpec& spec) {
    for (NodeId v = 0; v < net.size(); ++v) {
      node_states_.push_back(net.states(v));
      node_parents_.push_back(net.parents(v));
    }
    for (const auto& c : spec.cliques) cliques_.push_back(make_table(c, net));

    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacent(cliques_.size());
    for (const auto& [a, b] : spec.edges) {
      Separator s;
      s.left = a;
      s.right = b;
      s.table = make_table(detail::sorted_intersection(spec.cliques[a], spec.cliques[b]), net);
      s.left_map = detail::index_map(cliques_[a].vars, cliques_[a].cards, s.table.vars, s.table.strides);
      s.right_map = detail::index_map(cliques_[b].vars, cliques_[b].cards, s.table.vars, s.table.strides);
      adjacent[a].emplace_back(b, separators_.size());
      adjacent[b].emplace_back(a, separators_.size());
      separators_.push_back(std::move(s));
    }

    parent_sep_.assign(cliques_.size(), npos);
    if (!cliques_.empty()) {
      std::vector<char> seen(cliques_.size(), 0);
      order_.push_back(0);
      seen[0] = 1;
      for (std::size_t i = 0; i < order_.size(); ++i) {
        const std::size_t c = order_[i];
        for (const auto& [nb, sep] : adjacent[c]) {
          if (seen[nb]) continue;
          seen[nb] = 1;
          parent_sep_[nb] = sep;
          order_.push_back(nb);
        }
      }
    }

    min_sep_ = npos;
    for (std::size_t s = 0; s < separators_.size(); ++s)
      if (min_sep_ == npos || separators_[s].table.cells < separators_[min_sep_].table.cells) min_sep_ = s;

    home_.assign(net.size(), npos);
    cpt_map_.resize(net.size());
    evidence_clique_.assign(net.size(), npos);
    for (NodeId v = 0; v < net.size(); ++v) {
      const auto fam = net.family(v);
      home_[v] = covering_clique(fam);
      const NodeId single[] = {v};
      evidence_clique_[v] = covering_clique(single);
      std::vector<std::size_t> fam_cards;
      for (NodeId u : fam) fam_cards.push_back(net.states(u));
      const Table& home = cliques_[home_[v]];
      cpt_map_[v] = detail::index_map(home.vars, home.cards, fam, detail::strides_for(fam_cards));
    }
  }

  std::vector<Table> cliques_;
  std::vector<Separator> separators_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> parent_sep_;
  std::vector<std::size_t> home_;
  std::vector<std::vector<std::uint32_t>> cpt_map_;
  std::vector<std::size_t> evidence_clique_;
  std::vector<std::size_t> node_states_;
  std::vector<std::vector<NodeId>> node_parents_;
  std::size_t min_sep_ = npos;
};

/// Probability table over an ordered node list (last node fastest).
struct ProbabilityTable {
  std::vector<NodeId> nodes;
  std::vector<std::size_t> cards;
  std::vector<double> values;
};

struct CompressionReport {
  std::size_t uncompressed_size = 0;
  std::size_t compressed_size = 0;
  std::vector<std::size_t> clique_support;
  std::vector<std::size_t> separator_support;
};

/// A charge on a junction tree: clique and separator potentials whose ratio
/// represents g(x) up to the factor exp(log_scale).
///
/// Potentials are dense until compress() is called; afterwards tables at or
/// above the cutoff keep only their support. Evidence is recorded so it can
/// be retracted.
class Charge {
 public:
  struct Potential {
    std::vector<double> values;
    std::vector<std::uint32_t> cells;  // support cells when sparse
    bool sparse = false;

    std::size_t entries() const { return values.size(); }
    std::size_t cell(std::size_t j) const { return sparse ? cells[j] : j; }
  };

  Charge(std::shared_ptr<const JunctionTree> tree, const DiscreteNetwork& net) : tree_(std::move(tree)) {
    if (!tree_->matches(net)) throw ValidationError("network does not match the junction tree structure");
    cliques_.resize(tree_->clique_count());
    for (std::size_t c = 0; c < cliques_.size(); ++c) cliques_[c].values.assign(tree_->clique(c).cells, 1.0);
    separators_.resize(tree_->separator_count());
    for (std::size_t s = 0; s < separators_.size(); ++s)
      separators_[s].values.assign(tree_->separator(s).table.cells, 1.0);
    for (NodeId v = 0; v < net.size(); ++v) {
      const auto& cpt = net.cpt(v);
      const auto& map = tree_->cpt_map(v);
      auto& values = cliques_[tree_->home_clique(v)].values;
      for (std::size_t cell = 0; cell < values.size(); ++cell) values[cell] *= cpt[map[cell]];
    }
    base_ = std::make_shared<const Snapshot>(Snapshot{cliques_, separators_, 0.0, false});
  }

  const JunctionTree& tree() const { return *tree_; }
  std::shared_ptr<const JunctionTree> tree_ptr() const { return tree_; }
  bool canonical() const { return canonical_; }
  bool compressed() const { return static_cast<bool>(compressed_maps_); }
  double log_scale() const { return log_scale_; }
  const Potential& clique_potential(std::size_t c) const { return cliques_[c]; }
  const Potential& separator_potential(std::size_t s) const { return separators_[s]; }

  /// Multiplies likelihood evidence exp(log_scale) * lik into the smallest
  /// clique containing `node`.
  void enter_evidence(NodeId node, std::span<const double> likelihood, double log_scale = 0.0) {
    if (node >= tree_->node_count()) throw ValidationError("evidence on unknown node");
    if (likelihood.size() != tree_->node_states(node))
      throw ValidationError("evidence vector length does not match the node's state count");
    for (double l : likelihood)
      if (!(l >= 0.0)) throw ValidationError("evidence vector has a negative entry");
    EvidenceItem item{node, std::vector<double>(likelihood.begin(), likelihood.end()), log_scale};
    apply(item, false);
    evidence_.push_back(std::move(item));
  }

  /// Removes all evidence entered on `node` since the last compression.
  /// Strictly positive vectors are divided out; otherwise the charge is
  /// rebuilt from its base and the remaining evidence.
  void retract_evidence(NodeId node) {
    std::vector<EvidenceItem> keep, removed;
    for (auto& e : evidence_) (e.node == node ? removed : keep).push_back(std::move(e));
    evidence_ = std::move(keep);
    if (removed.empty()) return;
    const bool divisible = std::all_of(removed.begin(), removed.end(), [](const EvidenceItem& e) {
      return std::all_of(e.likelihood.begin(), e.likelihood.end(), [](double l) { return l > 0.0; });
    });
    if (divisible) {
      for (const auto& e : removed) apply(e, true);
      return;
    }
    restore();
  }

  void retract_all_evidence() {
    evidence_.clear();
    restore();
  }

  std::size_t evidence_count() const { return evidence_.size(); }

  /// Two-phase propagation to canonical form; returns the normalizing
  /// constant. Throws ImpossibleEvidence when the charge has zero mass.
  LogScalar propagate() {
    const auto& order = tree_->order();
    if (order.empty()) {
      canonical_ = true;
      return {1.0, log_scale_};
    }
    for (std::size_t i = order.size(); i-- > 1;) {
      const std::size_t c = order[i];
      const std::size_t s = tree_->parent_separator(c);
      rescale(cliques_[c]);
      pass(c, s);
    }
    auto& root = cliques_[order[0]];
    double z = 0.0;
    for (double v : root.values) z += v;
    if (!(z > 0.0) || !std::isfinite(z)) {
      canonical_ = false;
      throw ImpossibleEvidence();
    }
    for (double& v : root.values) v /= z;
    log_scale_ += std::log(z);
    for (std::size_t i = 1; i < order.size(); ++i) {
      const std::size_t c = order[i];
      const std::size_t s = tree_->parent_separator(c);
      const auto& sep = tree_->separator(s);
      pass(sep.left == c ? sep.right : sep.left, s);
    }
    canonical_ = true;
    return normalizing_constant();
  }

  /// Normalizing constant read from the smallest separator (first in edge
  /// order on ties); the root clique when the tree has no separators.
  LogScalar normalizing_constant() const {
    require_canonical();
    const std::size_t s = tree_->minimal_separator();
    const auto& values = s == JunctionTree::npos ? cliques_[tree_->order()[0]].values : separators_[s].values;
    double sum = 0.0;
    for (double v : values) sum += v;
    if (tree_->order().empty()) sum = 1.0;
    return {sum, log_scale_};
  }

  /// Normalized marginal over `nodes` (in the given order); the nodes must
  /// share a clique.
  ProbabilityTable marginal(std::span<const NodeId> nodes) const {
    require_canonical();
    ProbabilityTable out;
    out.nodes.assign(nodes.begin(), nodes.end());
    for (NodeId v : nodes) out.cards.push_back(tree_->node_states(v));
    const auto out_strides = detail::strides_for(out.cards);
    std::size_t cells = 1;
    for (std::size_t c : out.cards) cells *= c;
    out.values.assign(cells, 0.0);
    if (tree_->clique_count() == 0) {
      if (!nodes.empty()) throw ValidationError("marginal requested on an empty tree");
      out.values[0] = 1.0;
      return out;
    }
    const std::size_t c = tree_->covering_clique(nodes);
    if (c == JunctionTree::npos) throw ValidationError("marginal node set is not contained in any clique");
    const auto& table = tree_->clique(c);
    std::vector<std::size_t> stride(nodes.size()), card(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const auto pos = static_cast<std::size_t>(std::find(table.vars.begin(), table.vars.end(), nodes[j]) -
                                                table.vars.begin());
      stride[j] = table.strides[pos];
      card[j] = table.cards[pos];
    }
    const auto& pot = cliques_[c];
    double total = 0.0;
    for (std::size_t e = 0; e < pot.entries(); ++e) {
      const std::size_t cell = pot.cell(e);
      std::size_t idx = 0;
      for (std::size_t j = 0; j < nodes.size(); ++j) idx += ((cell / stride[j]) % card[j]) * out_strides[j];
      out.values[idx] += pot.values[e];
      total += pot.values[e];
    }
    if (total > 0.0)
      for (double& v : out.values) v /= total;
    return out;
  }

  /// E[h(X_nodes)] under the charge's normalized distribution.
  double expectation(std::span<const NodeId> nodes, std::span<const double> factor) const {
    const auto m = marginal(nodes);
    if (factor.size() != m.values.size()) throw ValidationError("factor size does not match the node set");
    double e = 0.0;
    for (std::size_t i = 0; i < factor.size(); ++i) e += m.values[i] * factor[i];
    return e;
  }

  /// Exact joint draw of every node, clique by clique from the root.
  template <class Rng>
  std::vector<std::size_t> sample(Rng& rng) const {
    require_canonical();
    std::vector<std::size_t> state(tree_->node_count(), 0);
    const auto& order = tree_->order();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < order.size(); ++i) {
      const std::size_t c = order[i];
      const auto& table = tree_->clique(c);
      const auto& pot = cliques_[c];
      std::vector<std::size_t> candidates;
      double total = 0.0;
      if (i == 0) {
        candidates.resize(pot.entries());
        std::iota(candidates.begin(), candidates.end(), 0);
        for (double v : pot.values) total += v;
      } else {
        const std::size_t s = tree_->parent_separator(c);
        const auto& sep = tree_->separator(s);
        std::size_t sep_cell = 0;
        for (std::size_t j = 0; j < sep.table.vars.size(); ++j) sep_cell += state[sep.table.vars[j]] * sep.table.strides[j];
        const auto& map = sep.left == c ? sep.left_map : sep.right_map;
        for (std::size_t e = 0; e < pot.entries(); ++e)
          if (map[pot.cell(e)] == sep_cell && pot.values[e] > 0.0) {
            candidates.push_back(e);
            total += pot.values[e];
          }
      }
      if (!(total > 0.0)) throw NumericalError("sampling from a clique with zero mass");
      double u = unif(rng) * total;
      std::size_t pick = candidates.back();
      for (std::size_t e : candidates) {
        u -= pot.values[e];
        if (u < 0.0) {
          pick = e;
          break;
        }
      }
      const std::size_t cell = pot.cell(pick);
      for (std::size_t j = 0; j < table.vars.size(); ++j)
        state[table.vars[j]] = (cell / table.strides[j]) % table.cards[j];
    }
    return state;
  }

  std::vector<std::size_t> sample_configuration(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    return sample(rng);
  }

  /// Drops zero cells of every table with at least `dense_cutoff` cells.
  /// Requires a propagated charge. Evidence present at this point becomes
  /// part of the base charge and can no longer be retracted.
  CompressionReport compress(std::size_t dense_cutoff = 4096) {
    require_canonical();
    CompressionReport report;
    auto squeeze = [&](Potential& pot, std::size_t cells) {
      std::size_t support = 0;
      for (std::size_t e = 0; e < pot.entries(); ++e)
        if (pot.values[e] != 0.0) ++support;
      report.uncompressed_size += cells;
      report.compressed_size += support;
      if (cells >= dense_cutoff && !pot.sparse) {
        Potential sparse;
        sparse.sparse = true;
        sparse.values.reserve(support);
        sparse.cells.reserve(support);
        for (std::size_t e = 0; e < pot.entries(); ++e)
          if (pot.values[e] != 0.0) {
            sparse.values.push_back(pot.values[e]);
            sparse.cells.push_back(static_cast<std::uint32_t>(pot.cell(e)));
          }
        pot = std::move(sparse);
      }
      return support;
    };
    for (std::size_t c = 0; c < cliques_.size(); ++c)
      report.clique_support.push_back(squeeze(cliques_[c], tree_->clique(c).cells));
    for (std::size_t s = 0; s < separators_.size(); ++s)
      report.separator_support.push_back(squeeze(separators_[s], tree_->separator(s).table.cells));

    auto maps = std::make_shared<std::vector<EntryMaps>>(separators_.size());
    for (std::size_t s = 0; s < separators_.size(); ++s) {
      const auto& sep = tree_->separator(s);
      (*maps)[s].left = entry_map(cliques_[sep.left], sep.left_map, separators_[s]);
      (*maps)[s].right = entry_map(cliques_[sep.right], sep.right_map, separators_[s]);
    }
    compressed_maps_ = std::move(maps);
    evidence_.clear();
    base_ = std::make_shared<const Snapshot>(Snapshot{cliques_, separators_, log_scale_, canonical_});
    return report;
  }

  /// Current number of stored potential entries.
  std::size_t stored_size() const {
    std::size_t n = 0;
    for (const auto& p : cliques_) n += p.entries();
    for (const auto& p : separators_) n += p.entries();
    return n;
  }

  /// Clique potential expanded to a dense table (zeros off the support).
  std::vector<double> dense_clique(std::size_t c) const {
    std::vector<double> dense(tree_->clique(c).cells, 0.0);
    const auto& pot = cliques_[c];
    for (std::size_t e = 0; e < pot.entries(); ++e) dense[pot.cell(e)] = pot.values[e];
    return dense;
  }

  std::vector<double> dense_separator(std::size_t s) const {
    std::vector<double> dense(tree_->separator(s).table.cells, 0.0);
    const auto& pot = separators_[s];
    for (std::size_t e = 0; e < pot.entries(); ++e) dense[pot.cell(e)] = pot.values[e];
    return dense;
  }

 private:
  struct EvidenceItem {
    NodeId node;
    std::vector<double> likelihood;
    double log_scale;
  };
  struct Snapshot {
    std::vector<Potential> cliques;
    std::vector<Potential> separators;
    double log_scale;
    bool canonical;
  };
  struct EntryMaps {
    std::vector<std::uint32_t> left, right;  // clique entry -> separator entry
  };

  void require_canonical() const {
    if (!canonical_) throw ValidationError("charge is not canonical; propagate first");
  }

  static std::vector<std::uint32_t> entry_map(const Potential& clique, const std::vector<std::uint32_t>& cell_map,
                                              const Potential& sep) {
    std::vector<std::uint32_t> out(clique.entries());
    for (std::size_t e = 0; e < clique.entries(); ++e) {
      const std::uint32_t sep_cell = cell_map[clique.cell(e)];
      if (!sep.sparse) {
        out[e] = sep_cell;
        continue;
      }
      auto it = std::lower_bound(sep.cells.begin(), sep.cells.end(), sep_cell);
      if (it == sep.cells.end() || *it != sep_cell)
        throw NumericalError("clique support is not covered by its separator support");
      out[e] = static_cast<std::uint32_t>(it - sep.cells.begin());
    }
    return out;
  }

  const std::vector<std::uint32_t>& map_for(std::size_t s, std::size_t clique) const {
    const auto& sep = tree_->separator(s);
    if (compressed_maps_) return sep.left == clique ? (*compressed_maps_)[s].left : (*compressed_maps_)[s].right;
    return sep.left == clique ? sep.left_map : sep.right_map;
  }

  void rescale(Potential& pot) {
    double mx = 0.0;
    for (double v : pot.values) mx = std::max(mx, v);
    if (mx > 0.0 && mx != 1.0 && std::isfinite(mx)) {
      for (double& v : pot.values) v /= mx;
      log_scale_ += std::log(mx);
    }
  }

  // Hugin update: message from clique `from` through separator `s`.
  void pass(std::size_t from, std::size_t s) {
    const auto& sep = tree_->separator(s);
    const std::size_t to = sep.left == from ? sep.right : sep.left;
    const auto& from_map = map_for(s, from);
    const auto& to_map = map_for(s, to);
    auto& old_sep = separators_[s].values;
    std::vector<double> fresh(old_sep.size(), 0.0);
    const auto& src = cliques_[from].values;
    for (std::size_t e = 0; e < src.size(); ++e) fresh[from_map[e]] += src[e];
    std::vector<double> ratio(fresh.size());
    for (std::size_t r = 0; r < fresh.size(); ++r) ratio[r] = old_sep[r] == 0.0 ? 0.0 : fresh[r] / old_sep[r];
    auto& dst = cliques_[to].values;
    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] *= ratio[to_map[e]];
    old_sep = std::move(fresh);
  }

  void apply(const EvidenceItem& item, bool divide) {
    if (tree_->clique_count() == 0) return;
    const std::size_t c = tree_->evidence_clique(item.node);
    const auto& table = tree_->clique(c);
    const auto pos = static_cast<std::size_t>(std::find(table.vars.begin(), table.vars.end(), item.node) -
                                              table.vars.begin());
    const std::size_t stride = table.strides[pos], card = table.cards[pos];
    double mx = 0.0;
    for (double l : item.likelihood) mx = std::max(mx, l);
    std::vector<double> scaled(item.likelihood.size(), 0.0);
    if (mx > 0.0)
      for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = item.likelihood[i] / mx;
    auto& pot = cliques_[c];
    for (std::size_t e = 0; e < pot.entries(); ++e) {
      const double l = scaled[(pot.cell(e) / stride) % card];
      if (divide)
        pot.values[e] = l == 0.0 ? 0.0 : pot.values[e] / l;
      else
        pot.values[e] *= l;
    }
    const double shift = (mx > 0.0 ? std::log(mx) : 0.0) + item.log_scale;
    log_scale_ += divide ? -shift : shift;
    canonical_ = false;
  }

  void restore() {
    cliques_ = base_->cliques;
    separators_ = base_->separators;
    log_scale_ = base_->log_scale;
    canonical_ = base_->canonical;
    for (const auto& e : evidence_) apply(e, false);
  }

  std::shared_ptr<const JunctionTree> tree_;
  std::vector<Potential> cliques_;
  std::vector<Potential> separators_;
  double log_scale_ = 0.0;
  bool canonical_ = false;
  std::vector<EvidenceItem> evidence_;
  std::shared_ptr<const Snapshot> base_;
  std::shared_ptr<const std::vector<EntryMaps>> compressed_maps_;
};

inline Charge initialize_charge(const DiscreteNetwork& net, std::shared_ptr<const JunctionTree> tree) {
  return Charge(std::move(tree), net);
}

inline Charge initialize_charge(const DiscreteNetwork& net, const CliqueTreeSpec& spec) {
  return Charge(JunctionTree::compile(net, spec), net);
}

/// Tree with a single clique holding every node.
inline CliqueTreeSpec single_clique_tree(const DiscreteNetwork& net) {
  CliqueTreeSpec spec;
  std::vector<NodeId> all(net.size());
  std::iota(all.begin(), all.end(), 0);
  if (!all.empty()) spec.add_clique(std::move(all));
  return spec;
}

/// E[prod_{B in subset} h_B(X_B)] via auxiliary children and the ratio of
/// normalizing constants before and after evidence (0, k_B) on each Y^B.
///
/// `base_tree` is a junction tree for `net`; every spec's parent set must lie
/// in one of its cliques. Without it a single clique over all nodes is used.
inline LogScalar expectation_of_product(const DiscreteNetwork& net, std::span<const AuxVariableSpec> specs,
                                        std::span<const std::size_t> subset,
                                        const CliqueTreeSpec* base_tree = nullptr) {
  DiscreteNetwork extended = net;
  CliqueTreeSpec spec = base_tree ? *base_tree : single_clique_tree(net);
  std::vector<NodeId> aux_nodes;
  std::vector<double> scales;
  for (const auto& s : specs) {
    const NodeId y = attach_aux_variable(extended, s);
    aux_nodes.push_back(y);
    scales.push_back(aux_scale(s));
    attach_aux_clique(spec, extended, y);
  }
  Charge charge = initialize_charge(extended, spec);
  LogScalar n1;
  try {
    n1 = charge.propagate();
  } catch (const ImpossibleEvidence&) {
    throw NumericalError("base charge has zero mass");
  }
  for (std::size_t b : subset) {
    if (b >= specs.size()) throw ValidationError("subset index out of range");
    const double lik[2] = {0.0, 1.0};
    charge.enter_evidence(aux_nodes[b], lik, std::log(scales[b]));
  }
  try {
    return charge.propagate() / n1;
  } catch (const ImpossibleEvidence&) {
    return LogScalar::zero();
  }
}

}  // namespace dnamix

#endif  // DNAMIX_JUNCTION_TREE_HPP
