#ifndef DNAMIX_NETWORK_HPP
#define DNAMIX_NETWORK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnamix/errors.hpp"

namespace dnamix {

using NodeId = std::size_t;

enum class NodeKind { chance, auxiliary };

/// Directed acyclic network of finite-state nodes.
///
/// Nodes are appended in topological order: a node's parents must already
/// exist when it is added, so the graph is acyclic by construction. The CPT
/// of a node is stored row-major over (parent configuration, node state),
/// with parent configurations in mixed radix where the last parent varies
/// fastest.
class DiscreteNetwork {
 public:
  struct Node {
    std::string name;
    std::size_t states = 0;
    std::vector<NodeId> parents;
    std::vector<double> cpt;
    NodeKind kind = NodeKind::chance;
  };

  static constexpr double row_tolerance = 1e-12;

  NodeId add_node(std::string name, std::size_t states, std::vector<NodeId> parents,
                  std::vector<double> cpt, NodeKind kind = NodeKind::chance) {
    if (states == 0) throw ValidationError("node '" + name + "' has no states");
    for (NodeId p : parents) {
      if (p >= nodes_.size())
        throw ValidationError("node '" + name + "' references a parent that does not exist");
      if (nodes_[p].kind == NodeKind::auxiliary)
        throw ValidationError("auxiliary node '" + nodes_[p].name + "' cannot have children");
    }
    for (std::size_t i = 0; i < parents.size(); ++i)
      for (std::size_t j = i + 1; j < parents.size(); ++j)
        if (parents[i] == parents[j])
          throw ValidationError("node '" + name + "' lists a parent twice");
    if (kind == NodeKind::auxiliary && states != 2)
      throw ValidationError("auxiliary node '" + name + "' must be binary");

    Node node{std::move(name), states, std::move(parents), {}, kind};
    nodes_.push_back(std::move(node));
    try {
      set_cpt(nodes_.size() - 1, std::move(cpt));
    } catch (...) {
      nodes_.pop_back();
      throw;
    }
    return nodes_.size() - 1;
  }

  void set_cpt(NodeId id, std::vector<double> cpt) {
    Node& node = nodes_.at(id);
    const std::size_t rows = parent_configurations(id);
    if (cpt.size() != rows * node.states)
      throw ValidationError("CPT of node '" + node.name + "' has wrong size");
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t s = 0; s < node.states; ++s) {
        const double v = cpt[r * node.states + s];
        if (!(v >= 0.0)) throw ValidationError("CPT of node '" + node.name + "' has a negative entry");
        sum += v;
      }
      if (std::abs(sum - 1.0) > row_tolerance)
        throw ValidationError("CPT row of node '" + node.name + "' does not sum to 1");
    }
    node.cpt = std::move(cpt);
  }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t states(NodeId id) const { return nodes_.at(id).states; }
  const std::vector<NodeId>& parents(NodeId id) const { return nodes_.at(id).parents; }
  const std::vector<double>& cpt(NodeId id) const { return nodes_.at(id).cpt; }
  const std::string& name(NodeId id) const { return nodes_.at(id).name; }
  bool is_auxiliary(NodeId id) const { return nodes_.at(id).kind == NodeKind::auxiliary; }

  std::size_t parent_configurations(NodeId id) const {
    std::size_t rows = 1;
    for (NodeId p : nodes_.at(id).parents) rows *= nodes_[p].states;
    return rows;
  }

  /// Family = parents followed by the node itself, the CPT's variable order.
  std::vector<NodeId> family(NodeId id) const {
    std::vector<NodeId> fam = nodes_.at(id).parents;
    fam.push_back(id);
    return fam;
  }

  /// True when both networks have the same nodes, states and parents.
  bool same_structure(const DiscreteNetwork& other) const {
    if (nodes_.size() != other.nodes_.size()) return false;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].states != other.nodes_[i].states || nodes_[i].parents != other.nodes_[i].parents ||
          nodes_[i].kind != other.nodes_[i].kind)
        return false;
    return true;
  }

 private:
  std::vector<Node> nodes_;
};

/// A factor h_B over the parent set B, with the scaling constant k_B.
///
/// The auxiliary child Y^B gets P(Y^B = 1 | x_B) = h_B(x_B) / k_B. When no
/// scale is given the largest value of h_B is used.
struct AuxVariableSpec {
  std::vector<NodeId> parents;
  std::vector<double> factor;
  std::optional<double> scale;
  std::string name;
};

/// Resolved k_B for a spec (explicit scale or max of the factor).
inline double aux_scale(const AuxVariableSpec& spec) {
  if (spec.scale) return *spec.scale;
  double k = 0.0;
  for (double h : spec.factor) k = std::max(k, h);
  return k > 0.0 ? k : 1.0;
}

/// Rows (1 - p, p) for a vector of success probabilities.
inline std::vector<double> binary_cpt(std::span<const double> p_one) {
  std::vector<double> cpt;
  cpt.reserve(2 * p_one.size());
  for (double p : p_one) {
    cpt.push_back(1.0 - p);
    cpt.push_back(p);
  }
  return cpt;
}

/// Binary CPT from both columns; use when P(Y = 0) is tiny and 1 - P(Y = 1)
/// would cancel.
inline std::vector<double> binary_cpt(std::span<const double> p_zero, std::span<const double> p_one) {
  if (p_zero.size() != p_one.size()) throw ValidationError("binary CPT columns differ in length");
  std::vector<double> cpt;
  cpt.reserve(2 * p_one.size());
  for (std::size_t r = 0; r < p_one.size(); ++r) {
    cpt.push_back(p_zero[r]);
    cpt.push_back(p_one[r]);
  }
  return cpt;
}

inline NodeId attach_aux_variable(DiscreteNetwork& net, const AuxVariableSpec& spec) {
  std::size_t rows = 1;
  for (NodeId p : spec.parents) {
    if (p >= net.size()) throw ValidationError("auxiliary parent does not exist");
    rows *= net.states(p);
  }
  if (spec.factor.size() != rows)
    throw ValidationError("auxiliary factor size does not match the parent state space");
  const double k = aux_scale(spec);
  if (!(k > 0.0)) throw ValidationError("auxiliary scaling constant must be positive");

  std::vector<double> p_one(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double h = spec.factor[r];
    if (!(h >= 0.0)) throw ValidationError("auxiliary factor has a negative entry");
    double p = h / k;
    if (p > 1.0 + 1e-12) throw ValidationError("auxiliary factor exceeds its scaling constant");
    p_one[r] = std::min(p, 1.0);
  }
  std::string name = spec.name.empty() ? "Y" + std::to_string(net.size()) : spec.name;
  return net.add_node(std::move(name), 2, spec.parents, binary_cpt(p_one), NodeKind::auxiliary);
}

}  // namespace dnamix

#endif  // DNAMIX_NETWORK_HPP
