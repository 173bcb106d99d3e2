#ifndef DNAMIX_MIXTURE_NETWORK_HPP
#define DNAMIX_MIXTURE_NETWORK_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dnamix/errors.hpp"
#include "dnamix/junction_tree.hpp"
#include "dnamix/network.hpp"

namespace dnamix {

/// Alleles of one marker in increasing repeat order, with population
/// frequencies. Allele a receives stutter from allele a + 1.
struct AlleleLadder {
  std::string marker;
  std::vector<std::string> labels;
  std::vector<double> frequencies;

  std::size_t size() const { return frequencies.size(); }

  void validate() const {
    if (frequencies.empty()) throw ValidationError("marker " + marker + " has no alleles");
    if (labels.size() != frequencies.size()) throw ValidationError("marker " + marker + ": label count mismatch");
    double sum = 0.0;
    for (double q : frequencies) {
      if (!(q > 0.0)) throw ValidationError("marker " + marker + ": allele frequencies must be positive");
      sum += q;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("marker " + marker + ": frequencies do not sum to 1");
  }

  std::optional<std::size_t> index_of(const std::string& label) const {
    for (std::size_t a = 0; a < labels.size(); ++a)
      if (labels[a] == label) return a;
    return std::nullopt;
  }
};

/// Node ids of one contributor's allele counts n_a and partial sums S_a.
struct GenotypeChain {
  std::string tag;
  std::vector<NodeId> counts;
  std::vector<NodeId> partial_sums;
};

inline std::vector<double> binomial_pmf(std::size_t trials, double p) {
  std::vector<double> pmf(trials + 1, 0.0);
  for (std::size_t x = 0; x <= trials; ++x) {
    double c = 1.0;
    for (std::size_t i = 0; i < x; ++i) c = c * static_cast<double>(trials - i) / static_cast<double>(i + 1);
    pmf[x] = c * std::pow(p, static_cast<double>(x)) * std::pow(1.0 - p, static_cast<double>(trials - x));
  }
  return pmf;
}

/// Appends the Markov chain for one genotype: n_1 ~ Bin(2, q_1), and for
/// a >= 2, n_a | S_{a-1} ~ Bin(2 - S_{a-1}, q_a / sum_{b>=a} q_b), with
/// S_a = S_{a-1} + n_a. All count and partial-sum nodes have states {0,1,2}.
inline GenotypeChain build_genotype_chain(DiscreteNetwork& net, const AlleleLadder& ladder, const std::string& tag) {
  ladder.validate();
  const std::size_t A = ladder.size();
  std::vector<double> tail(A + 1, 0.0);
  for (std::size_t a = A; a-- > 0;) tail[a] = tail[a + 1] + ladder.frequencies[a];

  GenotypeChain chain;
  chain.tag = tag;
  for (std::size_t a = 0; a < A; ++a) {
    if (!(tail[a] > 0.0)) throw ValidationError("allele tail frequency is zero");
    const double p = a + 1 == A ? 1.0 : std::min(1.0, ladder.frequencies[a] / tail[a]);
    const std::string suffix = tag + "," + ladder.labels[a];
    if (a == 0) {
      const NodeId n = net.add_node("n[" + suffix + "]", 3, {}, binomial_pmf(2, p));
      std::vector<double> sum_cpt(9, 0.0);  // S_1 = n_1
      for (std::size_t x = 0; x < 3; ++x) sum_cpt[x * 3 + x] = 1.0;
      const NodeId s = net.add_node("S[" + suffix + "]", 3, {n}, std::move(sum_cpt));
      chain.counts.push_back(n);
      chain.partial_sums.push_back(s);
      continue;
    }
    const NodeId prev = chain.partial_sums.back();
    std::vector<double> count_cpt(9, 0.0);
    for (std::size_t s = 0; s < 3; ++s) {
      const auto pmf = binomial_pmf(2 - s, p);
      for (std::size_t x = 0; x < pmf.size(); ++x) count_cpt[s * 3 + x] = pmf[x];
    }
    const NodeId n = net.add_node("n[" + suffix + "]", 3, {prev}, std::move(count_cpt));
    // S_a | S_{a-1}, n_a is deterministic; impossible sums > 2 map to 2.
    std::vector<double> sum_cpt(27, 0.0);
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t x = 0; x < 3; ++x) sum_cpt[(s * 3 + x) * 3 + std::min<std::size_t>(s + x, 2)] = 1.0;
    const NodeId next = net.add_node("S[" + suffix + "]", 3, {prev, n}, std::move(sum_cpt));
    chain.counts.push_back(n);
    chain.partial_sums.push_back(next);
  }
  return chain;
}

/// Per-marker network: one genotype chain per unknown contributor and
/// `slots` binary auxiliary variables per allele. Slot nodes for allele a
/// have parents (n_{1a},...,n_{ka}, n_{1,a+1},...,n_{k,a+1}); the last
/// allele's slots have parents (n_{1A},...,n_{kA}). Until a slot's CPT is
/// bound it carries P(Y = 1 | .) = 1/2.
///
/// Known contributors do not appear as nodes; their allele counts are kept
/// here and enter the auxiliary CPTs as constant offsets.
struct MarkerNetwork {
  AlleleLadder ladder;
  DiscreteNetwork network;
  std::vector<GenotypeChain> chains;
  std::vector<std::vector<int>> known_counts;
  std::size_t slots_per_allele = 0;
  std::vector<std::vector<NodeId>> slot_nodes;  // [allele][slot]

  std::size_t alleles() const { return ladder.size(); }
  std::size_t unknowns() const { return chains.size(); }
  std::size_t slots() const { return slots_per_allele; }

  std::vector<NodeId> slot_parents(std::size_t allele) const {
    std::vector<NodeId> parents;
    for (const auto& c : chains) parents.push_back(c.counts[allele]);
    if (allele + 1 < alleles())
      for (const auto& c : chains) parents.push_back(c.counts[allele + 1]);
    return parents;
  }

  /// Counts of the unknown contributors decoded from a parent configuration
  /// index of a slot at `allele`: {n_a per unknown, n_{a+1} per unknown}.
  std::pair<std::vector<int>, std::vector<int>> decode_slot_configuration(std::size_t allele,
                                                                          std::size_t config) const {
    const std::size_t k = unknowns();
    const bool has_next = allele + 1 < alleles();
    const std::size_t digits = has_next ? 2 * k : k;
    std::vector<int> d(digits);
    for (std::size_t j = digits; j-- > 0;) {
      d[j] = static_cast<int>(config % 3);
      config /= 3;
    }
    std::vector<int> here(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<int> next(k, 0);
    if (has_next) next.assign(d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    return {std::move(here), std::move(next)};
  }

  std::size_t slot_configurations(std::size_t allele) const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < slot_parents(allele).size(); ++i) n *= 3;
    return n;
  }

  /// Bind P(Y = 1 | parent configuration) for one slot.
  void bind_slot(DiscreteNetwork& target, std::size_t allele, std::size_t slot, std::span<const double> p_one) const {
    target.set_cpt(slot_nodes.at(allele).at(slot), binary_cpt(p_one));
  }
};

inline MarkerNetwork build_marker_network(const AlleleLadder& ladder, std::size_t unknowns,
                                          const std::vector<std::vector<int>>& known_profiles,
                                          std::size_t slots_per_allele,
                                          const std::vector<std::string>& unknown_tags = {}) {
  ladder.validate();
  const std::size_t A = ladder.size();
  for (const auto& profile : known_profiles) {
    if (profile.size() != A) throw ValidationError("known profile allele vector does not match the ladder of " + ladder.marker);
    int sum = 0;
    for (int c : profile) {
      if (c < 0 || c > 2) throw ValidationError("known profile count out of range at " + ladder.marker);
      sum += c;
    }
    if (sum != 2) throw ValidationError("known profile counts do not sum to 2 at " + ladder.marker);
  }
  MarkerNetwork m;
  m.ladder = ladder;
  m.known_counts = known_profiles;
  m.slots_per_allele = slots_per_allele;
  for (std::size_t i = 0; i < unknowns; ++i) {
    const std::string tag = i < unknown_tags.size() ? unknown_tags[i] : "U" + std::to_string(i + 1);
    m.chains.push_back(build_genotype_chain(m.network, ladder, tag));
  }
  m.slot_nodes.resize(A);
  for (std::size_t a = 0; a < A; ++a) {
    const auto parents = m.slot_parents(a);
    const std::size_t rows = m.slot_configurations(a);
    const std::vector<double> half(rows, 0.5);
    for (std::size_t s = 0; s < slots_per_allele; ++s)
      m.slot_nodes[a].push_back(m.network.add_node("Y[" + ladder.labels[a] + "," + std::to_string(s) + "]", 2,
                                                   parents, binary_cpt(half), NodeKind::auxiliary));
  }
  return m;
}

enum class TreeMethod { slice, triangle, optimal, allele_pair };

inline const char* to_string(TreeMethod m) {
  switch (m) {
    case TreeMethod::slice: return "slice";
    case TreeMethod::triangle: return "triangle";
    case TreeMethod::optimal: return "optimal";
    case TreeMethod::allele_pair: return "allele-pair";
  }
  return "?";
}

inline TreeMethod parse_tree_method(const std::string& s) {
  if (s == "slice") return TreeMethod::slice;
  if (s == "triangle") return TreeMethod::triangle;
  if (s == "optimal") return TreeMethod::optimal;
  if (s == "allele-pair" || s == "allele_pair") return TreeMethod::allele_pair;
  throw ValidationError("unknown tree method '" + s + "'");
}

struct BuiltTree {
  CliqueTreeSpec spec;
  TreeMethod method = TreeMethod::slice;  // construction actually used
  bool fell_back = false;
};

namespace detail {

// Joins every slot clique to the genotype tree. `host_for(a)` names the
// genotype clique containing n_a and n_{a+1}; the last allele's slots hang
// off the first slot clique of the previous allele.
template <class HostFn>
void attach_slots(CliqueTreeSpec& spec, const MarkerNetwork& m, HostFn host_for) {
  const std::size_t A = m.alleles();
  std::optional<std::size_t> first_slot_clique_prev;
  std::optional<std::size_t> chain_root;
  for (std::size_t a = 0; a < A; ++a) {
    std::optional<std::size_t> first_here;
    for (std::size_t s = 0; s < m.slots(); ++s) {
      std::optional<std::size_t> host;
      if (m.unknowns() == 0) {
        host = chain_root;  // empty separators
      } else if (a + 1 < A) {
        host = host_for(a);
      } else {
        host = first_slot_clique_prev ? first_slot_clique_prev : std::optional<std::size_t>(host_for(a));
      }
      const std::size_t c = attach_aux_clique(spec, m.network, m.slot_nodes[a][s], host);
      if (!chain_root) chain_root = c;
      if (!first_here) first_here = c;
    }
    first_slot_clique_prev = first_here;
  }
}

inline std::vector<NodeId> collect(const MarkerNetwork& m, std::size_t allele, bool counts, bool sums) {
  std::vector<NodeId> out;
  for (const auto& c : m.chains) {
    if (sums) out.push_back(c.partial_sums[allele]);
    if (counts) out.push_back(c.counts[allele]);
  }
  return out;
}

inline std::vector<NodeId> join(std::vector<NodeId> a, const std::vector<NodeId>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace detail

/// Slice tree: cliques {S_a, S_{a+1}, n_a, n_{a+1}} over all unknowns for
/// a = 1..A-1 in a chain.
inline CliqueTreeSpec build_tree_slice(const MarkerNetwork& m) {
  CliqueTreeSpec spec;
  const std::size_t A = m.alleles();
  std::vector<std::size_t> slice(A, 0);
  if (m.unknowns() > 0) {
    if (A == 1) {
      slice[0] = spec.add_clique(detail::collect(m, 0, true, true));
    }
    for (std::size_t a = 0; a + 1 < A; ++a) {
      std::vector<NodeId> nodes;
      for (const auto& c : m.chains) {
        nodes.push_back(c.partial_sums[a]);
        nodes.push_back(c.partial_sums[a + 1]);
        nodes.push_back(c.counts[a]);
        nodes.push_back(c.counts[a + 1]);
      }
      slice[a] = spec.add_clique(std::move(nodes));
      if (a > 0) spec.connect(slice[a - 1], slice[a]);
    }
    if (A >= 2) slice[A - 1] = slice[A - 2];
  }
  detail::attach_slots(spec, m, [&](std::size_t a) { return slice[a]; });
  return spec;
}

/// Triangle tree: each slice split into the lower triangle
/// {S_a, n_a, n_{a+1}} and the upper triangle {S_a, S_{a+1}, n_{a+1}}.
inline CliqueTreeSpec build_tree_triangle(const MarkerNetwork& m) {
  CliqueTreeSpec spec;
  const std::size_t A = m.alleles();
  std::vector<std::size_t> lower(A, 0);
  if (m.unknowns() > 0) {
    if (A == 1) lower[0] = spec.add_clique(detail::collect(m, 0, true, true));
    std::optional<std::size_t> prev_upper;
    for (std::size_t a = 0; a + 1 < A; ++a) {
      std::vector<NodeId> low, up;
      for (const auto& c : m.chains) {
        low.insert(low.end(), {c.partial_sums[a], c.counts[a], c.counts[a + 1]});
        up.insert(up.end(), {c.partial_sums[a], c.partial_sums[a + 1], c.counts[a + 1]});
      }
      lower[a] = spec.add_clique(std::move(low));
      const std::size_t u = spec.add_clique(std::move(up));
      if (prev_upper) spec.connect(*prev_upper, lower[a]);
      spec.connect(lower[a], u);
      prev_upper = u;
    }
    if (A >= 2) lower[A - 1] = lower[A - 2];
  }
  detail::attach_slots(spec, m, [&](std::size_t a) { return lower[a]; });
  return spec;
}

/// Split tree: triangle tree with every upper-triangle clique split into k
/// cliques of 2k + 1 nodes, the j-th holding the full upper triangle of
/// contributor j, {S_{a+1}, n_{a+1}} for contributors before j and
/// {S_a, n_{a+1}} for contributors after j. Needs A >= 3; smaller ladders
/// fall back to the triangle tree.
inline BuiltTree build_tree_optimal(const MarkerNetwork& m) {
  const std::size_t A = m.alleles();
  if (A < 3) return {build_tree_triangle(m), TreeMethod::triangle, true};
  CliqueTreeSpec spec;
  const std::size_t k = m.unknowns();
  std::vector<std::size_t> lower(A, 0);
  if (k > 0) {
    std::optional<std::size_t> prev;
    for (std::size_t a = 0; a + 1 < A; ++a) {
      std::vector<NodeId> low;
      for (const auto& c : m.chains) low.insert(low.end(), {c.partial_sums[a], c.counts[a], c.counts[a + 1]});
      lower[a] = spec.add_clique(std::move(low));
      if (prev) spec.connect(*prev, lower[a]);
      prev = lower[a];
      for (std::size_t j = 0; j < k; ++j) {
        std::vector<NodeId> part;
        for (std::size_t i = 0; i < k; ++i) {
          const auto& c = m.chains[i];
          if (i < j)
            part.insert(part.end(), {c.partial_sums[a + 1], c.counts[a + 1]});
          else if (i == j)
            part.insert(part.end(), {c.partial_sums[a], c.partial_sums[a + 1], c.counts[a + 1]});
          else
            part.insert(part.end(), {c.partial_sums[a], c.counts[a + 1]});
        }
        const std::size_t u = spec.add_clique(std::move(part));
        spec.connect(*prev, u);
        prev = u;
      }
    }
    lower[A - 1] = lower[A - 2];
  }
  detail::attach_slots(spec, m, [&](std::size_t a) { return lower[a]; });
  return {std::move(spec), TreeMethod::optimal, false};
}

inline BuiltTree build_tree(const MarkerNetwork& m, TreeMethod method) {
  switch (method) {
    case TreeMethod::slice: return {build_tree_slice(m), TreeMethod::slice, false};
    case TreeMethod::triangle: return {build_tree_triangle(m), TreeMethod::triangle, false};
    case TreeMethod::optimal: return build_tree_optimal(m);
    case TreeMethod::allele_pair: break;
  }
  throw ValidationError("allele-pair networks are sized but not built");
}

// ---- total sizes ----------------------------------------------------------

using BigCount = unsigned __int128;

inline std::string to_string(BigCount v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

inline BigCount ipow(BigCount base, std::size_t e) {
  BigCount r = 1;
  for (std::size_t i = 0; i < e; ++i) {
    if (base != 0 && r > static_cast<BigCount>(-1) / base) throw std::overflow_error("tree size overflows 128 bits");
    r *= base;
  }
  return r;
}

struct TreeSizeReport {
  TreeMethod method = TreeMethod::slice;
  std::size_t alleles = 0, unknowns = 0, slots = 0;
  BigCount total_size = 0;
  std::optional<BigCount> compressed_size;
};

/// Size of the auxiliary cliques and their separators.
inline BigCount aux_total_size(std::size_t A, std::size_t k, std::size_t N) {
  return 3 * static_cast<BigCount>(N) * ((A - 1) * ipow(3, 2 * k) + ipow(3, k));
}

/// Closed-form total junction-tree size for A alleles, k unknowns and N
/// auxiliary variables per allele.
inline BigCount total_size(TreeMethod method, std::size_t A, std::size_t k, std::size_t N) {
  if (A < 2 || k < 1 || N < 1) throw ValidationError("total_size needs A >= 2, k >= 1, N >= 1");
  const BigCount a1 = A - 1;
  switch (method) {
    case TreeMethod::slice:
      return a1 * ipow(3, 4 * k) + static_cast<BigCount>(A - 2) * ipow(3, 2 * k) + aux_total_size(A, k, N);
    case TreeMethod::triangle:
      return 2 * a1 * ipow(3, 3 * k) + (2 * a1 - 1) * ipow(3, 2 * k) + aux_total_size(A, k, N);
    case TreeMethod::optimal:
      return a1 * ipow(3, 3 * k) + ((4 * static_cast<BigCount>(k) + 1) * a1 - 1) * ipow(3, 2 * k) +
             aux_total_size(A, k, N);
    case TreeMethod::allele_pair:
      return (3 * static_cast<BigCount>(N) * A - 1) * ipow(static_cast<BigCount>(A) * (A + 1) / 2, k);
  }
  throw ValidationError("unknown tree method");
}

/// Size of the slice tree after dropping zero-probability configurations,
/// not counting reductions inside the auxiliary cliques.
inline BigCount compressed_slice_size(std::size_t A, std::size_t k, std::size_t N) {
  if (A < 3) throw ValidationError("compressed slice size needs A >= 3");
  return static_cast<BigCount>(A - 3) * ipow(10, k) + (3 * static_cast<BigCount>(N) * (A - 1) + A) * ipow(6, k) +
         3 * static_cast<BigCount>(N) * ipow(3, k);
}

/// Sum of clique and separator state-space sizes of a spec.
inline BigCount counted_size(const DiscreteNetwork& net, const CliqueTreeSpec& spec) {
  auto cells = [&](const std::vector<NodeId>& nodes) {
    BigCount n = 1;
    for (NodeId v : nodes) n *= net.states(v);
    return n;
  };
  BigCount total = 0;
  for (const auto& c : spec.cliques) total += cells(c);
  for (const auto& [a, b] : spec.edges) total += cells(detail::sorted_intersection(spec.cliques[a], spec.cliques[b]));
  return total;
}

inline TreeSizeReport tree_size_report(TreeMethod method, std::size_t A, std::size_t k, std::size_t N) {
  TreeSizeReport r{method, A, k, N, total_size(method, A, k, N), std::nullopt};
  if (method == TreeMethod::slice && A >= 3) r.compressed_size = compressed_slice_size(A, k, N);
  return r;
}

}  // namespace dnamix

#endif  // DNAMIX_MIXTURE_NETWORK_HPP
