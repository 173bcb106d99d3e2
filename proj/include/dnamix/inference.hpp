#ifndef DNAMIX_INFERENCE_HPP
#define DNAMIX_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dnamix/case.hpp"
#include "dnamix/errors.hpp"
#include "dnamix/junction_tree.hpp"
#include "dnamix/log_scalar.hpp"
#include "dnamix/mixture_network.hpp"
#include "dnamix/peak_model.hpp"

namespace dnamix {

inline constexpr double negative_infinity = -std::numeric_limits<double>::infinity();

enum class SlotKind { observed, presence, query };

/// Auxiliary variables attached per trace and allele. O is always present;
/// D and Q are only needed by diagnostics and presence-only analysis.
struct SlotLayout {
  bool presence = false;
  bool query = false;

  std::size_t per_trace() const { return 1 + (presence ? 1 : 0) + (query ? 1 : 0); }

  std::size_t offset(SlotKind k) const {
    switch (k) {
      case SlotKind::observed: return 0;
      case SlotKind::presence:
        if (!presence) break;
        return 1;
      case SlotKind::query:
        if (!query) break;
        return presence ? 2 : 1;
    }
    throw ValidationError("the model was built without this auxiliary variable kind");
  }

  static SlotLayout likelihood() { return {}; }
  static SlotLayout full() { return {true, true}; }
};

/// A (trace, allele) pair within one marker.
struct AlleleRef {
  std::size_t trace = 0;
  std::size_t allele = 0;

  friend bool operator==(const AlleleRef&, const AlleleRef&) = default;
  friend auto operator<=>(const AlleleRef&, const AlleleRef&) = default;
};

/// The per-marker network of one hypothesis with its compiled junction tree.
/// Structure is shared between copies; only the peak heights differ.
class MarkerModel {
 public:
  MarkerModel(const CaseData& data, std::size_t marker, const Hypothesis& h, TreeMethod method = TreeMethod::optimal,
              SlotLayout layout = {})
      : marker_(marker), heights_(data.markers.at(marker).heights), layout_(layout) {
    auto s = std::make_shared<Structure>();
    s->unknown_roster = h.unknown_indices();
    s->known_roster = h.known_indices();
    std::vector<std::vector<int>> known;
    for (std::size_t i : s->known_roster) known.push_back(data.profiles.at(h.contributors[i].name).at(marker));
    std::vector<std::string> tags;
    for (std::size_t i : s->unknown_roster) tags.push_back(h.contributors[i].name);
    s->traces = h.traces();
    s->member.assign(s->traces, std::vector<bool>(h.contributors.size(), false));
    for (std::size_t t = 0; t < s->traces; ++t)
      for (std::size_t i : h.trace_members[t]) s->member[t][i] = true;
    s->net = build_marker_network(data.markers[marker].ladder, s->unknown_roster.size(), known,
                                  layout.per_trace() * s->traces, tags);
    s->built = build_tree(s->net, method);
    s->tree = JunctionTree::compile(s->net.network, s->built.spec);
    structure_ = std::move(s);
  }

  std::size_t marker() const { return marker_; }
  const std::string& name() const { return structure_->net.ladder.marker; }
  const MarkerNetwork& network() const { return structure_->net; }
  const BuiltTree& tree_spec() const { return structure_->built; }
  std::shared_ptr<const JunctionTree> tree() const { return structure_->tree; }
  SlotLayout layout() const { return layout_; }
  std::size_t traces() const { return structure_->traces; }
  std::size_t alleles() const { return structure_->net.alleles(); }
  std::size_t unknowns() const { return structure_->unknown_roster.size(); }
  const std::vector<std::vector<double>>& heights() const { return heights_; }
  double height(AlleleRef r) const { return heights_.at(r.trace).at(r.allele); }

  MarkerModel with_heights(std::vector<std::vector<double>> heights) const {
    if (heights.size() != traces()) throw ValidationError("height table does not match the model's traces");
    for (const auto& t : heights)
      if (t.size() != alleles()) throw ValidationError("height table does not match the ladder of " + name());
    MarkerModel copy = *this;
    copy.heights_ = std::move(heights);
    return copy;
  }

  NodeId slot_node(AlleleRef r, SlotKind kind) const {
    return structure_->net.slot_nodes.at(r.allele).at(r.trace * layout_.per_trace() + layout_.offset(kind));
  }

  /// Fractions of trace `t` aligned with the network's contributors; roster
  /// entries outside the trace get 0.
  ContributorFractions fractions(std::size_t t, const ModelParameters& psi) const {
    const auto& s = *structure_;
    ContributorFractions f;
    for (std::size_t i : s.unknown_roster) f.unknown.push_back(s.member[t][i] ? psi.phi.at(i) : 0.0);
    for (std::size_t i : s.known_roster) f.known.push_back(s.member[t][i] ? psi.phi.at(i) : 0.0);
    return f;
  }

  AuxCptBundle bundle(std::size_t t, const ModelParameters& psi,
                      const std::vector<std::vector<double>>& query_heights = {}) const {
    return build_aux_cpts(structure_->net, heights_.at(t), peak_parameters(psi), fractions(t, psi), query_heights);
  }

  std::vector<AuxCptBundle> bundles(const std::vector<ModelParameters>& psi) const {
    if (psi.size() != traces()) throw ValidationError("one parameter set per trace is required");
    std::vector<AuxCptBundle> out;
    out.reserve(traces());
    for (std::size_t t = 0; t < traces(); ++t) out.push_back(bundle(t, psi[t]));
    return out;
  }

  /// Copy of the network with O (and D) CPTs bound; Q slots keep their
  /// placeholder tables.
  DiscreteNetwork bind(const std::vector<AuxCptBundle>& b) const {
    DiscreteNetwork net = structure_->net.network;
    for (std::size_t t = 0; t < traces(); ++t)
      for (std::size_t a = 0; a < alleles(); ++a) {
        const auto& cpts = b.at(t).alleles.at(a);
        // Only O = 1 carries evidence when observed; for absence the zero
        // column is G(C) itself, never 1 - survival.
        net.set_cpt(slot_node({t, a}, SlotKind::observed),
                    cpts.observed ? binary_cpt(cpts.o) : binary_cpt(cpts.o_off, cpts.o));
        if (layout_.presence) net.set_cpt(slot_node({t, a}, SlotKind::presence), binary_cpt(cpts.d_off, cpts.d));
      }
    return net;
  }

  Charge charge(const DiscreteNetwork& bound) const { return Charge(structure_->tree, bound); }

  /// O evidence for the observation at `r`; false when that observation has
  /// zero density under every configuration.
  bool enter_peak_evidence(Charge& c, const std::vector<AuxCptBundle>& b, AlleleRef r) const {
    const auto& cpts = b.at(r.trace).alleles.at(r.allele);
    if (!cpts.possible) return false;
    const auto [lik, log_k] = o_evidence(cpts);
    c.enter_evidence(slot_node(r, SlotKind::observed), lik, log_k);
    return true;
  }

  /// D evidence: D = 1 for observed peaks, D = 0 otherwise.
  void enter_presence_evidence(Charge& c, AlleleRef r) const {
    const double seen[2] = {0.0, 1.0};
    const double unseen[2] = {1.0, 0.0};
    c.enter_evidence(slot_node(r, SlotKind::presence), height(r) > 0.0 ? seen : unseen);
  }

  std::vector<AlleleRef> all_alleles() const {
    std::vector<AlleleRef> out;
    for (std::size_t t = 0; t < traces(); ++t)
      for (std::size_t a = 0; a < alleles(); ++a) out.push_back({t, a});
    return out;
  }

  /// log E{prod_t prod_a f(z_ta | n)}; -inf for impossible evidence.
  double log_likelihood(const std::vector<ModelParameters>& psi) const {
    const auto b = bundles(psi);
    Charge c = charge(bind(b));
    const LogScalar n1 = c.propagate();
    for (const auto& r : all_alleles())
      if (!enter_peak_evidence(c, b, r)) return negative_infinity;
    try {
      return (c.propagate() / n1).log();
    } catch (const ImpossibleEvidence&) {
      return negative_infinity;
    }
  }

  /// log E{prod P(D_a = d_a | n)} with d_a the presence pattern of the data.
  double presence_log_likelihood(const std::vector<ModelParameters>& psi) const {
    if (!layout_.presence) throw ValidationError("presence-only analysis needs a model with presence slots");
    const auto b = bundles(psi);
    Charge c = charge(bind(b));
    const LogScalar n1 = c.propagate();
    for (const auto& r : all_alleles()) enter_presence_evidence(c, r);
    try {
      return (c.propagate() / n1).log();
    } catch (const ImpossibleEvidence&) {
      return negative_infinity;
    }
  }

  /// Canonical charge conditioned on the peak information at `conditioning`.
  /// Throws ImpossibleEvidence when the conditioning event has zero mass.
  Charge posterior(const std::vector<ModelParameters>& psi, const std::vector<AlleleRef>& conditioning) const {
    const auto b = bundles(psi);
    Charge c = charge(bind(b));
    c.propagate();
    for (const auto& r : conditioning)
      if (!enter_peak_evidence(c, b, r)) throw ImpossibleEvidence();
    c.propagate();
    return c;
  }

  Charge posterior(const std::vector<ModelParameters>& psi) const { return posterior(psi, all_alleles()); }

  /// Canonical charge conditioned on the presence pattern at `conditioning`.
  Charge presence_posterior(const std::vector<ModelParameters>& psi, const std::vector<AlleleRef>& conditioning) const {
    const auto b = bundles(psi);
    Charge c = charge(bind(b));
    c.propagate();
    for (const auto& r : conditioning) enter_presence_evidence(c, r);
    c.propagate();
    return c;
  }

  /// Allele counts [unknown][allele] read from a full node assignment.
  std::vector<std::vector<int>> unknown_counts(const std::vector<std::size_t>& state) const {
    std::vector<std::vector<int>> out;
    for (const auto& chain : structure_->net.chains) {
      std::vector<int> row;
      for (NodeId v : chain.counts) row.push_back(static_cast<int>(state.at(v)));
      out.push_back(std::move(row));
    }
    return out;
  }

  /// Total allele counts of a known contributor, or all counts of the known
  /// contributors in roster order.
  const std::vector<std::vector<int>>& known_counts() const { return structure_->net.known_counts; }

  const std::vector<std::size_t>& unknown_roster() const { return structure_->unknown_roster; }
  const std::vector<std::size_t>& known_roster() const { return structure_->known_roster; }
  bool member(std::size_t trace, std::size_t roster) const { return structure_->member.at(trace).at(roster); }

 private:
  struct Structure {
    std::vector<std::size_t> unknown_roster, known_roster;
    std::size_t traces = 0;
    std::vector<std::vector<bool>> member;
    MarkerNetwork net;
    BuiltTree built;
    std::shared_ptr<const JunctionTree> tree;
  };

  std::size_t marker_;
  std::vector<std::vector<double>> heights_;
  SlotLayout layout_;
  std::shared_ptr<const Structure> structure_;
};

namespace detail {

// Evaluates fn(marker) for every marker on up to `threads` workers and
// returns the results in marker order.
template <class Fn>
std::vector<double> per_marker(std::size_t markers, unsigned threads, Fn fn) {
  std::vector<double> out(markers, 0.0);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, markers));
  if (workers == 1) {
    for (std::size_t m = 0; m < markers; ++m) out[m] = fn(m);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t m = w; m < markers; m += workers) out[m] = fn(m);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline double ordered_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace detail

/// All markers of a case under one hypothesis. Traces share the genotype
/// chains of the contributors they have in common.
class CaseModel {
 public:
  CaseModel(const CaseData& data, Hypothesis h, TreeMethod method = TreeMethod::optimal, SlotLayout layout = {})
      : hypothesis_(std::move(h)), thresholds_(data.thresholds), traces_(data.traces) {
    data.validate();
    data.validate_against(hypothesis_);
    for (std::size_t m = 0; m < data.markers.size(); ++m) markers_.emplace_back(data, m, hypothesis_, method, layout);
  }

  const Hypothesis& hypothesis() const { return hypothesis_; }
  const std::vector<MarkerModel>& markers() const { return markers_; }
  const MarkerModel& marker(std::size_t m) const { return markers_.at(m); }
  std::size_t traces() const { return hypothesis_.traces(); }
  const std::vector<double>& thresholds() const { return thresholds_; }
  const std::vector<std::string>& trace_names() const { return traces_; }

  /// Same structure with the heights of `data` (which must share ladders).
  CaseModel with_data(const CaseData& data) const {
    if (data.markers.size() != markers_.size()) throw ValidationError("case has a different marker set");
    CaseModel copy = *this;
    copy.thresholds_ = data.thresholds;
    for (std::size_t m = 0; m < markers_.size(); ++m) copy.markers_[m] = markers_[m].with_heights(data.markers[m].heights);
    return copy;
  }

  std::vector<double> marker_log_likelihoods(const std::vector<ModelParameters>& psi, unsigned threads = 1) const {
    return detail::per_marker(markers_.size(), threads, [&](std::size_t m) { return markers_[m].log_likelihood(psi); });
  }

  double log_likelihood(const std::vector<ModelParameters>& psi, unsigned threads = 1) const {
    return detail::ordered_sum(marker_log_likelihoods(psi, threads));
  }

  std::vector<double> marker_presence_log_likelihoods(const std::vector<ModelParameters>& psi,
                                                      unsigned threads = 1) const {
    return detail::per_marker(markers_.size(), threads,
                              [&](std::size_t m) { return markers_[m].presence_log_likelihood(psi); });
  }

  double presence_log_likelihood(const std::vector<ModelParameters>& psi, unsigned threads = 1) const {
    return detail::ordered_sum(marker_presence_log_likelihoods(psi, threads));
  }

 private:
  Hypothesis hypothesis_;
  std::vector<double> thresholds_;
  std::vector<std::string> traces_;
  std::vector<MarkerModel> markers_;
};

inline CaseModel build_multi_trace_model(const CaseData& data, const Hypothesis& h,
                                         TreeMethod method = TreeMethod::optimal, SlotLayout layout = {}) {
  return CaseModel(data, h, method, layout);
}

// ---- posterior genotype ranking --------------------------------------------

struct GenotypeRow {
  std::vector<std::vector<int>> counts;  // [unknown][reported allele]
  std::vector<int> dropout;              // per unknown; empty unless lumped
  double probability = 0.0;
};

struct GenotypeRanking {
  std::string marker;  // "joint" for rankings across markers
  std::vector<std::string> columns;
  bool dropout_column = false;
  std::vector<GenotypeRow> rows;
  double covered_mass = 0.0;
  double target = 0.99;
  bool reached = false;
  std::size_t samples = 0;
};

struct DeconvolutionOptions {
  double mass = 0.99;
  bool lump_unobserved = false;  // report counts on observed alleles plus a dropout column
  std::uint64_t seed = 1;
  std::size_t max_samples = 200000;
};

namespace detail {

struct RankingKey {
  std::vector<std::vector<int>> counts;
  friend auto operator<=>(const RankingKey&, const RankingKey&) = default;
};

inline std::vector<std::size_t> reported_alleles(const MarkerModel& m, bool lump) {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < m.alleles(); ++a) {
    bool seen = false;
    for (std::size_t t = 0; t < m.traces(); ++t) seen = seen || m.heights()[t][a] > 0.0;
    if (!lump || seen) out.push_back(a);
  }
  return out;
}

// Exact posterior probability of the unknowns' counts at `alleles`.
inline double exact_probability(const MarkerModel& m, const Charge& posterior, const std::vector<std::size_t>& alleles,
                                const std::vector<std::vector<int>>& counts) {
  Charge c = posterior;
  const LogScalar before = c.normalizing_constant();
  const auto& chains = m.network().chains;
  for (std::size_t i = 0; i < chains.size(); ++i)
    for (std::size_t j = 0; j < alleles.size(); ++j) {
      double hard[3] = {0.0, 0.0, 0.0};
      hard[counts[i][j]] = 1.0;
      c.enter_evidence(chains[i].counts[alleles[j]], hard);
    }
  try {
    return (c.propagate() / before).value();
  } catch (const ImpossibleEvidence&) {
    return 0.0;
  }
}

inline RankingKey key_of(const MarkerModel& m, const std::vector<std::size_t>& state,
                         const std::vector<std::size_t>& alleles) {
  RankingKey k;
  for (const auto& row : m.unknown_counts(state)) {
    std::vector<int> r;
    for (std::size_t a : alleles) r.push_back(row[a]);
    k.counts.push_back(std::move(r));
  }
  return k;
}

inline void finish_ranking(GenotypeRanking& g, std::map<RankingKey, double>& found, bool lump) {
  for (auto& [key, p] : found) {
    GenotypeRow row;
    row.counts = key.counts;
    row.probability = p;
    if (lump)
      for (const auto& r : key.counts) {
        int s = 0;
        for (int c : r) s += c;
        row.dropout.push_back(2 - s);
      }
    g.rows.push_back(std::move(row));
  }
  // std::map iteration is lexicographic, so a stable sort keeps that order on ties
  std::stable_sort(g.rows.begin(), g.rows.end(),
                   [](const GenotypeRow& a, const GenotypeRow& b) { return a.probability > b.probability; });
  g.reached = g.covered_mass >= g.target;
}

}  // namespace detail

/// Ranks genotype combinations of the unknowns by sampling from the posterior
/// and adding the exact probability of every newly seen combination, until
/// the visited mass reaches `options.mass`.
inline GenotypeRanking deconvolve(const MarkerModel& m, const std::vector<ModelParameters>& psi,
                                  const DeconvolutionOptions& options = {}) {
  if (!(options.mass > 0.0 && options.mass <= 1.0)) throw ValidationError("mass target must lie in (0, 1]");
  GenotypeRanking g;
  g.marker = m.name();
  g.target = options.mass;
  g.dropout_column = options.lump_unobserved;
  const auto alleles = detail::reported_alleles(m, options.lump_unobserved);
  for (std::size_t a : alleles) g.columns.push_back(m.network().ladder.labels[a]);
  std::map<detail::RankingKey, double> found;
  if (m.unknowns() == 0) {
    found[{}] = 1.0;
    g.covered_mass = 1.0;
    detail::finish_ranking(g, found, options.lump_unobserved);
    return g;
  }
  const Charge post = m.posterior(psi);
  std::mt19937_64 rng(options.seed);
  while (g.covered_mass < g.target && g.samples < options.max_samples) {
    const auto state = post.sample(rng);
    ++g.samples;
    auto key = detail::key_of(m, state, alleles);
    if (found.count(key)) continue;
    const double p = detail::exact_probability(m, post, alleles, key.counts);
    found.emplace(std::move(key), p);
    g.covered_mass += p;
  }
  detail::finish_ranking(g, found, options.lump_unobserved);
  return g;
}

/// Ranking of combinations across all markers; the probability of a joint
/// combination is the product of the per-marker probabilities.
inline GenotypeRanking deconvolve_joint(const CaseModel& model, const std::vector<ModelParameters>& psi,
                                        const DeconvolutionOptions& options = {}) {
  GenotypeRanking g;
  g.marker = "joint";
  g.target = options.mass;
  g.dropout_column = options.lump_unobserved;
  std::vector<std::vector<std::size_t>> alleles;
  std::vector<Charge> posts;
  for (const auto& m : model.markers()) {
    alleles.push_back(detail::reported_alleles(m, options.lump_unobserved));
    for (std::size_t a : alleles.back()) g.columns.push_back(m.name() + ":" + m.network().ladder.labels[a]);
    posts.push_back(m.posterior(psi));
  }
  std::map<detail::RankingKey, double> found;
  std::vector<std::map<detail::RankingKey, double>> cache(model.markers().size());
  const std::size_t k = model.hypothesis().unknown_indices().size();
  std::mt19937_64 rng(options.seed);
  if (k == 0) {
    found[{}] = 1.0;
    g.covered_mass = 1.0;
  }
  while (k > 0 && g.covered_mass < g.target && g.samples < options.max_samples) {
    detail::RankingKey joint;
    joint.counts.assign(k, {});
    double p = 1.0;
    for (std::size_t mi = 0; mi < posts.size(); ++mi) {
      const auto& m = model.marker(mi);
      auto key = detail::key_of(m, posts[mi].sample(rng), alleles[mi]);
      auto it = cache[mi].find(key);
      if (it == cache[mi].end())
        it = cache[mi].emplace(key, detail::exact_probability(m, posts[mi], alleles[mi], key.counts)).first;
      p *= it->second;
      for (std::size_t i = 0; i < k; ++i)
        joint.counts[i].insert(joint.counts[i].end(), key.counts[i].begin(), key.counts[i].end());
    }
    ++g.samples;
    if (found.emplace(std::move(joint), p).second) g.covered_mass += p;
  }
  if (options.lump_unobserved) {
    // dropout per unknown summed over markers
    detail::finish_ranking(g, found, false);
    for (auto& row : g.rows) {
      row.dropout.assign(k, 0);
      for (std::size_t i = 0; i < k; ++i) {
        int s = 0;
        for (int c : row.counts[i]) s += c;
        row.dropout[i] = 2 * static_cast<int>(model.markers().size()) - s;
      }
    }
  } else {
    detail::finish_ranking(g, found, false);
  }
  return g;
}

// ---- simulation ------------------------------------------------------------

/// Conditioning event for simulation: nothing, the observed peak heights, or
/// only the observed presence pattern, at the listed (trace, allele) pairs
/// (every pair when the list is empty).
struct SimulationCondition {
  enum class Kind { none, peaks, presence };
  Kind kind = Kind::none;
  std::vector<std::vector<AlleleRef>> alleles;  // per marker; empty = all
};

struct SimulatedCase {
  std::vector<std::vector<std::vector<int>>> genotypes;  // [marker][unknown][allele]
  std::vector<std::vector<std::vector<double>>> heights;  // [marker][trace][allele]
};

/// Peak heights of every trace given allele counts of the unknowns.
template <class Rng>
std::vector<std::vector<double>> simulate_heights(const MarkerModel& m, const std::vector<std::vector<int>>& unknown,
                                                  const std::vector<ModelParameters>& psi, Rng& rng) {
  std::vector<std::vector<double>> heights(m.traces(), std::vector<double>(m.alleles(), 0.0));
  const std::size_t A = m.alleles();
  for (std::size_t t = 0; t < m.traces(); ++t) {
    const auto f = m.fractions(t, psi[t]);
    for (std::size_t a = 0; a < A; ++a) {
      std::vector<int> here, next;
      for (const auto& row : unknown) {
        here.push_back(row[a]);
        next.push_back(a + 1 < A ? row[a + 1] : 0);
      }
      const double lambda = marker_shape(m.network(), a, here, next, f, psi[t].rho, psi[t].xi);
      heights[t][a] = sample_height(lambda, psi[t].eta, psi[t].threshold, rng);
    }
  }
  return heights;
}

template <class Rng>
SimulatedCase simulate_trace(const CaseModel& model, const std::vector<ModelParameters>& psi,
                             const SimulationCondition& condition, Rng& rng) {
  SimulatedCase out;
  for (std::size_t mi = 0; mi < model.markers().size(); ++mi) {
    const auto& m = model.marker(mi);
    std::vector<AlleleRef> refs;
    if (mi < condition.alleles.size()) refs = condition.alleles[mi];
    if (refs.empty()) refs = m.all_alleles();
    Charge post = [&] {
      switch (condition.kind) {
        case SimulationCondition::Kind::peaks: return m.posterior(psi, refs);
        case SimulationCondition::Kind::presence: return m.presence_posterior(psi, refs);
        case SimulationCondition::Kind::none: break;
      }
      return m.posterior(psi, {});
    }();
    const auto counts = m.unknown_counts(post.sample(rng));
    out.heights.push_back(simulate_heights(m, counts, psi, rng));
    out.genotypes.push_back(counts);
  }
  return out;
}

inline SimulatedCase simulate_trace(const CaseModel& model, const std::vector<ModelParameters>& psi,
                                    const SimulationCondition& condition, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return simulate_trace(model, psi, condition, rng);
}

/// `data` with its peak heights replaced by simulated ones.
inline CaseData with_simulated_heights(CaseData data, const SimulatedCase& sim) {
  if (sim.heights.size() != data.markers.size()) throw ValidationError("simulation does not cover the case's markers");
  for (std::size_t m = 0; m < data.markers.size(); ++m) data.markers[m].heights = sim.heights[m];
  return data;
}

}  // namespace dnamix

#endif  // DNAMIX_INFERENCE_HPP
