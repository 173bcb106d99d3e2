#ifndef DNAMIX_CASE_HPP
#define DNAMIX_CASE_HPP

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dnamix/errors.hpp"
#include "dnamix/mixture_network.hpp"
#include "dnamix/peak_model.hpp"

namespace dnamix {

struct Contributor {
  std::string name;
  bool known = false;
};

/// Contributor roster plus, per trace, which roster entries contribute.
struct Hypothesis {
  std::string name;
  std::vector<Contributor> contributors;
  std::vector<std::vector<std::size_t>> trace_members;

  std::size_t traces() const { return trace_members.size(); }

  std::vector<std::size_t> unknown_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < contributors.size(); ++i)
      if (!contributors[i].known) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> known_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < contributors.size(); ++i)
      if (contributors[i].known) out.push_back(i);
    return out;
  }

  bool member(std::size_t trace, std::size_t contributor) const {
    const auto& m = trace_members.at(trace);
    return std::find(m.begin(), m.end(), contributor) != m.end();
  }

  void validate(std::size_t trace_count) const {
    if (trace_members.size() != trace_count)
      throw ValidationError("hypothesis " + name + " does not describe every trace");
    std::set<std::string> names;
    for (const auto& c : contributors)
      if (!names.insert(c.name).second) throw ValidationError("hypothesis " + name + " lists " + c.name + " twice");
    for (std::size_t t = 0; t < trace_members.size(); ++t) {
      if (trace_members[t].empty())
        throw ValidationError("hypothesis " + name + " has no contributor for trace " + std::to_string(t));
      for (std::size_t i : trace_members[t])
        if (i >= contributors.size()) throw ValidationError("trace references a contributor absent from the roster");
    }
  }

  /// Every trace holds every contributor.
  static Hypothesis simple(std::string name, const std::vector<std::string>& known, std::size_t unknowns,
                           std::size_t traces = 1) {
    Hypothesis h;
    h.name = std::move(name);
    for (const auto& k : known) h.contributors.push_back({k, true});
    for (std::size_t u = 0; u < unknowns; ++u) h.contributors.push_back({"U" + std::to_string(u + 1), false});
    std::vector<std::size_t> all(h.contributors.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    h.trace_members.assign(traces, all);
    return h;
  }
};

using Profile = std::vector<int>;  // allele counts over a marker's ladder

struct MarkerData {
  AlleleLadder ladder;
  std::vector<std::vector<double>> heights;  // [trace][allele]; 0 = no peak
};

/// Peaks of every trace at every marker, known genotypes and thresholds.
struct CaseData {
  std::vector<std::string> traces;
  std::vector<double> thresholds;
  std::vector<MarkerData> markers;
  std::map<std::string, std::vector<Profile>> profiles;  // individual -> per marker

  void validate() const {
    if (thresholds.size() != traces.size()) throw ValidationError("one threshold per trace is required");
    for (double c : thresholds)
      if (!(c > 0.0)) throw ValidationError("detection thresholds must be positive");
    for (const auto& m : markers) {
      m.ladder.validate();
      if (m.heights.size() != traces.size()) throw ValidationError("marker " + m.ladder.marker + " lacks trace data");
      for (std::size_t t = 0; t < traces.size(); ++t) {
        if (m.heights[t].size() != m.ladder.size())
          throw ValidationError("marker " + m.ladder.marker + ": height vector does not match the ladder");
        for (double z : m.heights[t]) check_observation(z, thresholds[t]);
      }
    }
    for (const auto& [who, per_marker] : profiles) {
      if (per_marker.size() != markers.size()) throw ValidationError("profile of " + who + " does not cover every marker");
      for (std::size_t m = 0; m < markers.size(); ++m) {
        int sum = 0;
        if (per_marker[m].size() != markers[m].ladder.size())
          throw ValidationError("profile of " + who + " does not match the ladder of " + markers[m].ladder.marker);
        for (int c : per_marker[m]) sum += c;
        if (sum != 2)
          throw ValidationError("profile of " + who + " at " + markers[m].ladder.marker + " does not sum to 2");
      }
    }
  }

  void validate_against(const Hypothesis& h) const {
    h.validate(traces.size());
    for (const auto& c : h.contributors)
      if (c.known && !profiles.count(c.name))
        throw ValidationError("hypothesis " + h.name + " names " + c.name + " who has no profile");
  }

  std::size_t observed_peaks() const {
    std::size_t n = 0;
    for (const auto& m : markers)
      for (const auto& t : m.heights)
        for (double z : t)
          if (z > 0.0) ++n;
    return n;
  }
};

}  // namespace dnamix

#endif  // DNAMIX_CASE_HPP
