#pragma once

// Brute-force reference computations shared by the unit and acceptance suites.

#include <algorithm>
#include <vector>

#include "transa/transa.hpp"

namespace transa::testing {

inline double free_score(const EmbeddingModel& m, EntityId h, RelationId r, EntityId t) {
  const auto eh = m.entities.row(h), er = m.relations.row(r), et = m.entities.row(t);
  switch (m.variant) {
    case Variant::transe:
      return score_transe(eh, er, et);
    case Variant::transa:
      return score_transa(eh, er, et, m.weights[r]);
    case Variant::psd:
      return score_psd(eh, er, et, m.weights[r]);
  }
  return 0.0;
}

/// Sorts every candidate score and returns one plus the first position
/// holding the true score.
inline std::size_t oracle_rank(const EmbeddingModel& m, const TripleSet& ts, const Triple& t, Slot slot, bool filtered) {
  const EntityId target = slot == Slot::head ? t.head : t.tail;
  std::vector<double> scores;
  for (EntityId e = 0; e < m.num_entities(); ++e) {
    Triple c = t;
    (slot == Slot::head ? c.head : c.tail) = e;
    if (filtered && e != target && ts.all_positive.contains(c)) continue;
    scores.push_back(free_score(m, c.head, c.relation, c.tail));
  }
  std::sort(scores.begin(), scores.end());
  const double truth = free_score(m, t.head, t.relation, t.tail);
  return static_cast<std::size_t>(std::find(scores.begin(), scores.end(), truth) - scores.begin()) + 1;
}

}  // namespace transa::testing
