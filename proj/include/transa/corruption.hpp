#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "transa/triple_set.hpp"

namespace transa {

using Rng = std::mt19937_64;

enum class SamplingStrategy { unif, bern };
enum class CorruptTarget { head, tail, either };

inline SamplingStrategy parse_strategy(std::string_view s) {
  if (s == "unif") return SamplingStrategy::unif;
  if (s == "bern") return SamplingStrategy::bern;
  throw std::invalid_argument("unknown sampling strategy '" + std::string(s) + "' (expected unif or bern)");
}

inline const char* to_string(SamplingStrategy s) { return s == SamplingStrategy::unif ? "unif" : "bern"; }

struct CorruptionSpec {
  SamplingStrategy strategy = SamplingStrategy::bern;
  CorruptTarget target = CorruptTarget::either;
  std::uint64_t rng_seed = 0;
};

class CorruptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Draws negative triples by replacing the head or the tail of a training
/// positive. Head-replacement probabilities come from training statistics
/// only, and candidates are rejected while they are training positives.
class Corrupter {
 public:
  Corrupter(const TripleSet& ts, const CorruptionSpec& spec) : ts_(&ts), spec_(spec) {
    head_prob_.assign(ts.num_relations(), 0.5);
    if (spec.strategy == SamplingStrategy::bern) {
      const auto stats = all_relation_stats(ts);
      for (RelationId r = 0; r < stats.size(); ++r) {
        if (!stats[r]) continue;
        // tph / (tph + hpt) with tph = n/heads, hpt = n/tails
        const double h = static_cast<double>(stats[r]->distinct_heads);
        const double t = static_cast<double>(stats[r]->distinct_tails);
        head_prob_[r] = t / (h + t);
      }
    }
  }

  double head_probability(RelationId r) const {
    switch (spec_.target) {
      case CorruptTarget::head: return 1.0;
      case CorruptTarget::tail: return 0.0;
      case CorruptTarget::either: break;
    }
    return head_prob_.at(r);
  }

  const CorruptionSpec& spec() const noexcept { return spec_; }

  Triple corrupt(const Triple& positive, Rng& rng) const {
    const auto n = static_cast<EntityId>(ts_->num_entities());
    std::bernoulli_distribution pick_head(head_probability(positive.relation));
    const bool head_slot = pick_head(rng);

    std::uniform_int_distribution<EntityId> pick_entity(0, n - 1);
    for (EntityId attempt = 0; attempt < n; ++attempt) {
      Triple cand = replace(positive, head_slot, pick_entity(rng));
      if (acceptable(positive, cand)) return cand;
    }
    // Rejection failed |E| times: enumerate the drawn slot, then the other one.
    for (bool slot : {head_slot, !head_slot}) {
      if (spec_.target == CorruptTarget::head && !slot) continue;
      if (spec_.target == CorruptTarget::tail && slot) continue;
      std::vector<EntityId> valid;
      for (EntityId e = 0; e < n; ++e)
        if (acceptable(positive, replace(positive, slot, e))) valid.push_back(e);
      if (!valid.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
        return replace(positive, slot, valid[pick(rng)]);
      }
    }
    throw CorruptionError("cannot corrupt triple: every replacement of (" + ts_->entities.name(positive.head) +
                          ", " + ts_->relations.name(positive.relation) + ", " +
                          ts_->entities.name(positive.tail) + ") is a training positive");
  }

 private:
  static Triple replace(Triple t, bool head_slot, EntityId e) {
    (head_slot ? t.head : t.tail) = e;
    return t;
  }
  bool acceptable(const Triple& original, const Triple& cand) const {
    return !(cand == original) && !ts_->train_positive.contains(cand);
  }

  const TripleSet* ts_;
  CorruptionSpec spec_;
  std::vector<double> head_prob_;
};

}  // namespace transa
