#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "transa/model.hpp"
#include "transa/parallel.hpp"
#include "transa/triple_set.hpp"

namespace transa {

enum class Slot { head, tail };

struct SlotRanks {
  std::size_t raw = 0;
  std::size_t filtered = 0;
};

namespace detail {

/// Raw and filtered rank of the true entity in one pass over all candidates.
/// Rank is 1 + number of candidates with a strictly smaller score. In the
/// filtered count, candidates forming a known positive are skipped.
/// `known` is an |E|-sized scratch mask that is left all false on return.
inline SlotRanks rank_both(const EmbeddingModel& model, const Triple& triple, Slot slot, const TripleIndex& positives,
                           std::vector<char>& known, std::vector<double>& e_buf, std::vector<double>& abs_buf) {
  const auto& neighbors =
      slot == Slot::tail ? positives.tails_of(triple.head, triple.relation) : positives.heads_of(triple.relation, triple.tail);
  for (EntityId e : neighbors) known[e] = 1;

  const double truth = model.score(triple.head, triple.relation, triple.tail, e_buf, abs_buf);
  const EntityId target = slot == Slot::tail ? triple.tail : triple.head;
  SlotRanks ranks{1, 1};
  const auto n = static_cast<EntityId>(model.num_entities());
  for (EntityId e = 0; e < n; ++e) {
    if (e == target) continue;
    const double s = slot == Slot::tail ? model.score(triple.head, triple.relation, e, e_buf, abs_buf)
                                        : model.score(e, triple.relation, triple.tail, e_buf, abs_buf);
    if (s < truth) {
      ++ranks.raw;
      if (!known[e]) ++ranks.filtered;
    }
  }
  for (EntityId e : neighbors) known[e] = 0;
  return ranks;
}

}  // namespace detail

/// Rank of the true entity among all |E| completions of `slot`. The
/// filtered setting drops candidates that are positives of any split.
inline std::size_t rank_entity(const EmbeddingModel& model, const Triple& triple, Slot slot, bool filtered,
                               const TripleSet& ts) {
  std::vector<char> known(model.num_entities(), 0);
  std::vector<double> e(model.dim), a(model.dim);
  const auto r = detail::rank_both(model, triple, slot, ts.all_positive, known, e, a);
  return filtered ? r.filtered : r.raw;
}

struct TripleRanks {
  Triple triple;
  SlotRanks head;
  SlotRanks tail;
};

inline constexpr std::size_t kHitsCutoff = 10;
inline constexpr std::size_t kCategoryCount = 4;

struct CategoryCell {
  std::size_t count = 0;
  std::size_t hits_raw = 0;
  std::size_t hits_filtered = 0;

  double hits_raw_percent() const { return count ? 100.0 * static_cast<double>(hits_raw) / static_cast<double>(count) : 0.0; }
  double hits_filtered_percent() const {
    return count ? 100.0 * static_cast<double>(hits_filtered) / static_cast<double>(count) : 0.0;
  }
};

struct RankReport {
  std::vector<TripleRanks> ranks;
  double mean_rank_raw = 0.0;
  double mean_rank_filtered = 0.0;
  double hits10_raw = 0.0;       // percent
  double hits10_filtered = 0.0;  // percent
  // [slot][category]; slot 0 = predicting head, 1 = predicting tail.
  std::array<std::array<CategoryCell, kCategoryCount>, 2> by_category{};
  std::size_t uncategorized = 0;  // test triples whose relation has no training triple
};

struct RankAggregate {
  double mean_rank_raw = 0.0;
  double mean_rank_filtered = 0.0;
  double hits10_raw = 0.0;
  double hits10_filtered = 0.0;
};

/// Mean Rank and HITS@10 over both slots of every entry.
inline RankAggregate aggregate_ranks(const std::vector<TripleRanks>& ranks) {
  RankAggregate a;
  if (ranks.empty()) return a;
  std::uint64_t sum_raw = 0, sum_filt = 0, hit_raw = 0, hit_filt = 0;
  for (const auto& r : ranks)
    for (const SlotRanks& s : {r.head, r.tail}) {
      sum_raw += s.raw;
      sum_filt += s.filtered;
      hit_raw += s.raw <= kHitsCutoff;
      hit_filt += s.filtered <= kHitsCutoff;
    }
  const double n = 2.0 * static_cast<double>(ranks.size());
  a.mean_rank_raw = static_cast<double>(sum_raw) / n;
  a.mean_rank_filtered = static_cast<double>(sum_filt) / n;
  a.hits10_raw = 100.0 * static_cast<double>(hit_raw) / n;
  a.hits10_filtered = 100.0 * static_cast<double>(hit_filt) / n;
  return a;
}

struct LinkPredictionOptions {
  std::size_t workers = 1;
  std::size_t limit = 0;  // evaluate only the first `limit` positives; 0 = all
};

/// Ranks both slots of every positive triple in `split`.
inline RankReport link_prediction(const EmbeddingModel& model, const TripleSet& ts, const Split& split,
                                  const LinkPredictionOptions& opts = {}) {
  std::vector<Triple> queries;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split.is_positive(i)) queries.push_back(split.triples[i]);
  if (opts.limit && queries.size() > opts.limit) queries.resize(opts.limit);
  if (queries.empty()) throw std::invalid_argument("link_prediction: no positive triples to rank");

  RankReport report;
  report.ranks.resize(queries.size());
  parallel_chunks(queries.size(), opts.workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<char> known(model.num_entities(), 0);
    std::vector<double> e(model.dim), a(model.dim);
    for (std::size_t i = begin; i < end; ++i) {
      const auto& q = queries[i];
      report.ranks[i] = {q, detail::rank_both(model, q, Slot::head, ts.all_positive, known, e, a),
                         detail::rank_both(model, q, Slot::tail, ts.all_positive, known, e, a)};
    }
  });

  const auto agg = aggregate_ranks(report.ranks);
  report.mean_rank_raw = agg.mean_rank_raw;
  report.mean_rank_filtered = agg.mean_rank_filtered;
  report.hits10_raw = agg.hits10_raw;
  report.hits10_filtered = agg.hits10_filtered;

  const auto stats = all_relation_stats(ts);
  for (const auto& r : report.ranks) {
    const auto& st = r.triple.relation < stats.size() ? stats[r.triple.relation] : std::nullopt;
    if (!st) {
      ++report.uncategorized;
      continue;
    }
    const auto c = static_cast<std::size_t>(st->category);
    for (std::size_t slot = 0; slot < 2; ++slot) {
      const SlotRanks& s = slot == 0 ? r.head : r.tail;
      auto& cell = report.by_category[slot][c];
      ++cell.count;
      cell.hits_raw += s.raw <= kHitsCutoff;
      cell.hits_filtered += s.filtered <= kHitsCutoff;
    }
  }
  return report;
}

inline RankReport link_prediction(const EmbeddingModel& model, const TripleSet& ts,
                                  const LinkPredictionOptions& opts = {}) {
  return link_prediction(model, ts, ts.test, opts);
}

// --- triple classification -------------------------------------------------

struct ThresholdChoice {
  double threshold = 0.0;
  double accuracy = 0.0;  // fraction in [0, 1]
};

/// Exact sweep over cut points between sorted distinct scores. Predicts
/// positive iff score < threshold. Among equally accurate cuts the smallest
/// threshold wins. Cuts below the minimum / above the maximum use min - 1 /
/// max + 1.
inline ThresholdChoice best_threshold(std::vector<std::pair<double, bool>> scored) {
  if (scored.empty()) throw std::invalid_argument("best_threshold: no scores");
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t n = scored.size();
  std::size_t negatives_total = 0;
  for (const auto& s : scored) negatives_total += !s.second;

  // cut c: the first c items are predicted positive.
  std::size_t pos_below = 0, neg_below = 0;
  ThresholdChoice best{scored.front().first - 1.0, static_cast<double>(negatives_total) / static_cast<double>(n)};
  for (std::size_t c = 1; c <= n; ++c) {
    (scored[c - 1].second ? pos_below : neg_below) += 1;
    if (c < n && !(scored[c - 1].first < scored[c].first)) continue;
    const double acc = static_cast<double>(pos_below + (negatives_total - neg_below)) / static_cast<double>(n);
    if (acc > best.accuracy) {
      double t;
      if (c == n) {
        t = scored.back().first + 1.0;
      } else {
        const double lo = scored[c - 1].first, hi = scored[c].first;
        t = lo + (hi - lo) / 2.0;
        if (!(t > lo)) t = hi;
      }
      best = {t, acc};
    }
  }
  return best;
}

struct ClassifierThresholds {
  std::vector<std::optional<double>> per_relation;  // indexed by relation id
  double fallback = 0.0;
  std::vector<RelationId> missing;  // relations without validation triples

  double threshold_for(RelationId r) const {
    if (r < per_relation.size() && per_relation[r]) return *per_relation[r];
    return fallback;
  }
};

class LabelsRequired : public std::invalid_argument {
 public:
  LabelsRequired() : std::invalid_argument("classification labels required") {}
};

inline ClassifierThresholds tune_thresholds(const EmbeddingModel& model, const Split& validation) {
  if (!validation.labeled() || validation.size() == 0) throw LabelsRequired();
  std::vector<std::vector<std::pair<double, bool>>> by_relation(model.num_relations());
  std::vector<std::pair<double, bool>> pooled;
  std::vector<double> e(model.dim), a(model.dim);
  for (std::size_t i = 0; i < validation.size(); ++i) {
    const auto& t = validation.triples[i];
    const double s = model.score(t.head, t.relation, t.tail, e, a);
    by_relation.at(t.relation).emplace_back(s, validation.is_positive(i));
    pooled.emplace_back(s, validation.is_positive(i));
  }
  ClassifierThresholds out;
  out.per_relation.resize(model.num_relations());
  for (RelationId r = 0; r < by_relation.size(); ++r) {
    if (by_relation[r].empty()) {
      out.missing.push_back(r);
      continue;
    }
    out.per_relation[r] = best_threshold(std::move(by_relation[r])).threshold;
  }
  out.fallback = best_threshold(std::move(pooled)).threshold;
  return out;
}

struct ClassificationResult {
  double accuracy = 0.0;  // percent
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::size_t> relation_correct;
  std::vector<std::size_t> relation_total;

  std::optional<double> relation_accuracy(RelationId r) const {
    if (r >= relation_total.size() || relation_total[r] == 0) return std::nullopt;
    return 100.0 * static_cast<double>(relation_correct[r]) / static_cast<double>(relation_total[r]);
  }
};

inline ClassificationResult classify(const EmbeddingModel& model, const ClassifierThresholds& thresholds,
                                     const Split& split) {
  if (!split.labeled() || split.size() == 0) throw LabelsRequired();
  ClassificationResult res;
  res.relation_correct.assign(model.num_relations(), 0);
  res.relation_total.assign(model.num_relations(), 0);
  std::vector<double> e(model.dim), a(model.dim);
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& t = split.triples[i];
    const bool predicted = model.score(t.head, t.relation, t.tail, e, a) < thresholds.threshold_for(t.relation);
    const bool ok = predicted == split.is_positive(i);
    res.correct += ok;
    res.relation_correct.at(t.relation) += ok;
    ++res.relation_total[t.relation];
  }
  res.total = split.size();
  res.accuracy = 100.0 * static_cast<double>(res.correct) / static_cast<double>(res.total);
  return res;
}

}  // namespace transa
