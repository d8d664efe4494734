#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "transa/matrix.hpp"
#include "transa/scores.hpp"
#include "transa/triple_set.hpp"

namespace transa {

enum class Variant { transe, transa, psd };

inline Variant parse_variant(std::string_view s) {
  if (s == "transe" || s == "transE") return Variant::transe;
  if (s == "transa" || s == "transA") return Variant::transa;
  if (s == "psd") return Variant::psd;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "' (expected transe, transa or psd)");
}

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::transe: return "transe";
    case Variant::transa: return "transa";
    case Variant::psd: return "psd";
  }
  return "?";
}

inline bool has_weights(Variant v) noexcept { return v != Variant::transe; }

/// Entity and relation embeddings plus, for the metric variants, one k x k
/// weight matrix per relation.
struct EmbeddingModel {
  Variant variant = Variant::transe;
  std::size_t dim = 0;
  Matrix entities;   // |E| x k
  Matrix relations;  // |R| x k
  std::vector<Matrix> weights;  // |R| matrices of k x k; empty for transe
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;

  std::size_t num_entities() const noexcept { return entities.rows(); }
  std::size_t num_relations() const noexcept { return relations.rows(); }

  /// Score of the loss vector e = h + r - t for `relation`. `abs_buf` must
  /// hold `dim` doubles. No metric validation.
  double score_loss(RelationId relation, std::span<double> e, std::span<double> abs_buf) const noexcept {
    switch (variant) {
      case Variant::transe: {
        double s = 0.0;
        for (double x : e) s += x * x;
        return s;
      }
      case Variant::transa:
        for (std::size_t i = 0; i < e.size(); ++i) abs_buf[i] = std::abs(e[i]);
        return transa_quadratic(abs_buf, weights[relation]);
      case Variant::psd:
        return detail::symmetric_quadratic(e, weights[relation]);
    }
    return 0.0;
  }

  double score(EntityId head, RelationId relation, EntityId tail, std::span<double> e_buf,
               std::span<double> abs_buf) const noexcept {
    const auto h = entities.row(head);
    const auto r = relations.row(relation);
    const auto t = entities.row(tail);
    for (std::size_t i = 0; i < dim; ++i) e_buf[i] = h[i] + r[i] - t[i];
    return score_loss(relation, e_buf.first(dim), abs_buf);
  }

  double score(const Triple& t) const {
    std::vector<double> e(dim), a(dim);
    return score(t.head, t.relation, t.tail, e, a);
  }

  /// Throws if any invariant of the variant is violated.
  void validate() const {
    if (dim == 0 || dim > kMaxDimension) throw std::invalid_argument("model: dimension out of range");
    if (entities.cols() != dim || relations.cols() != dim) throw std::invalid_argument("model: embedding width != k");
    if (!all_finite(entities.data()) || !all_finite(relations.data()))
      throw std::invalid_argument("model: non-finite embedding value");
    if (!has_weights(variant)) {
      if (!weights.empty()) throw std::invalid_argument("model: transe carries no weight matrices");
      return;
    }
    if (weights.size() != num_relations()) throw std::invalid_argument("model: one weight matrix per relation expected");
    for (const auto& w : weights) {
      if (w.rows() != dim || w.cols() != dim) throw std::invalid_argument("model: weight matrix shape != k x k");
      if (!all_finite(w.data())) throw std::invalid_argument("model: non-finite weight entry");
      if (variant == Variant::transa)
        validate_nonnegative_metric(w);
      else
        validate_psd_metric(w);
    }
  }
};

}  // namespace transa
