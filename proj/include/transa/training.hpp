#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "transa/corruption.hpp"
#include "transa/evaluation.hpp"
#include "transa/model.hpp"
#include "transa/parallel.hpp"
#include "transa/scores.hpp"
#include "transa/triple_set.hpp"

namespace transa {

struct TrainConfig {
  double alpha = 0.001;   // learning rate
  std::size_t dim = 50;   // k
  double gamma = 2.0;     // margin
  double c_reg = 0.2;     // C, embedding norm penalty
  double lambda = 0.0;    // weight-matrix penalty, reported in the objective only
  std::size_t epochs = 1000;
  std::size_t batch_size = 1000;
  SamplingStrategy strategy = SamplingStrategy::bern;
  Variant variant = Variant::transa;
  std::size_t w_update_period = 1;
  std::uint64_t seed = 42;
  std::size_t validation_period = 10;  // epochs between validation rounds; 0 disables validation
  std::size_t patience = 10;           // validation rounds without improvement before stopping
  std::size_t valid_limit = 1000;      // link mode: validation positives ranked per round; 0 = all
  std::size_t workers = 1;
  bool unit_ball = false;  // project entity vectors back into the unit ball after each update

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("config: alpha must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("config: gamma must be > 0");
    if (!(c_reg >= 0.0)) throw std::invalid_argument("config: C must be >= 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("config: lambda must be >= 0");
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (w_update_period < 1) throw std::invalid_argument("config: w_update_period must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (dim < 1 || dim > kMaxDimension) throw std::invalid_argument("config: dim must be in [1, 1024]");
  }
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_hinge = 0.0;
  std::size_t violations = 0;
  std::size_t pairs = 0;
  double mean_entity_norm = 0.0;
  double seconds = 0.0;
  std::size_t weight_fallbacks = 0;  // relations whose W fell back to identity this epoch
  std::optional<double> validation;  // HITS@10 filtered or accuracy, both percent
};

struct TrainReport {
  TrainConfig config;
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  std::optional<double> best_validation;
  std::vector<std::string> warnings;
};

/// Uniform init in [-6/sqrt(k), 6/sqrt(k)], entity rows scaled to unit
/// norm, every W_r the identity.
inline EmbeddingModel init_model(const TripleSet& ts, const TrainConfig& cfg) {
  EmbeddingModel m;
  m.variant = cfg.variant;
  m.dim = cfg.dim;
  m.entities = Matrix(ts.num_entities(), cfg.dim);
  m.relations = Matrix(ts.num_relations(), cfg.dim);
  m.entity_names = ts.entities.names();
  m.relation_names = ts.relations.names();

  Rng rng(cfg.seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  std::uniform_real_distribution<double> uni(-bound, bound);
  for (double& v : m.entities.data()) v = uni(rng);
  for (double& v : m.relations.data()) v = uni(rng);
  for (std::size_t i = 0; i < m.num_entities(); ++i) {
    auto row = m.entities.row(i);
    const double n = std::sqrt(squared_norm(row));
    if (n > 0.0)
      for (double& v : row) v /= n;
  }
  if (has_weights(cfg.variant)) m.weights.assign(ts.num_relations(), Matrix::identity(cfg.dim));
  return m;
}

/// [pos + gamma - neg]_+
inline double hinge_term(double pos_score, double neg_score, double gamma) noexcept {
  return std::max(0.0, pos_score + gamma - neg_score);
}

using TriplePair = std::pair<Triple, Triple>;  // (positive, negative)

/// Margin ranking objective with both regularizers:
/// sum of hinges + lambda * sum ||W_r||_F^2 + C * (sum ||e||^2 + sum ||r||^2).
inline double objective(const EmbeddingModel& model, const TrainConfig& cfg, const std::vector<TriplePair>& pairs) {
  double hinge = 0.0;
  std::vector<double> e(model.dim), a(model.dim);
  for (const auto& [pos, neg] : pairs)
    hinge += hinge_term(model.score(pos.head, pos.relation, pos.tail, e, a),
                       model.score(neg.head, neg.relation, neg.tail, e, a), cfg.gamma);
  double wnorm = 0.0;
  for (const auto& w : model.weights) wnorm += frobenius_norm_sq(w);
  const double enorm = squared_norm(model.entities.data()) + squared_norm(model.relations.data());
  return hinge + cfg.lambda * wnorm + cfg.c_reg * enorm;
}

namespace detail {

/// Element access policy: plain for the deterministic single-worker path,
/// relaxed atomics when several workers share the tables.
template <bool Shared>
struct Access {
  static double load(const double& x) noexcept {
    if constexpr (Shared)
      return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
    else
      return x;
  }
  static void store(double& x, double v) noexcept {
    if constexpr (Shared)
      std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
    else
      x = v;
  }
};

/// Per-worker buffers for one positive/negative pair.
struct PairScratch {
  explicit PairScratch(std::size_t k)
      : e_pos(k), e_neg(k), abs_buf(k), de_pos(k), de_neg(k), rel(k), rel_grad(k) {
    for (auto& v : ent) v.assign(k, 0.0);
    for (auto& g : ent_grad) g.assign(k, 0.0);
  }
  std::vector<double> e_pos, e_neg, abs_buf, de_pos, de_neg, rel, rel_grad;
  std::array<EntityId, 4> ids{};
  std::array<std::vector<double>, 4> ent;
  std::array<std::vector<double>, 4> ent_grad;
  std::size_t n_ent = 0;

  std::size_t slot_of(EntityId id) {
    for (std::size_t i = 0; i < n_ent; ++i)
      if (ids[i] == id) return i;
    ids[n_ent] = id;
    return n_ent++;
  }
};

/// df/de for the model variant at loss vector e, written to `out`.
inline void loss_gradient(const EmbeddingModel& m, RelationId r, std::span<const double> e, std::span<double> abs_buf,
                          std::span<double> out) {
  switch (m.variant) {
    case Variant::transe:
      for (std::size_t i = 0; i < e.size(); ++i) out[i] = 2.0 * e[i];
      return;
    case Variant::transa:
      for (std::size_t i = 0; i < e.size(); ++i) abs_buf[i] = std::abs(e[i]);
      transa_loss_gradient(e, abs_buf, m.weights[r], out);
      return;
    case Variant::psd:
      symmetric_matvec(e, m.weights[r], out);
      for (double& v : out) v *= 2.0;
      return;
  }
}

/// One SGD step on a (positive, negative) pair. Returns the hinge value
/// measured before the step.
template <bool Shared>
double sgd_pair(EmbeddingModel& m, const TrainConfig& cfg, const Triple& pos, const Triple& neg, PairScratch& s) {
  using A = Access<Shared>;
  const std::size_t k = m.dim;
  s.n_ent = 0;
  const std::size_t ph = s.slot_of(pos.head), pt = s.slot_of(pos.tail);
  const std::size_t nh = s.slot_of(neg.head), nt = s.slot_of(neg.tail);
  for (std::size_t i = 0; i < s.n_ent; ++i) {
    const auto row = m.entities.row(s.ids[i]);
    for (std::size_t j = 0; j < k; ++j) s.ent[i][j] = A::load(row[j]);
    std::fill(s.ent_grad[i].begin(), s.ent_grad[i].end(), 0.0);
  }
  {
    const auto row = m.relations.row(pos.relation);
    for (std::size_t j = 0; j < k; ++j) s.rel[j] = A::load(row[j]);
  }
  for (std::size_t j = 0; j < k; ++j) {
    s.e_pos[j] = s.ent[ph][j] + s.rel[j] - s.ent[pt][j];
    s.e_neg[j] = s.ent[nh][j] + s.rel[j] - s.ent[nt][j];
  }
  const double pos_score = m.score_loss(pos.relation, s.e_pos, s.abs_buf);
  const double neg_score = m.score_loss(neg.relation, s.e_neg, s.abs_buf);
  const double hinge = hinge_term(pos_score, neg_score, cfg.gamma);

  std::fill(s.rel_grad.begin(), s.rel_grad.end(), 0.0);
  if (hinge > 0.0) {
    loss_gradient(m, pos.relation, s.e_pos, s.abs_buf, s.de_pos);
    loss_gradient(m, neg.relation, s.e_neg, s.abs_buf, s.de_neg);
    for (std::size_t j = 0; j < k; ++j) {
      s.ent_grad[ph][j] += s.de_pos[j];
      s.ent_grad[pt][j] -= s.de_pos[j];
      s.ent_grad[nh][j] -= s.de_neg[j];
      s.ent_grad[nt][j] += s.de_neg[j];
      s.rel_grad[j] += s.de_pos[j] - s.de_neg[j];
    }
  }

  const double decay = 2.0 * cfg.c_reg;
  for (std::size_t i = 0; i < s.n_ent; ++i) {
    auto& v = s.ent[i];
    for (std::size_t j = 0; j < k; ++j) v[j] -= cfg.alpha * (s.ent_grad[i][j] + decay * v[j]);
    if (cfg.unit_ball) {
      const double n = std::sqrt(squared_norm(v));
      if (n > 1.0)
        for (double& x : v) x /= n;
    }
    if (!all_finite(v)) {
      std::ostringstream os;
      os << "non-finite entity update (entity " << s.ids[i] << ", hinge " << hinge << ", pos score " << pos_score
         << ", neg score " << neg_score << ")";
      throw TrainingError(os.str());
    }
    auto row = m.entities.row(s.ids[i]);
    for (std::size_t j = 0; j < k; ++j) A::store(row[j], v[j]);
  }
  for (std::size_t j = 0; j < k; ++j) s.rel[j] -= cfg.alpha * (s.rel_grad[j] + decay * s.rel[j]);
  if (!all_finite(s.rel)) throw TrainingError("non-finite relation update (relation " + std::to_string(pos.relation) + ")");
  auto row = m.relations.row(pos.relation);
  for (std::size_t j = 0; j < k; ++j) A::store(row[j], s.rel[j]);
  return hinge;
}

inline double mean_entity_norm(const EmbeddingModel& m) {
  if (m.num_entities() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < m.num_entities(); ++i) s += std::sqrt(squared_norm(m.entities.row(i)));
  return s / static_cast<double>(m.num_entities());
}

}  // namespace detail

/// One pass over the shuffled training split with one fresh negative per
/// positive. W_r stays fixed during the pass. With cfg.workers > 1, shards
/// run concurrently and may race on shared rows.
inline EpochStats sgd_epoch(EmbeddingModel& model, const TripleSet& ts, const TrainConfig& cfg,
                            const Corrupter& corrupter, Rng& rng) {
  if (model.variant != cfg.variant || model.dim != cfg.dim)
    throw std::invalid_argument("sgd_epoch: model does not match config");
  const auto start = std::chrono::steady_clock::now();
  const auto& train = ts.train.triples;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t nbatches = (order.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<double> hinge_sum(std::max<std::size_t>(cfg.workers, 1), 0.0);
  std::vector<std::size_t> violations(hinge_sum.size(), 0);

  if (cfg.workers <= 1) {
    detail::PairScratch scratch(model.dim);
    for (std::size_t idx : order) {
      const Triple& pos = train[idx];
      const Triple neg = corrupter.corrupt(pos, rng);
      const double h = detail::sgd_pair<false>(model, cfg, pos, neg, scratch);
      hinge_sum[0] += h;
      violations[0] += h > 0.0;
    }
  } else {
    // Workers own whole minibatches; per-worker streams derive from the epoch stream.
    std::vector<std::uint64_t> seeds(cfg.workers);
    for (auto& s : seeds) s = rng();
    parallel_chunks(nbatches, cfg.workers, [&](std::size_t w, std::size_t b0, std::size_t b1) {
      Rng local(seeds[w]);
      detail::PairScratch scratch(model.dim);
      for (std::size_t b = b0; b < b1; ++b) {
        const std::size_t lo = b * cfg.batch_size, hi = std::min(order.size(), lo + cfg.batch_size);
        for (std::size_t i = lo; i < hi; ++i) {
          const Triple& pos = train[order[i]];
          const Triple neg = corrupter.corrupt(pos, local);
          const double h = detail::sgd_pair<true>(model, cfg, pos, neg, scratch);
          hinge_sum[w] += h;
          violations[w] += h > 0.0;
        }
      }
    });
  }

  EpochStats st;
  st.pairs = train.size();
  double total = 0.0;
  for (double h : hinge_sum) total += h;
  for (auto v : violations) st.violations += v;
  st.mean_hinge = st.pairs ? total / static_cast<double>(st.pairs) : 0.0;
  st.mean_entity_norm = detail::mean_entity_norm(model);
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!std::isfinite(st.mean_hinge) || !std::isfinite(st.mean_entity_norm))
    throw TrainingError("epoch produced non-finite statistics");
  return st;
}

// --- closed-form weight matrices --------------------------------------------

/// Signed sum of loss-vector outer products for one relation: negatives add,
/// positives subtract. Uses |e| for transa and the signed e for psd.
inline Matrix accumulate_weight_matrix(const EmbeddingModel& model, const std::vector<TriplePair>& pairs) {
  const std::size_t k = model.dim;
  Matrix acc(k, k);
  std::vector<double> v(k);
  auto add = [&](const Triple& t, double sign) {
    const auto h = model.entities.row(t.head);
    const auto r = model.relations.row(t.relation);
    const auto tl = model.entities.row(t.tail);
    for (std::size_t i = 0; i < k; ++i) {
      const double e = h[i] + r[i] - tl[i];
      v[i] = model.variant == Variant::psd ? e : std::abs(e);
    }
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) acc(i, j) += sign * (v[i] * v[j]);
  };
  for (const auto& [pos, neg] : pairs) {
    add(pos, -1.0);
    add(neg, +1.0);
  }
  return acc;
}

inline void clip_negative_entries(Matrix& w) {
  for (double& x : w.data())
    if (x < 0.0) x = 0.0;
}

/// Eigenvalue clipping onto the PSD cone; the result is made exactly symmetric.
inline void project_psd(Matrix& w) {
  const auto k = static_cast<Eigen::Index>(w.rows());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = w(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  Eigen::VectorXd ev = solver.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd p = solver.eigenvectors() * ev.asDiagonal() * solver.eigenvectors().transpose();
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j) {
      const double x = 0.5 * (p(i, j) + p(j, i));
      w(i, j) = x;
      w(j, i) = x;
    }
}

/// Divides by the largest entry. Returns false (leaving w untouched) when
/// that entry is not positive.
inline bool normalize_max_entry(Matrix& w) {
  double mx = 0.0;
  for (double x : w.data()) mx = std::max(mx, x);
  if (!(mx > 0.0)) return false;
  for (double& x : w.data()) x /= mx;
  return true;
}

struct WeightSolve {
  Matrix weights;
  bool fallback = false;  // zero matrix after clipping; identity installed
};

/// Closed-form metric for one relation from its sampled pairs, made
/// admissible (clipping for transa, PSD projection for psd), rescaled to a
/// unit maximum entry and installed into the model.
inline WeightSolve solve_weight_matrix(EmbeddingModel& model, RelationId relation, const std::vector<TriplePair>& pairs) {
  if (!has_weights(model.variant)) throw std::invalid_argument("solve_weight_matrix: transe has no weight matrices");
  if (pairs.empty()) throw std::invalid_argument("solve_weight_matrix: relation has no training pairs");
  WeightSolve out;
  out.weights = accumulate_weight_matrix(model, pairs);
  if (model.variant == Variant::transa)
    clip_negative_entries(out.weights);
  else
    project_psd(out.weights);
  if (!normalize_max_entry(out.weights)) {
    out.weights = Matrix::identity(model.dim);
    out.fallback = true;
  }
  model.weights.at(relation) = out.weights;
  return out;
}

/// Resamples one negative per training positive and re-solves W_r for every
/// relation present in the training split. Returns the relation ids that
/// fell back to the identity.
inline std::vector<RelationId> update_all_weights(EmbeddingModel& model, const TripleSet& ts,
                                                  const Corrupter& corrupter, Rng& rng, std::size_t workers = 1) {
  std::vector<std::vector<TriplePair>> by_relation(ts.num_relations());
  for (const auto& pos : ts.train.triples) by_relation[pos.relation].emplace_back(pos, corrupter.corrupt(pos, rng));
  std::vector<char> fell_back(ts.num_relations(), 0);
  // Embeddings are read-only here and each worker writes distinct W_r.
  parallel_chunks(ts.num_relations(), workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r)
      if (!by_relation[r].empty())
        fell_back[r] = solve_weight_matrix(model, static_cast<RelationId>(r), by_relation[r]).fallback;
  });
  std::vector<RelationId> out;
  for (RelationId r = 0; r < fell_back.size(); ++r)
    if (fell_back[r]) out.push_back(r);
  return out;
}

// --- full training loop -------------------------------------------------------

enum class ValidationMode { none, link, classification };

inline ValidationMode default_validation_mode(const TripleSet& ts) {
  if (ts.valid.size() == 0) return ValidationMode::none;
  return ts.valid.has_negatives() ? ValidationMode::classification : ValidationMode::link;
}

inline double validation_metric(const EmbeddingModel& model, const TripleSet& ts, ValidationMode mode,
                                const TrainConfig& cfg) {
  if (mode == ValidationMode::classification) {
    const auto th = tune_thresholds(model, ts.valid);
    return classify(model, th, ts.valid).accuracy;
  }
  return link_prediction(model, ts, ts.valid, {cfg.workers, cfg.valid_limit}).hits10_filtered;
}

struct TrainHooks {
  std::optional<ValidationMode> mode;  // default: inferred from the validation split
  std::function<void(const EmbeddingModel&, const EpochStats&)> on_improvement;
  std::function<void(const EmbeddingModel&, const EpochStats&)> on_epoch;
};

struct TrainResult {
  EmbeddingModel model;
  TrainReport report;
};

/// Alternates SGD passes with closed-form W_r solves and keeps the model with
/// the best validation score. Stops after `patience` rounds without gain.
inline TrainResult train(const TripleSet& ts, const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  cfg.validate();
  TrainResult res;
  res.report.config = cfg;
  EmbeddingModel model = init_model(ts, cfg);
  Corrupter corrupter(ts, {cfg.strategy, CorruptTarget::either, cfg.seed});
  // Separate stream from the initializer so init stays reproducible on its own.
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  const ValidationMode mode = cfg.validation_period == 0 ? ValidationMode::none
                                                         : hooks.mode.value_or(default_validation_mode(ts));
  std::optional<EmbeddingModel> best;
  std::size_t stale_rounds = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochStats st = sgd_epoch(model, ts, cfg, corrupter, rng);
    st.epoch = epoch;
    if (has_weights(cfg.variant) && epoch % cfg.w_update_period == 0) {
      const auto start = std::chrono::steady_clock::now();
      const auto fallbacks = update_all_weights(model, ts, corrupter, rng, cfg.workers);
      st.weight_fallbacks = fallbacks.size();
      for (RelationId r : fallbacks)
        res.report.warnings.push_back("epoch " + std::to_string(epoch) + ": W for relation '" +
                                      ts.relations.name(r) + "' is zero after clipping; using identity");
      st.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    bool stop = false;
    if (mode != ValidationMode::none && (epoch % cfg.validation_period == 0 || epoch == cfg.epochs)) {
      st.validation = validation_metric(model, ts, mode, cfg);
      if (!res.report.best_validation || *st.validation > *res.report.best_validation) {
        res.report.best_validation = st.validation;
        res.report.best_epoch = epoch;
        best = model;
        stale_rounds = 0;
        if (hooks.on_improvement) hooks.on_improvement(model, st);
      } else if (++stale_rounds >= cfg.patience) {
        stop = true;
      }
    }
    res.report.epochs.push_back(st);
    if (hooks.on_epoch) hooks.on_epoch(model, st);
    if (stop) break;
  }

  if (best) {
    res.model = std::move(*best);
  } else {
    res.model = std::move(model);
    res.report.best_epoch = res.report.epochs.back().epoch;
  }
  return res;
}

}  // namespace transa
