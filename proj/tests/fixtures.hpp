#pragma once

// Synthetic knowledge graphs shared by the unit, CLI and acceptance suites.

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "transa/transa.hpp"

namespace transa::testing {

inline RawTriple raw(std::string h, std::string r, std::string t) { return {std::move(h), std::move(r), std::move(t), std::nullopt}; }

inline RawTriple labeled(std::string h, std::string r, std::string t, bool positive) {
  return {std::move(h), std::move(r), std::move(t), positive ? Label::positive : Label::negative};
}

inline std::string entity_name(std::size_t i) { return "e" + std::to_string(i); }
inline std::string relation_name(std::size_t i) { return "r" + std::to_string(i); }

/// Random KG with distinct triples split 70/15/15.
inline TripleSet random_kg(std::size_t entities, std::size_t relations, std::size_t triples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pe(0, entities - 1), pr(0, relations - 1);
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  std::vector<RawTriple> all;
  // Touch every entity and relation once so the vocabularies are complete.
  for (std::size_t i = 0; i < std::max(entities, relations); ++i) {
    auto key = std::make_tuple(i % entities, i % relations, (i + 1) % entities);
    if (seen.insert(key).second)
      all.push_back(raw(entity_name(i % entities), relation_name(i % relations), entity_name((i + 1) % entities)));
  }
  while (all.size() < triples) {
    auto key = std::make_tuple(pe(rng), pr(rng), pe(rng));
    if (!seen.insert(key).second) continue;
    all.push_back(raw(entity_name(std::get<0>(key)), relation_name(std::get<1>(key)), entity_name(std::get<2>(key))));
  }
  const std::size_t n_train = std::max<std::size_t>(std::max(entities, relations), all.size() * 70 / 100);
  const std::size_t n_valid = (all.size() - n_train) / 2;
  std::vector<RawTriple> train(all.begin(), all.begin() + n_train);
  std::vector<RawTriple> valid(all.begin() + n_train, all.begin() + n_train + n_valid);
  std::vector<RawTriple> test(all.begin() + n_train + n_valid, all.end());
  return build_tripleset(train, valid, test);
}

/// Random model over a dataset's vocabularies.
inline EmbeddingModel random_model(const TripleSet& ts, Variant variant, std::size_t dim, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.variant = variant;
  cfg.dim = dim;
  cfg.seed = seed;
  auto m = init_model(ts, cfg);
  if (variant != Variant::transe) {
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& w : m.weights)
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i; j < dim; ++j) w(i, j) = w(j, i) = u(rng);
    if (variant == Variant::psd)
      for (auto& w : m.weights) w = multiply(w, transpose(w));
  }
  return m;
}

inline void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << "\n";
}

/// Small classification-style benchmark on disk: train positives, labeled
/// valid/test with one corrupted negative per positive. The graph has
/// `groups` clusters; relation r links members of cluster c to cluster
/// (c + r + 1) mod groups.
inline void write_classification_dataset(const std::filesystem::path& dir, std::size_t groups = 6,
                                         std::size_t group_size = 6, std::size_t relations = 3,
                                         std::uint64_t seed = 7) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(seed);
  const std::size_t n = groups * group_size;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> facts;
  for (std::size_t r = 0; r < relations; ++r)
    for (std::size_t h = 0; h < n; ++h) {
      const std::size_t g = (h / group_size + r + 1) % groups;
      // two tails per head inside the target cluster
      for (std::size_t j = 0; j < 2; ++j) facts.emplace_back(h, r, g * group_size + (h + j * 3 + r) % group_size);
    }
  std::shuffle(facts.begin(), facts.end(), rng);
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> fact_set(facts.begin(), facts.end());
  const std::size_t n_eval = facts.size() / 10;
  std::vector<std::string> train, valid, test;
  std::uniform_int_distribution<std::size_t> pe(0, n - 1);
  auto line = [](std::size_t h, std::size_t r, std::size_t t) {
    return entity_name(h) + "\t" + relation_name(r) + "\t" + entity_name(t);
  };
  for (std::size_t i = 0; i < facts.size(); ++i) {
    auto [h, r, t] = facts[i];
    if (i >= 2 * n_eval) {
      train.push_back(line(h, r, t));
      continue;
    }
    auto& split = i < n_eval ? valid : test;
    split.push_back(line(h, r, t) + "\t1");
    std::size_t c;
    do c = pe(rng);
    while (fact_set.contains({h, r, c}));
    split.push_back(line(h, r, c) + "\t-1");
  }
  write_lines(dir / "train.txt", train);
  write_lines(dir / "valid.txt", valid);
  write_lines(dir / "test.txt", test);
}

}  // namespace transa::testing
