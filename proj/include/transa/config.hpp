#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "transa/training.hpp"
#include "transa/triple_set.hpp"

namespace transa {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named hyperparameter sets, with the column order of the usual
/// distribution of each benchmark.
struct Preset {
  std::string name;
  TrainConfig config;
  ColumnOrder column_order = ColumnOrder::hrt;
};

inline std::vector<Preset> builtin_presets() {
  auto make = [](std::string name, double alpha, std::size_t dim, double gamma, double c, ColumnOrder order) {
    Preset p;
    p.name = std::move(name);
    p.config.alpha = alpha;
    p.config.dim = dim;
    p.config.gamma = gamma;
    p.config.c_reg = c;
    p.config.strategy = SamplingStrategy::bern;
    p.column_order = order;
    return p;
  };
  return {
      make("wn18", 0.001, 50, 2.0, 0.2, ColumnOrder::hrt),
      make("fb15k", 0.002, 200, 3.2, 0.2, ColumnOrder::htr),
      make("wn11", 0.02, 50, 10.0, 0.2, ColumnOrder::hrt),
      make("fb13", 0.002, 200, 3.0, 0.00002, ColumnOrder::hrt),
  };
}

inline Preset find_preset(std::string_view name) {
  for (auto& p : builtin_presets())
    if (p.name == name) return p;
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected wn18, fb15k, wn11 or fb13)");
}

namespace detail {

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size())
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(text) + "'");
  return value;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(text) + "'");
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// Canonical config key for an accepted spelling, or nullopt.
inline std::optional<std::string> canonical_key(std::string_view key) {
  static const std::map<std::string, std::string, std::less<>> aliases = {
      {"alpha", "alpha"}, {"learning_rate", "alpha"}, {"k", "dim"}, {"dim", "dim"}, {"gamma", "gamma"},
      {"margin", "gamma"}, {"c", "c"}, {"C", "c"}, {"lambda", "lambda"}, {"epochs", "epochs"},
      {"batch_size", "batch_size"}, {"strategy", "strategy"}, {"variant", "variant"},
      {"w_update_period", "w_update_period"}, {"seed", "seed"}, {"validation_period", "validation_period"},
      {"patience", "patience"}, {"valid_limit", "valid_limit"}, {"workers", "workers"}, {"unit_ball", "unit_ball"},
  };
  auto it = aliases.find(key);
  if (it == aliases.end()) return std::nullopt;
  return it->second;
}

inline void apply_setting(TrainConfig& cfg, std::string_view raw_key, std::string_view value) {
  const auto key = canonical_key(raw_key);
  if (!key) throw ConfigError("unknown config key '" + std::string(raw_key) + "'");
  using detail::parse_number;
  if (*key == "alpha") cfg.alpha = parse_number<double>(*key, value);
  else if (*key == "dim") cfg.dim = parse_number<std::size_t>(*key, value);
  else if (*key == "gamma") cfg.gamma = parse_number<double>(*key, value);
  else if (*key == "c") cfg.c_reg = parse_number<double>(*key, value);
  else if (*key == "lambda") cfg.lambda = parse_number<double>(*key, value);
  else if (*key == "epochs") cfg.epochs = parse_number<std::size_t>(*key, value);
  else if (*key == "batch_size") cfg.batch_size = parse_number<std::size_t>(*key, value);
  else if (*key == "strategy") cfg.strategy = parse_strategy(value);
  else if (*key == "variant") cfg.variant = parse_variant(value);
  else if (*key == "w_update_period") cfg.w_update_period = parse_number<std::size_t>(*key, value);
  else if (*key == "seed") cfg.seed = parse_number<std::uint64_t>(*key, value);
  else if (*key == "validation_period") cfg.validation_period = parse_number<std::size_t>(*key, value);
  else if (*key == "patience") cfg.patience = parse_number<std::size_t>(*key, value);
  else if (*key == "valid_limit") cfg.valid_limit = parse_number<std::size_t>(*key, value);
  else if (*key == "workers") cfg.workers = parse_number<std::size_t>(*key, value);
  else if (*key == "unit_ball") cfg.unit_ball = detail::parse_bool(*key, value);
}

/// Flat `key = value` text, '#' starts a comment. Returns the settings in
/// file order; keys are validated but not yet applied.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(std::istream& in,
                                                                          const std::string& source = "<config>") {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(no) + ": expected key = value");
    auto key = detail::trim(std::string_view(body).substr(0, eq));
    auto value = detail::trim(std::string_view(body).substr(eq + 1));
    if (!canonical_key(key)) throw ConfigError(source + ":" + std::to_string(no) + ": unknown key '" + key + "'");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config_text(in, path.string());
}

/// key=value rendering of every field, in a stable order.
inline std::vector<std::pair<std::string, std::string>> describe(const TrainConfig& c) {
  auto num = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  return {
      {"variant", to_string(c.variant)},
      {"alpha", num(c.alpha)},
      {"dim", std::to_string(c.dim)},
      {"gamma", num(c.gamma)},
      {"c", num(c.c_reg)},
      {"lambda", num(c.lambda)},
      {"epochs", std::to_string(c.epochs)},
      {"batch_size", std::to_string(c.batch_size)},
      {"strategy", to_string(c.strategy)},
      {"w_update_period", std::to_string(c.w_update_period)},
      {"seed", std::to_string(c.seed)},
      {"validation_period", std::to_string(c.validation_period)},
      {"patience", std::to_string(c.patience)},
      {"valid_limit", std::to_string(c.valid_limit)},
      {"workers", std::to_string(c.workers)},
      {"unit_ball", c.unit_ball ? "true" : "false"},
  };
}

}  // namespace transa
