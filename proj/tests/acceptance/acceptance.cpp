// Acceptance gate. Prints one line per criterion:
//   criterion <n> PASS|FAIL|NOT RUN: <detail>
// Exit status: 1 if any selected criterion failed, 77 if none ran, else 0.
//
// Criteria 4-6 need the benchmark files under $TRANSA_DATA_ROOT (directories
// WN18, FB15K, WN11, FB13, any case). Criterion 5 also needs
// TRANSA_FULL_SCALE=1.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "json.hpp"
#include "transa/transa.hpp"

namespace fs = std::filesystem;
using namespace transa;

namespace {

enum class Status { pass, fail, not_run };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::fail, std::move(d)}; }
Outcome not_run(std::string d) { return {Status::not_run, std::move(d)}; }

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::optional<fs::path> benchmark_dir(const std::string& name) {
  const char* root = std::getenv("TRANSA_DATA_ROOT");
  if (!root || !fs::is_directory(root)) return std::nullopt;
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const auto& candidate : {name, lower})
    if (fs::is_directory(fs::path(root) / candidate)) return fs::path(root) / candidate;
  return std::nullopt;
}

// --- process helpers --------------------------------------------------------------

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

struct Run {
  int status = -1;
  std::string out;
};

Run run_argv(const std::vector<std::string>& argv) {
  std::string cmd;
  for (const auto& a : argv) cmd += quote(a) + " ";
  cmd += "2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

// --- criterion 1 -------------------------------------------------------------------

Outcome property_suite() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(-1.0, 1.0), u01(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  auto vec = [&](std::size_t k) {
    std::vector<double> v(k);
    for (auto& x : v) x = u(rng);
    return v;
  };
  auto nonneg_sym = [&](std::size_t k) {
    Matrix w(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i; j < k; ++j) w(i, j) = w(j, i) = u01(rng);
    return w;
  };
  std::vector<std::string> failures;

  // W_r symmetric and non-negative after every solve
  std::size_t solves = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto ts = transa::testing::random_kg(20, 3, 80, trial);
    auto m = transa::testing::random_model(ts, Variant::transa, 1 + trial % 12, trial);
    Corrupter c(ts, {});
    Rng r(trial);
    update_all_weights(m, ts, c, r);
    for (const auto& w : m.weights) {
      ++solves;
      for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j)
          if (w(i, j) < 0.0 || w(i, j) != w(j, i)) {
            failures.push_back("W not symmetric non-negative");
            i = w.rows();
            break;
          }
    }
  }

  // identity metric equals TransE
  double max_diff = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 1 + rng() % 64;
    auto h = vec(k), r = vec(k), t = vec(k);
    max_diff = std::max(max_diff, std::abs(score_transa(h, r, t, Matrix::identity(k)) - score_transe(h, r, t)));
  }
  if (max_diff > 1e-12) failures.push_back("score_transa(I) differs from TransE by " + std::to_string(max_diff));

  // triangle inequality over random non-negative symmetric W
  std::size_t violations = 0;
  double worst_excess = 0.0;
  std::size_t psd_violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 1 + rng() % 10;
    auto w = nonneg_sym(k);
    auto a = vec(k), b = vec(k), s = a;
    for (std::size_t j = 0; j < k; ++j) s[j] += b[j];
    const double excess = induced_norm(s, w) - induced_norm(a, w) - induced_norm(b, w);
    if (excess > 1e-9) ++violations;
    worst_excess = std::max(worst_excess, excess);
    // same vectors with the non-negative PSD matrix W W^T
    const auto p = multiply(w, transpose(w));
    if (induced_norm(s, p) > induced_norm(a, p) + induced_norm(b, p) + 1e-9) ++psd_violations;
  }
  if (violations > 0)
    failures.push_back("triangle inequality violated in " + std::to_string(violations) +
                       "/1000 cases with non-negative symmetric W (worst excess " + fixed(worst_excess, 4) +
                       "; e.g. W=[[0,1],[1,0]], e1=(1,0), e2=(0,1) gives sqrt(2) > 0 + 0); " +
                       std::to_string(psd_violations) + "/1000 violations when W is also PSD");

  // gradient against central differences
  double worst = 0.0;
  for (int checked = 0; checked < 500;) {
    const std::size_t k = 2 + rng() % 8;
    auto h = vec(k), r = vec(k), t = vec(k);
    const auto lv = loss_vector(h, r, t);
    if (*std::min_element(lv.abs_e.begin(), lv.abs_e.end()) <= 1e-3) continue;
    auto w = nonneg_sym(k);
    const auto grad = grad_transa(h, r, t, w);
    for (std::size_t i = 0; i < k; ++i) {
      auto hp = h, hm = h;
      hp[i] += 1e-5;
      hm[i] -= 1e-5;
      const double fd = (score_transa(hp, r, t, w) - score_transa(hm, r, t, w)) / 2e-5;
      worst = std::max(worst, std::abs(fd - grad.head[i]) / std::max(1e-8, std::max(std::abs(fd), std::abs(grad.head[i]))));
    }
    ++checked;
  }
  if (worst > 1e-4) failures.push_back("gradient relative error " + std::to_string(worst));

  // LDL reconstruction on random SPD matrices
  double worst_ldl = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 1 + rng() % 24;
    Matrix a(k, k);
    for (double& v : a.data()) v = g(rng);
    Matrix w = multiply(a, transpose(a));
    for (std::size_t j = 0; j < k; ++j) w(j, j) += 1e-3;
    const auto f = ldl_decompose(w);
    const double bound = 1e-8 * std::max(1.0, std::sqrt(frobenius_norm_sq(w)));
    worst_ldl = std::max(worst_ldl, frobenius_distance(ldl_reconstruct(f), w) / bound);
  }
  if (worst_ldl > 1.0) failures.push_back("LDL reconstruction exceeds bound by factor " + std::to_string(worst_ldl));

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs >= 60.0) failures.push_back("took " + fixed(secs) + " s");
  std::ostringstream d;
  d << solves << " W solves, max |transa(I)-transe| " << max_diff << ", worst gradient rel err " << worst
    << ", worst LDL residual/bound " << worst_ldl << ", " << fixed(secs) << " s";
  if (!failures.empty()) {
    std::string all;
    for (const auto& f : failures) all += f + "; ";
    return fail(all + d.str());
  }
  return pass(d.str());
}

// --- criterion 2 -------------------------------------------------------------------

Outcome ranking_oracle() {
  std::size_t compared = 0;
  std::size_t kgs = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto ts = transa::testing::random_kg(10 + 8 * seed, 1 + seed % 5, 40 + 30 * seed, seed);
    ++kgs;
    for (auto variant : {Variant::transe, Variant::transa, Variant::psd}) {
      auto m = transa::testing::random_model(ts, variant, 4, 100 + seed);
      const auto rep = link_prediction(m, ts);
      std::uint64_t sr = 0, sf = 0, hr = 0, hf = 0;
      for (const auto& tr : rep.ranks) {
        const std::array<std::pair<Slot, SlotRanks>, 2> slots{{{Slot::head, tr.head}, {Slot::tail, tr.tail}}};
        for (const auto& [slot, got] : slots) {
          if (got.raw != transa::testing::oracle_rank(m, ts, tr.triple, slot, false) ||
              got.filtered != transa::testing::oracle_rank(m, ts, tr.triple, slot, true))
            return fail("rank mismatch on KG " + std::to_string(seed) + " (" + to_string(variant) + ")");
          if (got.raw != rank_entity(m, tr.triple, slot, false, ts) || got.filtered != rank_entity(m, tr.triple, slot, true, ts))
            return fail("rank_entity disagrees with link_prediction");
          sr += got.raw, sf += got.filtered, hr += got.raw <= 10, hf += got.filtered <= 10;
          compared += 2;
        }
      }
      const double n = 2.0 * static_cast<double>(rep.ranks.size());
      if (rep.mean_rank_raw != static_cast<double>(sr) / n || rep.mean_rank_filtered != static_cast<double>(sf) / n ||
          rep.hits10_raw != 100.0 * static_cast<double>(hr) / n || rep.hits10_filtered != 100.0 * static_cast<double>(hf) / n)
        return fail("aggregate mismatch on KG " + std::to_string(seed));
    }
  }
  return pass(std::to_string(compared) + " ranks on " + std::to_string(kgs) + " KGs match the brute-force oracle; aggregates exact");
}

// --- criterion 3 -------------------------------------------------------------------

Outcome weight_fixture() {
  EmbeddingModel m;
  m.variant = Variant::transa;
  m.dim = 2;
  m.entities = Matrix(3, 2);
  m.entities(0, 0) = 1.0;  // positive (0, r, 2): |e| = (1, 0)
  m.entities(1, 1) = -1.0; // negative (1, r, 2): |e'| = (0, 1)
  m.relations = Matrix(1, 2);
  m.weights.assign(1, Matrix::identity(2));
  const std::vector<TriplePair> pairs{{Triple{0, 0, 2}, Triple{1, 0, 2}}};
  Matrix expect(2, 2);
  expect(1, 1) = 1.0;
  Matrix pre = accumulate_weight_matrix(m, pairs);
  Matrix pre_expect(2, 2);
  pre_expect(0, 0) = -1.0, pre_expect(1, 1) = 1.0;
  if (!(pre == pre_expect)) return fail("pre-clip matrix is not [[-1,0],[0,1]]");
  clip_negative_entries(pre);
  if (!(pre == expect)) return fail("clipped matrix is not [[0,0],[0,1]]");
  const auto solved = solve_weight_matrix(m, 0, pairs);
  if (solved.fallback || !(solved.weights == expect)) return fail("solve_weight_matrix is not [[0,0],[0,1]]");
  return pass("pre-clip [[-1,0],[0,1]], clipped and solved [[0,0],[0,1]] exactly");
}

// --- criterion 4 -------------------------------------------------------------------

double classification_accuracy(const TripleSet& ts, TrainConfig cfg) {
  const auto res = train(ts, cfg, {});
  return classify(res.model, tune_thresholds(res.model, ts.valid), ts.test).accuracy;
}

Outcome desk_scale_ordering() {
  const auto dir = benchmark_dir("WN11");
  if (!dir) return not_run("WN11 not found under $TRANSA_DATA_ROOT");
  const auto start = std::chrono::steady_clock::now();
  const auto preset = find_preset("wn11");
  const TripleSet ts = load_dataset(*dir, preset.column_order);
  TrainConfig cfg = preset.config;
  cfg.dim = 20;
  cfg.epochs = 100;
  cfg.strategy = SamplingStrategy::bern;
  cfg.workers = 1;
  cfg.seed = 42;
  cfg.variant = Variant::transe;
  const double transe = classification_accuracy(ts, cfg);
  cfg.variant = Variant::transa;
  const double transa = classification_accuracy(ts, cfg);
  const double mins = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  const std::string d = "TransA " + fixed(transa) + "% vs TransE " + fixed(transe) + "% (gap " + fixed(transa - transe) +
                        ", need >= 2.00), " + fixed(mins, 1) + " min";
  return transa - transe >= 2.0 ? pass(d) : fail(d);
}

// --- criterion 5 -------------------------------------------------------------------

Outcome full_scale() {
  const char* flag = std::getenv("TRANSA_FULL_SCALE");
  if (!flag || std::string(flag) != "1") return not_run("set TRANSA_FULL_SCALE=1 to run (hours)");
  std::vector<std::string> notes;
  bool ok = true, any = false;
  if (const auto dir = benchmark_dir("FB15K")) {
    any = true;
    const auto preset = find_preset("fb15k");
    const TripleSet ts = load_dataset(*dir, preset.column_order);
    TrainConfig cfg = preset.config;
    cfg.workers = 1;
    cfg.variant = Variant::transa;
    const double a = link_prediction(train(ts, cfg).model, ts).hits10_filtered;
    cfg.variant = Variant::transe;
    const double e = link_prediction(train(ts, cfg).model, ts).hits10_filtered;
    const bool good = std::abs(a - 80.4) <= 5.0 && a > e;
    ok &= good;
    notes.push_back("FB15K filtered HITS@10 TransA " + fixed(a) + " (target 80.4 +/- 5), TransE " + fixed(e));
  }
  for (const auto& [name, target] : std::vector<std::pair<std::string, double>>{{"WN11", 83.2}, {"FB13", 87.3}}) {
    const auto dir = benchmark_dir(name);
    if (!dir) continue;
    any = true;
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto preset = find_preset(lower);
    const TripleSet ts = load_dataset(*dir, preset.column_order);
    TrainConfig cfg = preset.config;
    cfg.workers = 1;
    const double acc = classification_accuracy(ts, cfg);
    ok &= std::abs(acc - target) <= 3.0;
    notes.push_back(name + " accuracy " + fixed(acc) + " (target " + fixed(target, 1) + " +/- 3)");
  }
  if (!any) return not_run("no FB15K, WN11 or FB13 under $TRANSA_DATA_ROOT");
  std::string d;
  for (const auto& n : notes) d += (d.empty() ? "" : "; ") + n;
  return ok ? pass(d) : fail(d);
}

// --- criterion 6 -------------------------------------------------------------------

struct TableRow {
  std::string name;
  std::string order;
  std::size_t rel, ent, train, valid, test;
  double atpe;
};

Outcome dataset_statistics() {
  const std::vector<TableRow> table{
      {"WN18", "hrt", 18, 40943, 141442, 5000, 5000, 3.70},
      {"FB15K", "htr", 1345, 14951, 483142, 50000, 59071, 39.61},
      {"WN11", "hrt", 11, 38696, 112581, 2609, 10544, 3.25},
      {"FB13", "hrt", 13, 75043, 316232, 5908, 23733, 4.61},
  };
  std::vector<std::string> notes, missing;
  bool ok = true;
  for (const auto& row : table) {
    const auto dir = benchmark_dir(row.name);
    if (!dir) {
      missing.push_back(row.name);
      continue;
    }
    const auto r = run_argv({TRANSA_CLI_PATH, "stats", "--dataset", dir->string(), "--column-order", row.order});
    std::istringstream lines(r.out);
    std::string header, line;
    std::getline(lines, header);
    std::getline(lines, line);
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (r.status != 0 || cells.size() != 7) {
      ok = false;
      notes.push_back(row.name + ": stats failed");
      continue;
    }
    const bool good = std::stoul(cells[1]) == row.rel && std::stoul(cells[2]) == row.ent &&
                      std::stoul(cells[3]) == row.train && std::stoul(cells[4]) == row.valid &&
                      std::stoul(cells[5]) == row.test && std::abs(std::stod(cells[6]) - row.atpe) <= 0.01 + 1e-9;
    ok &= good;
    notes.push_back(row.name + (good ? " matches" : " differs: " + line));
  }
  if (notes.empty()) return not_run("benchmark files not found under $TRANSA_DATA_ROOT");
  std::string d;
  for (const auto& n : notes) d += (d.empty() ? "" : "; ") + n;
  if (!missing.empty()) {
    d += "; missing";
    for (const auto& m : missing) d += " " + m;
    ok = false;
  }
  return ok ? pass(d) : fail(d);
}

// --- criterion 7 -------------------------------------------------------------------

Outcome replay_determinism() {
  const fs::path dir = fs::temp_directory_path() / "transa_acceptance_replay";
  fs::remove_all(dir);
  const auto data = dir / "data";
  transa::testing::write_classification_dataset(data);
  std::vector<std::string> summary;
  for (const std::string variant : {"transe", "transa", "psd"}) {
    const auto out = dir / variant;
    const auto first = run_argv({TRANSA_CLI_PATH, "train", "--dataset", data.string(), "--variant", variant, "--out",
                                 out.string(), "--epochs", "15", "--dim", "10", "--alpha", "0.01", "--gamma", "1",
                                 "--validation-period", "5", "--workers", "1", "--seed", "7"});
    if (first.status != 0) return fail("train failed for " + variant);
    const auto manifest = read_json(out / "manifest.json");
    const std::string hash = manifest.at("checkpoint_hash");
    const auto argv = manifest.at("argv").get<std::vector<std::string>>();
    fs::remove_all(out);
    if (run_argv(argv).status != 0) return fail("replay failed for " + variant);
    const std::string again = read_json(out / "manifest.json").at("checkpoint_hash");
    if (again != hash) return fail(variant + " replay hash " + again + " != " + hash);
    summary.push_back(variant + " " + hash.substr(0, 12));
  }
  fs::remove_all(dir);
  std::string d = "replayed manifests reproduce checkpoint hashes:";
  for (const auto& s : summary) d += " " + s;
  return pass(d);
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> criteria{
      {1, property_suite},      {2, ranking_oracle},     {3, weight_fixture},     {4, desk_scale_ordering},
      {5, full_scale},          {6, dataset_statistics}, {7, replay_determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      selected.insert(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--criterion N]...\n";
      return 2;
    }
  }
  if (selected.empty())
    for (const auto& [n, _] : criteria) selected.insert(n);

  bool any_fail = false, any_ran = false;
  std::optional<bool> c4_passed;
  std::map<int, Outcome> results;
  for (int n : selected) {
    const auto it = criteria.find(n);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << n << "\n";
      return 2;
    }
    Outcome o;
    try {
      o = it->second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* label = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "NOT RUN";
    std::cout << "criterion " << n << " " << label << ": " << o.detail << std::endl;
    if (n == 4 && o.status != Status::not_run) c4_passed = o.status == Status::pass;
    results.emplace(n, o);
  }
  for (const auto& [n, o] : results) {
    if (o.status == Status::not_run) continue;
    any_ran = true;
    // Full-scale misses are reported only, as long as the desk-scale ordering holds.
    if (n == 5 && o.status == Status::fail && c4_passed.value_or(false)) continue;
    any_fail |= o.status == Status::fail;
  }
  if (any_fail) return 1;
  return any_ran ? 0 : 77;
}
