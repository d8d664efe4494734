// Command-line front end: dataset statistics, training, link prediction,
// triple classification and metric diagnostics.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "manifest.hpp"
#include "transa/transa.hpp"

namespace fs = std::filesystem;
using namespace transa;

namespace {

constexpr const char* kDataRootEnv = "TRANSA_DATA_ROOT";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path resolve_dataset(const std::string& arg) {
  fs::path p(arg);
  if (fs::is_directory(p)) return p;
  if (const char* root = std::getenv(kDataRootEnv); root && fs::is_directory(fs::path(root) / p))
    return fs::path(root) / p;
  return p;  // load_dataset reports the missing directory
}

std::string fmt(double v, int precision = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

struct DatasetArgs {
  std::string dir;
  std::optional<std::string> column_order;
};

void add_dataset_options(CLI::App* app, DatasetArgs& a, bool required) {
  auto* opt = app->add_option("--dataset", a.dir, "Dataset directory (or name under $TRANSA_DATA_ROOT)");
  if (required) opt->required();
  app->add_option("--column-order", a.column_order, "Field order of the triple files: hrt or htr");
}

TripleSet load(const DatasetArgs& a, ColumnOrder fallback = ColumnOrder::hrt) {
  const ColumnOrder order = a.column_order ? parse_column_order(*a.column_order) : fallback;
  return load_dataset(resolve_dataset(a.dir), order);
}

nlohmann::json dataset_json(const DatasetArgs& a) {
  const auto dir = resolve_dataset(a.dir);
  const auto files = locate_dataset(dir);
  nlohmann::json j;
  j["dir"] = dir.string();
  for (const auto& f : {files.train, files.valid, files.test}) j["files"][f.filename().string()] = cli::file_hash(f);
  return j;
}

// --- stats ---------------------------------------------------------------------

int cmd_stats(const DatasetArgs& args) {
  const TripleSet ts = load(args);
  std::cout << "dataset,rel,ent,train,valid,test,atpe\n";
  std::cout << csv_field(resolve_dataset(args.dir).filename().string()) << "," << ts.num_relations() << ","
            << ts.num_entities() << "," << ts.train.positive_count() << "," << ts.valid.positive_count() << ","
            << ts.test.positive_count() << "," << fmt(atpe(ts)) << "\n";
  return 0;
}

// --- train ---------------------------------------------------------------------

struct TrainArgs {
  DatasetArgs data;
  std::optional<std::string> variant;
  std::optional<std::string> config;
  std::optional<std::string> preset;
  std::string out = "run";
  std::map<std::string, std::optional<std::string>> overrides;
};

int cmd_train(const TrainArgs& args, const std::vector<std::string>& argv) {
  // defaults < preset < config file < flags
  Preset preset = find_preset(args.preset.value_or("wn18"));
  TrainConfig cfg = preset.config;
  std::map<std::string, std::string> explicit_keys;
  if (args.config)
    for (const auto& [k, v] : read_config_file(*args.config)) {
      apply_setting(cfg, k, v);
      explicit_keys[*canonical_key(k)] = v;
    }
  for (const auto& [k, v] : args.overrides)
    if (v) {
      apply_setting(cfg, k, *v);
      explicit_keys[k] = *v;
    }
  if (args.variant) {
    cfg.variant = parse_variant(*args.variant);
    explicit_keys["variant"] = *args.variant;
  }
  cfg.validate();
  if (cfg.variant == Variant::transe)
    for (const char* k : {"lambda", "w_update_period"})
      if (explicit_keys.contains(k))
        std::cerr << "warning: " << k << " has no effect with --variant transe\n";

  DatasetArgs data = args.data;
  if (!data.column_order) data.column_order = preset.column_order == ColumnOrder::hrt ? "hrt" : "htr";
  const TripleSet ts = load(data);

  const fs::path out(args.out);
  fs::create_directories(out);
  cli::Manifest manifest("train", argv);
  for (const auto& [k, v] : describe(cfg)) manifest["config"][k] = v;
  manifest["config"]["column_order"] = *data.column_order;
  manifest["dataset"] = dataset_json(data);
  manifest["seed"] = cfg.seed;

  TrainHooks hooks;
  hooks.on_improvement = [&](const EmbeddingModel& m, const EpochStats& st) {
    const auto p = out / ("checkpoint-epoch" + std::to_string(st.epoch) + ".txt");
    save_checkpoint(m, p);
    manifest.add_artifact(p);
    std::cerr << "epoch " << st.epoch << ": validation " << fmt(*st.validation) << " (improved)\n";
  };
  hooks.on_epoch = [&](const EmbeddingModel&, const EpochStats& st) {
    std::cerr << "epoch " << st.epoch << " hinge " << fmt(st.mean_hinge, 4) << " violations " << st.violations
              << " norm " << fmt(st.mean_entity_norm, 4) << " " << fmt(st.seconds, 2) << "s\n";
  };
  const TrainResult result = transa::train(ts, cfg, hooks);

  const auto ckpt = out / "model.ckpt";
  save_checkpoint(result.model, ckpt);
  manifest.add_artifact(ckpt);
  const std::string hash = cli::file_hash(ckpt);

  const auto report_path = out / "train_report.csv";
  {
    auto rep = open_out(report_path);
    rep << "epoch,mean_hinge,violations,pairs,mean_entity_norm,seconds,weight_fallbacks,validation\n";
    rep << std::setprecision(10);
    for (const auto& e : result.report.epochs) {
      rep << e.epoch << "," << e.mean_hinge << "," << e.violations << "," << e.pairs << "," << e.mean_entity_norm << ","
          << e.seconds << "," << e.weight_fallbacks << ",";
      if (e.validation) rep << *e.validation;
      rep << "\n";
    }
  }
  manifest.add_artifact(report_path);
  manifest["checkpoint_hash"] = hash;
  manifest["best_epoch"] = result.report.best_epoch;
  if (result.report.best_validation) manifest["best_validation"] = *result.report.best_validation;
  manifest["warnings"] = result.report.warnings;
  manifest.write(out / "manifest.json");

  std::cout << "config";
  for (const auto& [k, v] : describe(cfg)) std::cout << " " << k << "=" << v;
  std::cout << "\ncheckpoint " << ckpt.string() << " sha1 " << hash << "\n";
  return 0;
}

// --- evaluation ----------------------------------------------------------------

struct EvalArgs {
  std::string model;
  DatasetArgs data;
  std::string out = ".";
  std::size_t workers = 1;
  std::size_t limit = 0;
  bool filtered_only = false;
};

int cmd_eval_link(const EvalArgs& args, const std::vector<std::string>& argv) {
  const EmbeddingModel model = load_checkpoint(args.model);
  const TripleSet ts = load(args.data);
  check_vocabulary(model, ts);
  const auto report = link_prediction(model, ts, {args.workers, args.limit});

  const fs::path out(args.out);
  fs::create_directories(out);
  cli::Manifest manifest("eval-link", argv);
  const std::string ckpt_hash = cli::file_hash(args.model);
  manifest["checkpoint_hash"] = ckpt_hash;
  manifest["dataset"] = dataset_json(args.data);

  const auto summary = out / "link_summary.csv";
  {
    auto f = open_out(summary);
    if (args.filtered_only) {
      f << "variant,checkpoint,mean_rank_filter,hits10_filter\n";
      f << to_string(model.variant) << "," << ckpt_hash << "," << fmt(report.mean_rank_filtered) << ","
        << fmt(report.hits10_filtered) << "\n";
    } else {
      f << "variant,checkpoint,mean_rank_raw,mean_rank_filter,hits10_raw,hits10_filter\n";
      f << to_string(model.variant) << "," << ckpt_hash << "," << fmt(report.mean_rank_raw) << ","
        << fmt(report.mean_rank_filtered) << "," << fmt(report.hits10_raw) << "," << fmt(report.hits10_filtered)
        << "\n";
    }
  }
  const auto by_cat = out / "link_by_category.csv";
  {
    auto f = open_out(by_cat);
    f << "task,setting,1-1,1-N,N-1,N-N\n";
    for (std::size_t slot = 0; slot < 2; ++slot)
      for (bool filtered : {true, false}) {
        if (!filtered && args.filtered_only) continue;
        f << (slot == 0 ? "predict_head" : "predict_tail") << "," << (filtered ? "filter" : "raw");
        for (const auto& cell : report.by_category[slot])
          f << "," << fmt(filtered ? cell.hits_filtered_percent() : cell.hits_raw_percent());
        f << "\n";
      }
  }
  const auto ranks = out / "link_ranks.csv";
  {
    auto f = open_out(ranks);
    f << "head,relation,tail,head_rank_raw,head_rank_filter,tail_rank_raw,tail_rank_filter\n";
    for (const auto& r : report.ranks)
      f << csv_field(ts.entities.name(r.triple.head)) << "," << csv_field(ts.relations.name(r.triple.relation)) << ","
        << csv_field(ts.entities.name(r.triple.tail)) << "," << r.head.raw << "," << r.head.filtered << ","
        << r.tail.raw << "," << r.tail.filtered << "\n";
  }
  for (const auto& p : {summary, by_cat, ranks}) manifest.add_artifact(p);
  manifest.write(out / "eval-link-manifest.json");

  std::cout << "checkpoint " << ckpt_hash << " (" << to_string(model.variant) << ")\n";
  if (!args.filtered_only)
    std::cout << "raw:    mean rank " << fmt(report.mean_rank_raw) << "  hits@10 " << fmt(report.hits10_raw) << "%\n";
  std::cout << "filter: mean rank " << fmt(report.mean_rank_filtered) << "  hits@10 " << fmt(report.hits10_filtered)
            << "%\n";
  if (report.uncategorized)
    std::cout << report.uncategorized << " test triples have relations unseen in training (no category)\n";
  return 0;
}

int cmd_eval_class(const EvalArgs& args, const std::vector<std::string>& argv) {
  const EmbeddingModel model = load_checkpoint(args.model);
  const TripleSet ts = load(args.data);
  check_vocabulary(model, ts);
  if (!ts.valid.labeled() || !ts.test.labeled()) throw LabelsRequired();
  const auto thresholds = tune_thresholds(model, ts.valid);
  const auto result = classify(model, thresholds, ts.test);

  const fs::path out(args.out);
  fs::create_directories(out);
  cli::Manifest manifest("eval-class", argv);
  const std::string ckpt_hash = cli::file_hash(args.model);
  manifest["checkpoint_hash"] = ckpt_hash;
  manifest["dataset"] = dataset_json(args.data);

  const auto summary = out / "class_summary.csv";
  {
    auto f = open_out(summary);
    f << "variant,checkpoint,accuracy,correct,total,fallback_threshold\n";
    f << to_string(model.variant) << "," << ckpt_hash << "," << fmt(result.accuracy) << "," << result.correct << ","
      << result.total << "," << std::setprecision(17) << thresholds.fallback << "\n";
  }
  const auto per_rel = out / "class_by_relation.csv";
  {
    auto f = open_out(per_rel);
    f << "relation,threshold,tuned,test_triples,accuracy\n";
    for (RelationId r = 0; r < model.num_relations(); ++r) {
      const auto acc = result.relation_accuracy(r);
      if (!acc) continue;
      f << csv_field(model.relation_names[r]) << "," << std::setprecision(17) << thresholds.threshold_for(r) << ","
        << (thresholds.per_relation[r] ? "yes" : "fallback") << "," << result.relation_total[r] << "," << fmt(*acc)
        << "\n";
    }
  }
  manifest.add_artifact(summary);
  manifest.add_artifact(per_rel);
  manifest.write(out / "eval-class-manifest.json");

  for (RelationId r : thresholds.missing)
    std::cerr << "warning: relation '" << model.relation_names[r] << "' has no validation triples; using fallback\n";
  std::cout << "checkpoint " << ckpt_hash << " (" << to_string(model.variant) << ")\n";
  std::cout << "accuracy " << fmt(result.accuracy) << "% (" << result.correct << "/" << result.total << ")\n";
  return 0;
}

// --- analysis ------------------------------------------------------------------

struct AnalyzeArgs {
  std::string model;
  DatasetArgs data;
  std::optional<std::string> out;
  std::string relation;
  std::optional<std::string> head;
  std::size_t neighbors = 50;
};

std::ostream& select_output(const std::optional<std::string>& path, std::ofstream& file) {
  if (!path) return std::cout;
  file = open_out(*path);
  return file;
}

int cmd_analyze_weights(const AnalyzeArgs& args) {
  const EmbeddingModel model = load_checkpoint(args.model);
  if (!has_weights(model.variant)) throw UsageError("analyze-weights needs a transa or psd checkpoint");

  std::optional<ClassificationResult> accuracy;
  if (!args.data.dir.empty()) {
    const TripleSet ts = load(args.data);
    check_vocabulary(model, ts);
    if (ts.valid.labeled() && ts.test.labeled()) accuracy = classify(model, tune_thresholds(model, ts.valid), ts.test);
  }

  std::ofstream file;
  std::ostream& out = select_output(args.out, file);
  out << "relation,weight_difference,flagged,accuracy\n";
  for (RelationId r = 0; r < model.num_relations(); ++r) {
    const auto f = ldl_decompose(model.weights[r]);
    const auto wd = weight_difference(f);
    out << csv_field(model.relation_names[r]) << ",";
    if (wd) out << std::setprecision(10) << *wd;
    out << "," << (f.perturbed ? "true" : "false") << ",";
    if (accuracy)
      if (auto a = accuracy->relation_accuracy(r)) out << fmt(*a);
    out << "\n";
  }
  return 0;
}

int cmd_export_pca(const AnalyzeArgs& args) {
  const EmbeddingModel model = load_checkpoint(args.model);
  const auto rel_it = std::find(model.relation_names.begin(), model.relation_names.end(), args.relation);
  if (rel_it == model.relation_names.end()) throw UsageError("unknown relation '" + args.relation + "'");
  const auto rel = static_cast<RelationId>(rel_it - model.relation_names.begin());

  std::vector<std::pair<std::string, std::string>> tags;  // (name, tag)
  std::vector<std::vector<double>> points;
  auto entity_point = [&](EntityId e) {
    const auto row = model.entities.row(e);
    return std::vector<double>(row.begin(), row.end());
  };

  if (args.data.dir.empty()) {
    for (EntityId e = 0; e < model.num_entities(); ++e) {
      points.push_back(entity_point(e));
      tags.emplace_back(model.entity_names[e], "entity");
    }
  } else {
    const TripleSet ts = load(args.data);
    check_vocabulary(model, ts);
    EntityId head = 0;
    if (args.head) {
      head = ts.entities.at(*args.head);
    } else {
      // the head with the most training tails under this relation
      std::size_t best = 0;
      for (const auto& t : ts.train.triples)
        if (t.relation == rel) {
          const auto n = ts.train_positive.tails_of(t.head, rel).size();
          if (n > best) best = n, head = t.head;
        }
      if (best == 0) throw UsageError("relation '" + args.relation + "' has no training triples");
    }
    const auto& matched = ts.train_positive.tails_of(head, rel);
    std::vector<double> anchor(model.dim);
    for (std::size_t i = 0; i < model.dim; ++i) anchor[i] = model.entities(head, i) + model.relations(rel, i);
    points.push_back(anchor);
    tags.emplace_back(ts.entities.name(head) + " + " + args.relation, "translation");
    for (EntityId e : matched) {
      points.push_back(entity_point(e));
      tags.emplace_back(ts.entities.name(e), "matched");
    }
    std::vector<std::pair<double, EntityId>> near;
    for (EntityId e = 0; e < model.num_entities(); ++e) {
      if (std::find(matched.begin(), matched.end(), e) != matched.end()) continue;
      double d = 0.0;
      for (std::size_t i = 0; i < model.dim; ++i) d += (anchor[i] - model.entities(e, i)) * (anchor[i] - model.entities(e, i));
      near.emplace_back(d, e);
    }
    const auto keep = std::min(args.neighbors, near.size());
    std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(keep), near.end());
    for (std::size_t i = 0; i < keep; ++i) {
      points.push_back(entity_point(near[i].second));
      tags.emplace_back(ts.entities.name(near[i].second), "unmatched");
    }
  }

  Matrix x(points.size(), model.dim);
  for (std::size_t i = 0; i < points.size(); ++i) std::copy(points[i].begin(), points[i].end(), x.row(i).begin());
  const auto proj = pca_project(x, 2);
  if (proj.zero_variance) std::cerr << "warning: vectors have zero variance; all coordinates are 0\n";

  std::ofstream file;
  std::ostream& out = select_output(args.out, file);
  out << "name,tag,x,y\n" << std::setprecision(10);
  for (std::size_t i = 0; i < points.size(); ++i)
    out << csv_field(tags[i].first) << "," << tags[i].second << "," << proj.coords(i, 0) << "," << proj.coords(i, 1)
        << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args_list(argv, argv + argc);
  CLI::App app{"Translation-based knowledge graph embeddings with an adaptive metric"};
  app.require_subcommand(1);

  DatasetArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Dataset statistics table");
  add_dataset_options(stats, stats_args, true);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model and write checkpoints");
  add_dataset_options(train, train_args.data, true);
  train->add_option("--variant", train_args.variant, "transe, transa or psd");
  train->add_option("--config", train_args.config, "Flat key = value config file");
  train->add_option("--preset", train_args.preset, "wn18, fb15k, wn11 or fb13 (default wn18)");
  train->add_option("--out", train_args.out, "Output directory")->capture_default_str();
  for (const char* key : {"alpha", "dim", "gamma", "lambda", "epochs", "batch_size", "strategy", "w_update_period",
                          "seed", "validation_period", "patience", "valid_limit", "workers", "unit_ball"}) {
    std::string flag = std::string("--") + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (std::string(key) == "dim") flag += ",-k";
    train->add_option(flag, train_args.overrides[key], std::string("Override ") + key);
  }
  train->add_option("-C,--C", train_args.overrides["c"], "Override C (embedding norm penalty)");

  EvalArgs link_args;
  auto* eval_link = app.add_subcommand("eval-link", "Link prediction: raw/filtered mean rank and HITS@10");
  eval_link->add_option("--model", link_args.model, "Checkpoint file")->required();
  add_dataset_options(eval_link, link_args.data, true);
  eval_link->add_flag("--filtered-only", link_args.filtered_only, "Only report the filtered setting");
  eval_link->add_option("--out", link_args.out, "Output directory")->capture_default_str();
  eval_link->add_option("--workers", link_args.workers, "Evaluation threads")->capture_default_str();
  eval_link->add_option("--limit", link_args.limit, "Rank only the first N test triples (0 = all)");

  EvalArgs class_args;
  auto* eval_class = app.add_subcommand("eval-class", "Triple classification accuracy");
  eval_class->add_option("--model", class_args.model, "Checkpoint file")->required();
  add_dataset_options(eval_class, class_args.data, true);
  eval_class->add_option("--out", class_args.out, "Output directory")->capture_default_str();
  eval_class->add_option("--workers", class_args.workers, "Accepted for symmetry; classification is single threaded");

  AnalyzeArgs weight_args;
  auto* analyze = app.add_subcommand("analyze-weights", "LDL weight-difference table per relation");
  analyze->add_option("--model", weight_args.model, "Checkpoint file")->required();
  add_dataset_options(analyze, weight_args.data, false);
  analyze->add_option("--out", weight_args.out, "Write CSV here instead of standard output");

  AnalyzeArgs pca_args;
  auto* pca = app.add_subcommand("export-pca", "2-D PCA coordinates for plotting");
  pca->add_option("--model", pca_args.model, "Checkpoint file")->required();
  pca->add_option("--relation", pca_args.relation, "Relation name")->required();
  add_dataset_options(pca, pca_args.data, false);
  pca->add_option("--head", pca_args.head, "Head entity (default: head with most tails)");
  pca->add_option("--neighbors", pca_args.neighbors, "Unmatched entities nearest to h + r")->capture_default_str();
  pca->add_option("--out", pca_args.out, "Write CSV here instead of standard output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "stats") return cmd_stats(stats_args);
    if (name == "train") return cmd_train(train_args, args_list);
    if (name == "eval-link") return cmd_eval_link(link_args, args_list);
    if (name == "eval-class") return cmd_eval_class(class_args, args_list);
    if (name == "analyze-weights") return cmd_analyze_weights(weight_args);
    if (name == "export-pca") return cmd_export_pca(pca_args);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << name << ": " << msg << "\n";
    return 1;
  }
  return 1;
}
