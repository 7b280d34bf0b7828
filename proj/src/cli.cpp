#include "gma/cli.hpp"

#include "gma/aligners.hpp"
#include "gma/data.hpp"
#include "gma/io.hpp"
#include "gma/plot.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace gma {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown_keys(const json& obj, const std::string& section,
                         const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in section '" + section +
                        "'");
    }
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, const T& fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + key + "' has the wrong type");
  }
}

DatasetSpec parse_dataset(const json& obj, const std::string& section) {
  reject_unknown_keys(obj, section,
                      {"name", "path", "label_column", "standardize"});
  DatasetSpec spec;
  if (!obj.contains("path")) {
    throw ConfigError("section '" + section + "' needs a 'path'");
  }
  spec.path = obj.at("path").get<std::string>();
  spec.name = get_or<std::string>(obj, "name",
                                  fs::path(spec.path).stem().string());
  if (obj.contains("label_column") && !obj.at("label_column").is_null()) {
    spec.label_column = obj.at("label_column").get<std::string>();
  }
  spec.standardize = get_or(obj, "standardize", true);
  return spec;
}

void parse_aligner(const json& obj, AlignerConfig& a, AlignMethod& method) {
  reject_unknown_keys(obj, "aligner",
                      {"method", "dim", "k", "alpha", "mu", "t", "epsilon",
                       "eig_tol", "procrustes_scaling", "sinkhorn_tol",
                       "sinkhorn_max_iter"});
  if (obj.contains("method")) {
    method = align_method_from_string(obj.at("method").get<std::string>());
  }
  a.dim = get_or(obj, "dim", a.dim);
  a.k = get_or(obj, "k", a.k);
  a.alpha = get_or(obj, "alpha", a.alpha);
  a.mu = get_or(obj, "mu", a.mu);
  a.t = get_or(obj, "t", a.t);
  a.epsilon = get_or(obj, "epsilon", a.epsilon);
  a.eig_tol = get_or(obj, "eig_tol", a.eig_tol);
  a.procrustes_scaling = get_or(obj, "procrustes_scaling",
                                a.procrustes_scaling);
  a.sinkhorn_tol = get_or(obj, "sinkhorn_tol", a.sinkhorn_tol);
  a.sinkhorn_max_iter = get_or(obj, "sinkhorn_max_iter", a.sinkhorn_max_iter);
  if (a.dim < 1 || a.k < 1 || a.alpha < 1.0 || a.mu <= 0.0 || a.t < 1) {
    throw ConfigError("aligner: dim/k/alpha/mu/t must be positive "
                      "(alpha >= 1)");
  }
}

void parse_train(const json& obj, TrainConfig& t, std::vector<int>& hidden) {
  reject_unknown_keys(obj, "train",
                      {"epochs", "learning_rate", "optimizer", "batch_size",
                       "lambda", "grad_clip", "hidden", "joint_alternating"});
  t.epochs = get_or(obj, "epochs", t.epochs);
  t.learning_rate = get_or(obj, "learning_rate", t.learning_rate);
  if (obj.contains("optimizer")) {
    t.optimizer = optimizer_from_string(obj.at("optimizer").get<std::string>());
  }
  t.batch_size = get_or(obj, "batch_size", t.batch_size);
  t.lambda = get_or(obj, "lambda", t.lambda);
  if (obj.contains("grad_clip")) {
    if (obj.at("grad_clip").is_null()) {
      t.grad_clip.reset();
    } else {
      t.grad_clip = obj.at("grad_clip").get<double>();
    }
  }
  hidden = get_or(obj, "hidden", hidden);
  t.joint_alternating = get_or(obj, "joint_alternating", t.joint_alternating);
  if (t.epochs < 0 || t.learning_rate <= 0.0 || t.lambda < 0.0) {
    throw ConfigError("train: epochs/learning_rate/lambda out of range");
  }
}

}  // namespace

RunConfig parse_run_config_text(const std::string& json_text,
                                const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + origin + ": " + e.what());
  }
  if (!root.is_object()) {
    throw ConfigError("config root must be a JSON object (" + origin + ")");
  }
  reject_unknown_keys(root, "<root>",
                      {"seed", "output_dir", "dataset", "split", "anchors",
                       "partition", "aligner", "train", "eval"});

  RunConfig cfg;
  cfg.seed = get_or<std::uint64_t>(root, "seed", cfg.seed);
  cfg.output_dir = get_or<std::string>(root, "output_dir", cfg.output_dir);

  if (root.contains("dataset")) {
    cfg.dataset = parse_dataset(root.at("dataset"), "dataset");
  }
  if (root.contains("split")) {
    const json& s = root.at("split");
    reject_unknown_keys(s, "split", {"strategy", "noise_sigma"});
    if (s.contains("strategy")) {
      cfg.split = split_strategy_from_string(s.at("strategy").get<std::string>());
    }
    cfg.noise_sigma = get_or(s, "noise_sigma", cfg.noise_sigma);
  }
  if (root.contains("anchors")) {
    const json& a = root.at("anchors");
    reject_unknown_keys(a, "anchors", {"fraction"});
    cfg.anchor_fraction = get_or(a, "fraction", cfg.anchor_fraction);
    if (cfg.anchor_fraction <= 0.0 || cfg.anchor_fraction > 1.0) {
      throw ConfigError("anchors.fraction must be in (0, 1]");
    }
  }
  if (root.contains("partition")) {
    const json& p = root.at("partition");
    reject_unknown_keys(p, "partition", {"test_fraction", "stratified"});
    cfg.test_fraction = get_or(p, "test_fraction", cfg.test_fraction);
    cfg.stratified = get_or(p, "stratified", cfg.stratified);
    if (cfg.test_fraction <= 0.0 || cfg.test_fraction >= 1.0) {
      throw ConfigError("partition.test_fraction must be in (0, 1)");
    }
  }
  if (root.contains("aligner")) {
    parse_aligner(root.at("aligner"), cfg.aligner, cfg.method);
  }
  if (root.contains("train")) {
    parse_train(root.at("train"), cfg.train, cfg.hidden);
  }

  cfg.eval_datasets = {cfg.dataset};
  cfg.eval_splits = {cfg.split};
  cfg.eval_methods = {cfg.method};
  if (root.contains("eval")) {
    const json& e = root.at("eval");
    reject_unknown_keys(e, "eval",
                        {"harness", "datasets", "splits", "methods",
                         "lambdas", "seeds", "mantel_permutations", "knn_k",
                         "mapping_method", "jobs"});
    cfg.harness = get_or<std::string>(e, "harness", cfg.harness);
    if (e.contains("datasets")) {
      cfg.eval_datasets.clear();
      for (const auto& d : e.at("datasets")) {
        cfg.eval_datasets.push_back(parse_dataset(d, "eval.datasets[]"));
      }
    }
    if (e.contains("splits")) {
      cfg.eval_splits.clear();
      for (const auto& s : e.at("splits")) {
        cfg.eval_splits.push_back(
            split_strategy_from_string(s.get<std::string>()));
      }
    }
    if (e.contains("methods")) {
      cfg.eval_methods.clear();
      for (const auto& m : e.at("methods")) {
        cfg.eval_methods.push_back(
            align_method_from_string(m.get<std::string>()));
      }
    }
    cfg.lambdas = get_or(e, "lambdas", cfg.lambdas);
    cfg.seeds = get_or(e, "seeds", cfg.seeds);
    cfg.mantel_permutations =
        get_or(e, "mantel_permutations", cfg.mantel_permutations);
    cfg.knn_k = get_or(e, "knn_k", cfg.knn_k);
    if (e.contains("mapping_method")) {
      cfg.mapping_method =
          align_method_from_string(e.at("mapping_method").get<std::string>());
    }
    cfg.jobs = get_or(e, "jobs", cfg.jobs);
    const std::set<std::string> harnesses = {"lambda-sweep", "embedding-fit",
                                             "baseline", "mapping"};
    if (!harnesses.count(cfg.harness)) {
      throw ConfigError("eval.harness must be one of lambda-sweep, "
                        "embedding-fit, baseline, mapping");
    }
  }
  return cfg;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_run_config_text(text, path);
}

std::string effective_output_dir(const RunConfig& cfg) {
  const char* root = std::getenv("GMA_OUT_ROOT");
  if (root != nullptr && *root != '\0') {
    return (fs::path(root) / fs::path(cfg.output_dir).filename()).string();
  }
  return cfg.output_dir;
}

EvalConfig eval_config_of(const RunConfig& cfg) {
  EvalConfig ec;
  ec.anchor_fraction = cfg.anchor_fraction;
  ec.test_fraction = cfg.test_fraction;
  ec.stratified = cfg.stratified;
  ec.mantel_permutations = cfg.mantel_permutations;
  ec.knn_k = cfg.knn_k;
  ec.noise_sigma = cfg.noise_sigma;
  ec.aligner = cfg.aligner;
  ec.train = cfg.train;
  ec.hidden = cfg.hidden;
  ec.mapping_method = cfg.mapping_method;
  ec.jobs = cfg.jobs;
  return ec;
}

namespace {

json align_identity_json(const RunConfig& cfg) {
  json j;
  j["dataset_path"] = cfg.dataset.path;
  j["dataset_hash"] = hash_file(cfg.dataset.path);
  j["label_column"] =
      cfg.dataset.label_column ? json(*cfg.dataset.label_column) : json();
  j["standardize"] = cfg.dataset.standardize;
  j["split"] = to_string(cfg.split);
  j["noise_sigma"] = cfg.noise_sigma;
  j["anchor_fraction"] = cfg.anchor_fraction;
  j["seed"] = cfg.seed;
  j["method"] = to_string(cfg.method);
  j["aligner"] = {{"dim", cfg.aligner.dim},
                  {"k", cfg.aligner.k},
                  {"alpha", cfg.aligner.alpha},
                  {"mu", cfg.aligner.mu},
                  {"t", cfg.aligner.t},
                  {"epsilon", cfg.aligner.epsilon},
                  {"procrustes_scaling", cfg.aligner.procrustes_scaling}};
  return j;
}

struct Prepared {
  Dataset ds;
  DomainPair pair;
  AnchorSet anchors;
};

Prepared prepare(const RunConfig& cfg) {
  Prepared p;
  p.ds = load_dataset(cfg.dataset.path, cfg.dataset.label_column,
                      cfg.dataset.standardize);
  p.ds.name = cfg.dataset.name;
  SplitParams params;
  params.noise_sigma = cfg.noise_sigma;
  p.pair = make_split(p.ds, cfg.split, cfg.seed, params);
  std::uint64_t anchor_seed = cfg.seed ^ 0xa5a5a5a5a5a5a5a5ULL;
  p.anchors = sample_anchors(p.pair, cfg.anchor_fraction, anchor_seed);
  return p;
}

std::string labels_to_csv_value(const Labels& labels, std::size_t i) {
  if (labels.categorical()) {
    return labels.class_names[static_cast<std::size_t>(labels.values[i])];
  }
  return format_double(labels.values[i]);
}

void write_domain_csv(const std::string& path, const Matrix& features,
                      const std::optional<Labels>& labels,
                      const std::string& label_name) {
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    header.push_back("f" + std::to_string(j));
  }
  if (labels) header.push_back(label_name);
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      row.push_back(format_double(features(i, j)));
    }
    if (labels) {
      row.push_back(labels_to_csv_value(*labels, static_cast<std::size_t>(i)));
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

}  // namespace

std::string align_identity_hash(const RunConfig& cfg) {
  return fnv1a64_hex(align_identity_json(cfg).dump());
}

int cmd_split(const RunConfig& cfg) {
  const Prepared p = prepare(cfg);
  const fs::path out = effective_output_dir(cfg);
  fs::create_directories(out);

  write_domain_csv((out / "pair_x.csv").string(), p.pair.x, p.pair.labels_x,
                   "label");
  write_domain_csv((out / "pair_y.csv").string(), p.pair.y, p.pair.labels_y,
                   "label");

  json desc;
  desc["dataset"] = cfg.dataset.name;
  desc["strategy"] = to_string(cfg.split);
  desc["seed"] = cfg.seed;
  desc["features_x"] = p.pair.features_x;
  desc["features_y"] = p.pair.features_y;
  desc["anchor_fraction"] = cfg.anchor_fraction;
  json anchor_pairs = json::array();
  for (const auto& [i, j] : p.anchors.pairs) {
    anchor_pairs.push_back({i, j});
  }
  desc["anchors"] = anchor_pairs;
  desc["identity_hash"] = align_identity_hash(cfg);
  desc["pair_x_hash"] = hash_file((out / "pair_x.csv").string());
  desc["pair_y_hash"] = hash_file((out / "pair_y.csv").string());
  std::ofstream o(out / "pair.json");
  o << desc.dump(2) << "\n";
  std::cout << "wrote " << (out / "pair.json").string() << "\n";
  return 0;
}

int cmd_align(const RunConfig& cfg) {
  const Prepared p = prepare(cfg);
  const fs::path out = effective_output_dir(cfg);
  fs::create_directories(out);

  AlignedEmbedding emb;
  auto warn = [](const std::string& msg) {
    std::cerr << "warning: " << msg << "\n";
  };
  emb = run_aligner(cfg.method, p.pair, p.anchors, cfg.aligner, warn);
  emb.provenance = align_identity_json(cfg).dump();

  const std::string path = (out / "embedding.csv").string();
  save_embedding(path, emb);
  std::cout << "wrote " << path << " (" << emb.ex.rows() << "+"
            << emb.ey.rows() << " rows, dim " << emb.dim << ")\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& embedding_path) {
  const AlignedEmbedding emb = load_embedding(embedding_path);
  if (emb.provenance.empty()) {
    throw ProvenanceError("embedding has no provenance sidecar: " +
                          embedding_path);
  }
  const json recorded = json::parse(emb.provenance);
  const json expected = align_identity_json(cfg);
  if (recorded != expected) {
    throw ProvenanceError("embedding provenance does not match this config "
                          "(dataset/split/anchors/aligner differ)");
  }

  const Prepared p = prepare(cfg);
  const PartitionedPair part =
      train_test_partition(p.pair, p.anchors, cfg.test_fraction,
                           cfg.seed ^ 0x5a5a5a5a5a5a5a5aULL, cfg.stratified);

  AlignedEmbedding aligned_train;
  aligned_train.ex = select_rows(emb.ex, part.train_rows);
  aligned_train.ey = select_rows(emb.ey, part.train_rows);
  aligned_train.method = emb.method;
  aligned_train.dim = emb.dim;

  TwinModel model =
      init_twin(static_cast<int>(part.train.x.cols()),
                static_cast<int>(part.train.y.cols()), cfg.aligner.dim,
                cfg.hidden, cfg.seed ^ 0x3c3c3c3c3c3c3c3cULL);
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed ^ 0xc3c3c3c3c3c3c3c3ULL;
  const std::vector<LossReport> history =
      train_twin(model, part.train, aligned_train, part.anchors, tc);
  model.embedding_hash = hash_file(embedding_path);

  const fs::path out = effective_output_dir(cfg);
  fs::create_directories(out);
  save_model((out / "model.json").string(), model);

  std::vector<std::string> header = {"epoch",   "recon_x",  "recon_y",
                                     "align_x", "align_y",  "anchor_x",
                                     "anchor_y", "total"};
  std::vector<std::vector<std::string>> rows;
  for (std::size_t e = 0; e < history.size(); ++e) {
    const LossReport& h = history[e];
    rows.push_back({std::to_string(e), format_double(h.recon_x),
                    format_double(h.recon_y), format_double(h.align_x),
                    format_double(h.align_y), format_double(h.anchor_x),
                    format_double(h.anchor_y), format_double(h.total)});
  }
  write_csv((out / "history.csv").string(), header, rows);
  std::cout << "wrote " << (out / "model.json").string() << " and history ("
            << history.size() << " epochs)\n";
  return 0;
}

namespace {

Domain domain_from_string(const std::string& s) {
  if (s == "X" || s == "x") return Domain::X;
  if (s == "Y" || s == "y") return Domain::Y;
  throw ConfigError("domain must be X or Y, got '" + s + "'");
}

}  // namespace

int cmd_extend(const RunConfig& cfg, const std::string& model_path,
               const std::string& input_csv, const std::string& domain,
               const std::string& output_csv) {
  (void)cfg;
  const TwinModel model = load_model(model_path);
  const Matrix points = read_matrix_csv(input_csv);
  const Matrix coords = encode(model, domain_from_string(domain), points);
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < coords.cols(); ++j) {
    header.push_back("e_" + std::to_string(j + 1));
  }
  write_matrix_csv(output_csv, coords, header);
  std::cout << "wrote " << output_csv << "\n";
  return 0;
}

int cmd_crossmap(const RunConfig& cfg, const std::string& model_path,
                 const std::string& input_csv, const std::string& from_domain,
                 const std::string& output_csv) {
  (void)cfg;
  const TwinModel model = load_model(model_path);
  const Matrix points = read_matrix_csv(input_csv);
  const Matrix mapped =
      cross_map(model, domain_from_string(from_domain), points);
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < mapped.cols(); ++j) {
    header.push_back("f" + std::to_string(j));
  }
  write_matrix_csv(output_csv, mapped, header);
  std::cout << "wrote " << output_csv << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  const fs::path out = effective_output_dir(cfg);
  fs::create_directories(out);
  const std::string report_path = (out / "report.csv").string();
  const EvalConfig ec = eval_config_of(cfg);

  ExperimentReport report;
  if (cfg.harness == "lambda-sweep") {
    report = run_lambda_sweep(cfg.eval_datasets, cfg.eval_splits.front(),
                              cfg.eval_methods, cfg.lambdas, cfg.seeds, ec,
                              report_path);
  } else if (cfg.harness == "embedding-fit") {
    report = run_embedding_fit(cfg.eval_datasets, cfg.eval_splits,
                               cfg.eval_methods, cfg.seeds, ec, report_path);
  } else if (cfg.harness == "baseline") {
    report = run_baseline_comparison(cfg.eval_datasets,
                                     cfg.eval_splits.front(),
                                     cfg.eval_methods, cfg.seeds, ec,
                                     report_path);
  } else if (cfg.harness == "mapping") {
    report = run_mapping_comparison(cfg.eval_datasets, cfg.eval_splits,
                                    cfg.seeds, ec, report_path);
  } else {
    throw ConfigError("unknown harness '" + cfg.harness + "'");
  }

  if (cfg.harness == "embedding-fit") {
    const auto summary = summarize_by_method(report, "mantel_r");
    std::vector<std::string> header = {"method", "mean_r", "sd", "cells"};
    std::vector<std::vector<std::string>> rows;
    std::cout << "method      mean_r    sd\n";
    for (const auto& [method, s] : summary) {
      rows.push_back({method, format_double(s.mean), format_double(s.sd),
                      std::to_string(s.count)});
      std::printf("%-10s %8.3f  %6.3f\n", method.c_str(), s.mean, s.sd);
    }
    write_csv((out / "summary_table.csv").string(), header, rows);
  }
  std::cout << "wrote " << report_path << " (" << report.rows.size()
            << " rows)\n";
  return 0;
}

int cmd_plot(const std::string& report_csv, const std::string& harness,
             const std::string& output_svg) {
  const ExperimentReport report = load_report(report_csv);
  if (harness == "lambda-sweep") {
    plot_lambda_sweep(report, output_svg);
  } else if (harness == "embedding-fit") {
    plot_method_summary(report, "mantel_r", output_svg);
  } else if (harness == "baseline") {
    plot_baseline(report, output_svg);
  } else if (harness == "mapping") {
    plot_mapping(report, output_svg);
  } else {
    throw ConfigError("plot: unknown harness '" + harness + "'");
  }
  std::cout << "wrote " << output_svg << "\n";
  return 0;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  if (dynamic_cast<const ProvenanceError*>(&e)) return 5;
  return 1;
}

}  // namespace gma
