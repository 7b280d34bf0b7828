#include "gma/eval.hpp"

#include "gma/aligners.hpp"
#include "gma/data.hpp"
#include "gma/io.hpp"
#include "gma/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace gma {

namespace {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

struct TriangleStats {
  std::vector<double> values;  // upper triangle, row-major
  double mean = 0.0;
  double sd = 0.0;  // sqrt of mean squared deviation
};

TriangleStats triangle_stats(const Matrix& d) {
  const Eigen::Index n = d.rows();
  TriangleStats s;
  s.values.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      s.values.push_back(d(i, j));
    }
  }
  const double m = static_cast<double>(s.values.size());
  s.mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / m;
  double acc = 0.0;
  for (double v : s.values) acc += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(acc / m);
  return s;
}

double factorial_capped(int n, double cap) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) {
    f *= i;
    if (f > cap) return cap + 1.0;
  }
  return f;
}

}  // namespace

MantelResult mantel_test(const DistanceMatrix& d1, const DistanceMatrix& d2,
                         int n_perm, std::uint64_t seed) {
  const Eigen::Index n = d1.values.rows();
  if (d2.values.rows() != n || d1.values.cols() != n ||
      d2.values.cols() != n) {
    throw DataError("mantel_test: distance matrices must share shape");
  }
  if (n < 3) {
    throw DataError("mantel_test: need at least 3 points");
  }
  if (n_perm < 1) {
    throw DataError("mantel_test: n_perm must be >= 1");
  }

  const TriangleStats s1 = triangle_stats(d1.values);
  const TriangleStats s2 = triangle_stats(d2.values);
  if (s1.sd == 0.0 || s2.sd == 0.0) {
    throw DataError("mantel_test: zero-variance distance triangle");
  }
  const double m = static_cast<double>(s1.values.size());

  // A node permutation only reorders the triangle multiset of d2, so its
  // mean and sd are permutation-invariant; only the cross term changes.
  auto r_for = [&](const std::vector<int>& perm) {
    double cross = 0.0;
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        cross += s1.values[k++] * d2.values(perm[i], perm[j]);
      }
    }
    return (cross / m - s1.mean * s2.mean) / (s1.sd * s2.sd);
  };

  std::vector<int> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  const double r_obs = r_for(identity);

  MantelResult out;
  out.r = r_obs;
  out.seed = seed;

  const double n_fact = factorial_capped(static_cast<int>(n),
                                         static_cast<double>(n_perm) + 2.0);
  int count = 0;
  int used = 0;
  if (n_fact - 1.0 <= static_cast<double>(n_perm)) {
    std::vector<int> perm = identity;
    while (std::next_permutation(perm.begin(), perm.end())) {
      if (r_for(perm) >= r_obs) ++count;
      ++used;
    }
  } else {
    std::mt19937_64 rng(seed);
    std::vector<int> perm = identity;
    for (int p = 0; p < n_perm; ++p) {
      std::shuffle(perm.begin(), perm.end(), rng);
      if (r_for(perm) >= r_obs) ++count;
      ++used;
    }
  }
  out.n_permutations = used;
  out.p_value = (1.0 + count) / (1.0 + used);
  return out;
}

KnnResult knn_predict(const Matrix& train_x, const Labels& train_labels,
                      const Matrix& test_x, int k, KnnTask task,
                      const Labels* truth) {
  const Eigen::Index n_train = train_x.rows();
  const Eigen::Index n_test = test_x.rows();
  if (n_train == 0) {
    throw DataError("knn_predict: empty training set");
  }
  if (static_cast<Eigen::Index>(train_labels.size()) != n_train) {
    throw DataError("knn_predict: label count != training rows");
  }
  if (k < 1 || k > n_train) {
    throw DataError("knn_predict: k out of range");
  }
  if (train_x.cols() != test_x.cols()) {
    throw DataError("knn_predict: feature dimension mismatch");
  }

  KnnResult out;
  out.predictions.reserve(static_cast<std::size_t>(n_test));
  std::vector<int> order(static_cast<std::size_t>(n_train));
  for (Eigen::Index t = 0; t < n_test; ++t) {
    Vector d2 = (train_x.rowwise() - test_x.row(t)).rowwise().squaredNorm();
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](int a, int b) {
                        if (d2(a) != d2(b)) return d2(a) < d2(b);
                        return a < b;
                      });
    if (task == KnnTask::Classify) {
      std::map<int, int> votes;
      for (int i = 0; i < k; ++i) {
        votes[static_cast<int>(train_labels.values[order[i]])]++;
      }
      int best_label = -1, best_votes = -1;
      for (const auto& [label, v] : votes) {
        if (v > best_votes) {  // map iterates ascending: ties keep lowest
          best_votes = v;
          best_label = label;
        }
      }
      out.predictions.push_back(static_cast<double>(best_label));
    } else {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += train_labels.values[order[i]];
      out.predictions.push_back(acc / static_cast<double>(k));
    }
  }

  out.score = std::numeric_limits<double>::quiet_NaN();
  if (truth != nullptr) {
    if (truth->size() != out.predictions.size()) {
      throw DataError("knn_predict: truth size != test rows");
    }
    if (task == KnnTask::Classify) {
      int correct = 0;
      for (std::size_t i = 0; i < out.predictions.size(); ++i) {
        if (out.predictions[i] == truth->values[i]) ++correct;
      }
      out.score = static_cast<double>(correct) /
                  static_cast<double>(out.predictions.size());
    } else {
      double acc = 0.0;
      for (std::size_t i = 0; i < out.predictions.size(); ++i) {
        const double e = out.predictions[i] - truth->values[i];
        acc += e * e;
      }
      out.score = -std::sqrt(acc / static_cast<double>(out.predictions.size()));
    }
  }
  return out;
}

double cross_domain_mse(const Matrix& mapped, const Matrix& truth) {
  if (mapped.rows() != truth.rows() || mapped.cols() != truth.cols()) {
    throw DataError("cross_domain_mse: shape mismatch");
  }
  if (mapped.rows() == 0) {
    throw DataError("cross_domain_mse: empty input");
  }
  const double n = static_cast<double>(mapped.rows());
  const double d = static_cast<double>(mapped.cols());
  return (mapped - truth).squaredNorm() / (n * d);
}

void audit_no_leakage(const PartitionedPair& part,
                      const AnchorSet& original_anchors,
                      const AlignedEmbedding& training_embedding) {
  for (const auto& [i, j] : original_anchors.pairs) {
    if (part.orig_to_test[i] != -1 || part.orig_to_test[j] != -1) {
      throw DataError("leakage audit: anchor row found in test partition");
    }
    if (part.orig_to_train[i] == -1 || part.orig_to_train[j] == -1) {
      throw DataError("leakage audit: anchor row missing from train "
                      "partition");
    }
  }
  if (training_embedding.ex.rows() != part.train.x.rows() ||
      training_embedding.ey.rows() != part.train.y.rows()) {
    throw DataError("leakage audit: AE training embedding is not "
                    "train-rows-only");
  }
}

// ---------------------------------------------------------------------------
// Harness machinery
// ---------------------------------------------------------------------------

namespace {

struct Cell {
  std::string hash;
  std::function<std::vector<ReportRow>()> run;
};

std::string cell_hash_of(const json& identity) {
  return fnv1a64_hex(identity.dump());
}

json aligner_json(const AlignerConfig& a) {
  return json{{"dim", a.dim},          {"k", a.k},
              {"alpha", a.alpha},      {"mu", a.mu},
              {"t", a.t},              {"epsilon", a.epsilon},
              {"procrustes_scaling", a.procrustes_scaling}};
}

json train_json(const TrainConfig& t) {
  return json{{"epochs", t.epochs},
              {"learning_rate", t.learning_rate},
              {"optimizer", to_string(t.optimizer)},
              {"batch_size", t.batch_size},
              {"lambda", t.lambda},
              {"grad_clip", t.grad_clip ? *t.grad_clip : 0.0}};
}

json eval_cfg_json(const EvalConfig& cfg) {
  return json{{"anchor_fraction", cfg.anchor_fraction},
              {"test_fraction", cfg.test_fraction},
              {"stratified", cfg.stratified},
              {"mantel_permutations", cfg.mantel_permutations},
              {"knn_k", cfg.knn_k},
              {"noise_sigma", cfg.noise_sigma},
              {"hidden", cfg.hidden},
              {"aligner", aligner_json(cfg.aligner)},
              {"train", train_json(cfg.train)}};
}

// Runs cells not present in the cache, in parallel, and stitches rows in
// enumeration order so resumed and fresh runs produce identical files.
ExperimentReport execute_cells(
    std::vector<Cell> cells, const EvalConfig& cfg,
    const std::string& report_path) {
  std::map<std::string, std::vector<ReportRow>> cache;
  if (!report_path.empty()) {
    std::ifstream probe(report_path);
    if (probe.good()) {
      probe.close();
      for (auto& row : load_report(report_path).rows) {
        cache[row.cell_hash].push_back(std::move(row));
      }
    }
  }

  std::vector<std::vector<ReportRow>> results(cells.size());
  std::vector<int> pending;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto it = cache.find(cells[c].hash);
    if (it != cache.end()) {
      results[c] = it->second;
    } else {
      pending.push_back(static_cast<int>(c));
    }
  }

  const int jobs = std::max(1, cfg.jobs);
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= pending.size()) break;
      const int c = pending[idx];
      try {
        results[c] = cells[c].run();
      } catch (const std::exception& e) {
        std::scoped_lock lock(io_mutex);
        std::cerr << "[cell " << cells[c].hash << "] failed: " << e.what()
                  << "\n";
        ReportRow row;
        row.experiment = "error";
        row.metric = "error";
        row.value = std::numeric_limits<double>::quiet_NaN();
        row.cell_hash = cells[c].hash;
        results[c] = {row};
      }
    }
  };
  if (jobs == 1 || pending.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentReport report;
  for (auto& rows : results) {
    for (auto& row : rows) report.rows.push_back(std::move(row));
  }
  if (!report_path.empty()) {
    save_report(report_path, report);
  }
  return report;
}

struct CellData {
  DomainPair pair;
  AnchorSet anchors;  // original row space
  PartitionedPair part;
};

CellData prepare_cell(const Dataset& ds, SplitStrategy split,
                      std::uint64_t seed, const EvalConfig& cfg) {
  CellData cell;
  SplitParams params;
  params.noise_sigma = cfg.noise_sigma;
  cell.pair = make_split(ds, split, seed, params);
  cell.anchors =
      sample_anchors(cell.pair, cfg.anchor_fraction, sub_seed(seed, 1));
  cell.part = train_test_partition(cell.pair, cell.anchors,
                                   cfg.test_fraction, sub_seed(seed, 2),
                                   cfg.stratified);
  return cell;
}

AlignedEmbedding restrict_embedding(const AlignedEmbedding& emb,
                                    const std::vector<int>& rows) {
  AlignedEmbedding out;
  out.ex = select_rows(emb.ex, rows);
  out.ey = select_rows(emb.ey, rows);
  out.method = emb.method;
  out.dim = emb.dim;
  out.provenance = emb.provenance;
  return out;
}

TwinModel train_cell_model(const CellData& cell,
                           const AlignedEmbedding& aligned_train,
                           double lambda, std::uint64_t seed,
                           const EvalConfig& cfg) {
  audit_no_leakage(cell.part, cell.anchors, aligned_train);
  TwinModel model = init_twin(static_cast<int>(cell.part.train.x.cols()),
                              static_cast<int>(cell.part.train.y.cols()),
                              cfg.aligner.dim, cfg.hidden, sub_seed(seed, 3));
  TrainConfig tc = cfg.train;
  tc.lambda = lambda;
  tc.seed = sub_seed(seed, 4);
  train_twin(model, cell.part.train, aligned_train, cell.part.anchors, tc);
  return model;
}

Matrix stack_test_embedding(const TwinModel& model, const CellData& cell) {
  const Matrix ex = encode(model, Domain::X, cell.part.test.x);
  const Matrix ey = encode(model, Domain::Y, cell.part.test.y);
  Matrix all(ex.rows() + ey.rows(), ex.cols());
  all.topRows(ex.rows()) = ex;
  all.bottomRows(ey.rows()) = ey;
  return all;
}

Matrix stack_full_test_embedding(const AlignedEmbedding& emb,
                                 const std::vector<int>& test_rows) {
  const Matrix ex = select_rows(emb.ex, test_rows);
  const Matrix ey = select_rows(emb.ey, test_rows);
  Matrix all(ex.rows() + ey.rows(), ex.cols());
  all.topRows(ex.rows()) = ex;
  all.bottomRows(ey.rows()) = ey;
  return all;
}

KnnTask task_for(const Labels& labels) {
  return labels.categorical() ? KnnTask::Classify : KnnTask::Regress;
}

}  // namespace

ExperimentReport run_lambda_sweep(const std::vector<DatasetSpec>& datasets,
                                  SplitStrategy split,
                                  const std::vector<AlignMethod>& methods,
                                  const std::vector<double>& lambdas,
                                  const std::vector<std::uint64_t>& seeds,
                                  const EvalConfig& cfg,
                                  const std::string& report_path) {
  if (std::find(lambdas.begin(), lambdas.end(), 0.0) == lambdas.end()) {
    throw ConfigError("run_lambda_sweep: lambda list must include 0");
  }
  std::map<std::string, Dataset> loaded;
  for (const auto& spec : datasets) {
    loaded.emplace(spec.name, load_dataset(spec.path, spec.label_column,
                                           spec.standardize));
  }

  std::vector<Cell> cells;
  for (const auto& spec : datasets) {
    for (AlignMethod method : methods) {
      for (std::uint64_t seed : seeds) {
        json id = eval_cfg_json(cfg);
        id["experiment"] = "lambda_sweep";
        id["dataset"] = spec.name;
        id["split"] = to_string(split);
        id["method"] = to_string(method);
        id["lambdas"] = lambdas;
        id["seed"] = seed;
        const std::string hash = cell_hash_of(id);
        const Dataset* dsp = &loaded.at(spec.name);
        const std::string dataset_name = spec.name;
        cells.push_back(Cell{
            hash, [dsp, dataset_name, method, seed, hash, split, lambdas,
                   &cfg]() {
              CellData cell = prepare_cell(*dsp, split, seed, cfg);
              const AlignedEmbedding full =
                  run_aligner(method, cell.pair, cell.anchors, cfg.aligner);
              const AlignedEmbedding aligned_train =
                  restrict_embedding(full, cell.part.train_rows);
              const DistanceMatrix d_ma = pairwise_distances(
                  stack_full_test_embedding(full, cell.part.test_rows));

              std::vector<ReportRow> rows;
              for (double lambda : lambdas) {
                const TwinModel model =
                    train_cell_model(cell, aligned_train, lambda, seed, cfg);
                const DistanceMatrix d_ae =
                    pairwise_distances(stack_test_embedding(model, cell));
                const MantelResult mr =
                    mantel_test(d_ma, d_ae, cfg.mantel_permutations,
                                sub_seed(seed, 5));
                ReportRow base;
                base.experiment = "lambda_sweep";
                base.dataset = dataset_name;
                base.split = to_string(split);
                base.method = to_string(method);
                base.lambda = lambda;
                base.seed = seed;
                base.cell_hash = hash;
                base.metric = "mantel_r";
                base.value = mr.r;
                rows.push_back(base);
                base.metric = "mantel_p";
                base.value = mr.p_value;
                rows.push_back(base);
              }
              return rows;
            }});
      }
    }
  }
  return execute_cells(std::move(cells), cfg, report_path);
}

ExperimentReport run_embedding_fit(const std::vector<DatasetSpec>& datasets,
                                   const std::vector<SplitStrategy>& splits,
                                   const std::vector<AlignMethod>& methods,
                                   const std::vector<std::uint64_t>& seeds,
                                   const EvalConfig& cfg,
                                   const std::string& report_path) {
  std::map<std::string, Dataset> loaded;
  for (const auto& spec : datasets) {
    loaded.emplace(spec.name, load_dataset(spec.path, spec.label_column,
                                           spec.standardize));
  }

  std::vector<Cell> cells;
  for (const auto& spec : datasets) {
    for (SplitStrategy split : splits) {
      for (AlignMethod method : methods) {
        for (std::uint64_t seed : seeds) {
          json id = eval_cfg_json(cfg);
          id["experiment"] = "embedding_fit";
          id["dataset"] = spec.name;
          id["split"] = to_string(split);
          id["method"] = to_string(method);
          id["seed"] = seed;
          const std::string hash = cell_hash_of(id);
          const Dataset* dsp = &loaded.at(spec.name);
          const std::string dataset_name = spec.name;
          cells.push_back(Cell{
              hash, [dsp, dataset_name, method, seed, hash, split, &cfg]() {
                CellData cell = prepare_cell(*dsp, split, seed, cfg);
                const AlignedEmbedding full =
                    run_aligner(method, cell.pair, cell.anchors, cfg.aligner);
                const AlignedEmbedding aligned_train =
                    restrict_embedding(full, cell.part.train_rows);
                const DistanceMatrix d_ma = pairwise_distances(
                    stack_full_test_embedding(full, cell.part.test_rows));
                const TwinModel model = train_cell_model(
                    cell, aligned_train, cfg.train.lambda, seed, cfg);
                const DistanceMatrix d_ae =
                    pairwise_distances(stack_test_embedding(model, cell));
                const MantelResult mr =
                    mantel_test(d_ma, d_ae, cfg.mantel_permutations,
                                sub_seed(seed, 5));

                ReportRow base;
                base.experiment = "embedding_fit";
                base.dataset = dataset_name;
                base.split = to_string(split);
                base.method = to_string(method);
                base.lambda = cfg.train.lambda;
                base.seed = seed;
                base.cell_hash = hash;
                std::vector<ReportRow> rows;
                base.metric = "mantel_r";
                base.value = mr.r;
                rows.push_back(base);
                base.metric = "mantel_p";
                base.value = mr.p_value;
                rows.push_back(base);
                return rows;
              }});
        }
      }
    }
  }
  return execute_cells(std::move(cells), cfg, report_path);
}

ExperimentReport run_baseline_comparison(
    const std::vector<DatasetSpec>& datasets, SplitStrategy split,
    const std::vector<AlignMethod>& methods,
    const std::vector<std::uint64_t>& seeds, const EvalConfig& cfg,
    const std::string& report_path) {
  if (split != SplitStrategy::Skewed && split != SplitStrategy::Even) {
    throw ConfigError("run_baseline_comparison: split must be skewed or "
                      "even (weaker domain must be identifiable)");
  }
  std::map<std::string, Dataset> loaded;
  for (const auto& spec : datasets) {
    Dataset ds = load_dataset(spec.path, spec.label_column, spec.standardize);
    if (!ds.labels) {
      throw DataError("run_baseline_comparison: dataset '" + spec.name +
                      "' has no labels");
    }
    loaded.emplace(spec.name, std::move(ds));
  }

  std::vector<Cell> cells;
  for (const auto& spec : datasets) {
    for (AlignMethod method : methods) {
      for (std::uint64_t seed : seeds) {
        json id = eval_cfg_json(cfg);
        id["experiment"] = "baseline_comparison";
        id["dataset"] = spec.name;
        id["split"] = to_string(split);
        id["method"] = to_string(method);
        id["seed"] = seed;
        const std::string hash = cell_hash_of(id);
        const Dataset* dsp = &loaded.at(spec.name);
        const std::string dataset_name = spec.name;
        cells.push_back(Cell{
            hash, [dsp, dataset_name, method, seed, hash, split, &cfg]() {
              CellData cell = prepare_cell(*dsp, split, seed, cfg);
              const Labels& train_labels = *cell.part.train.labels_y;
              const Labels& test_labels = *cell.part.test.labels_y;
              const KnnTask task = task_for(train_labels);
              const int k = std::min<int>(
                  cfg.knn_k, static_cast<int>(cell.part.train.y.rows()));

              // Baseline: weaker domain (Y) raw features.
              const KnnResult baseline =
                  knn_predict(cell.part.train.y, train_labels,
                              cell.part.test.y, k, task, &test_labels);

              // Treatment: align training rows only, regularize the AEs,
              // then extend the weaker-domain test rows.
              const AlignedEmbedding aligned_train = run_aligner(
                  method, cell.part.train, cell.part.anchors, cfg.aligner);
              const TwinModel model = train_cell_model(
                  cell, aligned_train, cfg.train.lambda, seed, cfg);
              const Matrix test_coords =
                  encode(model, Domain::Y, cell.part.test.y);
              const KnnResult treatment =
                  knn_predict(aligned_train.ey, train_labels, test_coords, k,
                              task, &test_labels);

              ReportRow base;
              base.experiment = "baseline_comparison";
              base.dataset = dataset_name;
              base.split = to_string(split);
              base.method = to_string(method);
              base.lambda = cfg.train.lambda;
              base.seed = seed;
              base.cell_hash = hash;
              std::vector<ReportRow> rows;
              base.metric = "baseline_score";
              base.value = baseline.score;
              rows.push_back(base);
              base.metric = "treatment_score";
              base.value = treatment.score;
              rows.push_back(base);
              return rows;
            }});
      }
    }
  }
  return execute_cells(std::move(cells), cfg, report_path);
}

ExperimentReport run_mapping_comparison(
    const std::vector<DatasetSpec>& datasets,
    const std::vector<SplitStrategy>& splits,
    const std::vector<std::uint64_t>& seeds, const EvalConfig& cfg,
    const std::string& report_path) {
  std::map<std::string, Dataset> loaded;
  for (const auto& spec : datasets) {
    loaded.emplace(spec.name, load_dataset(spec.path, spec.label_column,
                                           spec.standardize));
  }

  std::vector<Cell> cells;
  for (const auto& spec : datasets) {
    for (SplitStrategy split : splits) {
      for (std::uint64_t seed : seeds) {
        json id = eval_cfg_json(cfg);
        id["experiment"] = "mapping_comparison";
        id["dataset"] = spec.name;
        id["split"] = to_string(split);
        id["method"] = to_string(cfg.mapping_method);
        id["seed"] = seed;
        const std::string hash = cell_hash_of(id);
        const Dataset* dsp = &loaded.at(spec.name);
        const std::string dataset_name = spec.name;
        cells.push_back(Cell{
            hash, [dsp, dataset_name, seed, hash, split, &cfg]() {
              CellData cell = prepare_cell(*dsp, split, seed, cfg);

              // Twin AE branch sees training rows only.
              const AlignedEmbedding aligned_train =
                  run_aligner(cfg.mapping_method, cell.part.train,
                              cell.part.anchors, cfg.aligner);
              const TwinModel model = train_cell_model(
                  cell, aligned_train, cfg.train.lambda, seed, cfg);
              const Matrix mapped_ae =
                  cross_map(model, Domain::X, cell.part.test.x);
              const double mse_ae =
                  cross_domain_mse(mapped_ae, cell.part.test.y);

              // Competing operators are data-tied: they need the test rows
              // inside the graph, so they run on the full pair, but project
              // onto training-row targets only (the truth rows stay out of
              // the weighted average).
              const Matrix mash_w =
                  mash_cross_weights(cell.pair, cell.anchors, cfg.aligner);
              const Matrix mash_sub = select_rows(
                  select_rows(mash_w.transpose(), cell.part.train_rows)
                      .transpose(),
                  cell.part.test_rows);
              const Matrix mapped_mash =
                  barycentric_project(mash_sub, cell.part.train.y);
              const double mse_mash =
                  cross_domain_mse(mapped_mash, cell.part.test.y);

              const Coupling coupling =
                  dta_coupling(cell.pair, cell.anchors, cfg.aligner);
              const Matrix dta_sub = select_rows(
                  select_rows(coupling.values.transpose(),
                              cell.part.train_rows)
                      .transpose(),
                  cell.part.test_rows);
              const Matrix mapped_dta =
                  barycentric_project(dta_sub, cell.part.train.y);
              const double mse_dta =
                  cross_domain_mse(mapped_dta, cell.part.test.y);

              ReportRow base;
              base.experiment = "mapping_comparison";
              base.dataset = dataset_name;
              base.split = to_string(split);
              base.method = to_string(cfg.mapping_method);
              base.lambda = cfg.train.lambda;
              base.seed = seed;
              base.cell_hash = hash;
              std::vector<ReportRow> rows;
              base.metric = "mse_twin_ae";
              base.value = mse_ae;
              rows.push_back(base);
              base.metric = "mse_mash_proj";
              base.value = mse_mash;
              rows.push_back(base);
              base.metric = "mse_dta_proj";
              base.value = mse_dta;
              rows.push_back(base);
              return rows;
            }});
      }
    }
  }
  return execute_cells(std::move(cells), cfg, report_path);
}

void save_report(const std::string& path, const ExperimentReport& report) {
  std::vector<std::string> header = {"experiment", "dataset", "split",
                                     "method",     "lambda",  "seed",
                                     "metric",     "value",   "cell_hash"};
  std::vector<std::vector<std::string>> rows;
  rows.reserve(report.rows.size());
  for (const auto& r : report.rows) {
    rows.push_back({r.experiment, r.dataset, r.split, r.method,
                    format_double(r.lambda), std::to_string(r.seed), r.metric,
                    format_double(r.value), r.cell_hash});
  }
  write_csv(path, header, rows);

  json summary;
  summary["rows"] = report.rows.size();
  summary["content_hash"] = hash_file(path);
  char stamp[32];
  std::time_t now = std::time(nullptr);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ",
                std::gmtime(&now));
  summary["completed_utc"] = stamp;  // not part of the content hash
  std::ofstream out(path + ".summary.json");
  out << summary.dump(2) << "\n";
}

ExperimentReport load_report(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::vector<std::string> expect = {"experiment", "dataset", "split",
                                           "method",     "lambda",  "seed",
                                           "metric",     "value",   "cell_hash"};
  if (table.header != expect) {
    throw DataError("report CSV has unexpected header: " + path);
  }
  ExperimentReport report;
  for (const auto& row : table.rows) {
    ReportRow r;
    r.experiment = row[0];
    r.dataset = row[1];
    r.split = row[2];
    r.method = row[3];
    r.lambda = std::stod(row[4]);
    r.seed = std::stoull(row[5]);
    r.metric = row[6];
    r.value = std::stod(row[7]);
    r.cell_hash = row[8];
    report.rows.push_back(std::move(r));
  }
  return report;
}

std::map<std::string, MetricSummary> summarize_by_method(
    const ExperimentReport& report, const std::string& metric) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& row : report.rows) {
    if (row.metric == metric && std::isfinite(row.value)) {
      values[row.method].push_back(row.value);
    }
  }
  std::map<std::string, MetricSummary> out;
  for (const auto& [method, v] : values) {
    MetricSummary s;
    s.count = static_cast<int>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) /
             static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.sd = v.size() > 1
               ? std::sqrt(acc / static_cast<double>(v.size() - 1))
               : 0.0;
    out[method] = s;
  }
  return out;
}

}  // namespace gma
