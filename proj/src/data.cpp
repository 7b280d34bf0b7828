#include "gma/data.hpp"

#include "gma/io.hpp"
#include "gma/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace gma {

namespace {

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "?" || cell == "NA" || cell == "NaN" ||
         cell == "nan";
}

bool parse_double(const std::string& cell, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(cell, &pos);
    while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) {
      ++pos;
    }
    return pos == cell.size() && std::isfinite(out);
  } catch (const std::exception&) {
    return false;
  }
}

void standardize_columns(Matrix& features) {
  const Eigen::Index n = features.rows();
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double mean = features.col(j).mean();
    const double var =
        (features.col(j).array() - mean).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      features.col(j) = (features.col(j).array() - mean) / sd;
    } else {
      features.col(j).setZero();
    }
  }
}

// Best training accuracy of a single-threshold split on one feature
// (majority label on each side), maximized over thresholds.
double one_rule_accuracy(const Vector& feature, const std::vector<int>& cls,
                         int n_classes) {
  const int n = static_cast<int>(feature.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return feature(a) < feature(b); });

  std::vector<int> left(n_classes, 0), right(n_classes, 0);
  for (int i = 0; i < n; ++i) right[cls[i]]++;

  auto majority = [](const std::vector<int>& counts) {
    return *std::max_element(counts.begin(), counts.end());
  };

  // All points on one side is a valid (degenerate) rule.
  int best = majority(right);
  for (int pos = 0; pos < n - 1; ++pos) {
    const int idx = order[pos];
    left[cls[idx]]++;
    right[cls[idx]]--;
    if (feature(order[pos]) == feature(order[pos + 1])) continue;
    best = std::max(best, majority(left) + majority(right));
  }
  return static_cast<double>(best) / static_cast<double>(n);
}

std::vector<int> importance_ranking(const Dataset& ds,
                                    const SplitParams& params) {
  const int d = static_cast<int>(ds.cols());
  Vector scores;
  if (params.importance_scores) {
    scores = *params.importance_scores;
    if (scores.size() != d) {
      throw DataError("make_split: importance score length != feature count");
    }
  } else {
    scores = feature_importance(ds);
  }
  std::vector<int> rank(d);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) {
    return scores(a) > scores(b);
  });
  return rank;  // most important first
}

DomainPair feature_split(const Dataset& ds, const std::vector<int>& to_x,
                         const std::vector<int>& to_y) {
  DomainPair pair;
  pair.x.resize(ds.rows(), static_cast<Eigen::Index>(to_x.size()));
  pair.y.resize(ds.rows(), static_cast<Eigen::Index>(to_y.size()));
  for (std::size_t c = 0; c < to_x.size(); ++c) {
    pair.x.col(static_cast<Eigen::Index>(c)) = ds.features.col(to_x[c]);
  }
  for (std::size_t c = 0; c < to_y.size(); ++c) {
    pair.y.col(static_cast<Eigen::Index>(c)) = ds.features.col(to_y[c]);
  }
  pair.features_x = to_x;
  pair.features_y = to_y;
  return pair;
}

}  // namespace

Dataset load_dataset(const std::string& path,
                     const std::optional<std::string>& label_column,
                     bool standardize, char sep) {
  const CsvTable table = read_csv(path, sep);
  if (table.header.empty()) {
    throw DataError("load_dataset: empty header in " + path);
  }

  int label_idx = -1;
  if (label_column) {
    const auto it =
        std::find(table.header.begin(), table.header.end(), *label_column);
    if (it == table.header.end()) {
      throw DataError("load_dataset: label column '" + *label_column +
                      "' not found in " + path);
    }
    label_idx = static_cast<int>(it - table.header.begin());
  }

  Dataset ds;
  ds.name = path;
  for (int j = 0; j < static_cast<int>(table.header.size()); ++j) {
    if (j != label_idx) ds.feature_names.push_back(table.header[j]);
  }
  const int d = static_cast<int>(ds.feature_names.size());
  if (d == 0) {
    throw DataError("load_dataset: no feature columns in " + path);
  }

  std::vector<std::vector<double>> feature_rows;
  std::vector<std::string> label_cells;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (static_cast<int>(row.size()) != static_cast<int>(table.header.size())) {
      std::ostringstream oss;
      oss << "load_dataset: row " << r + 2 << " has " << row.size()
          << " cells, expected " << table.header.size();
      throw DataError(oss.str());
    }
    bool missing = false;
    for (const auto& cell : row) {
      if (is_missing(cell)) {
        missing = true;
        break;
      }
    }
    if (missing) continue;

    std::vector<double> values;
    values.reserve(d);
    for (int j = 0; j < static_cast<int>(row.size()); ++j) {
      if (j == label_idx) continue;
      double v = 0.0;
      if (!parse_double(row[j], v)) {
        std::ostringstream oss;
        oss << "load_dataset: non-numeric feature cell '" << row[j]
            << "' (row " << r + 2 << ", column '" << table.header[j] << "')";
        throw DataError(oss.str());
      }
      values.push_back(v);
    }
    feature_rows.push_back(std::move(values));
    if (label_idx >= 0) label_cells.push_back(row[label_idx]);
  }

  const int n = static_cast<int>(feature_rows.size());
  if (n < 2) {
    throw DataError("load_dataset: fewer than 2 usable rows in " + path);
  }
  ds.features.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.features(i, j) = feature_rows[i][j];
  }

  if (label_idx >= 0) {
    Labels labels;
    labels.values.resize(n);
    bool all_numeric = true;
    std::vector<double> numeric(n);
    for (int i = 0; i < n; ++i) {
      if (!parse_double(label_cells[i], numeric[i])) {
        all_numeric = false;
        break;
      }
    }
    if (all_numeric) {
      labels.values = std::move(numeric);
    } else {
      std::map<std::string, int> index;
      for (const auto& cell : label_cells) index.emplace(cell, 0);
      int next = 0;
      for (auto& [name, idx] : index) idx = next++;
      labels.class_names.resize(index.size());
      for (const auto& [name, idx] : index) labels.class_names[idx] = name;
      for (int i = 0; i < n; ++i) {
        labels.values[i] = index.at(label_cells[i]);
      }
    }
    ds.labels = std::move(labels);
  }

  if (standardize) standardize_columns(ds.features);
  return ds;
}

Vector feature_importance(const Dataset& ds) {
  if (!ds.labels) {
    throw DataError("feature_importance: dataset has no labels");
  }
  const int n = static_cast<int>(ds.rows());
  const int d = static_cast<int>(ds.cols());
  Vector scores(d);

  if (ds.labels->categorical()) {
    std::vector<int> cls(n);
    for (int i = 0; i < n; ++i) {
      cls[i] = static_cast<int>(ds.labels->values[i]);
    }
    const int n_classes = static_cast<int>(ds.labels->class_names.size());
    for (int j = 0; j < d; ++j) {
      scores(j) = one_rule_accuracy(ds.features.col(j), cls, n_classes);
    }
  } else {
    Vector y = Eigen::Map<const Vector>(ds.labels->values.data(), n);
    const double ym = y.mean();
    const double ysd = std::sqrt((y.array() - ym).square().sum());
    for (int j = 0; j < d; ++j) {
      const Vector f = ds.features.col(j);
      const double fm = f.mean();
      const double fsd = std::sqrt((f.array() - fm).square().sum());
      if (fsd == 0.0 || ysd == 0.0) {
        scores(j) = 0.0;
      } else {
        scores(j) = std::abs(((f.array() - fm) * (y.array() - ym)).sum() /
                             (fsd * ysd));
      }
    }
  }
  return scores;
}

DomainPair make_split(const Dataset& ds, SplitStrategy strategy,
                      std::uint64_t seed, const SplitParams& params) {
  const int d = static_cast<int>(ds.cols());
  const bool is_feature_split = strategy == SplitStrategy::Random ||
                                strategy == SplitStrategy::Skewed ||
                                strategy == SplitStrategy::Even;
  if (is_feature_split && d < 2) {
    throw DataError("make_split: feature splits need at least 2 features");
  }
  if ((strategy == SplitStrategy::Skewed || strategy == SplitStrategy::Even) &&
      !ds.labels && !params.importance_scores) {
    throw DataError("make_split: importance-based split needs labels or "
                    "explicit importance scores");
  }

  DomainPair pair;
  const int half = (d + 1) / 2;  // ceil(d/2) features to X

  switch (strategy) {
    case SplitStrategy::Random: {
      std::vector<int> idx(d);
      std::iota(idx.begin(), idx.end(), 0);
      std::mt19937_64 rng(seed);
      std::shuffle(idx.begin(), idx.end(), rng);
      pair = feature_split(
          ds, std::vector<int>(idx.begin(), idx.begin() + half),
          std::vector<int>(idx.begin() + half, idx.end()));
      break;
    }
    case SplitStrategy::Skewed: {
      const std::vector<int> rank = importance_ranking(ds, params);
      pair = feature_split(
          ds, std::vector<int>(rank.begin(), rank.begin() + half),
          std::vector<int>(rank.begin() + half, rank.end()));
      break;
    }
    case SplitStrategy::Even: {
      const std::vector<int> rank = importance_ranking(ds, params);
      std::vector<int> to_x, to_y;
      for (int r = 0; r < d; ++r) {
        (r % 2 == 0 ? to_x : to_y).push_back(rank[r]);
      }
      pair = feature_split(ds, to_x, to_y);
      break;
    }
    case SplitStrategy::Distort: {
      pair.x = ds.features;
      pair.y = ds.features;
      if (params.noise_sigma < 0.0) {
        throw DataError("make_split: noise_sigma must be >= 0");
      }
      if (params.noise_sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, params.noise_sigma);
        for (Eigen::Index i = 0; i < pair.y.rows(); ++i) {
          for (Eigen::Index j = 0; j < pair.y.cols(); ++j) {
            pair.y(i, j) += gauss(rng);
          }
        }
      }
      break;
    }
    case SplitStrategy::Rotation: {
      pair.x = ds.features;
      pair.y = ds.features * random_rotation(d, seed);
      break;
    }
  }

  pair.labels_x = ds.labels;
  pair.labels_y = ds.labels;
  pair.strategy = strategy;
  pair.seed = seed;
  pair.dataset_name = ds.name;
  return pair;
}

AnchorSet sample_anchors(const DomainPair& pair, double fraction,
                         std::uint64_t seed) {
  if (pair.x.rows() != pair.y.rows()) {
    throw DataError("sample_anchors: pair does not have corresponding rows");
  }
  if (fraction <= 0.0 || fraction > 1.0) {
    throw DataError("sample_anchors: fraction must be in (0, 1]");
  }
  const int n = static_cast<int>(pair.x.rows());
  const int n_a = static_cast<int>(std::ceil(fraction * n));

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n_a);
  std::sort(idx.begin(), idx.end());

  AnchorSet anchors;
  anchors.fraction = fraction;
  anchors.pairs.reserve(n_a);
  for (int i : idx) anchors.pairs.emplace_back(i, i);
  return anchors;
}

PartitionedPair train_test_partition(const DomainPair& pair,
                                     const AnchorSet& anchors,
                                     double test_fraction, std::uint64_t seed,
                                     bool stratified) {
  if (pair.x.rows() != pair.y.rows()) {
    throw DataError("train_test_partition: pair rows do not correspond");
  }
  if (test_fraction <= 0.0 || test_fraction >= 1.0) {
    throw DataError("train_test_partition: test_fraction must be in (0, 1)");
  }
  const int n = static_cast<int>(pair.x.rows());

  std::vector<char> anchored(n, 0);
  for (const auto& [i, j] : anchors.pairs) {
    if (i != j || i < 0 || i >= n) {
      throw DataError("train_test_partition: anchors must be (i,i) pairs "
                      "within range");
    }
    anchored[i] = 1;
  }

  const int n_test = static_cast<int>(std::lround(test_fraction * n));
  std::vector<int> pool;  // non-anchor rows, candidates for test
  for (int i = 0; i < n; ++i) {
    if (!anchored[i]) pool.push_back(i);
  }
  if (n_test > static_cast<int>(pool.size()) || n - n_test < 2) {
    throw DataError("train_test_partition: test_fraction leaves too few "
                    "training rows");
  }

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<char> in_test(n, 0);

  const bool use_strata = stratified && pair.labels_x &&
                          pair.labels_x->categorical();
  if (use_strata) {
    // Largest-remainder apportionment of n_test across classes, restricted
    // to non-anchor rows.
    std::map<int, std::vector<int>> strata;
    for (int i : pool) {
      strata[static_cast<int>(pair.labels_x->values[i])].push_back(i);
    }
    std::vector<std::pair<double, int>> remainders;  // (frac part, class)
    std::map<int, int> take;
    int assigned = 0;
    const double ratio =
        static_cast<double>(n_test) / static_cast<double>(pool.size());
    for (auto& [cls, rows] : strata) {
      const double exact = ratio * static_cast<double>(rows.size());
      int base = static_cast<int>(std::floor(exact));
      base = std::min(base, static_cast<int>(rows.size()));
      take[cls] = base;
      assigned += base;
      remainders.emplace_back(exact - std::floor(exact), cls);
    }
    std::sort(remainders.begin(), remainders.end(), [](auto a, auto b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (std::size_t r = 0; assigned < n_test; ++r) {
      const int cls = remainders[r % remainders.size()].second;
      if (take[cls] < static_cast<int>(strata[cls].size())) {
        take[cls]++;
        assigned++;
      }
    }
    for (auto& [cls, rows] : strata) {
      std::shuffle(rows.begin(), rows.end(), rng);
      for (int t = 0; t < take[cls]; ++t) in_test[rows[t]] = 1;
    }
  } else {
    std::shuffle(pool.begin(), pool.end(), rng);
    for (int t = 0; t < n_test; ++t) in_test[pool[t]] = 1;
  }

  PartitionedPair out;
  out.orig_to_train.assign(n, -1);
  out.orig_to_test.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (in_test[i]) {
      out.orig_to_test[i] = static_cast<int>(out.test_rows.size());
      out.test_rows.push_back(i);
    } else {
      out.orig_to_train[i] = static_cast<int>(out.train_rows.size());
      out.train_rows.push_back(i);
    }
  }

  auto subset = [&](const std::vector<int>& rows) {
    DomainPair sub;
    sub.x = select_rows(pair.x, rows);
    sub.y = select_rows(pair.y, rows);
    if (pair.labels_x) sub.labels_x = select_labels(*pair.labels_x, rows);
    if (pair.labels_y) sub.labels_y = select_labels(*pair.labels_y, rows);
    sub.strategy = pair.strategy;
    sub.seed = pair.seed;
    sub.features_x = pair.features_x;
    sub.features_y = pair.features_y;
    sub.dataset_name = pair.dataset_name;
    return sub;
  };
  out.train = subset(out.train_rows);
  out.test = subset(out.test_rows);

  out.anchors.fraction = anchors.fraction;
  for (const auto& [i, j] : anchors.pairs) {
    out.anchors.pairs.emplace_back(out.orig_to_train[i], out.orig_to_train[j]);
  }
  return out;
}

Matrix select_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  }
  return out;
}

Labels select_labels(const Labels& l, const std::vector<int>& rows) {
  Labels out;
  out.class_names = l.class_names;
  out.values.reserve(rows.size());
  for (int r : rows) out.values.push_back(l.values[r]);
  return out;
}

const char* to_string(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::Random: return "random";
    case SplitStrategy::Skewed: return "skewed";
    case SplitStrategy::Even: return "even";
    case SplitStrategy::Distort: return "distort";
    case SplitStrategy::Rotation: return "rotation";
  }
  return "random";
}

SplitStrategy split_strategy_from_string(const std::string& s) {
  if (s == "random") return SplitStrategy::Random;
  if (s == "skewed") return SplitStrategy::Skewed;
  if (s == "even") return SplitStrategy::Even;
  if (s == "distort") return SplitStrategy::Distort;
  if (s == "rotation") return SplitStrategy::Rotation;
  throw ConfigError("unknown split strategy '" + s + "'");
}

const char* to_string(AlignMethod m) {
  switch (m) {
    case AlignMethod::JLMA: return "jlma";
    case AlignMethod::MAPA: return "mapa";
    case AlignMethod::SPUD: return "spud";
    case AlignMethod::MASH: return "mash";
    case AlignMethod::DTA: return "dta";
  }
  return "mash";
}

AlignMethod align_method_from_string(const std::string& s) {
  if (s == "jlma") return AlignMethod::JLMA;
  if (s == "mapa") return AlignMethod::MAPA;
  if (s == "spud") return AlignMethod::SPUD;
  if (s == "mash") return AlignMethod::MASH;
  if (s == "dta") return AlignMethod::DTA;
  throw ConfigError("unknown alignment method '" + s + "'");
}

}  // namespace gma
