#include <doctest.h>

#include "gma/data.hpp"
#include "gma/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace gma;

namespace {

const std::string kDataDir = GMA_DATA_DIR;

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& content) {
    static int counter = 0;
    path = (std::filesystem::temp_directory_path() /
            ("gma_test_" + std::to_string(counter++) + ".csv"))
               .string();
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_dataset: iris has 150 rows, 4 features, 3 classes") {
  const Dataset ds =
      load_dataset(kDataDir + "/iris.csv", std::string("class"));
  CHECK(ds.rows() == 150);
  CHECK(ds.cols() == 4);
  REQUIRE(ds.labels.has_value());
  CHECK(ds.labels->categorical());
  CHECK(ds.labels->class_names.size() == 3);
  // Standardized columns: mean 0, unit variance.
  for (Eigen::Index j = 0; j < 4; ++j) {
    CHECK(std::abs(ds.features.col(j).mean()) <= 1e-12);
    const double var = ds.features.col(j).squaredNorm() / 150.0;
    CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("load_dataset: constant column standardizes to zero") {
  TempCsv tmp("a,b\n1.0,7\n2.0,7\n3.0,7\n");
  const Dataset ds = load_dataset(tmp.path, std::nullopt);
  CHECK(ds.rows() == 3);
  CHECK(ds.features.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ds.features.col(0).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("load_dataset: rows with missing cells are dropped") {
  std::string content = "a,b,y\n";
  for (int i = 0; i < 8; ++i) {
    content += std::to_string(i) + "," + std::to_string(i * 2) + ",c" +
               std::to_string(i % 2) + "\n";
  }
  content += "9,,c1\n?,3,c0\n";
  TempCsv tmp(content);
  const Dataset ds = load_dataset(tmp.path, std::string("y"));
  CHECK(ds.rows() == 8);
}

TEST_CASE("load_dataset: non-numeric feature cell is an error") {
  TempCsv tmp("a,b\n1,2\nfoo,3\n");
  CHECK_THROWS_AS(load_dataset(tmp.path, std::nullopt), DataError);
}

TEST_CASE("load_dataset: unreadable file and missing label column") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/nope.csv", std::nullopt),
                  DataError);
  TempCsv tmp("a,b\n1,2\n3,4\n");
  CHECK_THROWS_AS(load_dataset(tmp.path, std::string("missing")), DataError);
}

TEST_CASE("make_split: random split halves features disjointly") {
  const Dataset ds =
      load_dataset(kDataDir + "/seeds_synth.csv", std::string("class"));
  REQUIRE(ds.cols() == 7);
  const DomainPair pair = make_split(ds, SplitStrategy::Random, 42);
  CHECK(pair.x.cols() == 4);
  CHECK(pair.y.cols() == 3);
  std::set<int> seen;
  for (int f : pair.features_x) seen.insert(f);
  for (int f : pair.features_y) seen.insert(f);
  CHECK(seen.size() == 7);  // disjoint and exhaustive
  CHECK(pair.x.rows() == 210);
  CHECK(pair.y.rows() == 210);
}

TEST_CASE("make_split: rotation preserves within-domain distances") {
  const Dataset ds =
      load_dataset(kDataDir + "/iris.csv", std::string("class"));
  const DomainPair pair = make_split(ds, SplitStrategy::Rotation, 3);
  for (int i = 0; i < 20; ++i) {
    for (int j = i + 1; j < 20; ++j) {
      const double dx = (pair.x.row(i) - pair.x.row(j)).norm();
      const double dy = (pair.y.row(i) - pair.y.row(j)).norm();
      CHECK(std::abs(dx - dy) <= 1e-10);
    }
  }
}

TEST_CASE("make_split: zero-noise distortion copies the domain") {
  const Dataset ds =
      load_dataset(kDataDir + "/iris.csv", std::string("class"));
  SplitParams params;
  params.noise_sigma = 0.0;
  const DomainPair pair = make_split(ds, SplitStrategy::Distort, 9, params);
  CHECK((pair.x - pair.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("make_split: skewed puts the stronger half in X") {
  const Dataset ds =
      load_dataset(kDataDir + "/iris.csv", std::string("class"));
  const Vector importance = feature_importance(ds);
  const DomainPair pair = make_split(ds, SplitStrategy::Skewed, 1);
  REQUIRE(pair.features_x.size() == 2);
  REQUIRE(pair.features_y.size() == 2);
  double min_x = 2.0, max_y = -2.0;
  for (int f : pair.features_x) min_x = std::min(min_x, importance(f));
  for (int f : pair.features_y) max_y = std::max(max_y, importance(f));
  CHECK(min_x >= max_y);
}

TEST_CASE("make_split: even split alternates down the importance ranking") {
  const Dataset ds =
      load_dataset(kDataDir + "/wine.csv", std::string("class"));
  const Vector importance = feature_importance(ds);
  const DomainPair pair = make_split(ds, SplitStrategy::Even, 1);
  // The single most important feature lands in X.
  int best = 0;
  for (int f = 1; f < 13; ++f) {
    if (importance(f) > importance(best)) best = f;
  }
  CHECK(std::find(pair.features_x.begin(), pair.features_x.end(), best) !=
        pair.features_x.end());
  CHECK(pair.x.cols() == 7);
  CHECK(pair.y.cols() == 6);
}

TEST_CASE("make_split: errors") {
  TempCsv tmp("a\n1\n2\n3\n");
  const Dataset unlabeled = load_dataset(tmp.path, std::nullopt);
  CHECK_THROWS_AS(make_split(unlabeled, SplitStrategy::Random, 1), DataError);
  CHECK_THROWS_AS(make_split(unlabeled, SplitStrategy::Skewed, 1), DataError);
}

TEST_CASE("make_split: deterministic per seed") {
  const Dataset ds =
      load_dataset(kDataDir + "/seeds_synth.csv", std::string("class"));
  const DomainPair a = make_split(ds, SplitStrategy::Random, 7);
  const DomainPair b = make_split(ds, SplitStrategy::Random, 7);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.features_x == b.features_x);

  const DomainPair c = make_split(ds, SplitStrategy::Distort, 7);
  const DomainPair d = make_split(ds, SplitStrategy::Distort, 7);
  CHECK((c.y - d.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample_anchors: counts, determinism, range checks") {
  const Dataset ds =
      load_dataset(kDataDir + "/seeds_synth.csv", std::string("class"));
  const DomainPair pair = make_split(ds, SplitStrategy::Random, 11);

  const AnchorSet a = sample_anchors(pair, 0.10, 5);
  CHECK(a.size() == 21);  // ceil(0.10 * 210)
  std::set<int> left;
  for (const auto& [i, j] : a.pairs) {
    CHECK(i == j);
    left.insert(i);
  }
  CHECK(left.size() == a.size());

  const AnchorSet full = sample_anchors(pair, 1.0, 5);
  CHECK(full.size() == 210);

  const AnchorSet b = sample_anchors(pair, 0.10, 5);
  CHECK(a.pairs == b.pairs);

  CHECK_THROWS_AS(sample_anchors(pair, 0.0, 1), DataError);
  CHECK_THROWS_AS(sample_anchors(pair, 1.5, 1), DataError);
}

TEST_CASE("train_test_partition: anchor rows always train, counts match") {
  const Dataset ds =
      load_dataset(kDataDir + "/iris.csv", std::string("class"));
  const DomainPair pair = make_split(ds, SplitStrategy::Random, 2);
  const AnchorSet anchors = sample_anchors(pair, 0.10, 3);  // 15 anchors
  REQUIRE(anchors.size() == 15);

  const PartitionedPair part = train_test_partition(pair, anchors, 0.2, 4);
  CHECK(part.test_rows.size() == 30);  // round(0.2 * 150)
  CHECK(part.train_rows.size() == 120);
  for (const auto& [i, j] : anchors.pairs) {
    CHECK(part.orig_to_test[i] == -1);
    CHECK(part.orig_to_train[i] != -1);
    (void)j;
  }
  // Remapped anchors land on the same rows.
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const int orig = anchors.pairs[a].first;
    const int mapped = part.anchors.pairs[a].first;
    CHECK((part.train.x.row(mapped) - pair.x.row(orig))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("train_test_partition: stratified test counts within one sample "
          "per class") {
  // 3-class toy set with unequal class sizes; exhaustive count oracle.
  std::string content = "a,b,y\n";
  int row = 0;
  for (int c = 0; c < 3; ++c) {
    const int size = 30 + 30 * c;  // 30, 60, 90
    for (int i = 0; i < size; ++i) {
      content += std::to_string(row) + "," + std::to_string(row % 7) + ",c" +
                 std::to_string(c) + "\n";
      ++row;
    }
  }
  TempCsv tmp(content);
  const Dataset ds = load_dataset(tmp.path, std::string("y"));
  const DomainPair pair = make_split(ds, SplitStrategy::Distort, 5);
  AnchorSet none;
  none.fraction = 0.0;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const PartitionedPair part =
        train_test_partition(pair, none, 0.2, seed, true);
    std::map<int, int> test_counts;
    for (int r : part.test_rows) {
      test_counts[static_cast<int>(pair.labels_x->values[r])]++;
    }
    const std::map<int, int> class_sizes = {{0, 30}, {1, 60}, {2, 90}};
    for (const auto& [cls, n_cls] : class_sizes) {
      CHECK(std::abs(test_counts[cls] - 0.2 * n_cls) <= 1.0);
    }
  }
}

TEST_CASE("train_test_partition: rejects fractions that starve training") {
  TempCsv tmp("a,b\n1,2\n3,4\n5,6\n");
  const Dataset ds = load_dataset(tmp.path, std::nullopt);
  const DomainPair pair = make_split(ds, SplitStrategy::Distort, 1);
  AnchorSet none;
  CHECK_THROWS_AS(train_test_partition(pair, none, 0.9, 1), DataError);
  CHECK_THROWS_AS(train_test_partition(pair, none, 1.0, 1), DataError);
}

TEST_CASE("feature_importance: regression uses absolute correlation") {
  std::string content = "strong,weak,y\n";
  for (int i = 0; i < 40; ++i) {
    const double y = i * 0.5;
    content += std::to_string(y * 2.0) + "," + std::to_string((i * 37) % 11) +
               "," + std::to_string(y) + "\n";
  }
  TempCsv tmp(content);
  const Dataset ds = load_dataset(tmp.path, std::string("y"));
  REQUIRE(!ds.labels->categorical());
  const Vector imp = feature_importance(ds);
  CHECK(imp(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(imp(0) > imp(1));
}
