#include <doctest.h>

#include "mvembed/dataset.hpp"
#include "test_support.hpp"

#include <fstream>
#include <sstream>

using namespace mvembed;
using test_support::temp_dir;
using test_support::write_file;

TEST_CASE("manifest loading transposes samples into columns and aligns views") {
  const auto dir = temp_dir("load_basic");
  write_file(dir / "a.csv", "1,2\n3,4\n5,6\n7,8\n");
  write_file(dir / "b.csv", "10,20,30\n11,21,31\n12,22,32\n13,23,33\n");
  write_file(dir / "y.txt", "1\n1\n2\n2\n");
  write_file(dir / "manifest.json",
             R"({"views": ["a.csv", "b.csv"], "labels": "y.txt"})");

  const MultiViewDataset data = load_dataset(dir / "manifest.json");
  CHECK(data.view_count() == 2);
  CHECK(data.object_count() == 4);
  CHECK(data.view_dim(0) == 2);
  CHECK(data.view_dim(1) == 3);
  // first file line becomes the first column
  CHECK(data.views[0](0, 0) == 1.0);
  CHECK(data.views[0](1, 0) == 2.0);
  CHECK(data.views[1](2, 3) == 33.0);
  CHECK(data.labels == std::vector<int>{1, 1, 2, 2});
  CHECK(data.num_classes == 2);
}

TEST_CASE("views with different sample counts are rejected with both counts named") {
  const auto dir = temp_dir("load_mismatch");
  write_file(dir / "a.csv", "1,2\n3,4\n");
  write_file(dir / "b.csv", "1\n2\n3\n");
  write_file(dir / "y.txt", "1\n2\n");
  write_file(dir / "manifest.json", R"({"views": ["a.csv", "b.csv"], "labels": "y.txt"})");

  try {
    load_dataset(dir / "manifest.json");
    FAIL("expected a pairing error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("3") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
}

TEST_CASE("non-numeric and non-finite cells are reported with file position") {
  const auto dir = temp_dir("load_cells");
  write_file(dir / "y.txt", "1\n2\n");
  write_file(dir / "manifest.json", R"({"views": ["a.csv"], "labels": "y.txt"})");

  SUBCASE("text cell") {
    write_file(dir / "a.csv", "1,2\n3,oops\n");
    try {
      load_dataset(dir / "manifest.json");
      FAIL("expected a parse error");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("line 2") != std::string::npos);
      CHECK(msg.find("field 2") != std::string::npos);
    }
  }
  SUBCASE("nan cell") {
    write_file(dir / "a.csv", "1,2\nnan,4\n");
    try {
      load_dataset(dir / "manifest.json");
      FAIL("expected a finite-value error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("ragged row") {
    write_file(dir / "a.csv", "1,2\n3\n");
    CHECK_THROWS_AS(load_dataset(dir / "manifest.json"), Error);
  }
}

TEST_CASE("label values are remapped to dense ids with the alphabet recorded") {
  const auto dir = temp_dir("load_alphabet");
  write_file(dir / "a.csv", "1\n2\n3\n4\n");
  write_file(dir / "y.txt", "7\n3\n7\n9\n");
  write_file(dir / "manifest.json", R"({"views": ["a.csv"], "labels": "y.txt"})");

  const MultiViewDataset data = load_dataset(dir / "manifest.json");
  CHECK(data.labels == std::vector<int>{2, 1, 2, 3});
  CHECK(data.num_classes == 3);
  CHECK(data.label_alphabet == std::vector<long long>{3, 7, 9});
}

TEST_CASE("save and reload round-trips bit-exactly") {
  MultiViewDataset data = test_support::random_dataset(3, 4, 5, 6, 99);
  // exercise the alphabet path too
  data.label_alphabet = {10, 20, 30, 40};

  const auto dir = temp_dir("round_trip");
  save_dataset(data, dir);
  const MultiViewDataset back = load_dataset(dir / "manifest.json");

  REQUIRE(back.view_count() == data.view_count());
  REQUIRE(back.object_count() == data.object_count());
  for (int v = 0; v < data.view_count(); ++v) {
    CHECK(back.views[v].rows() == data.views[v].rows());
    // bit-exact: 17 significant digits survive the text round trip
    CHECK((back.views[v].array() == data.views[v].array()).all());
  }
  CHECK(back.labels == data.labels);
  CHECK(back.label_alphabet == data.label_alphabet);
}

TEST_CASE("synthetic generation is deterministic in the seed") {
  SyntheticSpec spec;
  spec.classes = 3;
  spec.objects_per_class = 7;
  spec.views = 2;
  spec.ambient_dim = 5;
  spec.noise_sigma = 0.2;
  spec.seed = 1234;

  const MultiViewDataset a = generate_synthetic(spec);
  const MultiViewDataset b = generate_synthetic(spec);
  for (int v = 0; v < 2; ++v) CHECK((a.views[v].array() == b.views[v].array()).all());
  CHECK(a.labels == b.labels);

  spec.seed = 1235;
  const MultiViewDataset c = generate_synthetic(spec);
  CHECK_FALSE((a.views[0].array() == c.views[0].array()).all());
}

TEST_CASE("two views built from the same transform stream coincide without noise") {
  SyntheticSpec spec;
  spec.classes = 2;
  spec.objects_per_class = 6;
  spec.views = 1;
  spec.ambient_dim = 4;
  spec.noise_sigma = 0.0;
  spec.seed = 7;

  const LatentCloud cloud = synthetic_latent(spec);
  const std::uint64_t shared = derive_seed(spec.seed, "view-transform", 0);
  const Matrix first = apply_view_transform(ViewTransform::linear_random, cloud.points,
                                            spec.ambient_dim, spec.class_separation, shared);
  const Matrix second = apply_view_transform(ViewTransform::linear_random, cloud.points,
                                             spec.ambient_dim, spec.class_separation, shared);
  CHECK((first.array() == second.array()).all());
}

TEST_CASE("well separated synthetic classes are linearly separable in every view") {
  SyntheticSpec spec;
  spec.classes = 2;
  spec.objects_per_class = 20;
  spec.views = 3;
  spec.ambient_dim = 6;
  spec.class_separation = 10.0;
  spec.noise_sigma = 0.01;
  spec.seed = 5;

  for (const ViewTransform t : {ViewTransform::linear_random, ViewTransform::rotation,
                                ViewTransform::tanh_warp, ViewTransform::swissroll_lift}) {
    spec.transform = t;
    const MultiViewDataset data = generate_synthetic(spec);
    for (int v = 0; v < data.view_count(); ++v) {
      // nearest-centroid is a linear rule for two classes
      const Matrix& x = data.views[v];
      Vector mean1 = Vector::Zero(x.rows()), mean2 = Vector::Zero(x.rows());
      for (Index k = 0; k < x.cols(); ++k)
        (data.labels[k] == 1 ? mean1 : mean2) += x.col(k);
      mean1 /= double(spec.objects_per_class);
      mean2 /= double(spec.objects_per_class);
      int correct = 0;
      for (Index k = 0; k < x.cols(); ++k) {
        const int guess = (x.col(k) - mean1).squaredNorm() <= (x.col(k) - mean2).squaredNorm() ? 1 : 2;
        if (guess == data.labels[k]) ++correct;
      }
      CHECK(correct == x.cols());
    }
  }
}

TEST_CASE("object split has exact counts, is disjoint and exhaustive") {
  const SplitSpec split = split_by_object(68, 45.0 / 68.0, 42);
  CHECK(split.train_objects.size() == 45);
  CHECK(split.test_objects.size() == 23);

  std::vector<char> seen(68, 0);
  for (const Index k : split.train_objects) seen[static_cast<std::size_t>(k)] += 1;
  for (const Index k : split.test_objects) seen[static_cast<std::size_t>(k)] += 1;
  for (const char c : seen) CHECK(c == 1);

  const SplitSpec again = split_by_object(68, 45.0 / 68.0, 42);
  CHECK(again.train_objects == split.train_objects);
  const SplitSpec other = split_by_object(68, 45.0 / 68.0, 43);
  CHECK(other.train_objects != split.train_objects);
}

TEST_CASE("degenerate splits are rejected") {
  CHECK_THROWS_AS(split_by_object(10, 1.0, 1), Error);
  CHECK_THROWS_AS(split_by_object(10, 0.0, 1), Error);
  CHECK_THROWS_AS(split_by_object(1, 0.5, 1), Error);
}

TEST_CASE("splitting a dataset preserves pairing within each side") {
  const MultiViewDataset data = test_support::random_dataset(2, 3, 8, 4, 11);
  const auto [train, test] = split_dataset(data, 0.75, 3);
  CHECK(train.object_count() == 18);
  CHECK(test.object_count() == 6);
  train.validate();
  test.validate();

  // column k of every training view must come from the same original object
  const SplitSpec split = split_by_object(data.object_count(), 0.75, 3);
  for (std::size_t i = 0; i < split.train_objects.size(); ++i) {
    const Index src = split.train_objects[i];
    for (int v = 0; v < data.view_count(); ++v)
      CHECK((train.views[v].col(Index(i)).array() == data.views[v].col(src).array()).all());
    CHECK(train.labels[i] == data.labels[static_cast<std::size_t>(src)]);
  }
}

TEST_CASE("label permutation changes exactly the rounded count and only to other classes") {
  MultiViewDataset data = test_support::random_dataset(2, 5, 108, 3, 21);
  REQUIRE(data.object_count() == 540);

  const MultiViewDataset noisy = permute_pair_labels(data, 0.2, 77);
  Index changed = 0;
  for (std::size_t k = 0; k < data.labels.size(); ++k) {
    if (noisy.labels[k] != data.labels[k]) {
      ++changed;
      CHECK(noisy.labels[k] >= 1);
      CHECK(noisy.labels[k] <= data.num_classes);
    }
  }
  CHECK(changed == 108);  // round(0.2 * 540), every touched object leaves its class

  const MultiViewDataset same = permute_pair_labels(data, 0.0, 77);
  CHECK(same.labels == data.labels);

  const MultiViewDataset reseeded = permute_pair_labels(data, 0.2, 78);
  CHECK(reseeded.labels != noisy.labels);
}

TEST_CASE("single-class data cannot receive label noise") {
  const MultiViewDataset data = test_support::random_dataset(2, 1, 10, 3, 31);
  CHECK_THROWS_AS(permute_pair_labels(data, 0.5, 1), Error);
}

TEST_CASE("validate rejects broken pairings and out-of-range labels") {
  MultiViewDataset data = test_support::random_dataset(2, 2, 5, 3, 41);
  SUBCASE("column mismatch") {
    data.views[1] = data.views[1].leftCols(9).eval();
    CHECK_THROWS_AS(data.validate(), Error);
  }
  SUBCASE("label out of range") {
    data.labels[0] = 9;
    CHECK_THROWS_AS(data.validate(), Error);
  }
  SUBCASE("non-finite entry") {
    data.views[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(data.validate(), Error);
  }
}
