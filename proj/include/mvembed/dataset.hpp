#pragma once

#include "mvembed/common.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace mvembed {

// Paired multi-view sample collection. views[v] holds one column per object;
// column k of every view observes the same underlying object, which is what
// "paired" means throughout this library. Labels are dense ids 1..num_classes.
struct MultiViewDataset {
  std::vector<Matrix> views;
  std::vector<int> labels;
  int num_classes = 0;
  // Dense id c -> label value found in the source file. Empty for datasets
  // that were born dense (synthetic data, programmatic construction).
  std::vector<long long> label_alphabet;

  int view_count() const { return static_cast<int>(views.size()); }
  Index object_count() const { return views.empty() ? 0 : views.front().cols(); }
  Index view_dim(int v) const { return views[static_cast<std::size_t>(v)].rows(); }

  // Throws Error("dataset", ...) when pairing or label invariants are broken:
  // equal column counts across views, label count == object count, labels
  // dense in 1..num_classes, finite entries.
  void validate() const;
};

// Object-level split; the same object ids apply to every view, so a pairing
// never straddles the boundary. Both sides keep their original relative order.
struct SplitSpec {
  std::vector<Index> train_objects;
  std::vector<Index> test_objects;
  std::uint64_t seed = 0;
};

enum class ViewTransform { linear_random, rotation, tanh_warp, swissroll_lift };

ViewTransform parse_view_transform(const std::string& name);
std::string view_transform_name(ViewTransform t);

struct SyntheticSpec {
  int classes = 2;
  int objects_per_class = 10;
  int views = 2;
  int ambient_dim = 5;
  ViewTransform transform = ViewTransform::linear_random;
  double class_separation = 6.0;
  double noise_sigma = 0.1;
  std::uint64_t seed = 1;
};

// Manifest-driven loading. The manifest is a JSON object
//   {"views": ["view1.csv", ...], "labels": "labels.txt"}
// with paths resolved relative to the manifest's directory. A view file holds
// one sample per line (comma-separated reals); samples become columns in
// memory. Labels are one integer per line and are remapped to dense 1..C with
// the original values kept in label_alphabet. Any malformed cell is reported
// with file, line and column position.
MultiViewDataset load_dataset(const std::filesystem::path& manifest_path);

// Inverse of load_dataset: writes manifest.json, view<k>.csv and labels.txt
// into `dir`. Values are printed with 17 significant digits so a round trip
// through load_dataset is bit-exact.
void save_dataset(const MultiViewDataset& data, const std::filesystem::path& dir);

// Latent class geometry shared by all views: standard-normal class centers
// rescaled so the minimum pairwise center distance equals class_separation,
// plus unit isotropic within-class scatter. Labels come out in contiguous
// class blocks. Exposed separately from generate_synthetic so a caller can
// push one latent cloud through several transforms.
struct LatentCloud {
  Matrix points;  // latent_dim x m
  std::vector<int> labels;
};
LatentCloud synthetic_latent(const SyntheticSpec& spec);

// Deterministic per-view lift of latent points into ambient_dim dimensions.
// The transform is drawn entirely from `transform_seed`; two calls with the
// same seed produce the same map.
Matrix apply_view_transform(ViewTransform transform, const Matrix& latent, int ambient_dim,
                            double class_separation, std::uint64_t transform_seed);

MultiViewDataset generate_synthetic(const SyntheticSpec& spec);

// Shuffles object ids with the seed's "split" substream and cuts off
// round(train_fraction * m) objects for training. Degenerate splits (either
// side empty) are errors.
SplitSpec split_by_object(Index object_count, double train_fraction, std::uint64_t seed);

// Restriction of a dataset to the given object columns, keeping their order.
MultiViewDataset select_objects(const MultiViewDataset& data, const std::vector<Index>& objects);

std::pair<MultiViewDataset, MultiViewDataset> split_dataset(const MultiViewDataset& data,
                                                            double train_fraction,
                                                            std::uint64_t seed);

// Label-noise injection: exactly round(fraction * m) objects, chosen without
// replacement, receive a label drawn uniformly from the other classes. Labels
// live at object level, so the relabeling is consistent across views by
// construction. fraction 0 returns the input unchanged.
MultiViewDataset permute_pair_labels(const MultiViewDataset& data, double fraction,
                                     std::uint64_t seed);

}  // namespace mvembed
