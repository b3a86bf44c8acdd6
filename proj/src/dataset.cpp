#include "mvembed/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace mvembed {

namespace {

using nlohmann::json;

std::string position(const std::filesystem::path& file, Index row, Index col) {
  std::ostringstream os;
  os << file.string() << ": line " << row + 1;
  if (col >= 0) os << ", field " << col + 1;
  return os.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("dataset", "cannot open " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

double parse_real(const std::string& cell, const std::filesystem::path& file, Index row, Index col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0'))
    throw Error("dataset", "non-numeric value '" + cell + "' at " + position(file, row, col));
  if (!std::isfinite(value))
    throw Error("dataset", "non-finite value at " + position(file, row, col));
  return value;
}

long long parse_label(const std::string& cell, const std::filesystem::path& file, Index row) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const long long value = std::strtoll(begin, &end, 10);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0') || errno == ERANGE)
    throw Error("dataset", "non-integer label '" + cell + "' at " + position(file, row, -1));
  return value;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    // trim surrounding spaces and tabs
    const auto first = field.find_first_not_of(" \t");
    const auto last = field.find_last_not_of(" \t");
    fields.push_back(first == std::string::npos ? std::string() : field.substr(first, last - first + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

Matrix load_view(const std::filesystem::path& file) {
  const std::vector<std::string> lines = read_lines(file);
  // A trailing newline produces one empty final line; tolerate exactly that.
  Index rows = static_cast<Index>(lines.size());
  while (rows > 0 && lines[static_cast<std::size_t>(rows - 1)].empty()) --rows;
  if (rows == 0) throw Error("dataset", "empty view file " + file.string());

  Index dim = -1;
  Matrix samples;
  for (Index r = 0; r < rows; ++r) {
    const std::vector<std::string> fields = split_fields(lines[static_cast<std::size_t>(r)]);
    if (dim < 0) {
      dim = static_cast<Index>(fields.size());
      samples.resize(dim, rows);
    } else if (static_cast<Index>(fields.size()) != dim) {
      std::ostringstream os;
      os << "ragged row at " << position(file, r, -1) << ": expected " << dim << " fields, got "
         << fields.size();
      throw Error("dataset", os.str());
    }
    for (Index c = 0; c < dim; ++c)
      samples(c, r) = parse_real(fields[static_cast<std::size_t>(c)], file, r, c);
  }
  return samples;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void MultiViewDataset::validate() const {
  if (views.empty()) throw Error("dataset", "no views");
  const Index m = views.front().cols();
  if (m == 0) throw Error("dataset", "dataset has no objects");
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].rows() == 0) throw Error("dataset", "view " + std::to_string(v + 1) + " has zero dimension");
    if (views[v].cols() != m) {
      std::ostringstream os;
      os << "pairing broken: view 1 has " << m << " objects, view " << v + 1 << " has "
         << views[v].cols();
      throw Error("dataset", os.str());
    }
    if (!views[v].allFinite())
      throw Error("dataset", "view " + std::to_string(v + 1) + " contains non-finite entries");
  }
  if (static_cast<Index>(labels.size()) != m) {
    std::ostringstream os;
    os << "label count " << labels.size() << " does not match object count " << m;
    throw Error("dataset", os.str());
  }
  if (num_classes < 1) throw Error("dataset", "num_classes must be at least 1");
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] < 1 || labels[k] > num_classes) {
      std::ostringstream os;
      os << "label " << labels[k] << " of object " << k + 1 << " outside dense range 1.."
         << num_classes;
      throw Error("dataset", os.str());
    }
  }
  if (!label_alphabet.empty() && static_cast<int>(label_alphabet.size()) != num_classes)
    throw Error("dataset", "label alphabet size does not match num_classes");
}

MultiViewDataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("dataset", "cannot open manifest " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("dataset", "manifest " + manifest_path.string() + " is not valid JSON: " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("views") || !manifest.contains("labels"))
    throw Error("dataset", "manifest " + manifest_path.string() +
                               " must be an object with 'views' and 'labels'");
  if (!manifest["views"].is_array() || manifest["views"].empty())
    throw Error("dataset", "manifest 'views' must be a non-empty array of paths");

  const std::filesystem::path base = manifest_path.parent_path();
  const auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  MultiViewDataset data;
  for (const auto& entry : manifest["views"]) {
    if (!entry.is_string()) throw Error("dataset", "manifest 'views' entries must be strings");
    data.views.push_back(load_view(resolve(entry.get<std::string>())));
  }
  const Index m = data.views.front().cols();
  for (std::size_t v = 1; v < data.views.size(); ++v) {
    if (data.views[v].cols() != m) {
      std::ostringstream os;
      os << "view " << v + 1 << " has " << data.views[v].cols() << " samples but view 1 has " << m
         << "; views must be paired sample-for-sample";
      throw Error("dataset", os.str());
    }
  }

  const std::filesystem::path label_file = resolve(manifest["labels"].get<std::string>());
  std::vector<std::string> lines = read_lines(label_file);
  Index rows = static_cast<Index>(lines.size());
  while (rows > 0 && lines[static_cast<std::size_t>(rows - 1)].empty()) --rows;
  if (rows != m) {
    std::ostringstream os;
    os << label_file.string() << " holds " << rows << " labels but views hold " << m << " samples";
    throw Error("dataset", os.str());
  }

  std::vector<long long> raw(static_cast<std::size_t>(m));
  for (Index r = 0; r < m; ++r)
    raw[static_cast<std::size_t>(r)] = parse_label(lines[static_cast<std::size_t>(r)], label_file, r);

  // Dense remap: sorted distinct source values become ids 1..C.
  std::vector<long long> alphabet(raw);
  std::sort(alphabet.begin(), alphabet.end());
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
  std::map<long long, int> dense;
  for (std::size_t i = 0; i < alphabet.size(); ++i) dense[alphabet[i]] = static_cast<int>(i) + 1;

  data.labels.resize(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k)
    data.labels[static_cast<std::size_t>(k)] = dense[raw[static_cast<std::size_t>(k)]];
  data.num_classes = static_cast<int>(alphabet.size());
  data.label_alphabet = std::move(alphabet);
  data.validate();
  return data;
}

void save_dataset(const MultiViewDataset& data, const std::filesystem::path& dir) {
  data.validate();
  std::filesystem::create_directories(dir);

  json manifest;
  manifest["views"] = json::array();
  for (int v = 0; v < data.view_count(); ++v) {
    const std::string name = "view" + std::to_string(v + 1) + ".csv";
    manifest["views"].push_back(name);
    std::ofstream out(dir / name);
    if (!out) throw Error("dataset", "cannot write " + (dir / name).string());
    const Matrix& view = data.views[static_cast<std::size_t>(v)];
    for (Index k = 0; k < view.cols(); ++k) {
      for (Index r = 0; r < view.rows(); ++r) {
        if (r > 0) out << ',';
        out << format_real(view(r, k));
      }
      out << '\n';
    }
  }

  manifest["labels"] = "labels.txt";
  {
    std::ofstream out(dir / "labels.txt");
    if (!out) throw Error("dataset", "cannot write " + (dir / "labels.txt").string());
    for (std::size_t k = 0; k < data.labels.size(); ++k) {
      const int id = data.labels[k];
      if (data.label_alphabet.empty())
        out << id << '\n';
      else
        out << data.label_alphabet[static_cast<std::size_t>(id - 1)] << '\n';
    }
  }

  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("dataset", "cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

ViewTransform parse_view_transform(const std::string& name) {
  if (name == "linear-random") return ViewTransform::linear_random;
  if (name == "rotation") return ViewTransform::rotation;
  if (name == "tanh-warp") return ViewTransform::tanh_warp;
  if (name == "swissroll-lift") return ViewTransform::swissroll_lift;
  throw UsageError("unknown view transform '" + name +
                   "'; expected one of linear-random, rotation, tanh-warp, swissroll-lift");
}

std::string view_transform_name(ViewTransform t) {
  switch (t) {
    case ViewTransform::linear_random: return "linear-random";
    case ViewTransform::rotation: return "rotation";
    case ViewTransform::tanh_warp: return "tanh-warp";
    case ViewTransform::swissroll_lift: return "swissroll-lift";
  }
  return "?";
}

namespace {

int latent_dim_for(const SyntheticSpec& spec) {
  if (spec.transform == ViewTransform::swissroll_lift) {
    if (spec.ambient_dim < 3)
      throw Error("synth", "swissroll-lift needs ambient_dim >= 3");
    return std::min(spec.ambient_dim - 1, 4);
  }
  return std::min(spec.ambient_dim, 4);
}

void validate_spec(const SyntheticSpec& spec) {
  if (spec.classes < 1) throw Error("synth", "classes must be positive");
  if (spec.objects_per_class < 1) throw Error("synth", "objects_per_class must be positive");
  if (spec.views < 1) throw Error("synth", "views must be positive");
  if (spec.ambient_dim < 1) throw Error("synth", "ambient_dim must be positive");
  if (spec.classes > 1 && spec.class_separation <= 0.0)
    throw Error("synth", "class_separation must be positive with more than one class");
  if (spec.noise_sigma < 0.0) throw Error("synth", "noise_sigma must be nonnegative");
}

}  // namespace

LatentCloud synthetic_latent(const SyntheticSpec& spec) {
  validate_spec(spec);
  const int L = latent_dim_for(spec);
  const Index m = static_cast<Index>(spec.classes) * spec.objects_per_class;

  Matrix centers = Matrix::Zero(L, spec.classes);
  if (spec.classes > 1) {
    Rng center_rng(derive_seed(spec.seed, "centers"));
    centers = center_rng.gaussian_matrix(L, spec.classes);
    double min_dist = std::numeric_limits<double>::infinity();
    for (int a = 0; a < spec.classes; ++a)
      for (int b = a + 1; b < spec.classes; ++b)
        min_dist = std::min(min_dist, (centers.col(a) - centers.col(b)).norm());
    if (!(min_dist > 1e-12)) throw Error("synth", "degenerate class centers; change the seed");
    centers *= spec.class_separation / min_dist;
  }

  LatentCloud cloud;
  cloud.points.resize(L, m);
  cloud.labels.resize(static_cast<std::size_t>(m));
  Rng point_rng(derive_seed(spec.seed, "latent"));
  for (Index k = 0; k < m; ++k) {
    const int c = static_cast<int>(k) / spec.objects_per_class;
    cloud.labels[static_cast<std::size_t>(k)] = c + 1;
    for (int r = 0; r < L; ++r) cloud.points(r, k) = centers(r, c) + point_rng.normal();
  }
  return cloud;
}

Matrix apply_view_transform(ViewTransform transform, const Matrix& latent, int ambient_dim,
                            double class_separation, std::uint64_t transform_seed) {
  const Index L = latent.rows();
  if (ambient_dim < 1) throw Error("synth", "ambient_dim must be positive");
  Rng rng(transform_seed);

  switch (transform) {
    case ViewTransform::linear_random: {
      const Matrix T = rng.gaussian_matrix(ambient_dim, L) / std::sqrt(double(L));
      return T * latent;
    }
    case ViewTransform::rotation: {
      if (ambient_dim < L) throw Error("synth", "rotation needs ambient_dim >= latent dim");
      const Matrix G = rng.gaussian_matrix(ambient_dim, ambient_dim);
      const Matrix Q = Eigen::HouseholderQR<Matrix>(G).householderQ();
      return Q.leftCols(L) * latent;
    }
    case ViewTransform::tanh_warp: {
      // Class-scale displacements land in tanh's curved region; two nested
      // random mixes keep the warp generic.
      const double s = 2.0 / std::max(class_separation, 1e-9);
      const Matrix B = rng.gaussian_matrix(ambient_dim, L) / std::sqrt(double(L));
      const Matrix A = rng.gaussian_matrix(ambient_dim, ambient_dim) / std::sqrt(double(ambient_dim));
      return A * (s * B * latent).array().tanh().matrix();
    }
    case ViewTransform::swissroll_lift: {
      const Index core_dim = L + 1;
      if (ambient_dim < core_dim)
        throw Error("synth", "swissroll-lift needs ambient_dim >= latent dim + 1");
      Matrix core(core_dim, latent.cols());
      const double pi = std::numbers::pi;
      for (Index k = 0; k < latent.cols(); ++k) {
        const double u = 1.0 / (1.0 + std::exp(-2.0 * latent(0, k) / std::max(class_separation, 1e-9)));
        const double t = 1.5 * pi * (1.0 + 2.0 * u);
        core(0, k) = t * std::cos(t);
        core(core_dim - 1, k) = t * std::sin(t);
        for (Index r = 1; r < L; ++r) core(r, k) = latent(r, k);
      }
      const Matrix G = rng.gaussian_matrix(ambient_dim, ambient_dim);
      const Matrix Q = Eigen::HouseholderQR<Matrix>(G).householderQ();
      return Q.leftCols(core_dim) * core;
    }
  }
  throw Error("synth", "unhandled view transform");
}

MultiViewDataset generate_synthetic(const SyntheticSpec& spec) {
  const LatentCloud cloud = synthetic_latent(spec);

  MultiViewDataset data;
  data.labels = cloud.labels;
  data.num_classes = spec.classes;
  for (int v = 0; v < spec.views; ++v) {
    Matrix x = apply_view_transform(spec.transform, cloud.points, spec.ambient_dim,
                                    spec.class_separation,
                                    derive_seed(spec.seed, "view-transform", std::uint64_t(v)));
    if (spec.noise_sigma > 0.0) {
      Rng noise(derive_seed(spec.seed, "view-noise", std::uint64_t(v)));
      x += spec.noise_sigma * noise.gaussian_matrix(x.rows(), x.cols());
    }
    data.views.push_back(std::move(x));
  }
  data.validate();
  return data;
}

SplitSpec split_by_object(Index object_count, double train_fraction, std::uint64_t seed) {
  if (object_count < 2) throw Error("split", "need at least two objects to split");
  const long long want = std::llround(train_fraction * double(object_count));
  if (want < 1 || want > object_count - 1) {
    std::ostringstream os;
    os << "train_fraction " << train_fraction << " of " << object_count
       << " objects leaves an empty side";
    throw Error("split", os.str());
  }

  std::vector<Index> ids(static_cast<std::size_t>(object_count));
  for (Index k = 0; k < object_count; ++k) ids[static_cast<std::size_t>(k)] = k;
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(ids);

  SplitSpec split;
  split.seed = seed;
  split.train_objects.assign(ids.begin(), ids.begin() + want);
  split.test_objects.assign(ids.begin() + want, ids.end());
  std::sort(split.train_objects.begin(), split.train_objects.end());
  std::sort(split.test_objects.begin(), split.test_objects.end());
  return split;
}

MultiViewDataset select_objects(const MultiViewDataset& data, const std::vector<Index>& objects) {
  const Index m = data.object_count();
  MultiViewDataset out;
  out.num_classes = data.num_classes;
  out.label_alphabet = data.label_alphabet;
  out.labels.reserve(objects.size());
  for (const Index k : objects) {
    if (k < 0 || k >= m) throw Error("dataset", "object id out of range in selection");
    out.labels.push_back(data.labels[static_cast<std::size_t>(k)]);
  }
  for (const Matrix& view : data.views) {
    Matrix sub(view.rows(), static_cast<Index>(objects.size()));
    for (std::size_t i = 0; i < objects.size(); ++i) sub.col(static_cast<Index>(i)) = view.col(objects[i]);
    out.views.push_back(std::move(sub));
  }
  out.validate();
  return out;
}

std::pair<MultiViewDataset, MultiViewDataset> split_dataset(const MultiViewDataset& data,
                                                            double train_fraction,
                                                            std::uint64_t seed) {
  const SplitSpec split = split_by_object(data.object_count(), train_fraction, seed);
  return {select_objects(data, split.train_objects), select_objects(data, split.test_objects)};
}

MultiViewDataset permute_pair_labels(const MultiViewDataset& data, double fraction,
                                     std::uint64_t seed) {
  data.validate();
  if (fraction < 0.0 || fraction > 1.0) throw Error("permute", "fraction must lie in [0, 1]");
  const Index m = data.object_count();
  const long long count = std::llround(fraction * double(m));
  MultiViewDataset out = data;
  if (count == 0) return out;
  if (data.num_classes < 2)
    throw Error("permute", "cannot draw labels from other classes with a single class");

  std::vector<Index> ids(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) ids[static_cast<std::size_t>(k)] = k;
  Rng rng(derive_seed(seed, "permute"));
  rng.shuffle(ids);
  for (long long i = 0; i < count; ++i) {
    const Index k = ids[static_cast<std::size_t>(i)];
    const int old = out.labels[static_cast<std::size_t>(k)];
    // Uniform over the other C-1 classes.
    const Index draw = rng.uniform_index(data.num_classes - 1);
    const int fresh = static_cast<int>(draw) + 1 >= old ? static_cast<int>(draw) + 2
                                                        : static_cast<int>(draw) + 1;
    out.labels[static_cast<std::size_t>(k)] = fresh;
  }
  return out;
}

}  // namespace mvembed
