#include "mvembed/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mvembed {

using nlohmann::json;

double cross_view_accuracy(const Matrix& gallery, const std::vector<int>& gallery_labels,
                           const Matrix& probe, const std::vector<int>& probe_labels) {
  if (gallery.cols() == 0) throw Error("evaluate", "empty gallery");
  if (probe.cols() == 0) throw Error("evaluate", "empty probe set");
  if (gallery.rows() != probe.rows())
    throw Error("evaluate", "gallery and probe embeddings disagree on dimension");
  if (gallery.cols() != static_cast<Index>(gallery_labels.size()) ||
      probe.cols() != static_cast<Index>(probe_labels.size()))
    throw Error("evaluate", "label counts do not match embedding columns");

  Index hits = 0;
  for (Index p = 0; p < probe.cols(); ++p) {
    Index best = 0;
    double best_dist = (gallery.col(0) - probe.col(p)).squaredNorm();
    for (Index g = 1; g < gallery.cols(); ++g) {
      const double dist = (gallery.col(g) - probe.col(p)).squaredNorm();
      if (dist < best_dist) {  // ties keep the earlier gallery column
        best_dist = dist;
        best = g;
      }
    }
    if (gallery_labels[static_cast<std::size_t>(best)] == probe_labels[static_cast<std::size_t>(p)])
      ++hits;
  }
  return double(hits) / double(probe.cols());
}

double mean_accuracy(const std::map<std::pair<int, int>, double>& pairwise) {
  if (pairwise.empty()) throw Error("evaluate", "no view pairs recorded");
  double sum = 0.0;
  for (const auto& [pair, acc] : pairwise) sum += acc;
  return sum / double(pairwise.size());
}

const std::vector<std::string>& registered_methods() {
  static const std::vector<std::string> names = {"mvhe", "kmvhe", "cca",  "kcca",
                                                 "mcca", "pls",   "mvda", "mvmda"};
  return names;
}

Method parse_method(const std::string& name) {
  const auto& names = registered_methods();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Method>(i);
  std::ostringstream os;
  os << "unknown method '" << name << "'; registered methods:";
  for (const auto& n : names) os << ' ' << n;
  throw UsageError(os.str());
}

std::string method_name(Method method) {
  return registered_methods()[static_cast<std::size_t>(method)];
}

HyperParams default_params(Method method) {
  HyperParams hp;  // the linear hybrid defaults
  if (method == Method::kmvhe) {
    hp.lambda1 = 5e-3;
    hp.lambda2 = 1e-3;
    hp.p1 = 3;
    hp.p2 = 15;
    hp.beta = 1.1;
  }
  return hp;
}

double median_pairwise_distance(const std::vector<Matrix>& views) {
  std::vector<double> distances;
  for (const Matrix& view : views) {
    for (Index a = 0; a < view.cols(); ++a)
      for (Index b = a + 1; b < view.cols(); ++b)
        distances.push_back((view.col(a) - view.col(b)).norm());
  }
  if (distances.empty()) throw Error("kernel", "need at least two samples for the bandwidth heuristic");
  std::sort(distances.begin(), distances.end());
  double median = distances[(distances.size() - 1) / 2];
  if (median <= 0.0) {
    const auto positive = std::find_if(distances.begin(), distances.end(),
                                       [](double d) { return d > 0.0; });
    if (positive == distances.end())
      throw Error("kernel", "all training samples coincide; rbf bandwidth undefined");
    median = *positive;
  }
  return median;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool is_hybrid(Method method) { return method == Method::mvhe || method == Method::kmvhe; }

bool full_mask(const ComponentMask& mask) { return mask.paired && mask.intra && mask.inter; }

json components_json(const ComponentMask& mask) {
  json parts = json::array();
  if (mask.paired) parts.push_back("paired");
  if (mask.intra) parts.push_back("intra");
  if (mask.inter) parts.push_back("inter");
  return parts;
}

json hyperparams_json(const HyperParams& hp) {
  return json{{"lambda1", hp.lambda1}, {"lambda2", hp.lambda2}, {"p1", hp.p1},
              {"p2", hp.p2},           {"beta", hp.beta},       {"d", hp.d}};
}

std::string pair_key(int gallery, int probe) {
  return std::to_string(gallery + 1) + "->" + std::to_string(probe + 1);
}

KernelSpec resolve_kernel(const KernelSpec& spec, const std::vector<Matrix>& train_views) {
  KernelSpec out = spec;
  if (out.kind == KernelKind::rbf && !(out.sigma > 0.0))
    out.sigma = median_pairwise_distance(train_views);
  return out;
}

}  // namespace

json ExperimentReport::to_json() const {
  json j;
  j["method"] = method;
  j["macc"] = macc;
  j["seed"] = seed;
  json pairs = json::object();
  for (const auto& [pair, acc] : pairwise_accuracy) pairs[pair_key(pair.first, pair.second)] = acc;
  j["pairwise_accuracy"] = pairs;
  j["config"] = config;
  j["diagnostics"] = diagnostics;
  json times = json::object();
  for (const auto& [name, value] : timings) times[name] = value;
  j["timings"] = times;
  if (fraction) j["fraction"] = *fraction;
  if (relative_loss) j["relative_loss"] = *relative_loss;
  if (!extra.is_null()) j["extra"] = extra;
  return j;
}

ExperimentReport evaluate_split(const MultiViewDataset& data, const std::vector<Index>& train_ids,
                                const std::vector<Index>& test_ids, const ExperimentConfig& config) {
  data.validate();
  const int n = data.view_count();
  if (n < 2) throw Error("config", "cross-view evaluation needs at least two views");
  if (!full_mask(config.components) && !is_hybrid(config.method))
    throw Error("config", "term ablation applies to the hybrid embedding methods only");
  if (train_ids.empty() || test_ids.empty())
    throw Error("config", "both sides of the split must be non-empty");

  ExperimentReport report;
  report.method = method_name(config.method);
  report.seed = config.seed;

  const auto total_start = Clock::now();
  auto phase_start = Clock::now();

  MultiViewDataset train = select_objects(data, train_ids);
  const MultiViewDataset test = select_objects(data, test_ids);
  if (config.permute_fraction > 0.0)
    train = permute_pair_labels(train, config.permute_fraction, config.seed);
  report.timings["prepare"] = seconds_since(phase_start);

  // Per-view compression, fitted on training samples only.
  phase_start = Clock::now();
  std::vector<Index> dims(static_cast<std::size_t>(n));
  std::vector<PcaModel> pca(static_cast<std::size_t>(n));
  MultiViewDataset train_p, test_p;
  train_p.labels = train.labels;
  train_p.num_classes = train.num_classes;
  test_p.labels = test.labels;
  test_p.num_classes = test.num_classes;
  for (int v = 0; v < n; ++v) {
    const Matrix& view = train.views[static_cast<std::size_t>(v)];
    const Index feasible = std::min(view.rows(), view.cols() - 1);
    if (feasible < 1) throw Error("pca", "too few training samples to fit a basis");
    dims[static_cast<std::size_t>(v)] = config.pca_dim > 0 ? config.pca_dim : feasible;
    pca[static_cast<std::size_t>(v)] = pca_fit(view, dims[static_cast<std::size_t>(v)]);
    train_p.views.push_back(pca_transform(pca[static_cast<std::size_t>(v)], view));
    test_p.views.push_back(
        pca_transform(pca[static_cast<std::size_t>(v)], test.views[static_cast<std::size_t>(v)]));
  }
  report.timings["preprocess"] = seconds_since(phase_start);

  json cfg;
  cfg["method"] = report.method;
  cfg["train_fraction"] = config.train_fraction;
  cfg["permute_fraction"] = config.permute_fraction;
  cfg["seed"] = config.seed;
  cfg["pca_dim"] = config.pca_dim;
  cfg["resolved_pca_dims"] = dims;
  cfg["hyperparameters"] = hyperparams_json(config.hp);
  if (is_hybrid(config.method)) cfg["components"] = components_json(config.components);

  json diag;
  diag["train_objects"] = train_ids.size();
  diag["test_objects"] = test_ids.size();
  diag["num_classes"] = data.num_classes;
  if (!data.label_alphabet.empty()) diag["label_alphabet"] = data.label_alphabet;

  // Fit and embed the test side of every view.
  phase_start = Clock::now();
  std::map<std::pair<int, int>, double> accuracy;
  AlignmentDiagnostics patches;
  std::vector<Matrix> test_emb(static_cast<std::size_t>(n));
  bool have_all_views = false;

  switch (config.method) {
    case Method::mvhe: {
      const LinearModel model = fit_mvhe(train_p, config.hp, config.components, &patches);
      for (int v = 0; v < n; ++v)
        test_emb[static_cast<std::size_t>(v)] =
            transform_linear(model, v, test_p.views[static_cast<std::size_t>(v)]);
      have_all_views = true;
      diag["patches"] = json{{"total", patches.patches_total},
                             {"clamped", patches.patches_clamped},
                             {"empty", patches.patches_empty}};
      break;
    }
    case Method::kmvhe: {
      const KernelSpec kernel = resolve_kernel(config.kernel, train_p.views);
      cfg["kernel"] = json{{"kind", kernel_name(kernel.kind)},
                           {"sigma", config.kernel.sigma},
                           {"resolved_sigma", kernel.sigma}};
      const KernelModel model = fit_kmvhe(train_p, config.hp, kernel, config.components, &patches);
      for (int v = 0; v < n; ++v)
        test_emb[static_cast<std::size_t>(v)] =
            transform_kernel(model, v, test_p.views[static_cast<std::size_t>(v)]);
      have_all_views = true;
      diag["patches"] = json{{"total", patches.patches_total},
                             {"clamped", patches.patches_clamped},
                             {"empty", patches.patches_empty}};
      diag["epsilon"] = model.epsilon;
      break;
    }
    case Method::mcca: {
      const LinearModel model = fit_mcca(train_p.views, config.hp.d);
      for (int v = 0; v < n; ++v)
        test_emb[static_cast<std::size_t>(v)] =
            transform_linear(model, v, test_p.views[static_cast<std::size_t>(v)]);
      have_all_views = true;
      break;
    }
    case Method::mvda:
    case Method::mvmda: {
      const LinearModel model = config.method == Method::mvda ? fit_mvda(train_p, config.hp.d)
                                                              : fit_mvmda(train_p, config.hp.d);
      for (int v = 0; v < n; ++v)
        test_emb[static_cast<std::size_t>(v)] =
            transform_linear(model, v, test_p.views[static_cast<std::size_t>(v)]);
      have_all_views = true;
      break;
    }
    case Method::cca:
    case Method::pls:
    case Method::kcca: {
      // Two-view formulations applied to every unordered view pair.
      KernelSpec kernel;
      if (config.method == Method::kcca) {
        kernel = resolve_kernel(config.kernel, train_p.views);
        cfg["kernel"] = json{{"kind", kernel_name(kernel.kind)},
                             {"sigma", config.kernel.sigma},
                             {"resolved_sigma", kernel.sigma}};
      }
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          Matrix emb_a, emb_b;
          if (config.method == Method::cca) {
            const LinearModel model = fit_cca(train_p.views[static_cast<std::size_t>(a)],
                                              train_p.views[static_cast<std::size_t>(b)], config.hp.d);
            emb_a = transform_linear(model, 0, test_p.views[static_cast<std::size_t>(a)]);
            emb_b = transform_linear(model, 1, test_p.views[static_cast<std::size_t>(b)]);
          } else if (config.method == Method::pls) {
            const LinearModel model = fit_pls(train_p.views[static_cast<std::size_t>(a)],
                                              train_p.views[static_cast<std::size_t>(b)], config.hp.d);
            emb_a = transform_linear(model, 0, test_p.views[static_cast<std::size_t>(a)]);
            emb_b = transform_linear(model, 1, test_p.views[static_cast<std::size_t>(b)]);
          } else {
            const KernelModel model = fit_kcca(train_p.views[static_cast<std::size_t>(a)],
                                               train_p.views[static_cast<std::size_t>(b)], kernel,
                                               config.hp.d);
            emb_a = transform_kernel(model, 0, test_p.views[static_cast<std::size_t>(a)]);
            emb_b = transform_kernel(model, 1, test_p.views[static_cast<std::size_t>(b)]);
          }
          accuracy[{a, b}] = cross_view_accuracy(emb_a, test.labels, emb_b, test.labels);
          accuracy[{b, a}] = cross_view_accuracy(emb_b, test.labels, emb_a, test.labels);
        }
      }
      break;
    }
  }
  report.timings["fit"] = seconds_since(phase_start);

  phase_start = Clock::now();
  if (have_all_views) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        accuracy[{a, b}] = cross_view_accuracy(test_emb[static_cast<std::size_t>(a)], test.labels,
                                               test_emb[static_cast<std::size_t>(b)], test.labels);
      }
  }
  report.pairwise_accuracy = accuracy;
  report.macc = mean_accuracy(accuracy);
  report.timings["evaluate"] = seconds_since(phase_start);

  report.config = cfg;
  report.diagnostics = diag;
  report.timings["total"] = seconds_since(total_start);
  return report;
}

ExperimentReport run_experiment(const MultiViewDataset& data, const ExperimentConfig& config) {
  const SplitSpec split = split_by_object(data.object_count(), config.train_fraction, config.seed);
  return evaluate_split(data, split.train_objects, split.test_objects, config);
}

CvResult cross_validate(const MultiViewDataset& train, const ExperimentConfig& base,
                        const std::vector<GridPoint>& grid, int folds, std::uint64_t seed) {
  train.validate();
  if (grid.empty()) throw Error("cv", "empty parameter grid");
  if (folds < 2) throw Error("cv", "need at least two folds");
  const Index m = train.object_count();
  if (m < folds) throw Error("cv", "fewer objects than folds");

  std::vector<Index> ids(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) ids[static_cast<std::size_t>(k)] = k;
  Rng rng(derive_seed(seed, "cv"));
  rng.shuffle(ids);

  std::vector<std::vector<Index>> fold_members(static_cast<std::size_t>(folds));
  for (Index i = 0; i < m; ++i)
    fold_members[static_cast<std::size_t>(i % folds)].push_back(ids[static_cast<std::size_t>(i)]);
  for (auto& members : fold_members) std::sort(members.begin(), members.end());

  CvResult result;
  result.fold_scores.assign(grid.size(), std::vector<double>(static_cast<std::size_t>(folds), 0.0));
  result.mean_scores.assign(grid.size(), 0.0);

  for (std::size_t p = 0; p < grid.size(); ++p) {
    ExperimentConfig cfg = base;
    cfg.hp = grid[p].hp;
    if (grid[p].sigma > 0.0) cfg.kernel.sigma = grid[p].sigma;
    double sum = 0.0;
    for (int f = 0; f < folds; ++f) {
      std::vector<Index> fit_ids;
      for (int g = 0; g < folds; ++g) {
        if (g == f) continue;
        fit_ids.insert(fit_ids.end(), fold_members[static_cast<std::size_t>(g)].begin(),
                       fold_members[static_cast<std::size_t>(g)].end());
      }
      std::sort(fit_ids.begin(), fit_ids.end());
      double score = 0.0;
      try {
        score = evaluate_split(train, fit_ids, fold_members[static_cast<std::size_t>(f)], cfg).macc;
      } catch (const Error& e) {
        std::ostringstream os;
        os << "grid point " << p << ", fold " << f << ": " << e.what();
        result.failures.push_back(os.str());
      }
      result.fold_scores[p][static_cast<std::size_t>(f)] = score;
      sum += score;
    }
    result.mean_scores[p] = sum / double(folds);
  }

  result.best_index = 0;
  for (std::size_t p = 1; p < grid.size(); ++p)
    if (result.mean_scores[p] > result.mean_scores[static_cast<std::size_t>(result.best_index)])
      result.best_index = static_cast<Index>(p);
  return result;
}

std::vector<ExperimentReport> robustness_sweep(const MultiViewDataset& data,
                                               const ExperimentConfig& config,
                                               const std::vector<double>& fractions) {
  if (fractions.empty()) throw Error("robustness", "no fractions requested");
  for (const double f : fractions)
    if (f < 0.0 || f > 1.0) throw Error("robustness", "fractions must lie in [0, 1]");

  ExperimentConfig base = config;
  base.permute_fraction = 0.0;
  const ExperimentReport baseline = run_experiment(data, base);

  std::vector<ExperimentReport> reports;
  reports.reserve(fractions.size());
  for (const double f : fractions) {
    ExperimentReport rep;
    if (f == 0.0) {
      rep = baseline;
    } else {
      ExperimentConfig cfg = config;
      cfg.permute_fraction = f;
      rep = run_experiment(data, cfg);
    }
    rep.fraction = f;
    rep.relative_loss = baseline.macc > 0.0 ? (baseline.macc - rep.macc) / baseline.macc : 0.0;
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::vector<ExperimentReport> ablation_study(const MultiViewDataset& data,
                                             const ExperimentConfig& config) {
  if (!is_hybrid(config.method))
    throw Error("config", "the ablation study applies to the hybrid embedding methods only");

  static const ComponentMask variants[] = {
      {true, false, false}, {false, true, false}, {false, false, true}, {true, true, false},
      {true, false, true},  {false, true, true},  {true, true, true},
  };

  std::vector<ExperimentReport> reports;
  for (const ComponentMask& mask : variants) {
    ExperimentConfig cfg = config;
    cfg.components = mask;
    reports.push_back(run_experiment(data, cfg));
  }
  return reports;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw Error("load", "matrix document is not an array of rows");
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  if (!j[0].is_array()) throw Error("load", "matrix rows must be arrays");
  const Index cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (static_cast<Index>(j[static_cast<std::size_t>(r)].size()) != cols)
      throw Error("load", "matrix rows disagree on length");
    for (Index c = 0; c < cols; ++c)
      m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

namespace {

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

HyperParams hyperparams_from_json(const json& j) {
  HyperParams hp;
  hp.lambda1 = j.at("lambda1").get<double>();
  hp.lambda2 = j.at("lambda2").get<double>();
  hp.p1 = j.at("p1").get<Index>();
  hp.p2 = j.at("p2").get<Index>();
  hp.beta = j.at("beta").get<double>();
  hp.d = j.at("d").get<Index>();
  return hp;
}

void require_kind(const json& j, const std::string& kind) {
  if (!j.is_object() || !j.contains("kind"))
    throw Error("load", "not a model document (no kind field)");
  if (j.at("kind").get<std::string>() != kind)
    throw Error("load", "model document holds a " + j.at("kind").get<std::string>() +
                            " model, expected " + kind);
}

}  // namespace

json model_to_json(const LinearModel& model) {
  json j;
  j["kind"] = "linear";
  j["method"] = model.method;
  j["hyperparameters"] = hyperparams_json(model.params);
  j["eigenvalues"] = vector_to_json(model.eigenvalues);
  json views = json::array();
  for (const Matrix& w : model.per_view_W) views.push_back(matrix_to_json(w));
  j["per_view_projections"] = std::move(views);
  return j;
}

json model_to_json(const KernelModel& model) {
  json j;
  j["kind"] = "kernel";
  j["method"] = model.method;
  j["hyperparameters"] = hyperparams_json(model.params);
  j["eigenvalues"] = vector_to_json(model.eigenvalues);
  j["kernel"] = json{{"kind", kernel_name(model.kernel.kind)}, {"sigma", model.kernel.sigma}};
  j["epsilon"] = model.epsilon;
  json coeffs = json::array();
  for (const Matrix& a : model.per_view_A) coeffs.push_back(matrix_to_json(a));
  j["per_view_coefficients"] = std::move(coeffs);
  json trains = json::array();
  for (const Matrix& x : model.train_views) trains.push_back(matrix_to_json(x));
  j["train_views"] = std::move(trains);
  return j;
}

LinearModel linear_model_from_json(const json& j) {
  require_kind(j, "linear");
  LinearModel model;
  model.method = j.at("method").get<std::string>();
  model.params = hyperparams_from_json(j.at("hyperparameters"));
  model.eigenvalues = vector_from_json(j.at("eigenvalues"));
  for (const json& w : j.at("per_view_projections"))
    model.per_view_W.push_back(matrix_from_json(w));
  if (model.per_view_W.empty()) throw Error("load", "model holds no projections");
  return model;
}

KernelModel kernel_model_from_json(const json& j) {
  require_kind(j, "kernel");
  KernelModel model;
  model.method = j.at("method").get<std::string>();
  model.params = hyperparams_from_json(j.at("hyperparameters"));
  model.eigenvalues = vector_from_json(j.at("eigenvalues"));
  model.kernel.kind = parse_kernel(j.at("kernel").at("kind").get<std::string>());
  model.kernel.sigma = j.at("kernel").at("sigma").get<double>();
  model.epsilon = j.at("epsilon").get<double>();
  for (const json& a : j.at("per_view_coefficients"))
    model.per_view_A.push_back(matrix_from_json(a));
  for (const json& x : j.at("train_views")) model.train_views.push_back(matrix_from_json(x));
  if (model.per_view_A.size() != model.train_views.size())
    throw Error("load", "coefficient and training view counts disagree");
  if (model.per_view_A.empty()) throw Error("load", "model holds no coefficients");
  return model;
}

void write_json_atomic(const json& doc, const std::filesystem::path& path) {
  const std::filesystem::path parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const std::filesystem::path temp = path.string() + ".tmp";
  {
    std::ofstream out(temp);
    if (!out) throw Error("output", "cannot write " + temp.string());
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) throw Error("output", "write failed for " + temp.string());
  }
  std::filesystem::rename(temp, path);
}

}  // namespace mvembed
