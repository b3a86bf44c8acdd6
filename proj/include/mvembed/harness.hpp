#pragma once

#include "mvembed/baselines.hpp"
#include "mvembed/dataset.hpp"
#include "mvembed/embedding.hpp"
#include "mvembed/preprocess.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mvembed {

// Fraction of probe columns whose nearest gallery column (Euclidean, ties to
// the lower gallery index) carries the same label.
double cross_view_accuracy(const Matrix& gallery, const std::vector<int>& gallery_labels,
                           const Matrix& probe, const std::vector<int>& probe_labels);

// Arithmetic mean over all recorded ordered view pairs.
double mean_accuracy(const std::map<std::pair<int, int>, double>& pairwise);

enum class Method { mvhe, kmvhe, cca, kcca, mcca, pls, mvda, mvmda };

Method parse_method(const std::string& name);
std::string method_name(Method method);
const std::vector<std::string>& registered_methods();

// Hyperparameter defaults; the two hybrid-embedding methods ship different
// recommended settings.
HyperParams default_params(Method method);

struct ExperimentConfig {
  Method method = Method::mvhe;
  HyperParams hp;
  KernelSpec kernel{KernelKind::rbf, 0.0};  // sigma <= 0 resolves to the median
                                            // pairwise training distance
  ComponentMask components;
  Index pca_dim = 0;  // 0: largest feasible per view (min of dim and m-1)
  double train_fraction = 0.625;
  double permute_fraction = 0.0;  // label noise injected into training labels
  std::uint64_t seed = 1;
};

struct ExperimentReport {
  std::string method;
  std::map<std::pair<int, int>, double> pairwise_accuracy;  // (gallery, probe), 0-based
  double macc = 0.0;
  std::map<std::string, double> timings;  // seconds; excluded from determinism
  std::uint64_t seed = 0;
  nlohmann::json config;       // fully resolved configuration echo
  nlohmann::json diagnostics;  // patch counts, ridges, resolved dimensions
  std::optional<double> fraction;       // set by robustness sweeps
  std::optional<double> relative_loss;  // accuracy drop against fraction 0
  nlohmann::json extra;                 // method-specific additions (cv tables)

  // Deterministic serialization: keys sorted, all timing-dependent values
  // confined to the top-level "timings" object.
  nlohmann::json to_json() const;
};

// Full protocol on one dataset: object split, per-view compression fitted on
// the training side, model fit, cross-view 1-NN evaluation over all ordered
// view pairs. Pairwise-only methods (cca, kcca, pls) are fitted per view pair.
ExperimentReport run_experiment(const MultiViewDataset& data, const ExperimentConfig& config);

// Same pipeline on caller-chosen object ids; run_experiment and the
// cross-validation/robustness drivers share it.
ExperimentReport evaluate_split(const MultiViewDataset& data, const std::vector<Index>& train_ids,
                                const std::vector<Index>& test_ids, const ExperimentConfig& config);

struct GridPoint {
  HyperParams hp;
  double sigma = 0.0;
};

struct CvResult {
  Index best_index = 0;
  std::vector<double> mean_scores;                // per grid point
  std::vector<std::vector<double>> fold_scores;   // [point][fold]
  std::vector<std::string> failures;              // solver failures scored as 0
};

// k-fold selection over training objects: folds partition objects (pairings
// never split), every grid point is scored by held-out mean accuracy, ties
// resolve to the earlier grid entry.
CvResult cross_validate(const MultiViewDataset& train, const ExperimentConfig& base,
                        const std::vector<GridPoint>& grid, int folds, std::uint64_t seed);

// Label-noise robustness: one report per requested fraction, each fitted on a
// freshly permuted copy of the training labels over the same object split;
// test labels stay untouched. relative_loss compares against fraction 0.
std::vector<ExperimentReport> robustness_sweep(const MultiViewDataset& data,
                                               const ExperimentConfig& config,
                                               const std::vector<double>& fractions);

// Term-ablation study for the hybrid embedding methods: all seven non-empty
// combinations of {paired, intra, inter}, reported with a "components" tag.
std::vector<ExperimentReport> ablation_study(const MultiViewDataset& data,
                                             const ExperimentConfig& config);

// Median pairwise within-view training distance; the rbf bandwidth fallback.
double median_pairwise_distance(const std::vector<Matrix>& views);

// Model persistence: matrices as nested row arrays, numbers at full double
// round-trip precision. from_json validates shape agreement and rejects
// documents of the wrong kind.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const LinearModel& model);
nlohmann::json model_to_json(const KernelModel& model);
LinearModel linear_model_from_json(const nlohmann::json& j);
KernelModel kernel_model_from_json(const nlohmann::json& j);

// Serializes to `path` atomically (temp file + rename): readers never observe
// partial JSON.
void write_json_atomic(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace mvembed
