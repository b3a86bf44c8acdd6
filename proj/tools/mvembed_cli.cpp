// Command-line front end: dataset synthesis, model fitting/persistence, and
// the evaluation drivers (single runs, cross-validation sweeps, label-noise
// robustness, term ablations). Exit codes: 0 success, 1 runtime failure
// (phase-stamped message), 2 usage error (one-line diagnostic).

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mvembed/harness.hpp"

namespace {

using mvembed::Error;
using mvembed::UsageError;
using nlohmann::json;

// A config file key bound to a CLI option: applied only when the flag was not
// given on the command line, so flags always win.
struct ConfigBinding {
  std::string option;  // "--lambda1"
  std::function<void(const json&)> apply;
};

void apply_config_file(CLI::App* cmd, const std::string& path,
                       const std::vector<ConfigBinding>& bindings) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot open config file " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config", std::string("config file ") + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw Error("config", "config file must hold a JSON object");

  for (const auto& [key, value] : cfg.items()) {
    bool known = false;
    for (const ConfigBinding& binding : bindings) {
      if (binding.option.substr(2) != key) continue;
      known = true;
      if (cmd->count(binding.option) == 0) {
        try {
          binding.apply(value);
        } catch (const json::exception& e) {
          throw UsageError("config key '" + key + "': " + e.what());
        }
      }
      break;
    }
    if (!known) throw UsageError("unknown config key '" + key + "'");
  }
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double value = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(value);
    } catch (const std::exception&) {
      throw UsageError(what + ": cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

void write_text_atomic(const std::string& text, const std::filesystem::path& path) {
  const std::filesystem::path parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const std::filesystem::path temp = path.string() + ".tmp";
  {
    std::ofstream out(temp);
    if (!out) throw Error("output", "cannot write " + temp.string());
    out << text;
    out.flush();
    if (!out) throw Error("output", "write failed for " + temp.string());
  }
  std::filesystem::rename(temp, path);
}

// Synthetic generation flags shared by `synth` and the inline data source of
// the experiment commands.
struct SynthCli {
  mvembed::SyntheticSpec spec;
  std::string transform = "linear-random";

  void attach(CLI::App* cmd, std::vector<ConfigBinding>& bindings, std::uint64_t* seed_slot) {
    cmd->add_option("--classes", spec.classes, "Number of classes")->capture_default_str();
    cmd->add_option("--per-class", spec.objects_per_class, "Objects per class")
        ->capture_default_str();
    cmd->add_option("--views", spec.views, "Number of views")->capture_default_str();
    cmd->add_option("--dim", spec.ambient_dim, "Ambient dimension of every view")
        ->capture_default_str();
    cmd->add_option("--transform", transform,
                    "View transform: linear-random, rotation, tanh-warp, swissroll-lift")
        ->capture_default_str();
    cmd->add_option("--separation", spec.class_separation,
                    "Minimum pairwise class-center distance")
        ->capture_default_str();
    cmd->add_option("--noise", spec.noise_sigma, "Within-view noise level")
        ->capture_default_str();
    if (seed_slot)
      cmd->add_option("--data-seed", *seed_slot, "Generation seed for inline synthetic data")
          ->capture_default_str();

    bindings.push_back({"--classes", [this](const json& v) { spec.classes = v.get<int>(); }});
    bindings.push_back(
        {"--per-class", [this](const json& v) { spec.objects_per_class = v.get<int>(); }});
    bindings.push_back({"--views", [this](const json& v) { spec.views = v.get<int>(); }});
    bindings.push_back({"--dim", [this](const json& v) { spec.ambient_dim = v.get<int>(); }});
    bindings.push_back(
        {"--transform", [this](const json& v) { transform = v.get<std::string>(); }});
    bindings.push_back(
        {"--separation", [this](const json& v) { spec.class_separation = v.get<double>(); }});
    bindings.push_back({"--noise", [this](const json& v) { spec.noise_sigma = v.get<double>(); }});
  }

  mvembed::MultiViewDataset generate() {
    spec.transform = mvembed::parse_view_transform(transform);
    return mvembed::generate_synthetic(spec);
  }
};

// Everything the experiment commands share: one data source, method and
// hyperparameter selection, and the output/config plumbing.
struct ExperimentCli {
  std::string data_path;
  bool synthetic = false;
  SynthCli synth;

  std::string method_name = "mvhe";
  std::string kernel_name = "rbf";
  double sigma = 0.0;
  mvembed::ExperimentConfig config;
  std::string out_path;
  std::string config_path;

  // hyperparameter flags; method defaults fill whatever stays unset
  double lambda1 = 0.0, lambda2 = 0.0, beta = 0.0;
  mvembed::Index p1 = 0, p2 = 0, d = 0;
  bool no_paired = false, no_intra = false, no_inter = false;

  CLI::App* cmd = nullptr;
  std::vector<ConfigBinding> bindings;

  void attach(CLI::App* sub) {
    cmd = sub;
    sub->add_option("--data", data_path, "Dataset manifest (JSON)");
    sub->add_flag("--synthetic", synthetic, "Generate the dataset in-process instead");
    synth.attach(sub, bindings, &synth.spec.seed);

    sub->add_option("--method", method_name, "One of: mvhe kmvhe cca kcca mcca pls mvda mvmda")
        ->capture_default_str();
    sub->add_option("--d", d, "Embedding dimension");
    sub->add_option("--lambda1", lambda1, "Within-view term weight");
    sub->add_option("--lambda2", lambda2, "Cross-view term weight");
    sub->add_option("--p1", p1, "Same-class neighbors per patch");
    sub->add_option("--p2", p2, "Other-class neighbors per patch");
    sub->add_option("--beta", beta, "Other-class repulsion weight");
    sub->add_option("--kernel", kernel_name, "Kernel for the kernel methods: linear or rbf")
        ->capture_default_str();
    sub->add_option("--sigma", sigma,
                    "RBF bandwidth; 0 picks the median pairwise training distance")
        ->capture_default_str();
    sub->add_option("--pca-dim", config.pca_dim,
                    "Per-view compression dimension; 0 keeps the largest feasible")
        ->capture_default_str();
    sub->add_option("--train-fraction", config.train_fraction, "Training share of the objects")
        ->capture_default_str();
    sub->add_option("--permute-fraction", config.permute_fraction,
                    "Fraction of training labels to scramble")
        ->capture_default_str();
    sub->add_option("--seed", config.seed, "Master experiment seed")->capture_default_str();
    sub->add_flag("--no-paired", no_paired, "Drop the paired-sample agreement term");
    sub->add_flag("--no-intra", no_intra, "Drop the within-view discriminant term");
    sub->add_flag("--no-inter", no_inter, "Drop the cross-view discriminant term");
    sub->add_option("--out", out_path, "Output JSON path")->required();
    sub->add_option("--config", config_path, "JSON config file; explicit flags win");

    bindings.push_back({"--data", [this](const json& v) { data_path = v.get<std::string>(); }});
    bindings.push_back({"--synthetic", [this](const json& v) { synthetic = v.get<bool>(); }});
    bindings.push_back(
        {"--method", [this](const json& v) { method_name = v.get<std::string>(); }});
    bindings.push_back({"--d", [this](const json& v) {
                          d = v.get<mvembed::Index>();
                          mark_set("--d");
                        }});
    bindings.push_back({"--lambda1", [this](const json& v) {
                          lambda1 = v.get<double>();
                          mark_set("--lambda1");
                        }});
    bindings.push_back({"--lambda2", [this](const json& v) {
                          lambda2 = v.get<double>();
                          mark_set("--lambda2");
                        }});
    bindings.push_back({"--p1", [this](const json& v) {
                          p1 = v.get<mvembed::Index>();
                          mark_set("--p1");
                        }});
    bindings.push_back({"--p2", [this](const json& v) {
                          p2 = v.get<mvembed::Index>();
                          mark_set("--p2");
                        }});
    bindings.push_back({"--beta", [this](const json& v) {
                          beta = v.get<double>();
                          mark_set("--beta");
                        }});
    bindings.push_back(
        {"--kernel", [this](const json& v) { kernel_name = v.get<std::string>(); }});
    bindings.push_back({"--sigma", [this](const json& v) { sigma = v.get<double>(); }});
    bindings.push_back(
        {"--pca-dim", [this](const json& v) { config.pca_dim = v.get<mvembed::Index>(); }});
    bindings.push_back({"--train-fraction",
                        [this](const json& v) { config.train_fraction = v.get<double>(); }});
    bindings.push_back({"--permute-fraction",
                        [this](const json& v) { config.permute_fraction = v.get<double>(); }});
    bindings.push_back(
        {"--seed", [this](const json& v) { config.seed = v.get<std::uint64_t>(); }});
    bindings.push_back({"--no-paired", [this](const json& v) { no_paired = v.get<bool>(); }});
    bindings.push_back({"--no-intra", [this](const json& v) { no_intra = v.get<bool>(); }});
    bindings.push_back({"--no-inter", [this](const json& v) { no_inter = v.get<bool>(); }});
    bindings.push_back({"--out", [this](const json& v) { out_path = v.get<std::string>(); }});
  }

  // Config-file values must survive the "was the flag given?" test that lets
  // method defaults fill unset hyperparameters.
  std::vector<std::string> config_set;
  void mark_set(const std::string& option) { config_set.push_back(option); }
  bool was_set(const std::string& option) const {
    if (cmd->count(option) > 0) return true;
    for (const std::string& name : config_set)
      if (name == option) return true;
    return false;
  }

  void finalize() {
    apply_config_file(cmd, config_path, bindings);

    if (data_path.empty() && !synthetic)
      throw UsageError("no data source: pass --data or --synthetic");
    if (!data_path.empty() && synthetic)
      throw UsageError("--data and --synthetic are mutually exclusive");

    config.method = mvembed::parse_method(method_name);
    config.hp = mvembed::default_params(config.method);
    if (was_set("--d")) config.hp.d = d;
    if (was_set("--lambda1")) config.hp.lambda1 = lambda1;
    if (was_set("--lambda2")) config.hp.lambda2 = lambda2;
    if (was_set("--p1")) config.hp.p1 = p1;
    if (was_set("--p2")) config.hp.p2 = p2;
    if (was_set("--beta")) config.hp.beta = beta;
    config.kernel.kind = mvembed::parse_kernel(kernel_name);
    config.kernel.sigma = sigma;
    config.components = {!no_paired, !no_intra, !no_inter};
  }

  mvembed::MultiViewDataset load() {
    if (synthetic) return synth.generate();
    return mvembed::load_dataset(data_path);
  }
};

int run_synth(SynthCli& synth, std::uint64_t seed, const std::string& out_dir) {
  synth.spec.seed = seed;
  const mvembed::MultiViewDataset data = synth.generate();
  mvembed::save_dataset(data, out_dir);
  std::cout << "wrote " << data.view_count() << " views x " << data.object_count()
            << " objects to " << out_dir << '\n';
  return 0;
}

int run_fit(ExperimentCli& cli) {
  cli.finalize();
  mvembed::MultiViewDataset data = cli.load();
  data.validate();
  const int n = data.view_count();
  using mvembed::Method;

  const bool pairwise = cli.config.method == Method::cca || cli.config.method == Method::kcca ||
                        cli.config.method == Method::pls;
  if (pairwise && n != 2)
    throw Error("fit", cli.method_name + " fits exactly two views; dataset has " +
                           std::to_string(n));

  // The correlation methods assume centered inputs; the recorded means make
  // the saved model self-describing.
  const bool centered = pairwise || cli.config.method == Method::mcca;
  std::vector<mvembed::Vector> means;
  if (centered) {
    for (mvembed::Matrix& view : data.views) {
      means.push_back(view.rowwise().mean());
      view.colwise() -= means.back();
    }
  }

  mvembed::KernelSpec kernel = cli.config.kernel;
  if (kernel.kind == mvembed::KernelKind::rbf && kernel.sigma <= 0.0)
    kernel.sigma = mvembed::median_pairwise_distance(data.views);

  json doc;
  const mvembed::HyperParams& hp = cli.config.hp;
  switch (cli.config.method) {
    case Method::mvhe:
      doc = mvembed::model_to_json(mvembed::fit_mvhe(data, hp, cli.config.components));
      break;
    case Method::kmvhe:
      doc = mvembed::model_to_json(mvembed::fit_kmvhe(data, hp, kernel, cli.config.components));
      break;
    case Method::cca:
      doc = mvembed::model_to_json(mvembed::fit_cca(data.views[0], data.views[1], hp.d));
      break;
    case Method::kcca:
      doc = mvembed::model_to_json(
          mvembed::fit_kcca(data.views[0], data.views[1], kernel, hp.d));
      break;
    case Method::mcca:
      doc = mvembed::model_to_json(mvembed::fit_mcca(data.views, hp.d));
      break;
    case Method::pls:
      doc = mvembed::model_to_json(mvembed::fit_pls(data.views[0], data.views[1], hp.d));
      break;
    case Method::mvda:
      doc = mvembed::model_to_json(mvembed::fit_mvda(data, hp.d));
      break;
    case Method::mvmda:
      doc = mvembed::model_to_json(mvembed::fit_mvmda(data, hp.d));
      break;
  }

  doc["centered"] = centered;
  if (centered) {
    json m = json::array();
    for (const mvembed::Vector& mean : means) {
      json one = json::array();
      for (mvembed::Index i = 0; i < mean.size(); ++i) one.push_back(mean(i));
      m.push_back(std::move(one));
    }
    doc["view_means"] = std::move(m);
  }

  mvembed::write_json_atomic(doc, cli.out_path);
  std::cout << "model written to " << cli.out_path << '\n';
  return 0;
}

int run_eval(ExperimentCli& cli, int repeats) {
  cli.finalize();
  if (repeats < 1) throw UsageError("--repeats must be at least 1");
  const mvembed::MultiViewDataset data = cli.load();

  json reports = json::array();
  std::vector<double> maccs;
  std::map<std::pair<int, int>, double> pair_sums;
  for (int r = 0; r < repeats; ++r) {
    mvembed::ExperimentConfig cfg = cli.config;
    cfg.seed = mvembed::derive_seed(cli.config.seed, "repeat", static_cast<std::uint64_t>(r));
    const mvembed::ExperimentReport report = mvembed::run_experiment(data, cfg);
    maccs.push_back(report.macc);
    for (const auto& [pair, acc] : report.pairwise_accuracy) pair_sums[pair] += acc;
    reports.push_back(report.to_json());
  }

  double mean = 0.0;
  for (const double m : maccs) mean += m;
  mean /= double(repeats);
  double var = 0.0;
  for (const double m : maccs) var += (m - mean) * (m - mean);
  const double stdev = repeats > 1 ? std::sqrt(var / double(repeats - 1)) : 0.0;

  json pair_means = json::object();
  for (const auto& [pair, sum] : pair_sums) {
    std::ostringstream key;
    key << (pair.first + 1) << "->" << (pair.second + 1);
    pair_means[key.str()] = sum / double(repeats);
  }

  json doc;
  doc["repeats"] = repeats;
  doc["base_seed"] = cli.config.seed;
  doc["reports"] = std::move(reports);
  doc["summary"] = json{{"mean_macc", mean},
                        {"std_macc", stdev},
                        {"pairwise_accuracy_mean", std::move(pair_means)}};
  mvembed::write_json_atomic(doc, cli.out_path);
  std::cout << "macc " << mean << " +- " << stdev << " over " << repeats
            << " repeats; report written to " << cli.out_path << '\n';
  return 0;
}

int run_sweep(ExperimentCli& cli, int folds, const std::string& grid_l1,
              const std::string& grid_l2, const std::string& grid_beta,
              const std::string& grid_sigma, const std::string& grid_d) {
  cli.finalize();
  if (folds < 2) throw UsageError("--folds must be at least 2");
  const mvembed::MultiViewDataset data = cli.load();

  auto axis = [](const std::string& text, double fallback, const char* what) {
    return text.empty() ? std::vector<double>{fallback} : parse_double_list(text, what);
  };
  const std::vector<double> l1s = axis(grid_l1, cli.config.hp.lambda1, "--grid-lambda1");
  const std::vector<double> l2s = axis(grid_l2, cli.config.hp.lambda2, "--grid-lambda2");
  const std::vector<double> betas = axis(grid_beta, cli.config.hp.beta, "--grid-beta");
  const std::vector<double> sigmas = axis(grid_sigma, cli.config.kernel.sigma, "--grid-sigma");
  const std::vector<double> ds = axis(grid_d, double(cli.config.hp.d), "--grid-d");

  std::vector<mvembed::GridPoint> grid;
  json grid_doc = json::array();
  for (const double l1 : l1s)
    for (const double l2 : l2s)
      for (const double beta : betas)
        for (const double sigma : sigmas)
          for (const double d : ds) {
            mvembed::GridPoint point;
            point.hp = cli.config.hp;
            point.hp.lambda1 = l1;
            point.hp.lambda2 = l2;
            point.hp.beta = beta;
            point.hp.d = static_cast<mvembed::Index>(std::llround(d));
            point.sigma = sigma;
            grid.push_back(point);
            grid_doc.push_back(json{{"lambda1", l1},
                                    {"lambda2", l2},
                                    {"beta", beta},
                                    {"sigma", sigma},
                                    {"d", point.hp.d}});
          }

  // model selection on the training side only; the held-out side sees the
  // winner exactly once
  const mvembed::SplitSpec split = mvembed::split_by_object(
      data.object_count(), cli.config.train_fraction, cli.config.seed);
  const mvembed::MultiViewDataset train = mvembed::select_objects(data, split.train_objects);

  const mvembed::CvResult cv =
      mvembed::cross_validate(train, cli.config, grid, folds, cli.config.seed);

  mvembed::ExperimentConfig best = cli.config;
  best.hp = grid[static_cast<std::size_t>(cv.best_index)].hp;
  best.kernel.sigma = grid[static_cast<std::size_t>(cv.best_index)].sigma;
  const mvembed::ExperimentReport final_report =
      mvembed::evaluate_split(data, split.train_objects, split.test_objects, best);

  json doc;
  doc["grid"] = std::move(grid_doc);
  doc["folds"] = folds;
  doc["best_index"] = cv.best_index;
  doc["mean_scores"] = cv.mean_scores;
  doc["fold_scores"] = cv.fold_scores;
  doc["failures"] = cv.failures;
  doc["final_report"] = final_report.to_json();
  mvembed::write_json_atomic(doc, cli.out_path);
  std::cout << "best grid point " << cv.best_index << " (cv score "
            << cv.mean_scores[static_cast<std::size_t>(cv.best_index)] << "); held-out macc "
            << final_report.macc << "; written to " << cli.out_path << '\n';
  return 0;
}

std::string report_csv(const std::vector<mvembed::ExperimentReport>& reports) {
  std::ostringstream csv;
  csv << "method,components,fraction,relative_loss,pair,accuracy,macc,seed\n";
  for (const mvembed::ExperimentReport& report : reports) {
    std::string components = "full";
    if (report.config.contains("components")) {
      components.clear();
      for (const auto& part : report.config["components"])
        components += (components.empty() ? "" : "+") + part.get<std::string>();
    }
    for (const auto& [pair, acc] : report.pairwise_accuracy) {
      csv << report.method << ',' << components << ',';
      if (report.fraction) csv << *report.fraction;
      csv << ',';
      if (report.relative_loss) csv << *report.relative_loss;
      csv << ',' << (pair.first + 1) << "->" << (pair.second + 1) << ',' << acc << ','
          << report.macc << ',' << report.seed << '\n';
    }
  }
  return csv.str();
}

int run_robustness(ExperimentCli& cli, const std::string& fractions_text,
                   const std::string& csv_path) {
  cli.finalize();
  const std::vector<double> fractions =
      parse_double_list(fractions_text, "--fractions");
  const mvembed::MultiViewDataset data = cli.load();

  const std::vector<mvembed::ExperimentReport> sweep =
      mvembed::robustness_sweep(data, cli.config, fractions);

  json doc;
  doc["fractions"] = fractions;
  json reports = json::array();
  for (const mvembed::ExperimentReport& report : sweep) reports.push_back(report.to_json());
  doc["reports"] = std::move(reports);
  mvembed::write_json_atomic(doc, cli.out_path);
  if (!csv_path.empty()) write_text_atomic(report_csv(sweep), csv_path);
  std::cout << "swept " << fractions.size() << " fractions; written to " << cli.out_path
            << '\n';
  return 0;
}

int run_ablation(ExperimentCli& cli, const std::string& csv_path) {
  cli.finalize();
  if (cli.config.method != mvembed::Method::mvhe && cli.config.method != mvembed::Method::kmvhe)
    throw UsageError("ablation applies to the hybrid methods (mvhe, kmvhe) only");
  const mvembed::MultiViewDataset data = cli.load();

  const std::vector<mvembed::ExperimentReport> reports =
      mvembed::ablation_study(data, cli.config);

  json doc;
  json items = json::array();
  for (const mvembed::ExperimentReport& report : reports) items.push_back(report.to_json());
  doc["reports"] = std::move(items);
  mvembed::write_json_atomic(doc, cli.out_path);
  if (!csv_path.empty()) write_text_atomic(report_csv(reports), csv_path);
  std::cout << "ablated " << reports.size() << " term combinations; written to "
            << cli.out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("MVEMBED_THREADS")) {
    const int count = std::atoi(threads);
    if (count > 0) Eigen::setNbThreads(count);
  }

  CLI::App app{"Multi-view subspace embedding toolkit"};
  app.require_subcommand(1);

  // synth
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset on disk");
  SynthCli synth;
  std::vector<ConfigBinding> synth_bindings;
  synth.attach(synth_cmd, synth_bindings, nullptr);
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  synth_cmd->add_option("--seed", synth_seed, "Generation seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  // experiment commands
  ExperimentCli fit_cli, eval_cli, sweep_cli, robust_cli, ablate_cli;
  CLI::App* fit_cmd =
      app.add_subcommand("fit", "Fit one model on a full dataset and save it as JSON");
  fit_cli.attach(fit_cmd);

  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Split, fit and score a method over independent repeats");
  eval_cli.attach(eval_cmd);
  int repeats = 10;
  eval_cmd->add_option("--repeats", repeats, "Independent split repetitions")
      ->capture_default_str();
  eval_cli.bindings.push_back(
      {"--repeats", [&repeats](const json& v) { repeats = v.get<int>(); }});

  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Cross-validated grid selection, then one held-out evaluation");
  sweep_cli.attach(sweep_cmd);
  int folds = 5;
  std::string grid_l1, grid_l2, grid_beta, grid_sigma, grid_d;
  sweep_cmd->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
  sweep_cmd->add_option("--grid-lambda1", grid_l1, "Comma-separated lambda1 values");
  sweep_cmd->add_option("--grid-lambda2", grid_l2, "Comma-separated lambda2 values");
  sweep_cmd->add_option("--grid-beta", grid_beta, "Comma-separated beta values");
  sweep_cmd->add_option("--grid-sigma", grid_sigma, "Comma-separated rbf bandwidths");
  sweep_cmd->add_option("--grid-d", grid_d, "Comma-separated embedding dimensions");
  sweep_cli.bindings.push_back({"--folds", [&folds](const json& v) { folds = v.get<int>(); }});
  sweep_cli.bindings.push_back(
      {"--grid-lambda1", [&grid_l1](const json& v) { grid_l1 = v.get<std::string>(); }});
  sweep_cli.bindings.push_back(
      {"--grid-lambda2", [&grid_l2](const json& v) { grid_l2 = v.get<std::string>(); }});
  sweep_cli.bindings.push_back(
      {"--grid-beta", [&grid_beta](const json& v) { grid_beta = v.get<std::string>(); }});
  sweep_cli.bindings.push_back(
      {"--grid-sigma", [&grid_sigma](const json& v) { grid_sigma = v.get<std::string>(); }});
  sweep_cli.bindings.push_back(
      {"--grid-d", [&grid_d](const json& v) { grid_d = v.get<std::string>(); }});

  CLI::App* robust_cmd = app.add_subcommand(
      "robustness", "Evaluate one method under increasing training label noise");
  robust_cli.attach(robust_cmd);
  std::string fractions = "0,0.1,0.2,0.3,0.4";
  std::string robust_csv;
  robust_cmd->add_option("--fractions", fractions, "Comma-separated permutation fractions")
      ->capture_default_str();
  robust_cmd->add_option("--csv", robust_csv, "Optional flat CSV output path");
  robust_cli.bindings.push_back(
      {"--fractions", [&fractions](const json& v) { fractions = v.get<std::string>(); }});
  robust_cli.bindings.push_back(
      {"--csv", [&robust_csv](const json& v) { robust_csv = v.get<std::string>(); }});

  CLI::App* ablate_cmd = app.add_subcommand(
      "ablation", "Score every term combination of a hybrid method");
  ablate_cli.attach(ablate_cmd);
  std::string ablate_csv;
  ablate_cmd->add_option("--csv", ablate_csv, "Optional flat CSV output path");
  ablate_cli.bindings.push_back(
      {"--csv", [&ablate_csv](const json& v) { ablate_csv = v.get<std::string>(); }});

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (app.got_subcommand(synth_cmd)) return run_synth(synth, synth_seed, synth_out);
    if (app.got_subcommand(fit_cmd)) return run_fit(fit_cli);
    if (app.got_subcommand(eval_cmd)) return run_eval(eval_cli, repeats);
    if (app.got_subcommand(sweep_cmd))
      return run_sweep(sweep_cli, folds, grid_l1, grid_l2, grid_beta, grid_sigma, grid_d);
    if (app.got_subcommand(robust_cmd)) return run_robustness(robust_cli, fractions, robust_csv);
    if (app.got_subcommand(ablate_cmd)) return run_ablation(ablate_cli, ablate_csv);
    std::cerr << "usage error: no subcommand selected\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "[unexpected] " << e.what() << '\n';
    return 1;
  }
}
