// Black-box tests of the command-line binary: exit codes, file outputs, and
// the determinism contract, all through the same entry point a user runs.

#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mvembed/dataset.hpp"
#include "test_support.hpp"

namespace {

using nlohmann::json;

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

CliRun run_cli(const std::filesystem::path& dir, const std::string& args) {
  const std::filesystem::path out = dir / "stdout.txt";
  const std::filesystem::path err = dir / "stderr.txt";
  const std::string command = std::string(MVEMBED_CLI_PATH) + " " + args + " > " +
                              out.string() + " 2> " + err.string();
  const int status = std::system(command.c_str());
  CliRun result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out);
  result.err = slurp(err);
  return result;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return json::parse(in);
}

// Reports are deterministic except for wall-clock timings.
json strip_timings(json doc) {
  if (doc.contains("reports"))
    for (json& report : doc["reports"]) report.erase("timings");
  if (doc.contains("final_report")) doc["final_report"].erase("timings");
  doc.erase("timings");
  return doc;
}

}  // namespace

TEST_CASE("synth writes a loadable dataset and reruns bit-identically") {
  const auto dir = test_support::temp_dir("cli_synth");
  const std::string spec = "synth --classes 3 --views 2 --per-class 6 --dim 4 --seed 11 --out ";
  CHECK(run_cli(dir, spec + (dir / "a").string()).exit_code == 0);
  CHECK(run_cli(dir, spec + (dir / "b").string()).exit_code == 0);

  const mvembed::MultiViewDataset data = mvembed::load_dataset(dir / "a" / "manifest.json");
  CHECK(data.view_count() == 2);
  CHECK(data.object_count() == 18);
  CHECK(data.num_classes == 3);

  for (const char* name : {"manifest.json", "view1.csv", "view2.csv", "labels.txt"})
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
}

TEST_CASE("eval emits the full report bundle") {
  const auto dir = test_support::temp_dir("cli_eval");
  REQUIRE(run_cli(dir, "synth --classes 3 --views 3 --per-class 8 --dim 5 --separation 10 "
                       "--seed 3 --out " + (dir / "data").string()).exit_code == 0);

  const std::string manifest = (dir / "data" / "manifest.json").string();
  const CliRun run = run_cli(dir, "eval --data " + manifest +
                                      " --method mvhe --d 2 --p2 4 --repeats 2 --seed 5 --out " +
                                      (dir / "report.json").string());
  CHECK(run.exit_code == 0);

  const json doc = load_json(dir / "report.json");
  CHECK(doc["repeats"] == 2);
  REQUIRE(doc["reports"].size() == 2);
  CHECK(doc["reports"][0]["pairwise_accuracy"].size() == 6);  // 3 views, ordered pairs
  CHECK(doc["summary"].contains("mean_macc"));
  CHECK(doc["summary"]["pairwise_accuracy_mean"].size() == 6);
  // the resolved configuration makes the report self-reproducing
  const json& cfg = doc["reports"][0]["config"];
  for (const char* key : {"method", "seed", "train_fraction", "hyperparameters",
                          "resolved_pca_dims"})
    CHECK(cfg.contains(key));
}

TEST_CASE("same seed reproduces a report except for timings") {
  const auto dir = test_support::temp_dir("cli_determinism");
  REQUIRE(run_cli(dir, "synth --classes 3 --views 2 --per-class 8 --dim 5 --seed 3 --out " +
                           (dir / "data").string()).exit_code == 0);
  const std::string manifest = (dir / "data" / "manifest.json").string();

  const std::string base = "eval --data " + manifest +
                           " --method kmvhe --d 2 --p2 4 --repeats 2 --seed 9 --out ";
  REQUIRE(run_cli(dir, base + (dir / "r1.json").string()).exit_code == 0);
  REQUIRE(run_cli(dir, base + (dir / "r2.json").string()).exit_code == 0);
  CHECK(strip_timings(load_json(dir / "r1.json")).dump() ==
        strip_timings(load_json(dir / "r2.json")).dump());
}

TEST_CASE("usage problems exit with code 2 and one-line diagnostics") {
  const auto dir = test_support::temp_dir("cli_usage");
  const std::string out = (dir / "x.json").string();

  const CliRun unknown = run_cli(dir, "eval --synthetic --method pca --out " + out);
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.err.find("mvhe") != std::string::npos);  // lists the registry
  CHECK(std::count(unknown.err.begin(), unknown.err.end(), '\n') == 1);

  CHECK(run_cli(dir, "eval --method mvhe --out " + out).exit_code == 2);  // no data source
  CHECK(run_cli(dir, "eval --synthetic --data a.json --method mvhe --out " + out).exit_code ==
        2);  // two data sources
  CHECK(run_cli(dir, "--bogus-flag").exit_code == 2);
  CHECK(run_cli(dir, "eval --synthetic --method mvhe").exit_code == 2);  // --out missing
  CHECK(run_cli(dir, "ablation --synthetic --method cca --out " + out).exit_code == 2);
}

TEST_CASE("runtime failures exit with code 1 and a phase stamp") {
  const auto dir = test_support::temp_dir("cli_runtime");
  const CliRun missing = run_cli(dir, "eval --data /nonexistent/manifest.json --method mvhe "
                                      "--out " + (dir / "x.json").string());
  CHECK(missing.exit_code == 1);
  CHECK(missing.err.find('[') != std::string::npos);  // phase-stamped message

  // a pca dimension no view can provide fails mid-pipeline
  const CliRun bad_dim = run_cli(dir, "eval --synthetic --classes 2 --per-class 5 --dim 3 "
                                      "--method mvhe --d 2 --p2 3 --pca-dim 9 --out " +
                                          (dir / "y.json").string());
  CHECK(bad_dim.exit_code == 1);
  CHECK(bad_dim.err.find("[pca]") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "y.json"));  // no partial output
}

TEST_CASE("config files fill unset flags and explicit flags win") {
  const auto dir = test_support::temp_dir("cli_config");
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"method": "pls", "d": 2, "train-fraction": 0.5, "seed": 21})";
  }
  REQUIRE(run_cli(dir, "synth --classes 3 --views 2 --per-class 8 --dim 5 --seed 3 --out " +
                           (dir / "data").string()).exit_code == 0);
  const std::string manifest = (dir / "data" / "manifest.json").string();

  const CliRun from_cfg = run_cli(dir, "eval --data " + manifest + " --config " +
                                           (dir / "cfg.json").string() + " --repeats 1 --out " +
                                           (dir / "a.json").string());
  REQUIRE(from_cfg.exit_code == 0);
  const json a = load_json(dir / "a.json");
  CHECK(a["reports"][0]["config"]["method"] == "pls");
  CHECK(a["reports"][0]["config"]["train_fraction"] == 0.5);
  CHECK(a["reports"][0]["config"]["hyperparameters"]["d"] == 2);

  const CliRun overridden = run_cli(dir, "eval --data " + manifest + " --config " +
                                             (dir / "cfg.json").string() +
                                             " --method mvda --repeats 1 --out " +
                                             (dir / "b.json").string());
  REQUIRE(overridden.exit_code == 0);
  CHECK(load_json(dir / "b.json")["reports"][0]["config"]["method"] == "mvda");

  {
    std::ofstream cfg(dir / "bad.json");
    cfg << R"({"no-such-key": 1})";
  }
  CHECK(run_cli(dir, "eval --data " + manifest + " --config " + (dir / "bad.json").string() +
                         " --out " + (dir / "c.json").string()).exit_code == 2);
}

TEST_CASE("fit saves a model document describing its own preprocessing") {
  const auto dir = test_support::temp_dir("cli_fit");
  const CliRun run = run_cli(dir, "fit --synthetic --classes 3 --views 2 --per-class 6 "
                                  "--dim 4 --data-seed 7 --method cca --d 2 --out " +
                                      (dir / "model.json").string());
  REQUIRE(run.exit_code == 0);
  const json model = load_json(dir / "model.json");
  CHECK(model["kind"] == "linear");
  CHECK(model["method"] == "cca");
  CHECK(model["centered"] == true);
  CHECK(model["view_means"].size() == 2);
  CHECK(model["per_view_projections"].size() == 2);
  CHECK(model["eigenvalues"].size() == 2);

  const CliRun hybrid = run_cli(dir, "fit --synthetic --classes 3 --views 2 --per-class 6 "
                                     "--dim 4 --data-seed 7 --method mvhe --d 2 --p2 4 --out " +
                                         (dir / "m2.json").string());
  REQUIRE(hybrid.exit_code == 0);
  CHECK(load_json(dir / "m2.json")["centered"] == false);
}

TEST_CASE("sweep selects over the grid and reports the held-out result") {
  const auto dir = test_support::temp_dir("cli_sweep");
  const CliRun run = run_cli(dir, "sweep --synthetic --classes 3 --views 2 --per-class 10 "
                                  "--dim 5 --separation 10 --data-seed 3 --method mvhe --d 2 "
                                  "--p2 4 --grid-lambda2 0.001,0.05 --folds 3 --seed 5 --out " +
                                      (dir / "sweep.json").string());
  REQUIRE(run.exit_code == 0);
  const json doc = load_json(dir / "sweep.json");
  CHECK(doc["grid"].size() == 2);
  CHECK(doc["mean_scores"].size() == 2);
  CHECK(doc["fold_scores"][0].size() == 3);
  CHECK(doc["final_report"]["macc"].is_number());
  const int best = doc["best_index"].get<int>();
  CHECK((best == 0 || best == 1));
}

TEST_CASE("robustness and ablation write reports plus flat csv") {
  const auto dir = test_support::temp_dir("cli_drivers");
  const std::string source = "--synthetic --classes 3 --views 2 --per-class 10 --dim 5 "
                             "--separation 10 --data-seed 3 ";

  const CliRun robust = run_cli(dir, "robustness " + source +
                                         "--method mvda --d 2 --fractions 0,0.3 --seed 5 --out " +
                                         (dir / "rob.json").string() + " --csv " +
                                         (dir / "rob.csv").string());
  REQUIRE(robust.exit_code == 0);
  const json rob = load_json(dir / "rob.json");
  REQUIRE(rob["reports"].size() == 2);
  CHECK(rob["reports"][0]["fraction"] == 0.0);
  CHECK(rob["reports"][1]["fraction"] == 0.3);
  CHECK(rob["reports"][1].contains("relative_loss"));
  const std::string csv = slurp(dir / "rob.csv");
  CHECK(csv.rfind("method,components,fraction,relative_loss,pair,accuracy,macc,seed\n", 0) ==
        0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 2);  // header + 2 pairs x 2 rows

  const CliRun ablate = run_cli(dir, "ablation " + source +
                                         "--method mvhe --d 2 --p2 4 --seed 5 --out " +
                                         (dir / "abl.json").string() + " --csv " +
                                         (dir / "abl.csv").string());
  REQUIRE(ablate.exit_code == 0);
  CHECK(load_json(dir / "abl.json")["reports"].size() == 7);
  const std::string abl_csv = slurp(dir / "abl.csv");
  CHECK(std::count(abl_csv.begin(), abl_csv.end(), '\n') == 1 + 7 * 2);
}
