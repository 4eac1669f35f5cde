// Command-line front end: run, tune-wait, gen, corrupt, detect-warmup.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "marvel/data.hpp"
#include "marvel/errors.hpp"
#include "marvel/noise.hpp"
#include "marvel/runner.hpp"

namespace {

std::string show(const std::optional<double>& v) {
  return v ? marvel::format_double(*v) : std::string("-");
}

std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stoi(item));
  return out;
}

// Reads the train_acc column of an epochs.csv file.
std::vector<double> read_train_accuracy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw marvel::Error("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  std::vector<double> curve;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ',');  // epoch
    std::getline(row, field, ',');  // lr
    std::getline(row, field, ',');  // train_acc
    if (field.empty()) throw marvel::Error("missing train_acc in '" + path + "'");
    curve.push_back(std::stod(field));
  }
  return curve;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Margin-based noisy-label filtering (MARVEL / MARVEL+) experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Train one configuration and write CSV outputs");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--out", out_dir, "Output directory (overrides [run] out)");

  std::string grid_text = "3,4,5,6,7";
  std::size_t folds = 5;
  auto* tune = app.add_subcommand("tune-wait", "Cross-validate the wait period");
  tune->add_option("--config", config_path, "Experiment config file")->required();
  tune->add_option("--grid", grid_text, "Comma-separated wait values");
  tune->add_option("--folds", folds, "Number of folds");
  tune->add_option("--seed", seed, "Override the master seed");
  tune->add_option("--out", out_dir, "Directory for cv.csv");

  std::string kind = "gaussians";
  std::string gen_out;
  std::size_t n = 1000;
  std::size_t dim = 2;
  double separation = 3.0;
  double sigma = 0.05;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen", "Write a synthetic dataset");
  gen->add_option("--kind", kind, "gaussians | ring")->check(CLI::IsMember({"gaussians", "ring"}));
  gen->add_option("--out", gen_out, "Output dataset file")->required();
  gen->add_option("--n", n, "Number of instances (even)");
  gen->add_option("--d", dim, "Feature dimension (gaussians)");
  gen->add_option("--separation", separation, "Distance between class means (gaussians)");
  gen->add_option("--sigma", sigma, "Ring jitter (ring)");
  gen->add_option("--seed", gen_seed, "Seed");

  std::string in_path;
  std::string noise_text;
  std::string corrupt_out;
  std::uint64_t noise_seed = 0;
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Inject label noise into a dataset file");
  corrupt_cmd->add_option("--in", in_path, "Input dataset file")->required();
  corrupt_cmd->add_option("--noise", noise_text, "e.g. binary:0.4,0.1 or pair:0.4:9>1,2>0")
      ->required();
  corrupt_cmd->add_option("--seed", noise_seed, "Seed");
  corrupt_cmd->add_option("--out", corrupt_out, "Output dataset file")->required();

  std::string epochs_csv;
  int window = 5;
  double threshold = 0.002;
  auto* warm = app.add_subcommand("detect-warmup",
                                  "Pick a warm-up period from a CE run's training accuracy");
  warm->add_option("--epochs", epochs_csv, "epochs.csv of a CE run")->required();
  warm->add_option("--window", window, "Trailing window length");
  warm->add_option("--threshold", threshold, "Slope threshold per epoch");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = marvel::load_config(config_path);
      if (seed) cfg.seed = *seed;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      const auto result = marvel::run_experiment(cfg);
      const auto& last = result.reports.back();
      std::cout << "method=" << marvel::to_string(result.config.scheduler.method)
                << " epochs=" << last.epoch << " train_acc=" << show(last.train_acc)
                << " test_acc=" << show(last.test_acc) << " mem_ratio=" << show(last.mem_ratio)
                << " precision=" << show(last.label_precision)
                << " recall=" << show(last.label_recall)
                << " retained=" << result.retained.size() << "/" << result.ledger.instances()
                << '\n';
      if (!cfg.out_dir.empty()) {
        marvel::emit(result, cfg.out_dir);
        std::cout << "wrote " << cfg.out_dir << '\n';
      }
    } else if (*tune) {
      auto cfg = marvel::load_config(config_path);
      if (seed) cfg.seed = *seed;
      const auto result = marvel::tune_wait(cfg, parse_grid(grid_text), folds);
      marvel::write_cv_table(result, std::cout);
      std::cout << "best_wait=" << result.best_wait << '\n';
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream cv(std::filesystem::path(out_dir) / "cv.csv");
        marvel::write_cv_table(result, cv);
      }
    } else if (*gen) {
      const auto ds = kind == "ring" ? marvel::gen_ring_vs_blob(n, sigma, gen_seed)
                                     : marvel::gen_two_gaussians(n, dim, separation, gen_seed);
      marvel::save_dataset(ds, gen_out);
    } else if (*corrupt_cmd) {
      auto ds = marvel::load_dataset(in_path);
      ds.validate();
      const auto spec = marvel::parse_noise_spec(noise_text);
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!ds.true_labels[i]) ds.true_labels[i] = ds.labels[i];
      }
      const auto result = marvel::corrupt(ds.labels, ds.num_classes, spec, noise_seed);
      ds.labels = result.observed;
      marvel::save_dataset(ds, corrupt_out);
      std::size_t flipped = 0;
      for (bool b : result.noisy) flipped += b;
      std::cout << "flipped " << flipped << " of " << ds.size() << '\n';
    } else if (*warm) {
      const auto curve = read_train_accuracy(epochs_csv);
      std::cout << "warm_up=" << marvel::detect_warmup(curve, window, threshold) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
