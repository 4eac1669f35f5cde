#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "marvel/data.hpp"
#include "marvel/ledger.hpp"
#include "marvel/model.hpp"
#include "marvel/noise.hpp"
#include "marvel/scheduler.hpp"

namespace marvel {

enum class DataSource { gaussians, ring, file };
enum class ModelKind { linear, mlp };

struct DatasetConfig {
  DataSource source = DataSource::gaussians;
  std::size_t n = 1000;
  std::size_t dim = 2;
  double separation = 3.0;
  double sigma = 0.05;
  std::string path;
  std::string test_path;        // when set, test_fraction is ignored
  double test_fraction = 0.2;   // held out from the source before corruption
};

struct ModelConfig {
  ModelKind kind = ModelKind::linear;
  std::vector<std::size_t> hidden{16};
  OutputMode output = OutputMode::binary_logit;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  NoiseSpec noise;
  ModelConfig model;
  OptimizerConfig optimizer;
  bool decay_epochs_set = false;  // false: take the method preset
  SchedulerConfig scheduler;
  int epochs = 100;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool audit = false;

  /// Throws ConfigError.
  void validate() const;
};

/// INI-style text: `[section]` headers and `key = value` lines, `#` comments.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Fully resolved config in the same format parse_config reads.
std::string to_config_text(const ExperimentConfig& cfg);

/// Learning-rate decay epochs used when none are configured. Two-class runs
/// decay at 75% and 90% of training for every method; multi-class runs decay
/// CE at 1/3 and 2/3, MARVEL and MARVEL+ at 2/3 and 5/6.
std::vector<int> preset_decay_epochs(Method method, bool binary, int epochs);

struct EpochReport {
  int epoch = 0;
  double lr = 0.0;
  std::optional<double> train_acc;
  std::optional<double> test_acc;
  std::optional<double> mem_ratio;
  std::optional<double> retained_clean_frac;
  std::optional<double> retained_noisy_frac;
  std::optional<double> label_precision;
  std::optional<double> label_recall;
  std::optional<double> margin_median;
  std::optional<double> margin_var;
  std::optional<double> margin_q05;
};

struct RunResult {
  ExperimentConfig config;  // resolved
  std::vector<EpochReport> reports;
  std::vector<std::size_t> retained;  // nonzero final weight
  Model model;
  HistoryLedger ledger;
};

struct PreparedData {
  Dataset train;  // observed labels corrupted per the noise spec
  std::optional<Dataset> test;
};

/// Builds or loads the data, holds out the test split and corrupts the
/// training labels. Deterministic in the config.
PreparedData prepare_data(const ExperimentConfig& cfg);

/// The training loop on an already-prepared training set.
RunResult train(const ExperimentConfig& cfg, const Dataset& train_set, const Dataset* test_set);

RunResult run_experiment(const ExperimentConfig& cfg);

/// Smallest 1-based epoch whose trailing `window` accuracies have a
/// least-squares slope below `slope_threshold`; curve.size() if none.
int detect_warmup(std::span<const double> train_accuracy, int window = 5,
                  double slope_threshold = 0.002);

struct CvRow {
  int wait = 0;
  std::vector<std::optional<double>> fold_accuracy;
  std::optional<double> mean_accuracy;
  std::string error;
};

struct TuneResult {
  int best_wait = 0;
  std::vector<CvRow> table;
};

/// k-fold cross validation of the wait period on the (noisy) training set.
/// Held-out accuracy is measured against the observed labels; ties go to the
/// smaller wait.
TuneResult tune_wait(const ExperimentConfig& cfg, const std::vector<int>& grid,
                     std::size_t k_folds = 5);

void write_epochs_csv(const std::vector<EpochReport>& reports, std::ostream& out);
void write_cv_table(const TuneResult& result, std::ostream& out);

/// Writes epochs.csv, ledger.csv, retained.csv and config.echo into `dir`.
void emit(const RunResult& run, const std::filesystem::path& dir);

}  // namespace marvel
