#include "marvel/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <ostream>

#include "marvel/errors.hpp"
#include "marvel/margin.hpp"
#include "marvel/metrics.hpp"
#include "marvel/rng.hpp"

namespace marvel {

namespace {

constexpr std::uint64_t kSplitSubstream = 1;

ExperimentConfig resolve(const ExperimentConfig& cfg, bool binary) {
  ExperimentConfig out = cfg;
  if (!out.decay_epochs_set) {
    out.optimizer.decay_epochs = preset_decay_epochs(cfg.scheduler.method, binary, cfg.epochs);
    out.decay_epochs_set = true;
  }
  // A one-logit head only exists for two classes.
  if (!binary) out.model.output = OutputMode::softmax;
  out.validate();
  return out;
}

// Labels as the model sees them. A two-class set trained with softmax
// outputs uses class indices (-1 -> 0, +1 -> 1).
std::vector<int> to_model_labels(const std::vector<int>& labels, bool binary, OutputMode mode) {
  if (!binary || mode == OutputMode::binary_logit) return labels;
  std::vector<int> out(labels.size());
  std::transform(labels.begin(), labels.end(), out.begin(), [](int y) { return y == 1 ? 1 : 0; });
  return out;
}

std::vector<int> to_dataset_labels(std::vector<int> predicted, bool binary, OutputMode mode) {
  if (binary && mode == OutputMode::softmax) {
    for (int& y : predicted) y = y == 1 ? 1 : -1;
  }
  return predicted;
}

std::vector<int> predict_labels(const Model& model, const Dataset& ds) {
  return to_dataset_labels(predictions(forward(model, ds.features), model.mode()), ds.binary(),
                           model.mode());
}

Model build_model(const ExperimentConfig& cfg, const Dataset& ds, OutputMode mode) {
  const auto k = static_cast<std::size_t>(ds.num_classes);
  if (cfg.model.kind == ModelKind::linear) return Model::linear(ds.dim(), k, mode, cfg.seed);
  return Model::mlp(ds.dim(), cfg.model.hidden, k, mode, cfg.seed);
}

void audit_column(const HistoryLedger& ledger, const SchedulerConfig& sch, int epoch) {
  for (std::size_t i = 0; i < ledger.instances(); ++i) {
    const double now = ledger.weight(i, epoch);
    if (now != 0.0 && ledger.weight(i, epoch - 1) == 0.0) {
      throw InvariantError("audit: instance " + std::to_string(i) + " reinstated at epoch " +
                           std::to_string(epoch));
    }
    if (now == 0.0 && epoch < sch.warm_up + sch.wait) {
      throw InvariantError("audit: instance " + std::to_string(i) + " removed at epoch " +
                           std::to_string(epoch) + " before warm_up + wait");
    }
  }
}

std::optional<double> test_accuracy(const Model& model, const Dataset* test) {
  if (test == nullptr || test->size() == 0) return std::nullopt;
  const auto preds = predict_labels(model, *test);
  const auto truth = test->truth();
  return accuracy(preds, truth ? *truth : test->labels);
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& dc = cfg.dataset;
  Dataset all;
  switch (dc.source) {
    case DataSource::gaussians: all = gen_two_gaussians(dc.n, dc.dim, dc.separation, cfg.seed); break;
    case DataSource::ring: all = gen_ring_vs_blob(dc.n, dc.sigma, cfg.seed); break;
    case DataSource::file: all = load_dataset(dc.path); break;
  }
  all.validate();

  PreparedData out;
  if (!dc.test_path.empty()) {
    out.train = std::move(all);
    out.test = load_dataset(dc.test_path);
    out.test->validate();
    if (out.test->dim() != out.train.dim() || out.test->num_classes != out.train.num_classes) {
      throw ConfigError("test set shape does not match the training set");
    }
  } else {
    const auto held = static_cast<std::size_t>(
        std::nearbyint(dc.test_fraction * static_cast<double>(all.size())));
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(cfg.seed, Stream::data, kSplitSubstream);
    shuffle(order, rng);
    std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    out.train = all.subset(train_idx);
    if (!test_idx.empty()) out.test = all.subset(test_idx);
  }
  if (out.train.size() == 0) throw ConfigError("training set is empty");

  auto& tr = out.train;
  if (tr.true_labels.empty()) tr.true_labels.assign(tr.size(), std::nullopt);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (!tr.true_labels[i]) tr.true_labels[i] = tr.labels[i];
  }
  try {
    tr.labels = corrupt(tr.labels, tr.num_classes, cfg.noise, cfg.seed).observed;
  } catch (const DomainError& e) {
    throw ConfigError(std::string("noise: ") + e.what());
  }
  return out;
}

RunResult train(const ExperimentConfig& config, const Dataset& train_set, const Dataset* test_set) {
  train_set.validate();
  const bool binary = train_set.binary();
  const ExperimentConfig cfg = resolve(config, binary);
  const OutputMode mode = cfg.model.output;

  const std::size_t n = train_set.size();
  const auto model_labels = to_model_labels(train_set.labels, binary, mode);
  const auto truth = train_set.truth();
  std::vector<bool> noisy(n, false);
  if (truth) {
    for (std::size_t i = 0; i < n; ++i) noisy[i] = (*truth)[i] != train_set.labels[i];
  }

  Model model = build_model(cfg, train_set, mode);
  SgdState state(model);
  HistoryLedger ledger(n, cfg.epochs);
  std::vector<EpochReport> reports;
  const auto& sch = cfg.scheduler;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::optional<EpochMarginStats> prev_stats;
    if (sch.method == Method::marvel_plus && sch.stats_scope == StatsScope::prev_epoch &&
        epoch > sch.warm_up) {
      prev_stats = column_stats(ledger, epoch - 1);
    }

    for (const auto& batch : batches(n, cfg.batch_size, epoch, cfg.seed)) {
      const Matrix x = train_set.features.gather_rows(batch);
      std::vector<int> y(batch.size());
      for (std::size_t k = 0; k < batch.size(); ++k) y[k] = model_labels[batch[k]];

      const Logits logits = forward(model, x);
      const auto decision = decide_batch(sch, ledger, epoch, batch, logits, y, mode, prev_stats);
      if (!decision.all_zero) {
        const double loss = weighted_ce_loss(logits, y, decision.loss_weights, mode);
        if (!std::isfinite(loss)) throw DivergenceError(epoch, "non-finite training loss");
        sgd_step(model, gradients(model, x, y, decision.loss_weights), epoch, cfg.optimizer, state);
      }
      ledger.record(epoch, batch, decision.policy_weights, decision.margins);
    }
    if (cfg.audit) audit_column(ledger, sch, epoch);

    EpochReport rep;
    rep.epoch = epoch;
    rep.lr = cfg.optimizer.learning_rate_at(epoch);
    const Logits full = forward(model, train_set.features);
    const auto preds = to_dataset_labels(predictions(full, mode), binary, mode);
    rep.train_acc = accuracy(preds, train_set.labels);
    rep.test_acc = test_accuracy(model, test_set);

    std::vector<bool> kept(n);
    const auto fresh = margins(full, model_labels, mode);
    std::vector<double> kept_margins;
    for (std::size_t i = 0; i < n; ++i) {
      kept[i] = ledger.weight(i, epoch) != 0.0;
      if (kept[i]) kept_margins.push_back(fresh[i]);
    }
    if (const auto summary = margin_summary(kept_margins)) {
      rep.margin_median = summary->median;
      rep.margin_var = summary->variance;
      rep.margin_q05 = summary->q05;
    }
    if (truth) {
      rep.mem_ratio = memorization_ratio(preds, train_set.labels, *truth);
      const auto fr = retained_fractions(kept, noisy);
      rep.retained_clean_frac = fr.clean;
      rep.retained_noisy_frac = fr.noisy;
      const auto pr = label_precision_recall(kept, train_set.labels, *truth);
      rep.label_precision = pr.precision;
      rep.label_recall = pr.recall;
    }
    reports.push_back(rep);
  }

  auto retained = ledger.retained(cfg.epochs);
  return RunResult{cfg, std::move(reports), std::move(retained), std::move(model), std::move(ledger)};
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  const auto data = prepare_data(cfg);
  return train(cfg, data.train, data.test ? &*data.test : nullptr);
}

int detect_warmup(std::span<const double> curve, int window, double slope_threshold) {
  if (window < 2) throw DomainError("warm-up detection window must be at least 2");
  const auto w = static_cast<std::size_t>(window);
  const double x_mean = (static_cast<double>(window) - 1.0) / 2.0;
  double sxx = 0.0;
  for (std::size_t j = 0; j < w; ++j) sxx += (j - x_mean) * (j - x_mean);
  for (std::size_t end = w; end <= curve.size(); ++end) {
    const auto win = curve.subspan(end - w, w);
    double y_mean = 0.0;
    for (double v : win) y_mean += v;
    y_mean /= static_cast<double>(w);
    double sxy = 0.0;
    for (std::size_t j = 0; j < w; ++j) sxy += (j - x_mean) * (win[j] - y_mean);
    if (sxy / sxx < slope_threshold) return static_cast<int>(end);
  }
  return static_cast<int>(curve.size());
}

TuneResult tune_wait(const ExperimentConfig& cfg, const std::vector<int>& grid,
                     std::size_t k_folds) {
  if (grid.empty()) throw DomainError("wait grid is empty");
  const auto data = prepare_data(cfg);
  const auto plan = kfold(data.train.size(), k_folds, cfg.seed);

  struct FoldOutcome {
    std::optional<double> accuracy;
    std::string error;
  };
  auto run_fold = [&](int wait, std::size_t f) -> FoldOutcome {
    try {
      ExperimentConfig c = cfg;
      c.scheduler.wait = wait;
      std::vector<std::size_t> fit;
      for (std::size_t g = 0; g < plan.folds.size(); ++g) {
        if (g != f) fit.insert(fit.end(), plan.folds[g].begin(), plan.folds[g].end());
      }
      std::sort(fit.begin(), fit.end());
      const Dataset fit_set = data.train.subset(fit);
      const Dataset held = data.train.subset(plan.folds[f]);
      const auto run = train(c, fit_set, nullptr);
      // Scored against the observed (noisy) held-out labels.
      return {accuracy(predict_labels(run.model, held), held.labels), {}};
    } catch (const Error& e) {
      return {std::nullopt, e.what()};
    }
  };

  std::vector<std::vector<std::future<FoldOutcome>>> pending(grid.size());
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    for (std::size_t f = 0; f < k_folds; ++f) {
      pending[gi].push_back(std::async(std::launch::async, run_fold, grid[gi], f));
    }
  }

  TuneResult result;
  std::optional<double> best;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    CvRow row;
    row.wait = grid[gi];
    double total = 0.0;
    bool complete = true;
    for (auto& fut : pending[gi]) {
      auto outcome = fut.get();
      row.fold_accuracy.push_back(outcome.accuracy);
      if (outcome.accuracy) {
        total += *outcome.accuracy;
      } else {
        complete = false;
        if (row.error.empty()) row.error = outcome.error;
      }
    }
    if (complete) {
      row.mean_accuracy = total / static_cast<double>(k_folds);
      if (!best || *row.mean_accuracy > *best ||
          (*row.mean_accuracy == *best && row.wait < result.best_wait)) {
        best = row.mean_accuracy;
        result.best_wait = row.wait;
      }
    }
    result.table.push_back(std::move(row));
  }
  if (!best) throw Error("every wait value failed cross validation");
  return result;
}

namespace {

void cell(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_double(*v);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("error writing '" + path.string() + "'");
}

}  // namespace

void write_epochs_csv(const std::vector<EpochReport>& reports, std::ostream& out) {
  out << "epoch,lr,train_acc,test_acc,mem_ratio,retained_clean_frac,retained_noisy_frac,"
         "label_precision,label_recall,margin_median,margin_var,margin_q05\n";
  for (const auto& r : reports) {
    out << r.epoch << ',' << format_double(r.lr);
    for (const auto* v : {&r.train_acc, &r.test_acc, &r.mem_ratio, &r.retained_clean_frac,
                          &r.retained_noisy_frac, &r.label_precision, &r.label_recall,
                          &r.margin_median, &r.margin_var, &r.margin_q05}) {
      out << ',';
      cell(out, *v);
    }
    out << '\n';
  }
}

void write_cv_table(const TuneResult& result, std::ostream& out) {
  const std::size_t folds = result.table.empty() ? 0 : result.table.front().fold_accuracy.size();
  out << "wait";
  for (std::size_t f = 1; f <= folds; ++f) out << ",fold_" << f;
  out << ",mean,error\n";
  for (const auto& row : result.table) {
    out << row.wait;
    for (const auto& a : row.fold_accuracy) {
      out << ',';
      cell(out, a);
    }
    out << ',';
    cell(out, row.mean_accuracy);
    out << ',' << row.error << '\n';
  }
}

void emit(const RunResult& run, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create '" + dir.string() + "': " + ec.message());

  const auto epochs_path = dir / "epochs.csv";
  auto epochs = open_output(epochs_path);
  write_epochs_csv(run.reports, epochs);
  finish(epochs, epochs_path);

  const auto ledger_path = dir / "ledger.csv";
  auto ledger = open_output(ledger_path);
  run.ledger.write_csv(ledger);
  finish(ledger, ledger_path);

  const auto retained_path = dir / "retained.csv";
  auto retained = open_output(retained_path);
  retained << "instance\n";
  for (std::size_t i : run.retained) retained << i << '\n';
  finish(retained, retained_path);

  const auto echo_path = dir / "config.echo";
  auto echo = open_output(echo_path);
  echo << to_config_text(run.config);
  finish(echo, echo_path);
}

}  // namespace marvel
