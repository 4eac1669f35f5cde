#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "marvel/data.hpp"
#include "marvel/errors.hpp"
#include "marvel/margin.hpp"
#include "marvel/metrics.hpp"
#include "marvel/noise.hpp"
#include "marvel/runner.hpp"
#include "marvel/scheduler.hpp"

namespace py = pybind11;
using namespace marvel;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

OutputMode parse_mode(const std::string& mode) {
  if (mode == "binary") return OutputMode::binary_logit;
  if (mode == "softmax") return OutputMode::softmax;
  throw DomainError("mode must be 'binary' or 'softmax'");
}

py::dict dataset_dict(const Dataset& ds) {
  py::dict d;
  d["features"] = to_array(ds.features);
  d["labels"] = ds.labels;
  d["true_labels"] = ds.true_labels;
  d["num_classes"] = ds.num_classes;
  return d;
}

ExperimentConfig config_from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "<python>");
}

py::dict report_dict(const EpochReport& r) {
  py::dict d;
  d["epoch"] = r.epoch;
  d["lr"] = r.lr;
  d["train_acc"] = r.train_acc;
  d["test_acc"] = r.test_acc;
  d["mem_ratio"] = r.mem_ratio;
  d["retained_clean_frac"] = r.retained_clean_frac;
  d["retained_noisy_frac"] = r.retained_noisy_frac;
  d["label_precision"] = r.label_precision;
  d["label_recall"] = r.label_recall;
  d["margin_median"] = r.margin_median;
  d["margin_var"] = r.margin_var;
  d["margin_q05"] = r.margin_q05;
  return d;
}

py::dict run_dict(const RunResult& run) {
  const auto n = run.ledger.instances();
  const auto cols = static_cast<std::size_t>(run.ledger.epochs()) + 1;
  Matrix w(n, cols), h(n, cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = 0; e < cols; ++e) {
      w(i, e) = run.ledger.weight(i, static_cast<int>(e));
      h(i, e) = run.ledger.margin(i, static_cast<int>(e));
    }
  }
  py::list reports;
  for (const auto& r : run.reports) reports.append(report_dict(r));
  py::dict d;
  d["reports"] = reports;
  d["retained"] = run.retained;
  d["weights"] = to_array(w);
  d["margins"] = to_array(h);
  d["config"] = to_config_text(run.config);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Margin-history filtering and reweighting for training under label noise";

  auto base = py::register_exception<Error>(m, "MarvelError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<StateError>(m, "StateError", base.ptr());
  py::register_exception<InvariantError>(m, "InvariantError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  // data
  m.def("gen_two_gaussians",
        [](std::size_t n, std::size_t dim, double separation, std::uint64_t seed) {
          return dataset_dict(gen_two_gaussians(n, dim, separation, seed));
        },
        py::arg("n"), py::arg("dim"), py::arg("separation"), py::arg("seed"));
  m.def("gen_ring_vs_blob",
        [](std::size_t n, double sigma, std::uint64_t seed) {
          return dataset_dict(gen_ring_vs_blob(n, sigma, seed));
        },
        py::arg("n"), py::arg("sigma"), py::arg("seed"));
  m.def("load_dataset", [](const std::string& path) { return dataset_dict(load_dataset(path)); });
  m.def("kfold", [](std::size_t n, std::size_t k, std::uint64_t seed) { return kfold(n, k, seed).folds; },
        py::arg("n"), py::arg("k_folds"), py::arg("seed"));
  m.def("batches", &batches, py::arg("n"), py::arg("batch_size"), py::arg("epoch"), py::arg("seed"));

  // noise
  m.def("corrupt",
        [](const std::vector<int>& labels, int num_classes, const std::string& spec,
           std::uint64_t seed) {
          auto c = corrupt(labels, num_classes, parse_noise_spec(spec), seed);
          return py::make_tuple(c.observed, c.noisy);
        },
        py::arg("labels"), py::arg("num_classes"), py::arg("spec"), py::arg("seed"),
        "Returns (observed labels, flipped mask).");

  // margins
  m.def("binary_margin", &binary_margin, py::arg("logit"), py::arg("label"));
  m.def("multiclass_margin",
        [](const std::vector<double>& logits, int label) { return multiclass_margin(logits, label); },
        py::arg("logits"), py::arg("label"));
  m.def("margins",
        [](const Array& logits, const std::vector<int>& labels, const std::string& mode) {
          return margins(to_matrix(logits), labels, parse_mode(mode));
        },
        py::arg("logits"), py::arg("labels"), py::arg("mode") = "softmax");

  // weight policy
  m.def("reset_nonzero",
        [](const std::vector<double>& w) { return reset_nonzero(w); }, py::arg("weights"));
  m.def("adaptive_weights",
        [](const std::vector<double>& w, const std::vector<double>& margins, double median,
           double variance, double sigma_floor) {
          return adaptive_weights(w, margins, EpochMarginStats{median, variance}, sigma_floor);
        },
        py::arg("weights"), py::arg("margins"), py::arg("median"), py::arg("variance"),
        py::arg("sigma_floor") = 1e-8);
  m.def("apply_removal",
        [](const std::vector<double>& w, const std::vector<double>& window) {
          return apply_removal(w, window);
        },
        py::arg("weights"), py::arg("window_max"));

  // metrics
  m.def("memorization_ratio",
        [](const std::vector<int>& p, const std::vector<int>& o, const std::vector<int>& t) {
          return memorization_ratio(p, o, t);
        },
        py::arg("predictions"), py::arg("observed"), py::arg("truth"));
  m.def("label_precision_recall",
        [](const std::vector<bool>& kept, const std::vector<int>& o, const std::vector<int>& t) {
          const auto pr = label_precision_recall(kept, o, t);
          return py::make_tuple(pr.precision, pr.recall);
        },
        py::arg("retained"), py::arg("observed"), py::arg("truth"));
  m.def("margin_summary", [](const std::vector<double>& v) -> py::object {
    const auto s = margin_summary(v);
    if (!s) return py::none();
    return py::make_tuple(s->median, s->variance, s->q05);
  });

  // experiments
  m.def("run",
        [](const std::string& config_text, std::optional<std::uint64_t> seed,
           std::optional<std::filesystem::path> out) {
          auto cfg = config_from_text(config_text);
          if (seed) cfg.seed = *seed;
          RunResult run = [&] {
            py::gil_scoped_release release;
            return run_experiment(cfg);
          }();
          if (out) emit(run, *out);
          return run_dict(run);
        },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none(),
        "Runs an experiment described by INI-style config text.");
  m.def("tune_wait",
        [](const std::string& config_text, const std::vector<int>& grid, std::size_t folds) {
          const auto cfg = config_from_text(config_text);
          TuneResult res = [&] {
            py::gil_scoped_release release;
            return tune_wait(cfg, grid, folds);
          }();
          py::list table;
          for (const auto& row : res.table) {
            py::dict d;
            d["wait"] = row.wait;
            d["fold_accuracy"] = row.fold_accuracy;
            d["mean_accuracy"] = row.mean_accuracy;
            d["error"] = row.error;
            table.append(d);
          }
          return py::make_tuple(res.best_wait, table);
        },
        py::arg("config"), py::arg("grid"), py::arg("folds") = 5);
  m.def("detect_warmup",
        [](const std::vector<double>& curve, int window, double threshold) {
          return detect_warmup(curve, window, threshold);
        },
        py::arg("train_accuracy"), py::arg("window") = 5, py::arg("slope_threshold") = 0.002);
}
