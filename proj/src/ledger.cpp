#include "marvel/ledger.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <string>

#include "marvel/data.hpp"
#include "marvel/errors.hpp"

namespace marvel {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

HistoryLedger::HistoryLedger(std::size_t instances, int epochs)
    : instances_(instances), epochs_(epochs) {
  if (instances == 0) throw DomainError("ledger needs at least one instance");
  if (epochs < 1) throw DomainError("ledger needs at least one epoch");
  const std::size_t cells = instances * static_cast<std::size_t>(epochs + 1);
  weights_.assign(cells, 0.0);
  margins_.assign(cells, 0.0);
  written_.assign(cells, 0);
  column_fill_.assign(static_cast<std::size_t>(epochs + 1), 0);
  for (std::size_t i = 0; i < instances; ++i) {
    weights_[cell(i, 0)] = 1.0;
    margins_[cell(i, 0)] = kInf;
    written_[cell(i, 0)] = 1;
  }
  column_fill_[0] = instances;
}

std::size_t HistoryLedger::cell(std::size_t instance, int epoch) const {
  return instance * static_cast<std::size_t>(epochs_ + 1) + static_cast<std::size_t>(epoch);
}

void HistoryLedger::check_epoch(int epoch) const {
  if (epoch < 0 || epoch > epochs_) {
    throw DomainError("epoch " + std::to_string(epoch) + " outside [0," + std::to_string(epochs_) +
                      "]");
  }
}

bool HistoryLedger::written(std::size_t instance, int epoch) const {
  check_epoch(epoch);
  if (instance >= instances_) throw DomainError("instance index out of range");
  return written_[cell(instance, epoch)] != 0;
}

double HistoryLedger::weight(std::size_t instance, int epoch) const {
  if (!written(instance, epoch)) {
    throw StateError("weight of instance " + std::to_string(instance) + " at epoch " +
                     std::to_string(epoch) + " not recorded");
  }
  return weights_[cell(instance, epoch)];
}

double HistoryLedger::margin(std::size_t instance, int epoch) const {
  if (!written(instance, epoch)) {
    throw StateError("margin of instance " + std::to_string(instance) + " at epoch " +
                     std::to_string(epoch) + " not recorded");
  }
  return margins_[cell(instance, epoch)];
}

bool HistoryLedger::column_complete(int epoch) const {
  check_epoch(epoch);
  return column_fill_[static_cast<std::size_t>(epoch)] == instances_;
}

std::vector<double> HistoryLedger::weights_at(int epoch,
                                              std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(weight(i, epoch));
  return out;
}

std::vector<double> HistoryLedger::margins_at(int epoch,
                                              std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(margin(i, epoch));
  return out;
}

void HistoryLedger::record(int epoch, std::span<const std::size_t> indices,
                           std::span<const double> weights, std::span<const double> margins) {
  check_epoch(epoch);
  if (epoch == 0) throw StateError("column 0 is fixed at construction");
  if (weights.size() != indices.size() || margins.size() != indices.size()) {
    throw ShapeError("record: indices, weights and margins differ in length");
  }
  // Validate everything before writing anything.
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw StateError("duplicate instance in record batch");
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (written(i, epoch)) {
      throw StateError("instance " + std::to_string(i) + " already recorded at epoch " +
                       std::to_string(epoch));
    }
    if (!(weights[k] >= 0.0 && weights[k] <= 1.0)) {
      throw DomainError("weight " + std::to_string(weights[k]) + " outside [0,1]");
    }
    if (weights[k] != 0.0 && weight(i, epoch - 1) == 0.0) {
      throw InvariantError("instance " + std::to_string(i) + " was removed before epoch " +
                           std::to_string(epoch) + " and cannot be reinstated");
    }
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t c = cell(indices[k], epoch);
    weights_[c] = weights[k];
    margins_[c] = margins[k];
    written_[c] = 1;
  }
  column_fill_[static_cast<std::size_t>(epoch)] += indices.size();
}

std::vector<double> HistoryLedger::window_max(int epoch, std::span<const std::size_t> indices,
                                              int wait,
                                              std::optional<std::span<const double>> fresh) const {
  if (wait < 1) throw DomainError("wait must be at least 1");
  check_epoch(epoch);
  if (fresh && fresh->size() != indices.size()) {
    throw ShapeError("fresh margins do not match indices");
  }
  const int first = std::max(0, epoch - wait + 1);
  std::vector<double> out(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    double best = fresh ? (*fresh)[k] : margin(i, epoch);
    for (int e = first; e < epoch; ++e) best = std::max(best, margin(i, e));
    out[k] = best;
  }
  return out;
}

std::vector<std::size_t> HistoryLedger::retained(int epoch) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < instances_; ++i) {
    if (weight(i, epoch) != 0.0) out.push_back(i);
  }
  return out;
}

void HistoryLedger::write_csv(std::ostream& out) const {
  out << "instance,epoch,weight,margin\n";
  for (std::size_t i = 0; i < instances_; ++i) {
    for (int e = 0; e <= epochs_; ++e) {
      const std::size_t c = cell(i, e);
      if (!written_[c]) continue;
      out << i << ',' << e << ',' << format_double(weights_[c]) << ','
          << format_double(margins_[c]) << '\n';
    }
  }
}

}  // namespace marvel
