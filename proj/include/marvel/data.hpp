#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "marvel/tensor.hpp"

namespace marvel {

/// Features plus observed labels, optionally with ground truth.
///
/// Two-class datasets hold labels as -1/+1; on disk they are 0/1 with 0
/// meaning -1. Datasets with k > 2 hold class indices in [0, k).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::optional<int>> true_labels;  // empty or size n
  int num_classes = 2;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
  bool binary() const noexcept { return num_classes == 2; }

  /// Ground truth for every row, or nullopt if any row lacks it.
  std::optional<std::vector<int>> truth() const;

  /// Throws DomainError on inconsistent sizes or out-of-range labels.
  void validate() const;

  Dataset subset(const std::vector<std::size_t>& indices) const;
};

/// Disk encoding of an in-memory label.
int label_to_disk(int label, int num_classes);
int label_from_disk(int value, int num_classes);

/// Disjoint index sets covering [0, n); sizes differ by at most one.
struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;
};

/// n/2 points per class from unit-covariance Gaussians at -/+(separation/2) e_1.
Dataset gen_two_gaussians(std::size_t n, std::size_t dim, double separation, std::uint64_t seed);

/// Class -1 on the unit circle with Gaussian jitter `sigma` per coordinate;
/// class +1 a Gaussian blob of scale 0.3 at the origin, truncated to radius 0.6.
Dataset gen_ring_vs_blob(std::size_t n, double sigma, std::uint64_t seed);

/// Text format: a header line `n=..,d=..,k=..`, then one row per instance
/// with d feature values, the observed label, and the true label or -1.
Dataset load_dataset(const std::string& path);
Dataset read_dataset(std::istream& in, const std::string& source = "<stream>");
void save_dataset(const Dataset& dataset, const std::string& path);
void write_dataset(const Dataset& dataset, std::ostream& out);

FoldPlan kfold(std::size_t n, std::size_t k_folds, std::uint64_t seed);

/// Index batches for one epoch, reshuffled per (seed, epoch). The last batch
/// may be short.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, int epoch,
                                              std::uint64_t seed);

/// Shortest round-trip decimal form; infinities as `inf` / `-inf`.
std::string format_double(double value);

}  // namespace marvel
