#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace marvel {

enum class NoiseFamily { none, binary_asymmetric, multiclass_symmetric, circular, pair_map };

/// Label-corruption protocol.
///
/// Counts are exact: for a class with n_c instances, round(rate * n_c) of
/// them are flipped (round half to even); only which instances flip depends
/// on the seed.
///   binary_asymmetric     class -1 -> +1 at rate_neg, +1 -> -1 at rate_pos
///   multiclass_symmetric  round(rate * n) instances overall, each to a
///                         uniformly chosen other class
///   circular              class c -> (c+1) mod k at `rate`
///   pair_map              each listed source -> target at `rate`
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::none;
  double rate = 0.0;
  double rate_neg = 0.0;
  double rate_pos = 0.0;
  std::vector<std::pair<int, int>> pairs;

  /// Throws DomainError. `num_classes` bounds class references.
  void validate(int num_classes) const;
};

/// Parses the compact form used on the command line:
///   none | binary:0.4,0.1 | symmetric:0.2 | circular:0.3 | pair:0.4:9>1,2>0
NoiseSpec parse_noise_spec(const std::string& text);
std::string to_string(const NoiseSpec& spec);

/// Parses `9>1,2>0,...`.
std::vector<std::pair<int, int>> parse_pair_map(const std::string& text);

struct Corruption {
  std::vector<int> observed;
  std::vector<bool> noisy;  // exactly the flipped instances
};

/// Applies `spec` to `labels`. Binary datasets (num_classes == 2) use the
/// signed encoding {-1,+1}; otherwise labels are class indices.
Corruption corrupt(std::span<const int> labels, int num_classes, const NoiseSpec& spec,
                   std::uint64_t seed);

}  // namespace marvel
