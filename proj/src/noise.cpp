#include "marvel/noise.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "marvel/data.hpp"
#include "marvel/errors.hpp"
#include "marvel/rng.hpp"

namespace marvel {

namespace {

double parse_rate(const std::string& text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw DomainError("bad noise rate '" + text + "'");
  return value;
}

int parse_class(const std::string& text) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw DomainError("bad class index '" + text + "'");
  return value;
}

void check_rate(double rate, const char* name) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw DomainError(std::string(name) + " must lie in [0,1], got " + format_double(rate));
  }
}

// round half to even
std::size_t flip_count(double rate, std::size_t members) {
  return static_cast<std::size_t>(std::nearbyint(rate * static_cast<double>(members)));
}

// Chooses `count` of `members` uniformly (partial Fisher-Yates).
std::vector<std::size_t> choose(std::vector<std::size_t> members, std::size_t count,
                                CounterRng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(members.size() - i));
    std::swap(members[i], members[j]);
  }
  members.resize(count);
  return members;
}

}  // namespace

void NoiseSpec::validate(int num_classes) const {
  switch (family) {
    case NoiseFamily::none:
      return;
    case NoiseFamily::binary_asymmetric:
      if (num_classes != 2) throw DomainError("binary noise needs a two-class dataset");
      if (!(rate_neg >= 0.0 && rate_neg < 1.0 && rate_pos >= 0.0 && rate_pos < 1.0)) {
        throw DomainError("binary noise rates must lie in [0,1)");
      }
      if (!(rate_neg + rate_pos < 1.0)) throw DomainError("binary noise rates must sum below 1");
      return;
    case NoiseFamily::multiclass_symmetric:
    case NoiseFamily::circular:
      check_rate(rate, "noise rate");
      return;
    case NoiseFamily::pair_map: {
      check_rate(rate, "noise rate");
      std::set<int> sources;
      for (auto [src, dst] : pairs) {
        if (src < 0 || src >= num_classes || dst < 0 || dst >= num_classes) {
          throw DomainError("pair " + std::to_string(src) + ">" + std::to_string(dst) +
                            " references a class outside [0," + std::to_string(num_classes) + ")");
        }
        if (src == dst) throw DomainError("pair maps class " + std::to_string(src) + " to itself");
        if (!sources.insert(src).second) {
          throw DomainError("pair map lists source class " + std::to_string(src) + " twice");
        }
      }
      return;
    }
  }
}

std::vector<std::pair<int, int>> parse_pair_map(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, comma - start);
    const auto arrow = item.find('>');
    if (arrow == std::string::npos) throw DomainError("pair '" + item + "' is not source>target");
    out.emplace_back(parse_class(item.substr(0, arrow)), parse_class(item.substr(arrow + 1)));
    start = comma + 1;
  }
  return out;
}

NoiseSpec parse_noise_spec(const std::string& text) {
  NoiseSpec spec;
  if (text.empty() || text == "none") return spec;
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw DomainError("noise spec '" + text + "' has no rate");
  const std::string family = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (family == "binary") {
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw DomainError("binary noise needs two rates");
    spec.family = NoiseFamily::binary_asymmetric;
    spec.rate_neg = parse_rate(rest.substr(0, comma));
    spec.rate_pos = parse_rate(rest.substr(comma + 1));
  } else if (family == "symmetric") {
    spec.family = NoiseFamily::multiclass_symmetric;
    spec.rate = parse_rate(rest);
  } else if (family == "circular") {
    spec.family = NoiseFamily::circular;
    spec.rate = parse_rate(rest);
  } else if (family == "pair") {
    const auto sep = rest.find(':');
    if (sep == std::string::npos) throw DomainError("pair noise needs rate:pairs");
    spec.family = NoiseFamily::pair_map;
    spec.rate = parse_rate(rest.substr(0, sep));
    spec.pairs = parse_pair_map(rest.substr(sep + 1));
  } else {
    throw DomainError("unknown noise family '" + family + "'");
  }
  return spec;
}

std::string to_string(const NoiseSpec& spec) {
  switch (spec.family) {
    case NoiseFamily::none: return "none";
    case NoiseFamily::binary_asymmetric:
      return "binary:" + format_double(spec.rate_neg) + "," + format_double(spec.rate_pos);
    case NoiseFamily::multiclass_symmetric: return "symmetric:" + format_double(spec.rate);
    case NoiseFamily::circular: return "circular:" + format_double(spec.rate);
    case NoiseFamily::pair_map: {
      std::string out = "pair:" + format_double(spec.rate) + ":";
      for (std::size_t i = 0; i < spec.pairs.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(spec.pairs[i].first) + ">" + std::to_string(spec.pairs[i].second);
      }
      return out;
    }
  }
  return "none";
}

Corruption corrupt(std::span<const int> labels, int num_classes, const NoiseSpec& spec,
                   std::uint64_t seed) {
  if (num_classes < 2) throw DomainError("need at least two classes");
  spec.validate(num_classes);
  const bool signed_binary = num_classes == 2;
  const auto k = static_cast<std::size_t>(num_classes);

  // Work on class indices; two-class labels -1/+1 map to 0/1.
  std::vector<int> cls(labels.size());
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (signed_binary) {
      if (y != -1 && y != 1) throw DomainError("binary labels must be -1 or +1");
      cls[i] = y == 1 ? 1 : 0;
    } else {
      if (y < 0 || y >= num_classes) throw DomainError("label out of range");
      cls[i] = y;
    }
    members[static_cast<std::size_t>(cls[i])].push_back(i);
  }

  Corruption out{cls, std::vector<bool>(labels.size(), false)};
  CounterRng rng(seed, Stream::noise);
  auto flip_class = [&](std::size_t c, double rate, int target) {
    for (std::size_t i : choose(members[c], flip_count(rate, members[c].size()), rng)) {
      out.observed[i] = target;
      out.noisy[i] = true;
    }
  };

  switch (spec.family) {
    case NoiseFamily::none:
      break;
    case NoiseFamily::binary_asymmetric:
      flip_class(0, spec.rate_neg, 1);
      flip_class(1, spec.rate_pos, 0);
      break;
    case NoiseFamily::circular:
      for (std::size_t c = 0; c < k; ++c) flip_class(c, spec.rate, static_cast<int>((c + 1) % k));
      break;
    case NoiseFamily::pair_map:
      for (auto [src, dst] : spec.pairs) flip_class(static_cast<std::size_t>(src), spec.rate, dst);
      break;
    case NoiseFamily::multiclass_symmetric: {
      std::vector<std::size_t> everyone(labels.size());
      for (std::size_t i = 0; i < everyone.size(); ++i) everyone[i] = i;
      for (std::size_t i : choose(everyone, flip_count(spec.rate, everyone.size()), rng)) {
        const auto r = static_cast<int>(rng.below(k - 1));
        out.observed[i] = r < cls[i] ? r : r + 1;
        out.noisy[i] = true;
      }
      break;
    }
  }

  if (signed_binary) {
    for (int& y : out.observed) y = y == 1 ? 1 : -1;
  }
  return out;
}

}  // namespace marvel
