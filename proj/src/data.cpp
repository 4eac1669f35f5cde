#include "marvel/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "marvel/errors.hpp"
#include "marvel/rng.hpp"

namespace marvel {

namespace {

// Substreams of Stream::data.
constexpr std::uint64_t kGenerateSubstream = 0;
constexpr std::uint64_t kFoldSubstream = 2;

bool valid_label(int label, int num_classes) {
  if (num_classes == 2) return label == -1 || label == 1;
  return label >= 0 && label < num_classes;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& value) {
  const std::string t = trim(text);
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, value);
  return !t.empty() && ec == std::errc() && ptr == end;
}

std::vector<std::vector<std::size_t>> chunk(const std::vector<std::size_t>& order,
                                            std::size_t pieces) {
  std::vector<std::vector<std::size_t>> out(pieces);
  const std::size_t base = order.size() / pieces;
  const std::size_t extra = order.size() % pieces;
  std::size_t pos = 0;
  for (std::size_t p = 0; p < pieces; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    out[p].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                  order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

std::vector<std::size_t> permutation(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle(order, rng);
  return order;
}

}  // namespace

std::optional<std::vector<int>> Dataset::truth() const {
  if (true_labels.size() != labels.size()) return std::nullopt;
  std::vector<int> out;
  out.reserve(true_labels.size());
  for (const auto& t : true_labels) {
    if (!t) return std::nullopt;
    out.push_back(*t);
  }
  return out;
}

void Dataset::validate() const {
  if (num_classes < 2) throw DomainError("dataset needs at least two classes");
  if (features.rows() != labels.size()) throw DomainError("feature rows do not match labels");
  if (!true_labels.empty() && true_labels.size() != labels.size()) {
    throw DomainError("true labels do not match labels");
  }
  if (!class_names.empty() && class_names.size() != static_cast<std::size_t>(num_classes)) {
    throw DomainError("class names do not match class count");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!valid_label(labels[i], num_classes)) {
      throw DomainError("label " + std::to_string(labels[i]) + " of row " + std::to_string(i) +
                        " invalid for " + std::to_string(num_classes) + " classes");
    }
    if (!true_labels.empty() && true_labels[i] && !valid_label(*true_labels[i], num_classes)) {
      throw DomainError("true label of row " + std::to_string(i) + " invalid");
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.features = features.gather_rows(indices);
  out.num_classes = num_classes;
  out.class_names = class_names;
  for (std::size_t i : indices) {
    out.labels.push_back(labels.at(i));
    if (!true_labels.empty()) out.true_labels.push_back(true_labels.at(i));
  }
  return out;
}

int label_to_disk(int label, int num_classes) {
  if (num_classes == 2) return label == 1 ? 1 : 0;
  return label;
}

int label_from_disk(int value, int num_classes) {
  if (num_classes == 2) {
    if (value == 0) return -1;
    if (value == 1) return 1;
    throw DomainError("two-class labels on disk must be 0 or 1, got " + std::to_string(value));
  }
  if (value < 0 || value >= num_classes) {
    throw DomainError("label " + std::to_string(value) + " outside [0," +
                      std::to_string(num_classes) + ")");
  }
  return value;
}

Dataset gen_two_gaussians(std::size_t n, std::size_t dim, double separation, std::uint64_t seed) {
  if (n == 0 || n % 2 != 0) throw DomainError("two-Gaussian generator needs an even n > 0");
  if (dim < 1) throw DomainError("dimension must be at least 1");
  if (!(separation >= 0.0)) throw DomainError("separation must be nonnegative");
  CounterRng rng(seed, Stream::data, kGenerateSubstream);
  Dataset ds;
  ds.features = Matrix(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i < n / 2 ? -1 : 1;
    for (std::size_t j = 0; j < dim; ++j) ds.features(i, j) = rng.normal();
    ds.features(i, 0) += y * separation / 2.0;
    ds.labels.push_back(y);
    ds.true_labels.emplace_back(y);
  }
  return ds;
}

Dataset gen_ring_vs_blob(std::size_t n, double sigma, std::uint64_t seed) {
  if (n == 0 || n % 2 != 0) throw DomainError("ring generator needs an even n > 0");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be nonnegative");
  constexpr double kBlobScale = 0.3;
  constexpr double kBlobRadius = 2.0 * kBlobScale;
  CounterRng rng(seed, Stream::data, kGenerateSubstream);
  Dataset ds;
  ds.features = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n / 2) {
      const double theta = 2.0 * std::numbers::pi * rng.uniform();
      ds.features(i, 0) = std::cos(theta) + sigma * rng.normal();
      ds.features(i, 1) = std::sin(theta) + sigma * rng.normal();
      ds.labels.push_back(-1);
    } else {
      double x = 0.0, y = 0.0;
      do {
        x = kBlobScale * rng.normal();
        y = kBlobScale * rng.normal();
      } while (std::hypot(x, y) > kBlobRadius);
      ds.features(i, 0) = x;
      ds.features(i, 1) = y;
      ds.labels.push_back(1);
    }
    ds.true_labels.emplace_back(ds.labels.back());
  }
  return ds;
}

Dataset read_dataset(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");

  long n = -1, d = -1, k = -1;
  for (const auto& field : split(trim(line), ',')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError(source, 1, "header field '" + field + "'");
    const std::string key = trim(field.substr(0, eq));
    long value = 0;
    if (!parse_number(field.substr(eq + 1), value) || value < 0) {
      throw ParseError(source, 1, "bad value in header field '" + field + "'");
    }
    if (key == "n") n = value;
    else if (key == "d") d = value;
    else if (key == "k") k = value;
    else throw ParseError(source, 1, "unknown header key '" + key + "'");
  }
  if (n < 0 || d < 1 || k < 2) throw ParseError(source, 1, "header needs n, d >= 1 and k >= 2");

  Dataset ds;
  ds.num_classes = static_cast<int>(k);
  ds.features = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (row == static_cast<std::size_t>(n)) throw ParseError(source, lineno, "more rows than n");
    const auto fields = split(trim(line), ',');
    if (fields.size() != static_cast<std::size_t>(d) + 2) {
      throw ParseError(source, lineno,
                       "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(d + 2));
    }
    for (std::size_t j = 0; j < static_cast<std::size_t>(d); ++j) {
      double v = 0.0;
      if (!parse_number(fields[j], v)) {
        throw ParseError(source, lineno, "bad feature value '" + fields[j] + "'");
      }
      ds.features(row, j) = v;
    }
    int observed = 0, truth = 0;
    if (!parse_number(fields[d], observed) || !parse_number(fields[d + 1], truth)) {
      throw ParseError(source, lineno, "labels must be integers");
    }
    try {
      ds.labels.push_back(label_from_disk(observed, ds.num_classes));
      ds.true_labels.push_back(truth == -1 ? std::nullopt
                                           : std::optional<int>(label_from_disk(truth, ds.num_classes)));
    } catch (const DomainError& e) {
      throw ParseError(source, lineno, e.what());
    }
    ++row;
  }
  if (row != static_cast<std::size_t>(n)) {
    throw ParseError(source, lineno,
                     "expected " + std::to_string(n) + " rows, found " + std::to_string(row));
  }
  return ds;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  return read_dataset(in, path);
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  dataset.validate();
  out << "n=" << dataset.size() << ",d=" << dataset.dim() << ",k=" << dataset.num_classes << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.features.row(i)) out << format_double(v) << ',';
    out << label_to_disk(dataset.labels[i], dataset.num_classes) << ',';
    const bool has_truth = !dataset.true_labels.empty() && dataset.true_labels[i];
    out << (has_truth ? label_to_disk(*dataset.true_labels[i], dataset.num_classes) : -1) << '\n';
  }
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset '" + path + "'");
  write_dataset(dataset, out);
  if (!out) throw Error("error writing dataset '" + path + "'");
}

FoldPlan kfold(std::size_t n, std::size_t k_folds, std::uint64_t seed) {
  if (k_folds < 2) throw DomainError("k-fold needs at least two folds");
  if (n < k_folds) throw DomainError("fewer instances than folds");
  CounterRng rng(seed, Stream::data, kFoldSubstream);
  return {chunk(permutation(n, rng), k_folds)};
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, int epoch,
                                              std::uint64_t seed) {
  if (batch_size < 1) throw DomainError("batch size must be at least 1");
  if (n == 0) return {};
  CounterRng rng(seed, Stream::shuffle, static_cast<std::uint64_t>(epoch));
  const auto order = permutation(n, rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t pos = 0; pos < n; pos += batch_size) {
    const std::size_t end = std::min(n, pos + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace marvel
