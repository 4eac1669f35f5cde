#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "marvel/errors.hpp"
#include "marvel/runner.hpp"

namespace marvel {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class Reader {
 public:
  Reader(std::string source, std::size_t line) : source_(std::move(source)), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }

  template <typename T>
  T number(const std::string& text) const {
    T value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end) fail("bad number '" + text + "'");
    return value;
  }

  template <typename T>
  std::vector<T> list(const std::string& text) const {
    std::vector<T> out;
    if (text.empty()) return out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(number<T>(trim(item)));
    return out;
  }

  bool boolean(const std::string& text) const {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    fail("bad boolean '" + text + "'");
  }

  template <typename F>
  auto guard(F&& f) const {
    try {
      return f();
    } catch (const DomainError& e) {
      fail(e.what());
    }
  }

 private:
  std::string source_;
  std::size_t line_;
};

void apply(ExperimentConfig& cfg, const std::string& section, const std::string& key,
           const std::string& value, const Reader& r) {
  auto& ds = cfg.dataset;
  auto& opt = cfg.optimizer;
  auto& sch = cfg.scheduler;
  if (section == "dataset") {
    if (key == "source") {
      if (value == "gaussians") ds.source = DataSource::gaussians;
      else if (value == "ring") ds.source = DataSource::ring;
      else if (value == "file") ds.source = DataSource::file;
      else r.fail("unknown dataset source '" + value + "'");
    } else if (key == "n") ds.n = r.number<std::size_t>(value);
    else if (key == "dim") ds.dim = r.number<std::size_t>(value);
    else if (key == "separation") ds.separation = r.number<double>(value);
    else if (key == "sigma") ds.sigma = r.number<double>(value);
    else if (key == "path") ds.path = value;
    else if (key == "test_path") ds.test_path = value;
    else if (key == "test_fraction") ds.test_fraction = r.number<double>(value);
    else r.fail("unknown key '" + key + "' in [dataset]");
  } else if (section == "noise") {
    auto& nz = cfg.noise;
    if (key == "spec") nz = r.guard([&] { return parse_noise_spec(value); });
    else if (key == "family") {
      if (value == "none") nz.family = NoiseFamily::none;
      else if (value == "binary") nz.family = NoiseFamily::binary_asymmetric;
      else if (value == "symmetric") nz.family = NoiseFamily::multiclass_symmetric;
      else if (value == "circular") nz.family = NoiseFamily::circular;
      else if (value == "pair") nz.family = NoiseFamily::pair_map;
      else r.fail("unknown noise family '" + value + "'");
    } else if (key == "rate") nz.rate = r.number<double>(value);
    else if (key == "rate_neg") nz.rate_neg = r.number<double>(value);
    else if (key == "rate_pos") nz.rate_pos = r.number<double>(value);
    else if (key == "pairs") nz.pairs = r.guard([&] { return parse_pair_map(value); });
    else r.fail("unknown key '" + key + "' in [noise]");
  } else if (section == "model") {
    if (key == "kind") {
      if (value == "linear") cfg.model.kind = ModelKind::linear;
      else if (value == "mlp") cfg.model.kind = ModelKind::mlp;
      else r.fail("unknown model kind '" + value + "'");
    } else if (key == "hidden") cfg.model.hidden = r.list<std::size_t>(value);
    else if (key == "output") {
      if (value == "binary") cfg.model.output = OutputMode::binary_logit;
      else if (value == "softmax") cfg.model.output = OutputMode::softmax;
      else r.fail("unknown output mode '" + value + "'");
    } else r.fail("unknown key '" + key + "' in [model]");
  } else if (section == "optimizer") {
    if (key == "lr") opt.learning_rate = r.number<double>(value);
    else if (key == "momentum") opt.momentum = r.number<double>(value);
    else if (key == "weight_decay") opt.weight_decay = r.number<double>(value);
    else if (key == "decay_factor") opt.decay_factor = r.number<double>(value);
    else if (key == "decay_epochs") {
      if (value == "preset") {
        cfg.decay_epochs_set = false;
        opt.decay_epochs.clear();
      } else {
        cfg.decay_epochs_set = true;
        opt.decay_epochs = r.list<int>(value);
      }
    } else r.fail("unknown key '" + key + "' in [optimizer]");
  } else if (section == "scheduler") {
    if (key == "method") sch.method = r.guard([&] { return parse_method(value); });
    else if (key == "warm_up") sch.warm_up = r.number<int>(value);
    else if (key == "wait") sch.wait = r.number<int>(value);
    else if (key == "stats_scope") sch.stats_scope = r.guard([&] { return parse_stats_scope(value); });
    else if (key == "sigma_floor") sch.sigma_floor = r.number<double>(value);
    else r.fail("unknown key '" + key + "' in [scheduler]");
  } else if (section == "run") {
    if (key == "epochs") cfg.epochs = r.number<int>(value);
    else if (key == "batch_size") cfg.batch_size = r.number<std::size_t>(value);
    else if (key == "seed") cfg.seed = r.number<std::uint64_t>(value);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "audit") cfg.audit = r.boolean(value);
    else r.fail("unknown key '" + key + "' in [run]");
  } else {
    r.fail("unknown section [" + section + "]");
  }
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(items[i]);
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (epochs <= scheduler.warm_up) {
    throw ConfigError("epochs (" + std::to_string(epochs) + ") must exceed warm_up (" +
                      std::to_string(scheduler.warm_up) + ")");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(dataset.test_fraction >= 0.0 && dataset.test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in [0,1)");
  }
  if (dataset.source == DataSource::file && dataset.path.empty()) {
    throw ConfigError("dataset source 'file' needs a path");
  }
  if (model.kind == ModelKind::mlp && model.hidden.empty()) {
    throw ConfigError("mlp model needs at least one hidden layer");
  }
  try {
    optimizer.validate();
    scheduler.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  ExperimentConfig cfg;
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const Reader r(source, lineno);
    if (line.front() == '[') {
      if (line.back() != ']') r.fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) r.fail("expected key = value");
    if (section.empty()) r.fail("key outside of a section");
    apply(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), r);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in, path);
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  const auto& ds = cfg.dataset;
  const char* source = ds.source == DataSource::gaussians ? "gaussians"
                       : ds.source == DataSource::ring    ? "ring"
                                                          : "file";
  out << "[dataset]\n"
      << "source = " << source << '\n'
      << "n = " << ds.n << '\n'
      << "dim = " << ds.dim << '\n'
      << "separation = " << format_double(ds.separation) << '\n'
      << "sigma = " << format_double(ds.sigma) << '\n';
  if (!ds.path.empty()) out << "path = " << ds.path << '\n';
  if (!ds.test_path.empty()) out << "test_path = " << ds.test_path << '\n';
  out << "test_fraction = " << format_double(ds.test_fraction) << "\n\n";

  out << "[noise]\nspec = " << to_string(cfg.noise) << "\n\n";

  out << "[model]\n"
      << "kind = " << (cfg.model.kind == ModelKind::linear ? "linear" : "mlp") << '\n'
      << "hidden = " << join(cfg.model.hidden) << '\n'
      << "output = " << (cfg.model.output == OutputMode::binary_logit ? "binary" : "softmax")
      << "\n\n";

  const auto& opt = cfg.optimizer;
  out << "[optimizer]\n"
      << "lr = " << format_double(opt.learning_rate) << '\n'
      << "momentum = " << format_double(opt.momentum) << '\n'
      << "weight_decay = " << format_double(opt.weight_decay) << '\n'
      << "decay_epochs = " << (cfg.decay_epochs_set ? join(opt.decay_epochs) : "preset") << '\n'
      << "decay_factor = " << format_double(opt.decay_factor) << "\n\n";

  const auto& sch = cfg.scheduler;
  out << "[scheduler]\n"
      << "method = " << to_string(sch.method) << '\n'
      << "warm_up = " << sch.warm_up << '\n'
      << "wait = " << sch.wait << '\n'
      << "stats_scope = " << to_string(sch.stats_scope) << '\n'
      << "sigma_floor = " << format_double(sch.sigma_floor) << "\n\n";

  out << "[run]\n"
      << "epochs = " << cfg.epochs << '\n'
      << "batch_size = " << cfg.batch_size << '\n'
      << "seed = " << cfg.seed << '\n';
  if (!cfg.out_dir.empty()) out << "out = " << cfg.out_dir << '\n';
  out << "audit = " << (cfg.audit ? "true" : "false") << '\n';
  return out.str();
}

std::vector<int> preset_decay_epochs(Method method, bool binary, int epochs) {
  std::vector<int> candidates;
  if (binary) {
    candidates = {epochs * 3 / 4, epochs * 9 / 10};
  } else if (method == Method::ce) {
    candidates = {epochs / 3, epochs * 2 / 3};
  } else {
    candidates = {epochs * 2 / 3, epochs * 5 / 6};
  }
  std::vector<int> out;
  for (int e : candidates) {
    if (e >= 1 && (out.empty() || e > out.back())) out.push_back(e);
  }
  return out;
}

}  // namespace marvel
