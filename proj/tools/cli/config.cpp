#include "config.hpp"

#include <fstream>
#include <sstream>

#include <boost/program_options.hpp>

namespace po = boost::program_options;

namespace iqnet::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& text, const char* what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw ConfigError(std::string("bad ") + what + ": '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "yes" || text == "1" || text == "on") return true;
  if (text == "false" || text == "no" || text == "0" || text == "off") return false;
  throw ConfigError("bad boolean: '" + text + "'");
}

}  // namespace

Precision parse_precision(const std::string& text) {
  if (text == "f32") return Precision::kF32;
  if (text == "f64") return Precision::kF64;
  throw ConfigError("precision must be f32 or f64, got '" + text + "'");
}

std::string precision_name(Precision p) { return p == Precision::kF32 ? "f32" : "f64"; }

std::vector<int> parse_snr_list(const std::string& text) {
  std::vector<int> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream in(text);
    for (std::string p; std::getline(in, p, ':');) parts.push_back(trim(p));
    if (parts.size() != 3) throw ConfigError("SNR range must be first:last:step");
    const int first = parse_int(parts[0], "SNR");
    const int last = parse_int(parts[1], "SNR");
    const int step = parse_int(parts[2], "SNR step");
    if (step <= 0 || last < first) throw ConfigError("SNR range needs first <= last and a positive step");
    for (int s = first; s <= last; s += step) out.push_back(s);
    return out;
  }
  for (const auto& item : split_list(text)) out.push_back(parse_int(item, "SNR"));
  if (out.empty()) throw ConfigError("empty SNR list");
  return out;
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.dataset = DatasetConfig::full();
  for (Family f : kAllFamilies) {
    cfg.models.push_back({f, false, 1.0});
    cfg.models.push_back({f, true, 1.0});
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse(std::istream& in, const std::string& origin) {
  po::options_description desc;
  // clang-format off
  desc.add_options()
    ("dataset.modulations", po::value<std::string>())
    ("dataset.snrs", po::value<std::string>())
    ("dataset.frames_per_pair", po::value<std::size_t>())
    ("dataset.sps", po::value<std::size_t>())
    ("dataset.rolloff", po::value<double>())
    ("dataset.span", po::value<std::size_t>())
    ("dataset.impairments", po::value<std::string>())
    ("dataset.max_cfo", po::value<double>())
    ("dataset.max_clock_ppm", po::value<double>())
    ("dataset.seed", po::value<std::uint64_t>())
    ("dataset.split_ratio", po::value<double>())
    ("models.ids", po::value<std::string>())
    ("train.epochs", po::value<std::size_t>())
    ("train.batch_size", po::value<std::size_t>())
    ("train.optimizer", po::value<std::string>())
    ("train.lr", po::value<double>())
    ("train.beta1", po::value<double>())
    ("train.beta2", po::value<double>())
    ("train.momentum", po::value<double>())
    ("train.decay_at", po::value<double>())
    ("train.lr_decay", po::value<double>())
    ("train.patience", po::value<std::size_t>())
    ("train.seed", po::value<std::uint64_t>())
    ("train.precision", po::value<std::string>())
    ("train.eval_batch", po::value<std::size_t>())
    ("experiment.trials", po::value<std::size_t>())
    ("experiment.out", po::value<std::string>())
    ("experiment.data", po::value<std::string>())
    ("bench.reps", po::value<std::size_t>())
    ("bench.warmup", po::value<std::size_t>())
    ("bench.batch", po::value<std::size_t>())
    ("bench.baseline", po::value<std::string>())
    ("bench.frames", po::value<std::size_t>());
  // clang-format on

  po::variables_map vm;
  try {
    po::store(po::parse_config_file(in, desc, /*allow_unregistered=*/false), vm);
    po::notify(vm);
  } catch (const po::error& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  auto cfg = default_config();
  auto has = [&](const char* key) { return vm.count(key) > 0; };
  auto str = [&](const char* key) { return vm[key].as<std::string>(); };
  auto size = [&](const char* key) { return vm[key].as<std::size_t>(); };
  auto real = [&](const char* key) { return vm[key].as<double>(); };

  try {
    if (has("dataset.modulations")) {
      cfg.dataset.modulations.clear();
      for (const auto& name : split_list(str("dataset.modulations"))) {
        const auto m = modulation_from_name(name);
        if (!m) throw ConfigError("unknown modulation '" + name + "'");
        cfg.dataset.modulations.push_back(*m);
      }
    }
    if (has("dataset.snrs")) cfg.dataset.snrs_db = parse_snr_list(str("dataset.snrs"));
    if (has("dataset.frames_per_pair")) cfg.dataset.frames_per_pair = size("dataset.frames_per_pair");
    if (has("dataset.sps")) cfg.dataset.modulator.sps = size("dataset.sps");
    if (has("dataset.rolloff")) cfg.dataset.modulator.rolloff = real("dataset.rolloff");
    if (has("dataset.span")) cfg.dataset.modulator.span = size("dataset.span");
    if (has("dataset.impairments")) cfg.dataset.impairments.enabled = parse_bool(str("dataset.impairments"));
    if (has("dataset.max_cfo")) cfg.dataset.impairments.max_cfo = real("dataset.max_cfo");
    if (has("dataset.max_clock_ppm")) cfg.dataset.impairments.max_clock_ppm = real("dataset.max_clock_ppm");
    if (has("dataset.seed")) cfg.dataset.seed = vm["dataset.seed"].as<std::uint64_t>();
    if (has("dataset.split_ratio")) cfg.split_ratio = real("dataset.split_ratio");

    if (has("models.ids")) {
      cfg.models.clear();
      for (const auto& id : split_list(str("models.ids"))) cfg.models.push_back(ModelId::parse(id));
    }

    if (has("train.epochs")) cfg.train.epochs = size("train.epochs");
    if (has("train.batch_size")) cfg.train.batch_size = size("train.batch_size");
    if (has("train.optimizer")) {
      const auto o = str("train.optimizer");
      if (o == "adam") {
        cfg.train.optimizer = OptimizerKind::kAdam;
      } else if (o == "sgd-momentum") {
        cfg.train.optimizer = OptimizerKind::kSgdMomentum;
      } else {
        throw ConfigError("optimizer must be adam or sgd-momentum, got '" + o + "'");
      }
    }
    if (has("train.lr")) cfg.train.lr = real("train.lr");
    if (has("train.beta1")) cfg.train.beta1 = real("train.beta1");
    if (has("train.beta2")) cfg.train.beta2 = real("train.beta2");
    if (has("train.momentum")) cfg.train.momentum = real("train.momentum");
    if (has("train.decay_at")) cfg.train.decay_at = real("train.decay_at");
    if (has("train.lr_decay")) cfg.train.lr_decay = real("train.lr_decay");
    if (has("train.patience")) cfg.train.patience = size("train.patience");
    if (has("train.seed")) cfg.train.seed = vm["train.seed"].as<std::uint64_t>();
    if (has("train.precision")) cfg.precision = parse_precision(str("train.precision"));
    if (has("train.eval_batch")) cfg.eval_batch = size("train.eval_batch");

    if (has("experiment.trials")) cfg.trials = size("experiment.trials");
    if (has("experiment.out")) cfg.out = str("experiment.out");
    if (has("experiment.data")) cfg.data = str("experiment.data");

    if (has("bench.reps")) cfg.bench.reps = size("bench.reps");
    if (has("bench.warmup")) cfg.bench.warmup = size("bench.warmup");
    if (has("bench.batch")) cfg.bench.batch = size("bench.batch");
    if (has("bench.baseline")) cfg.baseline = ModelId::parse(str("bench.baseline")).name();
    if (has("bench.frames")) cfg.bench_frames = size("bench.frames");

    cfg.dataset.validate();
    cfg.train.validate();
    cfg.bench.validate();
    if (!(cfg.split_ratio > 0 && cfg.split_ratio < 1)) throw ConfigError("split_ratio must lie in (0, 1)");
    if (cfg.models.empty()) throw ConfigError("no models listed");
    if (cfg.trials == 0) throw ConfigError("trials must be positive");
    if (cfg.eval_batch == 0) throw ConfigError("eval_batch must be positive");
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse(in, path.string());
}

}  // namespace iqnet::cli
