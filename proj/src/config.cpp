#include "equal/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace equal {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw std::invalid_argument("config key '" + key + "': bad value '" + value +
                              "' (expected " + expected + ")");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad_value(key, value, "a non-negative integer");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value, "a real number");
    return out;
  } catch (const std::invalid_argument&) {
    bad_value(key, value, "a real number");
  } catch (const std::out_of_range&) {
    bad_value(key, value, "a representable real number");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  bad_value(key, value, "true|false");
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Strategy ExperimentConfig::to_strategy() const {
  Strategy s;
  s.kind = parse_strategy_kind(strategy);
  s.transform = transform;
  s.pair_mode = pair_mode;
  return s;
}

LossConfig ExperimentConfig::to_loss_config() const {
  LossConfig l;
  l.use_consistency = use_consistency();
  l.norm = loss_norm;
  l.transform = transform;
  l.eligibility_threshold = loss_threshold;
  l.augment_hflip = augment_hflip;
  l.consistency_weight = loss_weight;
  return l;
}

TrainConfig ExperimentConfig::to_train_config() const {
  TrainConfig t;
  t.epochs_per_round = epochs_per_round;
  t.final_epochs = final_epochs;
  t.batch_size = batch_size;
  t.adam.learning_rate = learning_rate;
  t.adam.weight_decay = weight_decay;
  t.adam.beta1 = beta1;
  t.adam.beta2 = beta2;
  t.lr_decay_factor = lr_decay;
  t.lr_decay_every = lr_decay_every;
  return t;
}

ModelConfig ExperimentConfig::to_model_config() const {
  ModelConfig m;
  m.in_channels = data_channels;
  m.hidden = hidden;
  m.num_classes = data_classes;
  return m;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"data.count", [&](const std::string& k, const std::string& v) { cfg.data_count = parse_u64(k, v); }},
      {"data.height", [&](const std::string& k, const std::string& v) { cfg.data_height = parse_u64(k, v); }},
      {"data.width", [&](const std::string& k, const std::string& v) { cfg.data_width = parse_u64(k, v); }},
      {"data.channels", [&](const std::string& k, const std::string& v) { cfg.data_channels = parse_u64(k, v); }},
      {"data.classes", [&](const std::string& k, const std::string& v) { cfg.data_classes = parse_u64(k, v); }},
      {"data.seed", [&](const std::string& k, const std::string& v) { cfg.data_seed = parse_u64(k, v); }},
      {"eval.count", [&](const std::string& k, const std::string& v) { cfg.eval_count = parse_u64(k, v); }},
      {"eval.seed", [&](const std::string& k, const std::string& v) { cfg.eval_seed = parse_u64(k, v); }},
      {"region.height", [&](const std::string& k, const std::string& v) { cfg.region_height = parse_u64(k, v); }},
      {"region.width", [&](const std::string& k, const std::string& v) { cfg.region_width = parse_u64(k, v); }},
      {"strategy", [&](const std::string& k, const std::string& v) {
         parse_strategy_kind(v);  // validates
         cfg.strategy = v;
         (void)k;
       }},
      {"transform", [&](const std::string& k, const std::string& v) {
         cfg.transform = TransformKind::parse(v);
         (void)k;
       }},
      {"pair_mode", [&](const std::string& k, const std::string& v) {
         if (v == "sum") cfg.pair_mode = PairMode::kSumEntropy;
         else if (v == "entropy_of_mean") cfg.pair_mode = PairMode::kEntropyOfMean;
         else bad_value(k, v, "sum|entropy_of_mean");
       }},
      {"select.k", [&](const std::string& k, const std::string& v) { cfg.select_k = parse_u64(k, v); }},
      {"budgets", [&](const std::string& k, const std::string& v) {
         cfg.budgets.clear();
         for (const std::string& item : split_list(v)) cfg.budgets.push_back(parse_real(k, item));
       }},
      {"warm_start", [&](const std::string& k, const std::string& v) { cfg.warm_start = parse_u64(k, v); }},
      {"loss.consistency", [&](const std::string& k, const std::string& v) { cfg.loss_consistency = parse_bool(k, v); }},
      {"loss.norm", [&](const std::string& k, const std::string& v) {
         cfg.loss_norm = parse_consistency_norm(v);
         (void)k;
       }},
      {"loss.threshold", [&](const std::string& k, const std::string& v) { cfg.loss_threshold = parse_real(k, v); }},
      {"loss.weight", [&](const std::string& k, const std::string& v) { cfg.loss_weight = parse_real(k, v); }},
      {"augment.hflip", [&](const std::string& k, const std::string& v) { cfg.augment_hflip = parse_bool(k, v); }},
      {"train.epochs_per_round", [&](const std::string& k, const std::string& v) { cfg.epochs_per_round = parse_u64(k, v); }},
      {"train.final_epochs", [&](const std::string& k, const std::string& v) { cfg.final_epochs = parse_u64(k, v); }},
      {"train.batch", [&](const std::string& k, const std::string& v) { cfg.batch_size = parse_u64(k, v); }},
      {"train.lr", [&](const std::string& k, const std::string& v) { cfg.learning_rate = parse_real(k, v); }},
      {"train.weight_decay", [&](const std::string& k, const std::string& v) { cfg.weight_decay = parse_real(k, v); }},
      {"train.beta1", [&](const std::string& k, const std::string& v) { cfg.beta1 = parse_real(k, v); }},
      {"train.beta2", [&](const std::string& k, const std::string& v) { cfg.beta2 = parse_real(k, v); }},
      {"train.lr_decay", [&](const std::string& k, const std::string& v) { cfg.lr_decay = parse_real(k, v); }},
      {"train.lr_decay_every", [&](const std::string& k, const std::string& v) { cfg.lr_decay_every = parse_u64(k, v); }},
      {"model.hidden", [&](const std::string& k, const std::string& v) {
         cfg.hidden.clear();
         for (const std::string& item : split_list(v)) cfg.hidden.push_back(parse_u64(k, item));
       }},
      {"seeds", [&](const std::string& k, const std::string& v) {
         cfg.seeds.clear();
         for (const std::string& item : split_list(v)) cfg.seeds.push_back(parse_u64(k, item));
       }},
      {"retrain.variants", [&](const std::string& k, const std::string& v) {
         if (v != "ce" && v != "sc" && v != "both") bad_value(k, v, "ce|sc|both");
         cfg.retrain_variants = v;
       }},
      {"save_checkpoints", [&](const std::string& k, const std::string& v) { cfg.save_checkpoints = parse_bool(k, v); }},
      {"output", [&](const std::string& k, const std::string& v) {
         cfg.output = v;
         (void)k;
       }},
  };

  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value', got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw std::invalid_argument("unknown config key '" + key + "' (line " +
                                  std::to_string(line_no) + ")");
    }
    it->second(key, value);
  }

  // invariants
  if (cfg.budgets.empty()) throw std::invalid_argument("config key 'budgets': must not be empty");
  for (std::size_t i = 0; i < cfg.budgets.size(); ++i) {
    if (cfg.budgets[i] <= 0.0 || cfg.budgets[i] > 1.0) {
      throw std::invalid_argument("config key 'budgets': fractions must be in (0, 1]");
    }
    if (i > 0 && cfg.budgets[i] <= cfg.budgets[i - 1]) {
      throw std::invalid_argument("config key 'budgets': must be strictly increasing");
    }
  }
  if (cfg.seeds.empty()) throw std::invalid_argument("config key 'seeds': need >= 1 seed");
  if (cfg.hidden.empty()) throw std::invalid_argument("config key 'model.hidden': need >= 1 layer");
  if (cfg.loss_threshold < 0.0 || cfg.loss_threshold > 1.0) {
    throw std::invalid_argument("config key 'loss.threshold': must be in [0, 1]");
  }
  if (cfg.data_classes < 2) throw std::invalid_argument("config key 'data.classes': need >= 2");
  if (cfg.select_k == 0) throw std::invalid_argument("config key 'select.k': must be positive");
  if (cfg.batch_size == 0) throw std::invalid_argument("config key 'train.batch': must be positive");
  if (cfg.epochs_per_round == 0) throw std::invalid_argument("config key 'train.epochs_per_round': must be positive");
  if (cfg.final_epochs == 0) throw std::invalid_argument("config key 'train.final_epochs': must be positive");
  if (cfg.output.empty()) throw std::invalid_argument("config key 'output': must not be empty");

  // resolve the derived defaults so serialization echoes a complete document
  if (!cfg.loss_consistency) cfg.loss_consistency = cfg.strategy == "equal";
  if (!cfg.eval_seed) cfg.eval_seed = cfg.data_seed + 1;
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "data.count = " << cfg.data_count << "\n";
  os << "data.height = " << cfg.data_height << "\n";
  os << "data.width = " << cfg.data_width << "\n";
  os << "data.channels = " << cfg.data_channels << "\n";
  os << "data.classes = " << cfg.data_classes << "\n";
  os << "data.seed = " << cfg.data_seed << "\n";
  os << "eval.count = " << cfg.eval_count << "\n";
  os << "eval.seed = " << cfg.eval_seed_value() << "\n";
  os << "region.height = " << cfg.region_height << "\n";
  os << "region.width = " << cfg.region_width << "\n";
  os << "strategy = " << cfg.strategy << "\n";
  os << "transform = " << cfg.transform.name() << "\n";
  os << "pair_mode = "
     << (cfg.pair_mode == PairMode::kSumEntropy ? "sum" : "entropy_of_mean") << "\n";
  os << "select.k = " << cfg.select_k << "\n";
  os << "budgets = ";
  for (std::size_t i = 0; i < cfg.budgets.size(); ++i) {
    os << (i ? "," : "") << format_real(cfg.budgets[i]);
  }
  os << "\n";
  os << "warm_start = " << cfg.warm_start << "\n";
  os << "loss.consistency = " << (cfg.use_consistency() ? "true" : "false") << "\n";
  os << "loss.norm = " << consistency_norm_name(cfg.loss_norm) << "\n";
  os << "loss.threshold = " << format_real(cfg.loss_threshold) << "\n";
  os << "loss.weight = " << format_real(cfg.loss_weight) << "\n";
  os << "augment.hflip = " << (cfg.augment_hflip ? "true" : "false") << "\n";
  os << "train.epochs_per_round = " << cfg.epochs_per_round << "\n";
  os << "train.final_epochs = " << cfg.final_epochs << "\n";
  os << "train.batch = " << cfg.batch_size << "\n";
  os << "train.lr = " << format_real(cfg.learning_rate) << "\n";
  os << "train.weight_decay = " << format_real(cfg.weight_decay) << "\n";
  os << "train.beta1 = " << format_real(cfg.beta1) << "\n";
  os << "train.beta2 = " << format_real(cfg.beta2) << "\n";
  os << "train.lr_decay = " << format_real(cfg.lr_decay) << "\n";
  os << "train.lr_decay_every = " << cfg.lr_decay_every << "\n";
  os << "model.hidden = ";
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) os << (i ? "," : "") << cfg.hidden[i];
  os << "\n";
  os << "seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) os << (i ? "," : "") << cfg.seeds[i];
  os << "\n";
  os << "retrain.variants = " << cfg.retrain_variants << "\n";
  os << "save_checkpoints = " << (cfg.save_checkpoints ? "true" : "false") << "\n";
  os << "output = " << cfg.output << "\n";
  return os.str();
}

}  // namespace equal
