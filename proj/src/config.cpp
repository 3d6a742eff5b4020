#include "scope/config.hpp"

#include <fstream>
#include <stdexcept>

namespace scope {

void validate(const RunConfig& cfg) {
  if (cfg.patch_size != 1 && cfg.patch_size != 2) {
    throw std::invalid_argument("config: patch_size must be 1 or 2");
  }
  if (cfg.epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
  if (cfg.warmup_epochs < 0 || cfg.warmup_epochs > cfg.epochs) {
    throw std::invalid_argument("config: warmup_epochs must be in [0, epochs]");
  }
  if (cfg.batch_accum < 1) {
    throw std::invalid_argument("config: batch_accum must be >= 1");
  }
  if (cfg.threshold < 0.0 || cfg.threshold > 1.0) {
    throw std::invalid_argument("config: threshold must be in [0,1]");
  }
  validate(cfg.loss);
}

KvMap parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  KvMap kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("config: bad line " + std::to_string(lineno) +
                                  " in " + path);
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KvMap parse_kv_flags(const std::vector<std::string>& args) {
  KvMap kv;
  for (const std::string& arg : args) {
    if (arg.rfind("--", 0) != 0) {
      throw std::invalid_argument("flags: expected --key=value, got '" + arg + "'");
    }
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 2) {
      throw std::invalid_argument("flags: expected --key=value, got '" + arg + "'");
    }
    kv[arg.substr(2, eq - 2)] = arg.substr(eq + 1);
  }
  return kv;
}

namespace {

long to_long(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: integer expected for " + key + ", got '" +
                                value + "'");
  }
}

Scalar to_scalar(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const Scalar v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: number expected for " + key + ", got '" +
                                value + "'");
  }
}

LossKind to_loss_kind(const std::string& value) {
  if (value == "ce") return LossKind::Ce;
  if (value == "cldice") return LossKind::ClDice;
  if (value == "ce_plus_cldice") return LossKind::CePlusClDice;
  throw std::invalid_argument(
      "config: loss.kind must be ce, cldice, or ce_plus_cldice, got '" + value + "'");
}

}  // namespace

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::Ce: return "ce";
    case LossKind::ClDice: return "cldice";
    case LossKind::CePlusClDice: return "ce_plus_cldice";
  }
  return "?";
}

void apply_kv(CliConfig& cfg, const KvMap& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "patch_size") cfg.run.patch_size = to_long(key, value);
    else if (key == "epochs") cfg.run.epochs = static_cast<int>(to_long(key, value));
    else if (key == "warmup_epochs") cfg.run.warmup_epochs = static_cast<int>(to_long(key, value));
    else if (key == "lr") cfg.run.lr = to_scalar(key, value);
    else if (key == "weight_decay") cfg.run.weight_decay = to_scalar(key, value);
    else if (key == "batch_accum") cfg.run.batch_accum = static_cast<int>(to_long(key, value));
    else if (key == "loss.kind") cfg.run.loss.kind = to_loss_kind(value);
    else if (key == "loss.k") cfg.run.loss.skeleton_iters = static_cast<int>(to_long(key, value));
    else if (key == "loss.epsilon") cfg.run.loss.epsilon = to_scalar(key, value);
    else if (key == "loss.lambda") cfg.run.loss.lambda = to_scalar(key, value);
    else if (key == "seed") {
      cfg.run.seed = static_cast<std::uint64_t>(to_long(key, value));
      cfg.synth.seed = cfg.run.seed;
    }
    else if (key == "dataset_dir") cfg.run.dataset_dir = value;
    else if (key == "out_dir") cfg.run.out_dir = value;
    else if (key == "threshold") cfg.run.threshold = to_scalar(key, value);
    else if (key == "count") cfg.count = static_cast<int>(to_long(key, value));
    else if (key == "height") cfg.synth.height = to_long(key, value);
    else if (key == "width") cfg.synth.width = to_long(key, value);
    else if (key == "n_branches") cfg.synth.n_branches = static_cast<int>(to_long(key, value));
    else if (key == "radius_min") cfg.synth.radius_min = to_scalar(key, value);
    else if (key == "radius_max") cfg.synth.radius_max = to_scalar(key, value);
    else if (key == "noise_sigma") cfg.synth.noise_sigma = to_scalar(key, value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

}  // namespace scope
