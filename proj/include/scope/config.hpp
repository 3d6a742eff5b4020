#pragma once

#include "scope/losses.hpp"
#include "scope/synth.hpp"

#include <map>
#include <string>
#include <vector>

namespace scope {

/// Training/inference/evaluation settings. Loaded from flat key=value config
/// files; every key can be overridden by a --key=value flag.
struct RunConfig {
  Index patch_size = 1;  // must be 1 or 2
  int epochs = 30;
  // Leading epochs trained with cross-entropy before switching to loss.kind,
  // mirroring the two-stage schedule (feature generator first, then joint
  // training). Counted within epochs; ignored when loss.kind is ce.
  int warmup_epochs = 20;
  Scalar lr = 4e-4;
  Scalar weight_decay = 5e-3;
  int batch_accum = 8;
  LossConfig loss;
  std::uint64_t seed = 7;
  std::string dataset_dir = "data";
  std::string out_dir = "out";
  Scalar threshold = 0.5;
};

void validate(const RunConfig& cfg);

/// All recognized configuration, shared across subcommands.
struct CliConfig {
  RunConfig run;
  SynthConfig synth;
  int count = 40;  // image pairs emitted by synth
};

using KvMap = std::map<std::string, std::string>;

/// Parses key=value lines; '#' starts a comment, blank lines are skipped.
KvMap parse_kv_file(const std::string& path);

/// Parses trailing --key=value CLI arguments.
KvMap parse_kv_flags(const std::vector<std::string>& args);

/// Applies key/value pairs onto the config. Unknown keys and unparsable
/// values throw std::invalid_argument.
void apply_kv(CliConfig& cfg, const KvMap& kv);

std::string loss_kind_name(LossKind kind);

}  // namespace scope
