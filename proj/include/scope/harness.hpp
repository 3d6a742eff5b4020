#pragma once

#include "scope/config.hpp"
#include "scope/gradcheck.hpp"
#include "scope/nn.hpp"
#include "scope/topology.hpp"

#include <string>
#include <utility>
#include <vector>

namespace scope {

struct ImagePair {
  GrayImage image;
  BinaryImage mask;
  std::string name;  // image file name
};

/// Reads manifest.txt ("<image> <mask>" per line) and loads every pair.
std::vector<ImagePair> load_dataset(const std::string& dir);

/// Writes count seeded image/mask pairs plus manifest.txt into out_dir.
void run_synth(const CliConfig& cfg);

struct TrainResult {
  ScopeNet net;
  std::vector<Scalar> epoch_loss;  // mean per-image loss per epoch
};

/// Deterministic reference-mode training loop: fixed visit order, gradient
/// accumulation over batch_accum images per optimizer step.
TrainResult train_model(const std::vector<ImagePair>& pairs, const RunConfig& cfg);

/// Trains on the dataset in cfg.dataset_dir; writes out_dir/model.ckpt and
/// out_dir/train_log.csv ("epoch,loss" rows).
void run_train(const CliConfig& cfg);

/// Predicted foreground probability field for one image.
GrayImage infer_image(const ScopeNet& net, const GrayImage& image);

/// Writes the soft prediction to out_path and the thresholded mask next to
/// it (suffix "_mask").
void run_infer(const std::string& checkpoint, const std::string& image_path,
               const std::string& out_path, const CliConfig& cfg);

struct EvalRow {
  std::string file;
  TopologySummary summary;
  bool ok = true;
  std::string error;
};

struct MetricsReport {
  std::vector<EvalRow> rows;
  // Column means over ok rows: precision, recall, dice, cldice, err_b0,
  // err_b1, err_chi.
  std::array<Scalar, 7> mean{};
  int evaluated = 0;
  double wall_seconds = 0.0;
};

MetricsReport evaluate_pairs(const std::vector<BinaryImage>& preds,
                             const std::vector<BinaryImage>& gts,
                             const std::vector<std::string>& names);

/// Pairs *.pgm files by name across the two directories and writes the CSV
/// (header + one row per file + final mean row, fixed 6-decimal format).
MetricsReport run_eval(const std::string& pred_dir, const std::string& gt_dir,
                       const std::string& out_csv);

/// Prints one row per component; returns the report (pass/fail via
/// report.passed()).
GradcheckReport run_gradcheck_cmd(std::uint64_t seed, bool perturb_hook);

struct AblationRow {
  std::string label;
  std::array<Scalar, 7> mean{};
};

/// Trains {ce, ce_plus_cldice, cldice} at patch 1 plus cldice at patch 2 on
/// the even-index split, evaluates on the odd-index split, and writes
/// out_dir/ablation.csv.
std::vector<AblationRow> run_ablate(const CliConfig& cfg);

/// Worker cap for evaluation fan-out: SCOPE_THREADS if set, else min(4, hw).
int worker_count(int njobs);

}  // namespace scope
