#include "scope/harness.hpp"
#include "scope/pgm.hpp"

#include <cstring>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitFormat = 3;
constexpr int kExitConfig = 4;
constexpr int kExitGradcheck = 5;

void print_help() {
  std::cout <<
      "scope - graph-based continuity-preserving segmentation of tubular\n"
      "structures, with topological evaluation metrics.\n"
      "\n"
      "usage: scope <subcommand> [--config=FILE] [--key=value ...]\n"
      "\n"
      "subcommands:\n"
      "  synth                   write seeded synthetic image/mask pairs plus\n"
      "                          manifest.txt into out_dir\n"
      "  train                   train on dataset_dir; writes out_dir/model.ckpt\n"
      "                          and out_dir/train_log.csv\n"
      "  infer --checkpoint=F --image=F --out=F\n"
      "                          write the soft prediction PGM and the\n"
      "                          thresholded mask (suffix _mask)\n"
      "  eval --pred_dir=D --gt_dir=D --out=F\n"
      "                          per-pair topology/pixel metrics CSV with a\n"
      "                          final mean row\n"
      "  gradcheck [--perturb=1] finite-difference check of every gradient\n"
      "                          component; nonzero exit on failure\n"
      "  ablate                  train {ce, ce_plus_cldice, cldice} x n=1 plus\n"
      "                          cldice x n=2 on the even-index split, evaluate\n"
      "                          on the odd-index split, write ablation.csv\n"
      "\n"
      "configuration keys (config file key=value lines; '#' comments; every key\n"
      "may be overridden with --key=value):\n"
      "  patch_size (1|2)  epochs  lr  weight_decay  batch_accum  seed\n"
      "  loss.kind (ce|cldice|ce_plus_cldice)  loss.k  loss.epsilon  loss.lambda\n"
      "  dataset_dir  out_dir  threshold\n"
      "  count  height  width  n_branches  radius_min  radius_max  noise_sigma\n"
      "\n"
      "environment:\n"
      "  SCOPE_THREADS           caps evaluation worker threads\n"
      "\n"
      "exit codes:\n"
      "  0 success\n"
      "  1 usage error\n"
      "  2 I/O failure\n"
      "  3 malformed file (PGM or checkpoint)\n"
      "  4 invalid configuration or shape mismatch\n"
      "  5 gradient check failed\n";
}

int classify_pgm_error(const scope::PgmIoError& e) {
  switch (e.code()) {
    case scope::PgmError::IoFailure:
      return kExitIo;
    default:
      return kExitFormat;
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    print_help();
    return kExitUsage;
  }
  const std::string cmd = argv[1];
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    print_help();
    return kExitOk;
  }

  // Split subcommand-specific path flags from config overrides.
  scope::KvMap flags;
  try {
    std::vector<std::string> args(argv + 2, argv + argc);
    flags = scope::parse_kv_flags(args);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  const auto take_flag = [&flags](const char* key) -> std::string {
    const auto it = flags.find(key);
    if (it == flags.end()) return {};
    std::string v = it->second;
    flags.erase(it);
    return v;
  };

  scope::CliConfig cfg;
  try {
    const std::string config_path = take_flag("config");
    const std::string checkpoint = take_flag("checkpoint");
    const std::string image = take_flag("image");
    const std::string out = take_flag("out");
    const std::string pred_dir = take_flag("pred_dir");
    const std::string gt_dir = take_flag("gt_dir");
    const std::string perturb = take_flag("perturb");

    if (!config_path.empty()) scope::apply_kv(cfg, scope::parse_kv_file(config_path));
    scope::apply_kv(cfg, flags);

    if (cmd == "synth") {
      scope::run_synth(cfg);
      return kExitOk;
    }
    if (cmd == "train") {
      scope::validate(cfg.run);
      scope::run_train(cfg);
      return kExitOk;
    }
    if (cmd == "infer") {
      if (checkpoint.empty() || image.empty() || out.empty()) {
        std::cerr << "infer: --checkpoint, --image, and --out are required\n";
        return kExitUsage;
      }
      scope::run_infer(checkpoint, image, out, cfg);
      return kExitOk;
    }
    if (cmd == "eval") {
      if (pred_dir.empty() || gt_dir.empty() || out.empty()) {
        std::cerr << "eval: --pred_dir, --gt_dir, and --out are required\n";
        return kExitUsage;
      }
      scope::run_eval(pred_dir, gt_dir, out);
      return kExitOk;
    }
    if (cmd == "gradcheck") {
      const auto report = scope::run_gradcheck_cmd(cfg.run.seed, perturb == "1");
      return report.passed() ? kExitOk : kExitGradcheck;
    }
    if (cmd == "ablate") {
      scope::validate(cfg.run);
      scope::run_ablate(cfg);
      return kExitOk;
    }
    std::cerr << "unknown subcommand '" << cmd << "'\n";
    print_help();
    return kExitUsage;
  } catch (const scope::PgmIoError& e) {
    std::cerr << e.what() << "\n";
    return classify_pgm_error(e);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    std::cerr << what << "\n";
    if (what.find("cannot open") != std::string::npos ||
        what.find("cannot write") != std::string::npos) {
      return kExitIo;
    }
    if (what.rfind("checkpoint", 0) == 0) return kExitFormat;
    return kExitIo;
  }
}
