#include "scope/harness.hpp"

#include "scope/adam.hpp"
#include "scope/checkpoint.hpp"
#include "scope/pgm.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <thread>

namespace fs = std::filesystem;

namespace scope {

namespace {

std::string pair_file_name(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04d.pgm", prefix, index);
  return buf;
}

std::string format_fixed6(Scalar v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> list_pgm_files(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("eval: not a directory: " + dir);
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::string describe_config(const RunConfig& cfg) {
  std::string out = "n=" + std::to_string(cfg.patch_size) +
                    " epochs=" + std::to_string(cfg.epochs) +
                    " warmup=" + std::to_string(cfg.warmup_epochs) +
                    " lr=" + format_fixed6(cfg.lr) +
                    " wd=" + format_fixed6(cfg.weight_decay) +
                    " batch=" + std::to_string(cfg.batch_accum) +
                    " loss=" + loss_kind_name(cfg.loss.kind) +
                    " k=" + std::to_string(cfg.loss.skeleton_iters) +
                    " lambda=" + format_fixed6(cfg.loss.lambda) +
                    " seed=" + std::to_string(cfg.seed) +
                    " threshold=" + format_fixed6(cfg.threshold);
  return out;
}

}  // namespace

int worker_count(int njobs) {
  int cap = 4;
  if (const char* env = std::getenv("SCOPE_THREADS")) {
    cap = std::max(1, std::atoi(env));
  }
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, std::min({cap, hw > 0 ? hw : 1, njobs}));
}

std::vector<ImagePair> load_dataset(const std::string& dir) {
  const std::string manifest = dir + "/manifest.txt";
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("dataset: cannot open " + manifest);

  std::vector<ImagePair> pairs;
  std::string img_name, msk_name;
  while (in >> img_name >> msk_name) {
    ImagePair p;
    p.image = read_pgm(dir + "/" + img_name);
    p.mask = read_mask_pgm(dir + "/" + msk_name);
    p.name = img_name;
    if (!pairs.empty() && (p.image.height() != pairs.front().image.height() ||
                           p.image.width() != pairs.front().image.width())) {
      throw std::runtime_error("dataset: inconsistent image sizes in " + dir);
    }
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw std::runtime_error("dataset: empty manifest " + manifest);
  return pairs;
}

void run_synth(const CliConfig& cfg) {
  if (cfg.count < 1) throw std::invalid_argument("synth: count must be >= 1");
  validate(cfg.synth);
  fs::create_directories(cfg.run.out_dir);

  std::ofstream manifest(cfg.run.out_dir + "/manifest.txt", std::ios::trunc);
  if (!manifest) {
    throw std::runtime_error("synth: cannot write manifest in " + cfg.run.out_dir);
  }
  for (int i = 0; i < cfg.count; ++i) {
    SynthConfig sc = cfg.synth;
    sc.seed = cfg.synth.seed + static_cast<std::uint64_t>(i);
    const auto [image, mask] = synth_vessels(sc);
    const std::string img_name = pair_file_name("img", i);
    const std::string msk_name = pair_file_name("msk", i);
    write_pgm(image, cfg.run.out_dir + "/" + img_name, 255);
    write_mask_pgm(mask, cfg.run.out_dir + "/" + msk_name);
    manifest << img_name << " " << msk_name << "\n";
  }
}

TrainResult train_model(const std::vector<ImagePair>& pairs, const RunConfig& cfg) {
  validate(cfg);
  if (pairs.empty()) throw std::invalid_argument("train: no images");
  const Index h = pairs.front().image.height();
  const Index w = pairs.front().image.width();
  const GridGraph graph = build_grid_graph(h, w, cfg.patch_size);

  TrainResult result;
  result.net = init_params(cfg.patch_size, cfg.seed);
  Vector theta = pack_params(result.net);
  AdamState opt(theta.size());
  opt.lr = cfg.lr;
  opt.weight_decay = cfg.weight_decay;

  std::vector<VectorI> labels;
  labels.reserve(pairs.size());
  for (const ImagePair& p : pairs) labels.push_back(node_labels(p.mask, graph.grid));

  ScopeGrads batch = zero_grads(result.net);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossConfig loss_cfg = cfg.loss;
    if (epoch < cfg.warmup_epochs) loss_cfg.kind = LossKind::Ce;
    Scalar epoch_loss = 0.0;
    int in_batch = 0;
    for (size_t i = 0; i < pairs.size(); ++i) {
      ForwardCache cache;
      const Matrix logits = scope_forward(result.net, pairs[i].image, graph, &cache);
      const LogitLoss ll =
          combined_loss(logits, labels[i], graph.grid, pairs[i].mask, loss_cfg);
      epoch_loss += ll.value;
      accumulate(batch, scope_backward(result.net, cache, ll.grad_logits));
      ++in_batch;

      if (in_batch == cfg.batch_accum || i + 1 == pairs.size()) {
        scale(batch, 1.0 / static_cast<Scalar>(in_batch));
        adam_step(theta, pack_grads(result.net, batch), opt);
        unpack_params(result.net, theta);
        batch = zero_grads(result.net);
        in_batch = 0;
      }
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<Scalar>(pairs.size()));
  }
  return result;
}

void run_train(const CliConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<ImagePair> pairs = load_dataset(cfg.run.dataset_dir);
  const TrainResult result = train_model(pairs, cfg.run);

  fs::create_directories(cfg.run.out_dir);
  std::ofstream log(cfg.run.out_dir + "/train_log.csv", std::ios::trunc);
  if (!log) throw std::runtime_error("train: cannot write log in " + cfg.run.out_dir);
  log << "epoch,loss\n";
  for (size_t e = 0; e < result.epoch_loss.size(); ++e) {
    log << (e + 1) << "," << format_fixed6(result.epoch_loss[e]) << "\n";
  }
  save_checkpoint(result.net, cfg.run.out_dir + "/model.ckpt");

  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
  std::cout << "config: " << describe_config(cfg.run) << "\n";
  std::cout << "trained " << pairs.size() << " images in "
            << format_fixed6(wall.count()) << " s; final loss "
            << format_fixed6(result.epoch_loss.back()) << "\n";
}

GrayImage infer_image(const ScopeNet& net, const GrayImage& image) {
  const GridGraph graph =
      build_grid_graph(image.height(), image.width(), net.patch);
  const Matrix logits = scope_forward(net, image, graph);
  const Vector p1 = softmax_class1(logits);
  return nodes_to_pixels(p1, graph.grid);
}

namespace {

std::string mask_out_path(const std::string& out_path) {
  const fs::path p(out_path);
  fs::path q = p.parent_path() / p.stem();
  return q.string() + "_mask" + (p.has_extension() ? p.extension().string() : ".pgm");
}

}  // namespace

void run_infer(const std::string& checkpoint, const std::string& image_path,
               const std::string& out_path, const CliConfig& cfg) {
  validate(cfg.run);
  ScopeNet net = init_params(cfg.run.patch_size, 0);
  load_checkpoint(net, checkpoint);

  const GrayImage image = read_pgm(image_path);
  if (image.height() % net.patch != 0 || image.width() % net.patch != 0) {
    throw std::invalid_argument("infer: patch size does not divide image dims");
  }
  const GrayImage soft = infer_image(net, image);
  write_pgm(soft, out_path, 255);
  write_mask_pgm(threshold(soft, cfg.run.threshold), mask_out_path(out_path));
}

MetricsReport evaluate_pairs(const std::vector<BinaryImage>& preds,
                             const std::vector<BinaryImage>& gts,
                             const std::vector<std::string>& names) {
  const auto start = std::chrono::steady_clock::now();
  const size_t n = preds.size();
  MetricsReport report;
  report.rows.resize(n);

  const int workers = worker_count(static_cast<int>(n));
  std::atomic<size_t> next{0};
  const auto work = [&]() {
    for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      EvalRow& row = report.rows[i];
      row.file = names[i];
      try {
        row.summary = evaluate_pair(preds[i], gts[i]);
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  report.mean.fill(0.0);
  for (const EvalRow& row : report.rows) {
    if (!row.ok) continue;
    ++report.evaluated;
    report.mean[0] += row.summary.precision;
    report.mean[1] += row.summary.recall;
    report.mean[2] += row.summary.dice;
    report.mean[3] += row.summary.cldice;
    report.mean[4] += row.summary.err_b0;
    report.mean[5] += row.summary.err_b1;
    report.mean[6] += row.summary.err_chi;
  }
  if (report.evaluated > 0) {
    for (Scalar& m : report.mean) m /= static_cast<Scalar>(report.evaluated);
  }
  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
  report.wall_seconds = wall.count();
  return report;
}

namespace {

void write_eval_csv(const MetricsReport& report, const std::string& out_csv) {
  std::ofstream out(out_csv, std::ios::trunc);
  if (!out) throw std::runtime_error("eval: cannot write " + out_csv);
  out << "file,precision,recall,dice,cldice,err_b0,err_b1,err_chi\n";
  for (const EvalRow& row : report.rows) {
    if (!row.ok) continue;
    const TopologySummary& s = row.summary;
    out << row.file << "," << format_fixed6(s.precision) << ","
        << format_fixed6(s.recall) << "," << format_fixed6(s.dice) << ","
        << format_fixed6(s.cldice) << "," << format_fixed6(s.err_b0) << ","
        << format_fixed6(s.err_b1) << "," << format_fixed6(s.err_chi) << "\n";
  }
  out << "mean";
  for (const Scalar m : report.mean) out << "," << format_fixed6(m);
  out << "\n";
}

}  // namespace

MetricsReport run_eval(const std::string& pred_dir, const std::string& gt_dir,
                       const std::string& out_csv) {
  const std::vector<std::string> pred_names = list_pgm_files(pred_dir);
  const std::vector<std::string> gt_names = list_pgm_files(gt_dir);

  std::vector<std::string> matched;
  std::set_intersection(pred_names.begin(), pred_names.end(), gt_names.begin(),
                        gt_names.end(), std::back_inserter(matched));
  for (const std::string& name : pred_names) {
    if (!std::binary_search(gt_names.begin(), gt_names.end(), name)) {
      std::cerr << "eval: no ground truth for " << name << ", skipping\n";
    }
  }
  for (const std::string& name : gt_names) {
    if (!std::binary_search(pred_names.begin(), pred_names.end(), name)) {
      std::cerr << "eval: no prediction for " << name << ", skipping\n";
    }
  }
  if (matched.empty()) throw std::runtime_error("eval: no matching pairs");

  std::vector<BinaryImage> preds, gts;
  preds.reserve(matched.size());
  gts.reserve(matched.size());
  for (const std::string& name : matched) {
    preds.push_back(read_mask_pgm(pred_dir + "/" + name));
    gts.push_back(read_mask_pgm(gt_dir + "/" + name));
  }

  MetricsReport report = evaluate_pairs(preds, gts, matched);
  for (const EvalRow& row : report.rows) {
    if (!row.ok) std::cerr << "eval: " << row.file << ": " << row.error << "\n";
  }
  write_eval_csv(report, out_csv);
  std::cout << "evaluated " << report.evaluated << " pairs in "
            << format_fixed6(report.wall_seconds) << " s -> " << out_csv << "\n";
  return report;
}

GradcheckReport run_gradcheck_cmd(std::uint64_t seed, bool perturb_hook) {
  const GradcheckReport report = run_gradcheck(seed, perturb_hook);
  for (const GradcheckRow& row : report.rows) {
    std::printf("%-14s max_rel_err %.3e %s\n", row.component.c_str(),
                row.max_rel_err, row.max_rel_err < report.tolerance ? "ok" : "FAIL");
  }
  std::printf("gradcheck %s (tolerance %.1e)\n",
              report.passed() ? "passed" : "FAILED", report.tolerance);
  return report;
}

std::vector<AblationRow> run_ablate(const CliConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<ImagePair> all = load_dataset(cfg.run.dataset_dir);

  // Held-out split by index parity: even train, odd test.
  std::vector<ImagePair> train_set, test_set;
  for (size_t i = 0; i < all.size(); ++i) {
    (i % 2 == 0 ? train_set : test_set).push_back(all[i]);
  }
  if (train_set.empty() || test_set.empty()) {
    throw std::runtime_error("ablate: need at least 2 dataset images");
  }

  struct Cell {
    LossKind kind;
    Index patch;
    const char* label;
  };
  const Cell cells[] = {
      {LossKind::Ce, 1, "ce_n1"},
      {LossKind::CePlusClDice, 1, "ce_cldice_n1"},
      {LossKind::ClDice, 1, "cldice_n1"},
      {LossKind::ClDice, 2, "cldice_n2"},
  };

  std::vector<AblationRow> rows;
  for (const Cell& cell : cells) {
    RunConfig rc = cfg.run;
    rc.loss.kind = cell.kind;
    rc.patch_size = cell.patch;
    std::cout << "ablate " << cell.label << " config: " << describe_config(rc)
              << "\n";
    const TrainResult trained = train_model(train_set, rc);

    std::vector<BinaryImage> preds, gts;
    std::vector<std::string> names;
    for (const ImagePair& p : test_set) {
      preds.push_back(threshold(infer_image(trained.net, p.image), rc.threshold));
      gts.push_back(p.mask);
      names.push_back(p.name);
    }
    const MetricsReport report = evaluate_pairs(preds, gts, names);
    rows.push_back({cell.label, report.mean});
    std::cout << "ablate " << cell.label << ": dice "
              << format_fixed6(report.mean[2]) << ", cldice "
              << format_fixed6(report.mean[3]) << ", err_b0 "
              << format_fixed6(report.mean[4]) << "\n";
  }

  fs::create_directories(cfg.run.out_dir);
  const std::string out_csv = cfg.run.out_dir + "/ablation.csv";
  std::ofstream out(out_csv, std::ios::trunc);
  if (!out) throw std::runtime_error("ablate: cannot write " + out_csv);
  out << "config,precision,recall,dice,cldice,err_b0,err_b1,err_chi\n";
  for (const AblationRow& row : rows) {
    out << row.label;
    for (const Scalar m : row.mean) out << "," << format_fixed6(m);
    out << "\n";
  }
  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
  std::cout << "ablation finished in " << format_fixed6(wall.count()) << " s -> "
            << out_csv << "\n";
  return rows;
}

}  // namespace scope
