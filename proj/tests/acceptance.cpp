// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failed criteria.

#include "scope/gradcheck.hpp"
#include "scope/harness.hpp"
#include "scope/pgm.hpp"
#include "scope/topology.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

using namespace scope;
using namespace scope::test;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string name;
  std::function<bool(std::string&)> run;
};

std::vector<BinaryImage> random_corpus(int count, Index h, Index w,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<BinaryImage> corpus;
  corpus.reserve(count);
  for (int i = 0; i < count; ++i) {
    corpus.push_back(random_mask(h, w, rng, 0.2 + 0.6 * rng.uniform()));
  }
  return corpus;
}

bool criterion_betti_euler_identity(std::string& detail) {
  const auto corpus = random_corpus(1000, 16, 16, 1601);
  for (size_t i = 0; i < corpus.size(); ++i) {
    const auto [b0, b1] = betti_numbers(corpus[i]);
    const int chi = euler_characteristic_cubical(corpus[i]);
    if (b0 - b1 != chi) {
      detail = "mask " + std::to_string(i) + ": beta0-beta1=" +
               std::to_string(b0 - b1) + " chi=" + std::to_string(chi);
      return false;
    }
  }
  detail = "beta0 - beta1 == chi on 1000 random 16x16 masks, exact";
  return true;
}

bool criterion_euler_dual_method(std::string& detail) {
  const auto corpus = random_corpus(1000, 16, 16, 1601);
  for (size_t i = 0; i < corpus.size(); ++i) {
    const int quad = euler_characteristic(corpus[i]);
    const int vef = euler_characteristic_cubical(corpus[i]);
    if (quad != vef) {
      detail = "mask " + std::to_string(i) + ": quad=" + std::to_string(quad) +
               " vef=" + std::to_string(vef);
      return false;
    }
  }
  detail = "quad-pattern chi == V-E+F chi on the corpus, exact";
  return true;
}

bool criterion_gradients(std::string& detail) {
  const GradcheckReport report = run_gradcheck(7);
  Scalar worst = 0.0;
  std::string worst_name;
  for (const auto& row : report.rows) {
    if (row.max_rel_err > worst) {
      worst = row.max_rel_err;
      worst_name = row.component;
    }
  }
  detail = std::to_string(report.rows.size()) +
           " components, worst max_rel_err " + std::to_string(worst) + " (" +
           worst_name + "), tolerance 1e-4";
  return report.passed();
}

bool criterion_sparse_dense(std::string& detail) {
  Rng rng(4096);
  Scalar worst = 0.0;

  const auto check_graph = [&](Index n, const std::vector<std::pair<int, int>>& edges) {
    const SparseOp op = normalized_adjacency(
        n, std::span<const std::pair<int, int>>(edges.data(), edges.size()));
    Matrix h(n, 8);
    for (Index i = 0; i < h.size(); ++i) h(i / 8, i % 8) = rng.uniform(-1.0, 1.0);
    GcnLayer layer;
    layer.weight = Matrix::Zero(8, 4);
    for (Index i = 0; i < layer.weight.size(); ++i)
      layer.weight(i / 4, i % 4) = rng.uniform(-1.0, 1.0);
    layer.bias = Vector::Zero(4);
    for (Index i = 0; i < 4; ++i) layer.bias[i] = rng.uniform(-1.0, 1.0);

    const Matrix sparse_out = gcn_forward(op, h, layer, Activation::Relu);
    const Matrix dense = Matrix(op);
    const Matrix dense_out =
        ((dense * h * layer.weight).rowwise() + layer.bias.transpose()).cwiseMax(0.0);
    worst = std::max(worst, (sparse_out - dense_out).cwiseAbs().maxCoeff());
  };

  for (const Index side : {8L, 32L, 64L}) {  // N = 64, 1024, 4096
    check_graph(side * side, build_grid_graph(side, side, 1).edges);
  }
  for (const Index n : {128L, 512L}) {  // random graphs
    std::vector<std::pair<int, int>> edges;
    for (Index i = 0; i < n; ++i)
      for (int k = 0; k < 4; ++k) {
        const int j = static_cast<int>(rng.uniform_int(0, n - 1));
        if (j != i) edges.emplace_back(std::min<int>(i, j), std::max<int>(i, j));
      }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    check_graph(n, edges);
  }
  detail = "max |sparse - dense| = " + std::to_string(worst) +
           " over grids up to N=4096 and random graphs, tolerance 1e-12";
  return worst < 1e-12;
}

bool criterion_cldice_sanity(std::string& detail) {
  const BinaryImage t = tube(17, 40, 1);
  if (cldice_metric(t, t) != 1.0) {
    detail = "identical nonempty pair did not score exactly 1";
    return false;
  }
  BinaryImage cut(Mask2D(t.pix));
  for (Index c = 19; c < 22; ++c)
    for (Index r = 0; r < 17; ++r) cut.pix(r, c) = 0;
  const Scalar gap_score = cldice_metric(cut, t);
  const TopologySummary s = evaluate_pair(cut, t);
  detail = "clDice(identical)=1 exactly; 3px cut: clDice " +
           std::to_string(gap_score) + " < 1, err_b0 " + std::to_string(s.err_b0);
  return gap_score < 1.0 && s.err_b0 >= 1;
}

bool criterion_skeleton(std::string& detail) {
  auto corpus = random_corpus(1000, 16, 16, 1606);
  for (int i = 0; i < 20; ++i) {
    SynthConfig sc;  // default desk-scale vessels
    sc.seed = 900 + i;
    corpus.push_back(synth_vessels(sc).second);
  }
  for (size_t i = 0; i < corpus.size(); ++i) {
    const BinaryImage s1 = skeletonize(corpus[i]);
    if (!(skeletonize(s1) == s1)) {
      detail = "not idempotent on mask " + std::to_string(i);
      return false;
    }
    if (connected_components(s1, 8).second !=
        connected_components(corpus[i], 8).second) {
      detail = "beta0 changed on mask " + std::to_string(i);
      return false;
    }
  }
  detail = "idempotent and beta0-preserving on 1000 random + 20 vessel masks";
  return true;
}

bool criterion_ablation(std::string& detail) {
  const std::string data = temp_dir("acc_ablate_data");
  const std::string out = temp_dir("acc_ablate_out");
  CliConfig cfg;  // desk-scale defaults, seed 7
  cfg.run.dataset_dir = data;
  cfg.run.out_dir = data;
  run_synth(cfg);
  cfg.run.out_dir = out;
  const auto rows = run_ablate(cfg);

  const auto find = [&](const std::string& label) -> const AblationRow& {
    for (const auto& row : rows)
      if (row.label == label) return row;
    throw std::runtime_error("missing ablation row " + label);
  };
  const AblationRow& ce = find("ce_n1");
  const AblationRow& cl = find("cldice_n1");
  const AblationRow& cl2 = find("cldice_n2");

  char buf[256];
  std::snprintf(buf, sizeof buf,
                "err_b0 cldice %.3f <= ce %.3f; clDice metric %.3f >= %.3f; "
                "dice n2 %.3f <= n1 %.3f",
                cl.mean[4], ce.mean[4], cl.mean[3], ce.mean[3], cl2.mean[2],
                cl.mean[2]);
  detail = buf;
  return cl.mean[4] <= ce.mean[4] && cl.mean[3] >= ce.mean[3] &&
         cl2.mean[2] <= cl.mean[2];
}

bool criterion_determinism(std::string& detail) {
  const auto run_pipeline = [&](const std::string& root) {
    CliConfig cfg;
    cfg.count = 8;
    cfg.synth.height = 32;
    cfg.synth.width = 32;
    cfg.run.out_dir = root + "/data";
    run_synth(cfg);
    cfg.run.dataset_dir = root + "/data";
    cfg.run.out_dir = root + "/model";
    cfg.run.epochs = 3;
    cfg.run.warmup_epochs = 2;
    run_train(cfg);

    fs::create_directories(root + "/preds");
    for (int i = 0; i < 8; ++i) {
      char img[32], msk[32];
      std::snprintf(img, sizeof img, "/img_%04d.pgm", i);
      std::snprintf(msk, sizeof msk, "/msk_%04d.pgm", i);
      run_infer(root + "/model/model.ckpt", root + "/data" + img,
                root + "/preds/soft.pgm", cfg);
      fs::copy_file(root + "/preds/soft_mask.pgm", root + "/preds" + msk);
    }
    run_eval(root + "/preds", root + "/data", root + "/eval.csv");
  };

  const std::string r1 = temp_dir("acc_det_1");
  const std::string r2 = temp_dir("acc_det_2");
  run_pipeline(r1);
  run_pipeline(r2);

  const bool csv_ok = slurp(r1 + "/eval.csv") == slurp(r2 + "/eval.csv");
  const bool ckpt_ok =
      slurp(r1 + "/model/model.ckpt") == slurp(r2 + "/model/model.ckpt");
  const bool log_ok =
      slurp(r1 + "/model/train_log.csv") == slurp(r2 + "/model/train_log.csv");
  detail = std::string("csv ") + (csv_ok ? "identical" : "DIFFER") +
           ", checkpoint " + (ckpt_ok ? "identical" : "DIFFER") + ", log " +
           (log_ok ? "identical" : "DIFFER");
  return csv_ok && ckpt_ok && log_ok;
}

bool criterion_pgm_roundtrip(std::string& detail) {
  const std::string dir = temp_dir("acc_pgm");
  Rng rng(1609);
  for (const int maxval : {255, 65535}) {
    for (int i = 0; i < 100; ++i) {
      const Index h = 1 + static_cast<Index>(rng.uniform_int(1, 24));
      const Index w = 1 + static_cast<Index>(rng.uniform_int(1, 24));
      const GrayImage img = random_gray(h, w, rng);
      const std::string p1 = dir + "/a.pgm", p2 = dir + "/b.pgm";
      write_pgm(img, p1, maxval);
      write_pgm(read_pgm(p1), p2, maxval);
      if (slurp(p1) != slurp(p2)) {
        detail = "round-trip mismatch at maxval " + std::to_string(maxval) +
                 " image " + std::to_string(i);
        return false;
      }
    }
  }
  detail = "write-read-write byte identity, 100 images x {255, 65535}";
  return true;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "topology oracle identity", criterion_betti_euler_identity},
      {2, "euler dual-method agreement", criterion_euler_dual_method},
      {3, "gradient suite", criterion_gradients},
      {4, "sparse/dense gcn equivalence", criterion_sparse_dense},
      {5, "cldice metric sanity", criterion_cldice_sanity},
      {6, "skeleton contracts", criterion_skeleton},
      {7, "ablation directions", criterion_ablation},
      {8, "pipeline determinism", criterion_determinism},
      {9, "pgm round-trip", criterion_pgm_roundtrip},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const std::chrono::duration<double> wall =
        std::chrono::steady_clock::now() - start;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", ok ? "PASS" : "FAIL",
                c.id, c.name.c_str(), detail.c_str(), wall.count());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}
