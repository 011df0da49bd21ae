// Acceptance gate for the GKDE toolkit.  Nine end-to-end checks, one line of
// output each:
//
//   [PASS] criterion 3 — KDE bias at the normal mode follows the h^2 law: ...
//
// The binary exits nonzero if any criterion fails.  Checks are deterministic:
// every random quantity runs off a pinned seed, so a green run stays green.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gkde/gkde.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// criterion 1: backward gradients vs central finite differences
// ---------------------------------------------------------------------------

Verdict check_gradients() {
  const auto t0 = Clock::now();
  const std::size_t kConfigs = 24;  // all small: <= 200 parameters, batch <= 8
  std::size_t coords_total = 0;
  double worst_rel = 0.0;

  for (std::uint64_t i = 0; i < kConfigs; ++i) {
    gkde::Rng rng(gkde::derive_seed(9001, i));
    const std::size_t input_dim = 1 + rng.index(5);
    const std::size_t embedding_dim = 1 + rng.index(4);
    std::vector<std::size_t> hidden;
    const std::size_t depth = rng.index(3);
    for (std::size_t l = 0; l < depth; ++l) hidden.push_back(1 + rng.index(6));

    gkde::NetworkParams net =
        gkde::make_network(input_dim, hidden, embedding_dim, gkde::Activation::tanh, rng);
    if (net.parameter_count() > 200) {
      return {false, fmt("config %zu has %zu parameters, generator is broken", i,
                         net.parameter_count())};
    }

    const std::size_t batch = 1 + rng.index(8);
    const std::size_t classes = 1 + rng.index(3);
    const double h = 0.5 + 0.5 * rng.uniform01();

    std::vector<gkde::ClassPdf> pdfs;
    std::vector<double> raw;
    double raw_sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      raw.push_back(0.2 + 0.8 * rng.uniform01());
      raw_sum += raw.back();
    }
    for (std::size_t c = 0; c < classes; ++c) {
      gkde::ClassPdf pdf;
      pdf.label = static_cast<int>(c);
      pdf.prior = raw[c] / raw_sum;
      pdf.bandwidth = h;
      pdf.anchors = gkde::Tensor(1 + rng.index(5), embedding_dim);
      for (std::size_t k = 0; k < pdf.anchors.size(); ++k) pdf.anchors[k] = rng.normal(0.0, 1.0);
      pdfs.push_back(std::move(pdf));
    }

    gkde::Tensor x(batch, input_dim);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = rng.normal(0.0, 1.5);
    std::vector<int> labels;
    for (std::size_t b = 0; b < batch; ++b) labels.push_back(static_cast<int>(rng.index(classes)));

    gkde::LossConfig config;
    config.bandwidth = h;
    config.repulsion_prior = rng.uniform01() < 0.5 ? gkde::RepulsionPrior::per_class
                                                   : gkde::RepulsionPrior::anchor_class;

    const gkde::GradientCheckReport report =
        gkde::loss_gradient_check(net, x, labels, pdfs, config);
    if (!report.pass) {
      return {false, fmt("config %zu: max relative error %.3e exceeds 1e-5", i,
                         report.max_relative_error)};
    }
    if (report.coordinates_checked == 0) {
      return {false, fmt("config %zu produced no gradient coordinates above the floor", i)};
    }
    coords_total += report.coordinates_checked;
    worst_rel = std::max(worst_rel, report.max_relative_error);
  }

  const double elapsed = seconds_since(t0);
  if (elapsed > 30.0) return {false, fmt("took %.1f s, budget is 30 s", elapsed)};
  return {true, fmt("%zu configs, %zu coordinates, max relative error %.2e, %.1f s", kConfigs,
                    coords_total, worst_rel, elapsed)};
}

// ---------------------------------------------------------------------------
// criterion 2: density vs a naive double-loop oracle
// ---------------------------------------------------------------------------

Verdict check_density_oracle() {
  const auto t0 = Clock::now();
  std::size_t probes = 0;
  double worst_pdf = 0.0;
  double worst_log = 0.0;

  for (std::uint64_t set = 0; set < 10; ++set) {
    gkde::Rng rng(gkde::derive_seed(4242, set));
    const std::size_t d = 1 + rng.index(10);
    const std::size_t n = 50 + rng.index(351);
    const double h = 0.6 + 0.6 * rng.uniform01();

    gkde::Tensor anchors(n, d);
    for (std::size_t k = 0; k < anchors.size(); ++k) anchors[k] = rng.normal(0.0, 0.5);

    for (std::size_t p = 0; p < 100; ++p) {
      const std::size_t home = rng.index(n);
      std::vector<double> z(d);
      for (std::size_t j = 0; j < d; ++j) z[j] = anchors(home, j) + rng.normal(0.0, 0.2 * h);

      // independent arithmetic path: plain double loop, pow-based normalizer
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double delta = z[j] - anchors(i, j);
          sq += delta * delta;
        }
        acc += std::exp(-sq / (2.0 * h * h));
      }
      const double naive = acc / static_cast<double>(n) *
                           std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(d)) *
                           std::pow(h, -static_cast<double>(d));

      const double mine = gkde::pdf_density(anchors, h, z);
      const double rel = std::abs(mine - naive) / naive;
      worst_pdf = std::max(worst_pdf, rel);
      if (rel > 1e-12) {
        return {false, fmt("probe %zu of set %zu: density off by %.3e relative", p, set, rel)};
      }

      const double lp = gkde::log_pdf_density(anchors, h, z, -700.0);
      const double rel_log = std::abs(std::exp(lp) - mine) / mine;
      worst_log = std::max(worst_log, rel_log);
      if (rel_log > 1e-9) {
        return {false, fmt("probe %zu of set %zu: exp(log density) off by %.3e", p, set, rel_log)};
      }
      ++probes;
    }
  }

  const double elapsed = seconds_since(t0);
  if (elapsed > 5.0) return {false, fmt("took %.1f s, budget is 5 s", elapsed)};
  return {true, fmt("%zu probes, max density gap %.2e, max log-form gap %.2e, %.1f s", probes,
                    worst_pdf, worst_log, elapsed)};
}

// ---------------------------------------------------------------------------
// criterion 3: bias of the KDE at the normal mode scales as h^2
// ---------------------------------------------------------------------------

constexpr std::uint64_t kTheorySeed = 42;

Verdict check_bias_theory() {
  const auto t0 = Clock::now();
  const gkde::TestDensity density = gkde::standard_normal_density(1);
  const double z0[] = {0.0};
  const double bandwidths[] = {0.1, 0.2};

  std::vector<double> log_h;
  std::vector<double> log_bias;
  std::string measured;
  for (double h : bandwidths) {
    const gkde::BiasVarianceReport r =
        gkde::monte_carlo_bias_variance(density, z0, h, 1000, 2000, kTheorySeed);
    const double tolerance =
        std::max(3.0 * r.se_bias, 0.2 * std::abs(r.predicted_bias) + 1e-5);
    if (std::abs(r.measured_bias - r.predicted_bias) > tolerance) {
      return {false, fmt("h=%.1f: measured bias %.3e vs predicted %.3e, tolerance %.3e", h,
                         r.measured_bias, r.predicted_bias, tolerance)};
    }
    log_h.push_back(std::log(h));
    log_bias.push_back(std::log(std::abs(r.measured_bias)));
    measured += fmt("%sh=%.1f bias %.2e", measured.empty() ? "" : ", ", h, r.measured_bias);
  }

  const double slope = gkde::least_squares_slope(log_h, log_bias);
  const double elapsed = seconds_since(t0);
  if (std::abs(slope - 2.0) > 0.3) {
    return {false, fmt("%s, log-log slope %.2f outside 2 +/- 0.3", measured.c_str(), slope)};
  }
  if (elapsed > 120.0) return {false, fmt("took %.1f s, budget is 120 s", elapsed)};
  return {true, fmt("%s, slope %.2f, %.1f s", measured.c_str(), slope, elapsed)};
}

// ---------------------------------------------------------------------------
// criterion 4: variance of the KDE vs the first-order 1/(nh) prediction
// ---------------------------------------------------------------------------

Verdict check_variance_theory() {
  const auto t0 = Clock::now();
  const gkde::TestDensity density = gkde::standard_normal_density(1);
  const double z0[] = {0.0};

  // Exact finite-n variance for this kernel/density pair (closed form):
  //   E[K]   = N(0; 0, 1 + h^2),  E[K^2] = N(0; 0, 1 + h^2/2) / (2h sqrt(pi)),
  //   Var    = (E[K^2] - E[K]^2) / n.
  const auto exact_variance = [](double h, std::size_t n) {
    const auto normal0 = [](double var) {
      return 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
    };
    const double mean_k = normal0(1.0 + h * h);
    const double mean_k2 = normal0(1.0 + 0.5 * h * h) / (2.0 * h * std::sqrt(std::numbers::pi));
    return (mean_k2 - mean_k * mean_k) / static_cast<double>(n);
  };

  const gkde::BiasVarianceReport base =
      gkde::monte_carlo_bias_variance(density, z0, 0.2, 1000, 2000, kTheorySeed);
  const double gap_first_order =
      std::abs(base.measured_variance - base.predicted_variance) / base.predicted_variance;
  const double exact = exact_variance(0.2, 1000);
  const double gap_exact = std::abs(base.measured_variance - exact) / exact;

  const std::size_t sizes[] = {500, 1000, 2000, 4000};
  std::vector<double> log_n;
  std::vector<double> log_var;
  for (std::size_t n : sizes) {
    const gkde::BiasVarianceReport r =
        gkde::monte_carlo_bias_variance(density, z0, 0.2, n, 2000, kTheorySeed);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_var.push_back(std::log(r.measured_variance));
  }
  const double slope = gkde::least_squares_slope(log_n, log_var);
  const double elapsed = seconds_since(t0);

  const bool first_order_ok = gap_first_order <= 0.15;
  const bool slope_ok = std::abs(slope + 1.0) <= 0.1;
  const bool time_ok = elapsed <= 120.0;

  const std::string detail = fmt(
      "measured %.3e vs first-order R(K)k(0)/(nh) %.3e (gap %.1f%%, band 15%%); "
      "exact finite-n theory %.3e (gap %.1f%%); 1/n slope %.3f; %.1f s",
      base.measured_variance, base.predicted_variance, 100.0 * gap_first_order, exact,
      100.0 * gap_exact, slope, elapsed);
  return {first_order_ok && slope_ok && time_ok, detail};
}

// ---------------------------------------------------------------------------
// criteria 5/6/9: blob-stream benchmarks
// ---------------------------------------------------------------------------

struct BenchmarkRun {
  std::vector<gkde::TaskDataset> data;
  gkde::StreamOutcome outcome;
  double seconds = 0.0;
};

BenchmarkRun run_blob_benchmark(std::size_t tasks, std::size_t samples_per_class,
                                std::size_t embedding_dim, double bandwidth) {
  gkde::BlobConfig blob;  // 2 classes per task, input dim 16, separation 8
  blob.tasks = tasks;
  blob.samples_per_class = samples_per_class;

  gkde::TrainConfig config;
  config.embedding_dim = embedding_dim;
  config.activation = gkde::Activation::relu;
  config.bandwidth = bandwidth;
  config.seed = 42;

  BenchmarkRun run;
  run.data = gkde::synth_blobs(blob, 42);
  auto streamed = run.data;  // keep a copy of the datasets for later probing

  const auto t0 = Clock::now();
  gkde::TaskStream stream(std::move(streamed), config.warmup_epochs + config.epochs, 42);
  run.outcome = gkde::train_stream(stream, config);
  run.seconds = seconds_since(t0);
  return run;
}

Verdict check_five_task_stream(const BenchmarkRun& run) {
  const gkde::StreamOutcome& out = run.outcome;
  double tp_sum = 0.0;
  for (const auto& m : out.metrics) tp_sum += m.tp_accuracy;
  const double tp = tp_sum / static_cast<double>(out.metrics.size());

  const std::string detail =
      fmt("avg accuracy %.4f, forgetting %.17g, task-prediction accuracy %.4f, %.1f s",
          out.avg_accuracy, out.avg_forgetting, tp, run.seconds);
  const bool pass = out.avg_accuracy >= 0.95 && out.avg_forgetting == 0.0 && tp >= 0.98 &&
                    run.seconds <= 120.0;
  return {pass, detail};
}

Verdict check_hundred_task_stream() {
  const BenchmarkRun run = run_blob_benchmark(100, 200, 16, 0.5);
  const gkde::ModelBank& bank = run.outcome.bank;

  if (bank.size() != 100) {
    return {false, fmt("bank holds %zu entries, expected 100", bank.size())};
  }
  std::vector<int> all_labels;
  for (std::size_t t = 0; t < bank.size(); ++t) {
    const gkde::TaskEntry& entry = bank.entries()[t];
    if (entry.task_id != static_cast<int>(t) + 1) {
      return {false, fmt("entry %zu carries task id %d", t, entry.task_id)};
    }
    for (int label : entry.label_set()) all_labels.push_back(label);
  }
  std::sort(all_labels.begin(), all_labels.end());
  if (all_labels.size() != 200 ||
      std::adjacent_find(all_labels.begin(), all_labels.end()) != all_labels.end()) {
    return {false, "task label sets are not disjoint"};
  }

  const std::string detail = fmt("bank 100 entries, 200 disjoint labels, forgetting %.17g, "
                                 "avg accuracy %.4f, %.1f s",
                                 run.outcome.avg_forgetting, run.outcome.avg_accuracy,
                                 run.seconds);
  const bool pass = run.outcome.avg_forgetting == 0.0 && run.seconds <= 600.0;
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// criterion 7: combined probability factorizes; exhaustive-oracle argmax
// ---------------------------------------------------------------------------

// From-scratch scoring with plain loops: clipped per-anchor kernels, log of the
// anchor mean, softmax over tasks, Bayes posterior within each task, and an
// argmax over every (task, class) pair (ties resolved toward the first pair).
struct OracleDecision {
  int task_id = 0;
  int class_label = 0;
};

OracleDecision exhaustive_argmax(const gkde::ModelBank& bank, std::span<const double> x,
                                 double clip_floor) {
  const std::size_t tasks = bank.size();
  std::vector<std::vector<double>> logk(tasks);
  std::vector<double> best(tasks, -std::numeric_limits<double>::infinity());

  for (std::size_t t = 0; t < tasks; ++t) {
    const gkde::TaskEntry& entry = bank.entries()[t];
    const gkde::Tensor z = gkde::embed_row(entry.network, x);
    for (const auto& pdf : entry.pdfs) {
      const std::size_t n = pdf.anchors.rows();
      const std::size_t d = pdf.anchors.cols();
      const double h = pdf.bandwidth;
      const double norm = -static_cast<double>(d) * std::log(h) -
                          0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double delta = z(0, j) - pdf.anchors(i, j);
          sq += delta * delta;
        }
        const double lg = std::max(norm - sq / (2.0 * h * h), clip_floor);
        acc += std::exp(lg);
      }
      const double lk = std::log(acc / static_cast<double>(n));
      logk[t].push_back(lk);
      best[t] = std::max(best[t], lk);
    }
  }

  const double m = *std::max_element(best.begin(), best.end());
  double denom = 0.0;
  for (double b : best) denom += std::exp(b - m);

  OracleDecision decision{bank.entries()[0].task_id, bank.entries()[0].pdfs[0].label};
  double best_joint = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < tasks; ++t) {
    const gkde::TaskEntry& entry = bank.entries()[t];
    const double tp = std::exp(best[t] - m) / denom;
    double pm = -std::numeric_limits<double>::infinity();
    std::vector<double> score;
    for (std::size_t j = 0; j < entry.pdfs.size(); ++j) {
      score.push_back(std::log(entry.pdfs[j].prior) + logk[t][j]);
      pm = std::max(pm, score.back());
    }
    double pden = 0.0;
    for (double s : score) pden += std::exp(s - pm);
    for (std::size_t j = 0; j < entry.pdfs.size(); ++j) {
      const double joint = tp * (std::exp(score[j] - pm) / pden);
      if (joint > best_joint) {
        best_joint = joint;
        decision = {entry.task_id, entry.pdfs[j].label};
      }
    }
  }
  return decision;
}

// Four tasks sharing one (identity) network, two well-separated classes each.
gkde::ModelBank build_shared_parameter_bank() {
  const gkde::NetworkParams shared = gkde::identity_network(2);
  gkde::Rng rng(gkde::derive_seed(0x72657631ULL, 7));

  gkde::ModelBank bank;
  for (int t = 1; t <= 4; ++t) {
    std::vector<gkde::ClassPdf> pdfs;
    for (int j = 0; j < 2; ++j) {
      const double cx = 6.0 * t;
      const double cy = 8.0 * j - 4.0;
      gkde::ClassPdf pdf;
      pdf.label = 2 * (t - 1) + j;
      pdf.prior = 0.5;
      pdf.bandwidth = 0.5;
      pdf.anchors = gkde::Tensor(40, 2);
      for (std::size_t i = 0; i < 40; ++i) {
        pdf.anchors(i, 0) = cx + rng.normal(0.0, 0.6);
        pdf.anchors(i, 1) = cy + rng.normal(0.0, 0.6);
      }
      pdf.mean = gkde::Tensor(1, 2, {cx, cy});
      pdf.variance = gkde::Tensor(1, 2, {0.36, 0.36});
      pdfs.push_back(std::move(pdf));
    }
    bank.add_task(gkde::make_task_entry(t, shared, std::move(pdfs)));
  }
  return bank;
}

Verdict check_combined_rule(const BenchmarkRun& run) {
  double worst_gap = 0.0;
  std::size_t probes = 0;

  const auto product_gap = [&](const gkde::ModelBank& bank, std::span<const double> x) {
    const gkde::Prediction p = gkde::predict(bank, x);
    const double product = p.tp_probability * p.wp_posterior;
    return std::abs(std::exp(p.combined_log_prob) - product) / product;
  };

  // factorization on every test probe of the five-task benchmark
  for (const auto& task : run.data) {
    for (std::size_t r = 0; r < task.x_test.rows(); ++r) {
      const double gap = product_gap(run.outcome.bank, task.x_test.row_span(r));
      worst_gap = std::max(worst_gap, gap);
      if (gap > 1e-12) {
        return {false, fmt("combined probability off by %.3e relative on a benchmark probe", gap)};
      }
      ++probes;
    }
  }

  // decision vs the exhaustive oracle on a bank whose tasks share parameters
  const gkde::ModelBank shared = build_shared_parameter_bank();
  gkde::Rng rng(gkde::derive_seed(0x72657632ULL, 1));
  std::vector<std::vector<double>> shared_probes;
  for (int t = 1; t <= 4; ++t) {
    for (int j = 0; j < 2; ++j) {
      for (int p = 0; p < 20; ++p) {
        shared_probes.push_back(
            {6.0 * t + rng.normal(0.0, 1.2), 8.0 * j - 4.0 + rng.normal(0.0, 1.2)});
      }
    }
  }
  for (int p = 0; p < 60; ++p) {
    shared_probes.push_back({rng.uniform(0.0, 30.0), rng.uniform(-8.0, 8.0)});
  }

  std::size_t agreed = 0;
  for (const auto& x : shared_probes) {
    const double gap = product_gap(shared, x);
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-12) {
      return {false, fmt("combined probability off by %.3e relative on a shared-bank probe", gap)};
    }
    const gkde::Prediction p = gkde::predict(shared, x);
    const OracleDecision oracle = exhaustive_argmax(shared, x, gkde::kDefaultClipFloor);
    if (p.task_id != oracle.task_id || p.class_label != oracle.class_label) {
      return {false, fmt("decision (%d, %d) disagrees with oracle (%d, %d) at (%.2f, %.2f)",
                         p.task_id, p.class_label, oracle.task_id, oracle.class_label, x[0],
                         x[1])};
    }
    ++agreed;
    ++probes;
  }

  return {true, fmt("%zu probes, max factorization gap %.2e, %zu oracle decisions agree", probes,
                    worst_gap, agreed)};
}

// ---------------------------------------------------------------------------
// criterion 8: save/load round-trip is bit-identical
// ---------------------------------------------------------------------------

Verdict check_persistence(const BenchmarkRun& run) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "gkde_acceptance_bank";
  std::filesystem::remove_all(dir);
  gkde::save_model_bank(run.outcome.bank, dir);
  const gkde::ModelBank loaded = gkde::load_model_bank(dir);
  std::filesystem::remove_all(dir);

  // 1000 probes: half real test rows, half random points over the blob range
  std::vector<std::vector<double>> probes;
  for (const auto& task : run.data) {
    for (std::size_t r = 0; r < task.x_test.rows() && probes.size() < 500; ++r) {
      const auto row = task.x_test.row_span(r);
      probes.emplace_back(row.begin(), row.end());
    }
  }
  gkde::Rng rng(gkde::derive_seed(777, 0));
  while (probes.size() < 1000) {
    std::vector<double> x(16);
    for (auto& v : x) v = rng.normal(0.0, 20.0);
    probes.push_back(std::move(x));
  }

  for (const auto& x : probes) {
    const gkde::Prediction before = gkde::predict(run.outcome.bank, x);
    const gkde::Prediction after = gkde::predict(loaded, x);
    if (!(before == after)) {
      return {false, fmt("prediction drifted after reload (task %d vs %d, score %.17g vs %.17g)",
                         before.task_id, after.task_id, before.tp_score, after.tp_score)};
    }
  }
  return {true, fmt("%zu probes bit-identical across a %zu-task round-trip", probes.size(),
                    loaded.size())};
}

// ---------------------------------------------------------------------------
// criterion 9: sensitivity to embedding width and bandwidth
// ---------------------------------------------------------------------------

Verdict check_sensitivity(const BenchmarkRun& base) {
  const BenchmarkRun narrow = run_blob_benchmark(5, 1000, 2, 0.5);
  const BenchmarkRun wide_kernel = run_blob_benchmark(5, 1000, 16, 10.0);

  const double ref = base.outcome.avg_accuracy;
  const double d2 = narrow.outcome.avg_accuracy;
  const double h10 = wide_kernel.outcome.avg_accuracy;

  const std::string detail =
      fmt("avg accuracy: d=16,h=0.5 -> %.4f; d=2 -> %.4f; h=10 -> %.4f", ref, d2, h10);
  return {d2 < ref && h10 < ref, detail};
}

// ---------------------------------------------------------------------------

int run_all() {
  struct Line {
    int id;
    const char* name;
    Verdict verdict;
  };
  std::vector<Line> lines;

  const auto guarded = [](auto&& fn) -> Verdict {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {false, fmt("threw: %s", e.what())};
    }
  };

  lines.push_back({1, "backward gradients match central finite differences",
                   guarded([] { return check_gradients(); })});
  lines.push_back({2, "kernel density matches a naive double-loop oracle",
                   guarded([] { return check_density_oracle(); })});
  lines.push_back({3, "KDE bias at the normal mode follows the h^2 law",
                   guarded([] { return check_bias_theory(); })});
  lines.push_back({4, "KDE variance vs the first-order 1/(nh) prediction",
                   guarded([] { return check_variance_theory(); })});

  std::optional<BenchmarkRun> run5;
  lines.push_back({5, "five-task single-pass stream: accurate, zero forgetting", guarded([&] {
                     run5 = run_blob_benchmark(5, 1000, 16, 0.5);
                     return check_five_task_stream(*run5);
                   })});
  lines.push_back({6, "hundred-task stream: 100 frozen entries, zero forgetting",
                   guarded([] { return check_hundred_task_stream(); })});

  const auto needs_run5 = [&](auto&& fn) -> Verdict {
    if (!run5) return {false, "five-task benchmark unavailable"};
    return guarded([&] { return fn(*run5); });
  };
  lines.push_back({7, "combined probability factorizes and matches the exhaustive oracle",
                   needs_run5([](const BenchmarkRun& r) { return check_combined_rule(r); })});
  lines.push_back({8, "bank save/load round-trip keeps predictions bit-identical",
                   needs_run5([](const BenchmarkRun& r) { return check_persistence(r); })});
  lines.push_back({9, "narrower embedding or inflated bandwidth degrades accuracy",
                   needs_run5([](const BenchmarkRun& r) { return check_sensitivity(r); })});

  int failures = 0;
  for (const auto& line : lines) {
    std::printf("[%s] criterion %d — %s: %s\n", line.verdict.pass ? "PASS" : "FAIL", line.id,
                line.name, line.verdict.detail.c_str());
    if (!line.verdict.pass) ++failures;
  }
  std::printf("%zu/%zu criteria passed\n", lines.size() - failures, lines.size());
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main() { return run_all(); }
