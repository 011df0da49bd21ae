#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gkde/model_bank.hpp"
#include "gkde/objective.hpp"
#include "gkde/optimizer.hpp"
#include "gkde/pdf_builder.hpp"
#include "gkde/stream_eval.hpp"

namespace gkde {

struct TrainConfig {
  std::size_t embedding_dim = 32;
  std::vector<std::size_t> hidden = {64, 64};
  Activation activation = Activation::tanh;
  double bandwidth = 0.5;
  std::size_t anchors_per_class = 500;
  double clip_floor = -700.0;
  std::size_t epochs = 1;
  std::size_t warmup_epochs = 0;
  std::size_t batch_size = 128;
  AdamConfig adam;
  RepulsionPrior repulsion_prior = RepulsionPrior::per_class;
  LossReduction reduction = LossReduction::mean;
  bool refresh_anchors_every_epoch = false;
  std::uint64_t seed = 42;

  LossConfig loss_config() const {
    return LossConfig{bandwidth, clip_floor, reduction, repulsion_prior};
  }

  void validate() const {
    require(embedding_dim >= 1 && embedding_dim <= 1024,
            "train: embedding_dim must be in [1, 1024]");
    require(bandwidth > 0.0, "train: bandwidth must be > 0");
    require(anchors_per_class >= 1, "train: anchors_per_class must be >= 1");
    require(epochs >= 1, "train: epochs must be >= 1");
    require(batch_size >= 1, "train: batch_size must be >= 1");
    adam.validate();
  }
};

struct StreamOutcome {
  ModelBank bank;
  AccuracyMatrix matrix;
  std::vector<TaskMetrics> metrics;  // per task, under the final bank
  double avg_accuracy = 0.0;
  double avg_forgetting = 0.0;  // defined (and asserted zero) only when T >= 2
};

namespace detail {

// Test probes accumulated across tasks, with per-(probe, entry) scores filled in
// as the bank grows.  Old scores are never recomputed — entries are frozen, so
// this reproduces ModelBank::predict exactly while touching each (probe, task)
// pair once instead of once per evaluation round.
struct EvalCache {
  struct ProbeSet {
    Tensor x;
    std::vector<int> y;
    std::vector<int> wp_label;               // prior-weighted argmax under own entry
    std::vector<std::vector<double>> best;   // best[p][entry]: best class log density
  };

  std::vector<ProbeSet> per_task;

  // score probe row `p` of embedded batch `z` against one entry
  static double best_log_density(const TaskEntry& entry, const Tensor& z, std::size_t p,
                                 double clip_floor) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& pdf : entry.pdfs) {
      best = std::max(best, log_pdf_density(pdf, z.row_span(p), clip_floor));
    }
    return best;
  }

  void add_task_probes(const TaskDataset& task, const ModelBank& bank, double clip_floor) {
    ProbeSet set;
    set.x = task.x_test;
    set.y = task.y_test;
    const std::size_t count = set.x.rows();
    set.best.assign(count, {});

    // new probes against every entry already in the bank
    for (const auto& entry : bank.entries()) {
      const Tensor z = embed(entry.network, set.x);
      for (std::size_t p = 0; p < count; ++p) {
        set.best[p].push_back(best_log_density(entry, z, p, clip_floor));
      }
    }

    // within-task decision under the probes' own (final) entry
    const TaskEntry& own = bank.entries().back();
    const Tensor z_own = embed(own.network, set.x);
    for (std::size_t p = 0; p < count; ++p) {
      const auto wp = predict_within_task(own, z_own.row_span(p), clip_floor);
      set.wp_label.push_back(wp.class_label);
    }
    per_task.push_back(std::move(set));
  }

  // probes of earlier tasks against the entry that was just added
  void add_entry_scores(const TaskEntry& entry, double clip_floor) {
    for (std::size_t t = 0; t + 1 < per_task.size(); ++t) {
      ProbeSet& set = per_task[t];
      const Tensor z = embed(entry.network, set.x);
      for (std::size_t p = 0; p < set.x.rows(); ++p) {
        set.best[p].push_back(best_log_density(entry, z, p, clip_floor));
      }
    }
  }

  static std::size_t winner(const std::vector<double>& best) {
    std::size_t w = 0;
    for (std::size_t t = 1; t < best.size(); ++t) {
      if (best[t] > best[w]) w = t;
    }
    return w;
  }

  // overall accuracy of task j's probes: correct task AND correct class
  double overall_accuracy(std::size_t j) const {
    const ProbeSet& set = per_task[j];
    std::size_t hits = 0;
    for (std::size_t p = 0; p < set.x.rows(); ++p) {
      if (winner(set.best[p]) == j && set.wp_label[p] == set.y[p]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(set.x.rows());
  }

  TaskMetrics final_metrics(std::size_t j, int task_id) const {
    const ProbeSet& set = per_task[j];
    std::size_t tp = 0, wp = 0, both = 0;
    for (std::size_t p = 0; p < set.x.rows(); ++p) {
      const bool task_ok = winner(set.best[p]) == j;
      const bool class_ok = set.wp_label[p] == set.y[p];
      tp += task_ok;
      wp += class_ok;
      both += task_ok && class_ok;
    }
    const auto n = static_cast<double>(set.x.rows());
    return TaskMetrics{task_id, static_cast<double>(tp) / n, static_cast<double>(wp) / n,
                       static_cast<double>(both) / n};
  }
};

inline std::vector<ClassPdf> build_task_pdfs(const NetworkParams& net,
                                             const TaskDataset& task,
                                             const TrainConfig& config,
                                             std::uint64_t anchor_seed) {
  const PriorTable priors = estimate_priors(task.y_train);
  const Tensor embedded = embed(net, task.x_train);

  std::vector<ClassPdf> pdfs;
  for (std::size_t c = 0; c < priors.labels.size(); ++c) {
    const int label = priors.labels[c];
    Tensor class_rows(priors.counts[c], embedded.cols());
    std::size_t r = 0;
    for (std::size_t i = 0; i < task.y_train.size(); ++i) {
      if (task.y_train[i] != label) continue;
      for (std::size_t k = 0; k < embedded.cols(); ++k) class_rows(r, k) = embedded(i, k);
      ++r;
    }
    pdfs.push_back(build_class_pdf(class_rows, label, priors.priors[c],
                                   config.anchors_per_class, config.bandwidth,
                                   derive_seed(anchor_seed, static_cast<std::uint64_t>(label))));
  }
  return pdfs;
}

inline void run_training_pass(TaskStream& stream, std::size_t task_index,
                              NetworkParams& net, AdamState& adam,
                              const std::vector<ClassPdf>& pdfs,
                              const TrainConfig& config) {
  const TaskDataset& task = stream.task(task_index);
  const std::vector<std::size_t> order = stream.next_pass(task_index);
  const LossConfig loss_config = config.loss_config();

  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    Tensor batch(end - start, task.x_train.cols());
    std::vector<int> labels(end - start);
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t row = order[i];
      for (std::size_t k = 0; k < batch.cols(); ++k) batch(i - start, k) = task.x_train(row, k);
      labels[i - start] = task.y_train[row];
    }

    Tape tape;
    TapedNetwork staged = stage_network(tape, net);
    Var z = embed(tape, staged, tape.constant(batch));
    Var loss = gkde_loss(tape, z, labels, pdfs, loss_config);
    GradientMap grads = backward(loss);

    std::vector<Tensor> grad_list;
    grad_list.reserve(staged.params.size());
    for (Var p : staged.params) grad_list.push_back(grads.grad(p));
    adam.step(net, grad_list);
  }
}

}  // namespace detail

// The full online protocol: per task — fresh network, optional warm-up passes
// against provisional anchors, freeze anchors, train the configured passes, add
// the frozen entry to the bank, and score all seen test sets for the accuracy
// matrix.  Earlier entries are never revisited.
inline StreamOutcome train_stream(TaskStream& stream, const TrainConfig& config) {
  config.validate();
  require(stream.task_count() >= 1, "train_stream: empty stream");

  StreamOutcome outcome;
  detail::EvalCache cache;

  for (std::size_t t = 0; t < stream.task_count(); ++t) {
    const TaskDataset& task = stream.task(t);
    require(task.x_train.cols() >= 1, "train_stream: task has no feature columns");

    Rng init_rng(derive_seed(config.seed, 0x6e6574ULL, t));
    NetworkParams net = make_network(task.x_train.cols(), config.hidden,
                                     config.embedding_dim, config.activation, init_rng);
    AdamState adam(net, config.adam);

    for (std::size_t w = 0; w < config.warmup_epochs; ++w) {
      const auto pdfs = detail::build_task_pdfs(
          net, task, config, derive_seed(config.seed, 0x7761726dULL + w, t));
      detail::run_training_pass(stream, t, net, adam, pdfs, config);
    }

    auto pdfs = detail::build_task_pdfs(net, task, config,
                                        derive_seed(config.seed, 0x616e63686f72ULL, t));
    for (std::size_t e = 0; e < config.epochs; ++e) {
      if (config.refresh_anchors_every_epoch && e > 0) {
        pdfs = detail::build_task_pdfs(
            net, task, config, derive_seed(config.seed, 0x72656672657368ULL + e, t));
      }
      detail::run_training_pass(stream, t, net, adam, pdfs, config);
    }
    if (config.refresh_anchors_every_epoch) {
      pdfs = detail::build_task_pdfs(net, task, config,
                                     derive_seed(config.seed, 0x66696e616cULL, t));
    }

    outcome.bank.add_task(make_task_entry(task.task_id, std::move(net), std::move(pdfs)));

    // score the new entry against old probes, then the new probes against everything
    cache.add_entry_scores(outcome.bank.entries().back(), config.clip_floor);
    cache.add_task_probes(task, outcome.bank, config.clip_floor);

    std::vector<double> row;
    for (std::size_t j = 0; j <= t; ++j) row.push_back(cache.overall_accuracy(j));
    outcome.matrix.a.push_back(std::move(row));
  }

  for (std::size_t j = 0; j < stream.task_count(); ++j) {
    outcome.metrics.push_back(cache.final_metrics(j, stream.task(j).task_id));
  }
  outcome.avg_accuracy = average_accuracy(outcome.matrix);
  if (stream.task_count() >= 2) {
    outcome.avg_forgetting = average_forgetting(outcome.matrix);
  }
  return outcome;
}

}  // namespace gkde
