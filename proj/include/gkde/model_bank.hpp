#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gkde/class_pdf.hpp"
#include "gkde/kde.hpp"
#include "gkde/network.hpp"

namespace gkde {

// Frozen per-task model: the trained network plus one ClassPdf per class,
// kept sorted by label so argmax tie-breaking is "smallest label wins".
struct TaskEntry {
  int task_id = 0;
  NetworkParams network;
  std::vector<ClassPdf> pdfs;

  std::vector<int> label_set() const {
    std::vector<int> out;
    for (const auto& p : pdfs) out.push_back(p.label);
    return out;
  }

  void validate() const {
    require(!pdfs.empty(), "TaskEntry: task " + std::to_string(task_id) + " has no classes");
    network.validate();
    double prior_sum = 0.0;
    for (std::size_t i = 0; i < pdfs.size(); ++i) {
      pdfs[i].validate();
      require(pdfs[i].dim() == network.embedding_dim(),
              "TaskEntry: PDF dim does not match the network's embedding dim");
      require(pdfs[i].bandwidth == pdfs[0].bandwidth,
              "TaskEntry: classes disagree on bandwidth");
      if (i > 0) {
        require(pdfs[i - 1].label < pdfs[i].label,
                "TaskEntry: duplicate class label " + std::to_string(pdfs[i].label));
      }
      prior_sum += pdfs[i].prior;
    }
    require(std::abs(prior_sum - 1.0) <= 1e-12,
            "TaskEntry: class priors sum to " + std::to_string(prior_sum) + ", not 1");
  }
};

inline TaskEntry make_task_entry(int task_id, NetworkParams network,
                                 std::vector<ClassPdf> pdfs) {
  TaskEntry entry{task_id, std::move(network), std::move(pdfs)};
  std::sort(entry.pdfs.begin(), entry.pdfs.end(),
            [](const ClassPdf& a, const ClassPdf& b) { return a.label < b.label; });
  entry.validate();
  return entry;
}

// Ordered collection of frozen task models.  Entries are immutable once added:
// that is the mechanism making forgetting structurally zero.
class ModelBank {
 public:
  void add_task(TaskEntry entry) {
    entry.validate();
    if (!entries_.empty()) {
      require(entry.task_id > entries_.back().task_id,
              "add_task: task_id " + std::to_string(entry.task_id) +
                  " is not greater than " + std::to_string(entries_.back().task_id));
      require(entry.network.input_dim() == entries_.front().network.input_dim(),
              "add_task: input dim differs from the bank's");
      require(entry.network.embedding_dim() == embedding_dim(),
              "add_task: embedding dim differs from the bank's");
      require(entry.pdfs[0].bandwidth == bandwidth(),
              "add_task: bandwidth differs from the bank's");
      for (const auto& p : entry.pdfs) {
        for (const auto& existing : entries_) {
          for (const auto& q : existing.pdfs) {
            require(p.label != q.label, "add_task: label " + std::to_string(p.label) +
                                            " already owned by task " +
                                            std::to_string(existing.task_id));
          }
        }
      }
    }
    entries_.push_back(std::move(entry));
  }

  const std::vector<TaskEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  std::size_t input_dim() const { return front().network.input_dim(); }
  std::size_t embedding_dim() const { return front().network.embedding_dim(); }
  double bandwidth() const { return front().pdfs[0].bandwidth; }

 private:
  const TaskEntry& front() const {
    require(!entries_.empty(), "ModelBank: bank is empty");
    return entries_.front();
  }

  std::vector<TaskEntry> entries_;
};

struct TaskSelection {
  std::size_t winner_index = 0;
  int task_id = 0;
  std::vector<double> best_log_density;  // one per entry, bank order
};

// Task prediction: embed x under every task's frozen network, score each task by
// its best class log density, pick the argmax (ties toward the smallest task_id).
inline TaskSelection predict_task(const ModelBank& bank, std::span<const double> x,
                                  double clip_floor = kDefaultClipFloor) {
  require(!bank.empty(), "predict_task: bank is empty");
  require(x.size() == bank.input_dim(), "predict_task: input has " +
                                            std::to_string(x.size()) + " values, bank expects " +
                                            std::to_string(bank.input_dim()));
  TaskSelection sel;
  for (std::size_t t = 0; t < bank.size(); ++t) {
    const TaskEntry& entry = bank.entries()[t];
    const Tensor z = embed_row(entry.network, x);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& pdf : entry.pdfs) {
      best = std::max(best, log_pdf_density(pdf, z.row_span(0), clip_floor));
    }
    sel.best_log_density.push_back(best);
    if (t == 0 || best > sel.best_log_density[sel.winner_index]) {
      sel.winner_index = t;
    }
  }
  sel.task_id = bank.entries()[sel.winner_index].task_id;
  return sel;
}

struct WithinTaskPrediction {
  int class_label = 0;
  std::size_t class_index = 0;
  std::vector<double> posterior;  // aligned with entry.pdfs, sums to 1
};

// Bayes rule within one task: posterior_j ∝ π_j k_j(z).  Scores are kept in log
// space, so the normalization is a softmax and never underflows; if every density
// clips to the floor the posterior degrades to the priors and the argmax falls
// back to the smallest label, never aborting.
inline WithinTaskPrediction predict_within_task(const TaskEntry& entry,
                                                std::span<const double> z,
                                                double clip_floor = kDefaultClipFloor) {
  require(z.size() == entry.network.embedding_dim(),
          "predict_within_task: embedding dim mismatch");
  std::vector<double> scores;
  for (const auto& pdf : entry.pdfs) {
    scores.push_back(std::log(pdf.prior) + log_pdf_density(pdf, z, clip_floor));
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  double denom = 0.0;
  for (double s : scores) denom += std::exp(s - scores[best]);

  WithinTaskPrediction wp;
  wp.class_index = best;
  wp.class_label = entry.pdfs[best].label;
  for (double s : scores) wp.posterior.push_back(std::exp(s - scores[best]) / denom);
  return wp;
}

struct Prediction {
  int task_id = 0;
  int class_label = 0;
  double tp_score = 0.0;        // raw best log density of the winning task
  double tp_probability = 0.0;  // softmax over per-task best log densities
  double wp_posterior = 0.0;    // posterior of the chosen class within the winner
  double combined_log_prob = 0.0;

  bool operator==(const Prediction&) const = default;
};

namespace detail {

// Softmax probability of the winning task.  Summed left to right in bank order on
// purpose: appending a later task whose score is far below the max then adds a term
// that rounds away without disturbing the earlier partial sums, which keeps
// predictions on old inputs bit-identical as the bank grows.
inline double task_softmax_probability(const std::vector<double>& scores,
                                       std::size_t winner) {
  const double m = scores[winner];
  double denom = 0.0;
  for (double s : scores) denom += std::exp(s - m);
  return std::exp(scores[winner] - m) / denom;
}

}  // namespace detail

// Combined rule: P(class j, task T | x) = P(j | x, T) * P(T | x).
inline Prediction predict(const ModelBank& bank, std::span<const double> x,
                          double clip_floor = kDefaultClipFloor) {
  const TaskSelection sel = predict_task(bank, x, clip_floor);
  const TaskEntry& entry = bank.entries()[sel.winner_index];
  const Tensor z = embed_row(entry.network, x);
  const WithinTaskPrediction wp = predict_within_task(entry, z.row_span(0), clip_floor);

  Prediction p;
  p.task_id = sel.task_id;
  p.class_label = wp.class_label;
  p.tp_score = sel.best_log_density[sel.winner_index];
  p.tp_probability = detail::task_softmax_probability(sel.best_log_density, sel.winner_index);
  p.wp_posterior = wp.posterior[wp.class_index];
  p.combined_log_prob = std::log(p.tp_probability) + std::log(p.wp_posterior);
  return p;
}

}  // namespace gkde
