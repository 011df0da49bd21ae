#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gkde/rng.hpp"
#include "gkde/tensor.hpp"

namespace gkde {

// One task of the stream: train split, held-out test split, disjoint label set.
struct TaskDataset {
  int task_id = 0;
  std::vector<int> class_labels;  // C_t, ascending
  Tensor x_train;
  std::vector<int> y_train;
  Tensor x_test;
  std::vector<int> y_test;
};

// Ordered task sequence with a cursor that enforces the single-pass protocol:
// each task's training rows may be traversed at most `max_passes` times, and a
// task is closed for good once a later task has been opened.
class TaskStream {
 public:
  TaskStream(std::vector<TaskDataset> tasks, std::size_t max_passes, std::uint64_t seed)
      : tasks_(std::move(tasks)), max_passes_(max_passes), seed_(seed),
        passes_used_(tasks_.size(), 0) {
    require(max_passes_ >= 1, "TaskStream: pass allowance must be >= 1");
    for (std::size_t t = 0; t < tasks_.size(); ++t) {
      const auto& task = tasks_[t];
      require(task.x_train.rows() >= 1, "TaskStream: task " + std::to_string(task.task_id) +
                                            " has no training rows");
      for (std::size_t u = t + 1; u < tasks_.size(); ++u) {
        for (int a : task.class_labels)
          for (int b : tasks_[u].class_labels)
            require(a != b, "TaskStream: label " + std::to_string(a) +
                                " appears in two tasks");
      }
    }
  }

  std::size_t task_count() const { return tasks_.size(); }
  const TaskDataset& task(std::size_t i) const { return tasks_.at(i); }
  std::size_t max_passes() const { return max_passes_; }

  // One full pass over task i's training rows, in a seeded shuffled order.
  // Throws once the pass allowance is exhausted or the task has been closed.
  std::vector<std::size_t> next_pass(std::size_t i) {
    require(i < tasks_.size(), "TaskStream: no such task index");
    if (i < active_) {
      throw std::logic_error("TaskStream: task " + std::to_string(tasks_[i].task_id) +
                             " is closed; the stream is single-pass and has moved on");
    }
    active_ = i;
    if (passes_used_[i] >= max_passes_) {
      throw std::logic_error("TaskStream: pass allowance (" + std::to_string(max_passes_) +
                             ") over task " + std::to_string(tasks_[i].task_id) +
                             " exhausted");
    }
    std::vector<std::size_t> order(tasks_[i].x_train.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed_, 0x7061737375ULL + i, passes_used_[i]));
    rng.shuffle(order);
    ++passes_used_[i];
    return order;
  }

 private:
  std::vector<TaskDataset> tasks_;
  std::size_t max_passes_;
  std::uint64_t seed_;
  std::vector<std::size_t> passes_used_;
  std::size_t active_ = 0;
};

struct BlobConfig {
  std::size_t tasks = 5;
  std::size_t classes_per_task = 2;
  std::size_t dim = 16;
  double separation = 8.0;
  double cluster_std = 1.5;
  std::size_t samples_per_class = 1000;
  double test_fraction = 0.2;
  std::size_t max_tries = 1000;

  void validate() const {
    require(tasks >= 1 && classes_per_task >= 1 && dim >= 1 && samples_per_class >= 1,
            "synth_blobs: counts must be positive");
    require(separation > 0.0, "synth_blobs: separation must be > 0");
    require(cluster_std > 0.0, "synth_blobs: cluster std must be > 0");
    require(test_fraction > 0.0 && test_fraction < 1.0,
            "synth_blobs: test fraction must be in (0, 1)");
  }
};

struct PlacementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<double> random_point(Rng& rng, std::size_t dim, double std_dev) {
  std::vector<double> p(dim);
  for (auto& v : p) v = rng.normal(0.0, std_dev);
  return p;
}

inline double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Rejection-samples a point at least min_dist from everything in `placed`.
inline std::vector<double> place_point(Rng& rng, std::size_t dim, double spread,
                                       const std::vector<std::vector<double>>& placed,
                                       double min_dist, std::size_t max_tries,
                                       const char* what) {
  for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
    std::vector<double> candidate = random_point(rng, dim, spread);
    bool ok = true;
    for (const auto& prev : placed) {
      if (distance(candidate, prev) < min_dist) {
        ok = false;
        break;
      }
    }
    if (ok) return candidate;
  }
  throw PlacementError(std::string("synth_blobs: could not place a ") + what +
                       " center at the requested separation after " +
                       std::to_string(max_tries) + " tries");
}

}  // namespace detail

// Gaussian blob stream: tasks live far apart, the classes of one task are placed
// around the task's center just above the separation floor, and every pair of
// class centers (within and across tasks) is at least `separation` apart.  Labels
// are 0..T*c-1 assigned task-contiguously; split is the trailing test_fraction of
// each class's draw.
inline std::vector<TaskDataset> synth_blobs(const BlobConfig& config, std::uint64_t seed) {
  config.validate();
  Rng center_rng(derive_seed(seed, 0x63656e74657273ULL));

  const double task_spread = 10.0 * config.separation / std::sqrt(2.0 * static_cast<double>(config.dim));
  const double class_spread = 1.4 * config.separation / std::sqrt(2.0 * static_cast<double>(config.dim));

  std::vector<std::vector<double>> task_centers;
  std::vector<std::vector<double>> class_centers;  // flattened, task-major
  for (std::size_t t = 0; t < config.tasks; ++t) {
    task_centers.push_back(detail::place_point(center_rng, config.dim, task_spread,
                                               task_centers, 2.5 * config.separation,
                                               config.max_tries, "task"));
    for (std::size_t c = 0; c < config.classes_per_task; ++c) {
      for (std::size_t attempt = 0;; ++attempt) {
        if (attempt >= config.max_tries) {
          throw PlacementError("synth_blobs: could not place a class center at the "
                               "requested separation after " +
                               std::to_string(config.max_tries) + " tries");
        }
        std::vector<double> offset =
            detail::random_point(center_rng, config.dim, class_spread);
        std::vector<double> candidate(config.dim);
        for (std::size_t k = 0; k < config.dim; ++k)
          candidate[k] = task_centers[t][k] + offset[k];
        bool ok = true;
        for (const auto& prev : class_centers) {
          if (detail::distance(candidate, prev) < config.separation) {
            ok = false;
            break;
          }
        }
        if (ok) {
          class_centers.push_back(std::move(candidate));
          break;
        }
      }
    }
  }

  const auto n_test = static_cast<std::size_t>(
      std::round(config.test_fraction * static_cast<double>(config.samples_per_class)));
  const std::size_t n_train = config.samples_per_class - n_test;
  require(n_train >= 1 && n_test >= 1,
          "synth_blobs: samples_per_class too small for the requested split");

  std::vector<TaskDataset> tasks;
  for (std::size_t t = 0; t < config.tasks; ++t) {
    TaskDataset task;
    task.task_id = static_cast<int>(t) + 1;
    task.x_train = Tensor(n_train * config.classes_per_task, config.dim);
    task.x_test = Tensor(n_test * config.classes_per_task, config.dim);
    for (std::size_t c = 0; c < config.classes_per_task; ++c) {
      const int label = static_cast<int>(t * config.classes_per_task + c);
      task.class_labels.push_back(label);
      const auto& center = class_centers[t * config.classes_per_task + c];
      Rng rng(derive_seed(seed, 0x706f696e7473ULL, static_cast<std::uint64_t>(label)));
      for (std::size_t s = 0; s < config.samples_per_class; ++s) {
        const bool is_test = s >= n_train;
        const std::size_t row = is_test ? (c * n_test + (s - n_train)) : (c * n_train + s);
        Tensor& dst = is_test ? task.x_test : task.x_train;
        for (std::size_t k = 0; k < config.dim; ++k) {
          dst(row, k) = center[k] + rng.normal(0.0, config.cluster_std);
        }
      }
      task.y_train.insert(task.y_train.end(), n_train, label);
      task.y_test.insert(task.y_test.end(), n_test, label);
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

struct CsvOptions {
  bool has_header = true;
  std::string label_column = "label";  // name when has_header, else numeric index
  double test_fraction = 0.2;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

inline double parse_cell(const std::string& cell, const std::string& path,
                         std::size_t row, std::size_t col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": row " + std::to_string(row) + ", column " +
                             std::to_string(col) + ": '" + cell + "' is not numeric");
  }
}

}  // namespace detail

// Reads a rectangular numeric CSV and groups rows into tasks according to an
// explicit partition of the label values.  Each task gets a seeded shuffled
// train/test split.  Row numbers in errors are 1-based file lines.
inline std::vector<TaskDataset> ingest_csv(const std::string& path,
                                           const std::vector<std::vector<int>>& partition,
                                           const CsvOptions& options, std::uint64_t seed) {
  require(!partition.empty(), "ingest_csv: task partition is empty");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);

  std::string line;
  std::size_t line_no = 0;
  std::size_t label_index = 0;
  std::size_t columns = 0;
  bool have_layout = false;

  if (options.has_header) {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ++line_no;
    const auto header = detail::split_csv_line(line);
    columns = header.size();
    auto it = std::find(header.begin(), header.end(), options.label_column);
    if (it == header.end()) {
      throw std::runtime_error(path + ": no column named '" + options.label_column + "'");
    }
    label_index = static_cast<std::size_t>(it - header.begin());
    have_layout = true;
  }

  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (!have_layout) {
      columns = cells.size();
      label_index = static_cast<std::size_t>(std::stoul(options.label_column));
      require(label_index < columns, "ingest_csv: label column index out of range");
      have_layout = true;
    }
    if (cells.size() != columns) {
      throw std::runtime_error(path + ": row " + std::to_string(line_no) + ": expected " +
                               std::to_string(columns) + " cells, found " +
                               std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = detail::parse_cell(cells[c], path, line_no, c);
      if (c == label_index) {
        if (v != std::floor(v)) {
          throw std::runtime_error(path + ": row " + std::to_string(line_no) +
                                   ": label " + cells[c] + " is not integral");
        }
        labels.push_back(static_cast<int>(v));
      } else {
        row.push_back(v);
      }
    }
    features.push_back(std::move(row));
  }
  if (features.empty()) throw std::runtime_error(path + ": no data rows");

  // map label -> task index, rejecting labels the partition does not cover
  std::vector<int> all_partition_labels;
  for (const auto& task_labels : partition)
    for (int l : task_labels) all_partition_labels.push_back(l);
  std::sort(all_partition_labels.begin(), all_partition_labels.end());
  for (std::size_t i = 1; i < all_partition_labels.size(); ++i) {
    require(all_partition_labels[i] != all_partition_labels[i - 1],
            "ingest_csv: label " + std::to_string(all_partition_labels[i]) +
                " listed in two tasks");
  }
  auto task_of = [&](int label) -> std::size_t {
    for (std::size_t t = 0; t < partition.size(); ++t)
      for (int l : partition[t])
        if (l == label) return t;
    throw std::runtime_error(path + ": label " + std::to_string(label) +
                             " is absent from the task partition");
  };

  std::vector<std::vector<std::size_t>> rows_per_task(partition.size());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    rows_per_task[task_of(labels[r])].push_back(r);
  }

  std::vector<TaskDataset> tasks;
  for (std::size_t t = 0; t < partition.size(); ++t) {
    auto& rows = rows_per_task[t];
    if (rows.empty()) {
      throw std::runtime_error(path + ": task " + std::to_string(t + 1) +
                               " has no rows; labels {" + [&] {
                                 std::string s;
                                 for (int l : partition[t])
                                   s += (s.empty() ? "" : ", ") + std::to_string(l);
                                 return s;
                               }() + "} never occur in the data");
    }
    Rng rng(derive_seed(seed, 0x73706c6974ULL, t));
    rng.shuffle(rows);
    const auto n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::round(options.test_fraction *
                                               static_cast<double>(rows.size()))));
    require(n_test < rows.size(), "ingest_csv: task " + std::to_string(t + 1) +
                                      " too small for a train/test split");
    const std::size_t n_train = rows.size() - n_test;

    TaskDataset task;
    task.task_id = static_cast<int>(t) + 1;
    task.class_labels = partition[t];
    std::sort(task.class_labels.begin(), task.class_labels.end());
    const std::size_t dim = features[0].size();
    task.x_train = Tensor(n_train, dim);
    task.x_test = Tensor(n_test, dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const bool is_test = i >= n_train;
      Tensor& dst = is_test ? task.x_test : task.x_train;
      const std::size_t row = is_test ? i - n_train : i;
      for (std::size_t k = 0; k < dim; ++k) dst(row, k) = features[rows[i]][k];
      (is_test ? task.y_test : task.y_train).push_back(labels[rows[i]]);
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

// a[i][j]: overall accuracy on task j's test set after training tasks 0..i.
struct AccuracyMatrix {
  std::vector<std::vector<double>> a;

  std::size_t task_count() const { return a.size(); }
};

inline double average_accuracy(const AccuracyMatrix& m) {
  require(!m.a.empty(), "average_accuracy: empty matrix");
  const auto& last = m.a.back();
  require(last.size() == m.a.size(), "average_accuracy: final row is incomplete");
  double s = 0.0;
  for (double v : last) s += v;
  return s / static_cast<double>(last.size());
}

// (1/(T-1)) Σ_{j<T} (max_k a[k][j] − a[T][j]): how much accuracy on old tasks has
// decayed from its best.  Identically zero for a frozen bank.
inline double average_forgetting(const AccuracyMatrix& m) {
  const std::size_t T = m.a.size();
  require(T >= 2, "average_forgetting: needs at least two tasks");
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < T; ++j) {
    double best = 0.0;
    for (std::size_t k = j; k < T; ++k) best = std::max(best, m.a[k][j]);
    s += best - m.a[T - 1][j];
  }
  return s / static_cast<double>(T - 1);
}

struct TaskMetrics {
  int task_id = 0;
  double tp_accuracy = 0.0;
  double wp_accuracy = 0.0;
  double overall_accuracy = 0.0;
};

inline void write_metrics_csv(std::ostream& out, const std::vector<TaskMetrics>& metrics) {
  out << "task, tp_acc, wp_acc, overall_acc\n";
  char buf[128];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof(buf), "%d, %.6f, %.6f, %.6f\n", m.task_id, m.tp_accuracy,
                  m.wp_accuracy, m.overall_accuracy);
    out << buf;
  }
}

}  // namespace gkde
