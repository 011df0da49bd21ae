// gkde_cli — train, evaluate, and inspect GKDE continual-learning models.
//
//   gen-data   synthesize a blob benchmark (CSV + task partition JSON)
//   train      run the online task stream, save the model bank + metrics
//   eval       score a saved bank against a CSV dataset
//   predict    classify one feature row with a saved bank
//   analyze    KDE bias/variance theory-vs-measurement report
//
// A JSON config file (flat keys, same names as the flags) can seed any command;
// explicit flags override file values.  Exit codes: 0 ok, 1 runtime/data error,
// 2 config error.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gkde/gkde.hpp"

namespace {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every tunable the commands share.  Config-file keys match the field names.
struct RunConfig {
  // dataset: a CSV + partition pair, or synthetic blobs when data_csv is empty
  std::string data_csv;
  std::string partition_json;
  std::size_t tasks = 5;
  std::size_t classes_per_task = 2;
  std::size_t input_dim = 16;
  double separation = 8.0;
  double cluster_std = 1.5;
  std::size_t samples_per_class = 1000;
  double test_fraction = 0.2;

  // model + training
  std::size_t d = 32;  // embedding dimension
  double h = 0.5;      // bandwidth
  std::size_t n = 500;  // anchors per class
  double gamma = -700.0;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t epochs = 1;
  std::size_t warmup_epochs = 0;
  double learning_rate = 5e-4;
  double weight_decay = 1e-4;
  std::size_t batch_size = 128;
  std::uint64_t seed = 42;
  std::string bank_path = "bank";
  std::string metrics_csv;
  bool refresh_anchors_every_epoch = false;
  std::string repulsion_prior = "per_class";
  std::string activation = "tanh";

  void validate() const {
    if (d < 1 || d > 1024) throw ConfigError("config error: d must be in [1, 1024]");
    if (!(h > 0.0)) throw ConfigError("config error: h must be > 0");
    if (n < 1) throw ConfigError("config error: n must be >= 1");
    if (batch_size < 1) throw ConfigError("config error: batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("config error: epochs must be >= 1");
    if (!(gamma < 0.0)) throw ConfigError("config error: gamma must be < 0");
    if (tasks < 1) throw ConfigError("config error: tasks must be >= 1");
    if (classes_per_task < 1)
      throw ConfigError("config error: classes_per_task must be >= 1");
    if (input_dim < 1) throw ConfigError("config error: input_dim must be >= 1");
    if (!(separation > 0.0)) throw ConfigError("config error: separation must be > 0");
    if (!(cluster_std > 0.0)) throw ConfigError("config error: cluster_std must be > 0");
    if (samples_per_class < 2)
      throw ConfigError("config error: samples_per_class must be >= 2");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
      throw ConfigError("config error: test_fraction must be in (0, 1)");
    if (repulsion_prior != "per_class" && repulsion_prior != "anchor_class")
      throw ConfigError(
          "config error: repulsion_prior must be 'per_class' or 'anchor_class'");
    if (activation != "tanh" && activation != "relu")
      throw ConfigError("config error: activation must be 'tanh' or 'relu'");
  }

  gkde::TrainConfig train_config() const {
    gkde::TrainConfig tc;
    tc.embedding_dim = d;
    tc.hidden = hidden;
    tc.bandwidth = h;
    tc.anchors_per_class = n;
    tc.clip_floor = gamma;
    tc.epochs = epochs;
    tc.warmup_epochs = warmup_epochs;
    tc.batch_size = batch_size;
    tc.adam.learning_rate = learning_rate;
    tc.adam.weight_decay = weight_decay;
    tc.repulsion_prior = repulsion_prior == "per_class"
                             ? gkde::RepulsionPrior::per_class
                             : gkde::RepulsionPrior::anchor_class;
    tc.activation = activation == "tanh" ? gkde::Activation::tanh : gkde::Activation::relu;
    tc.refresh_anchors_every_epoch = refresh_anchors_every_epoch;
    tc.seed = seed;
    return tc;
  }
};

template <class T>
void read_key(const json& j, const char* key, T& into) {
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config error: bad value for key '") + key + "': " +
                      e.what());
  }
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config error: " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config error: " + path + " must hold a JSON object");

  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key == "data_csv") read_key(j, "data_csv", cfg.data_csv);
    else if (key == "partition_json") read_key(j, "partition_json", cfg.partition_json);
    else if (key == "tasks") read_key(j, "tasks", cfg.tasks);
    else if (key == "classes_per_task") read_key(j, "classes_per_task", cfg.classes_per_task);
    else if (key == "input_dim") read_key(j, "input_dim", cfg.input_dim);
    else if (key == "separation") read_key(j, "separation", cfg.separation);
    else if (key == "cluster_std") read_key(j, "cluster_std", cfg.cluster_std);
    else if (key == "samples_per_class") read_key(j, "samples_per_class", cfg.samples_per_class);
    else if (key == "test_fraction") read_key(j, "test_fraction", cfg.test_fraction);
    else if (key == "d") read_key(j, "d", cfg.d);
    else if (key == "h") read_key(j, "h", cfg.h);
    else if (key == "n") read_key(j, "n", cfg.n);
    else if (key == "gamma") read_key(j, "gamma", cfg.gamma);
    else if (key == "hidden") read_key(j, "hidden", cfg.hidden);
    else if (key == "epochs") read_key(j, "epochs", cfg.epochs);
    else if (key == "warmup_epochs") read_key(j, "warmup_epochs", cfg.warmup_epochs);
    else if (key == "learning_rate") read_key(j, "learning_rate", cfg.learning_rate);
    else if (key == "weight_decay") read_key(j, "weight_decay", cfg.weight_decay);
    else if (key == "batch_size") read_key(j, "batch_size", cfg.batch_size);
    else if (key == "seed") read_key(j, "seed", cfg.seed);
    else if (key == "bank_path") read_key(j, "bank_path", cfg.bank_path);
    else if (key == "metrics_csv") read_key(j, "metrics_csv", cfg.metrics_csv);
    else if (key == "refresh_anchors_every_epoch")
      read_key(j, "refresh_anchors_every_epoch", cfg.refresh_anchors_every_epoch);
    else if (key == "repulsion_prior") read_key(j, "repulsion_prior", cfg.repulsion_prior);
    else if (key == "activation") read_key(j, "activation", cfg.activation);
    else throw ConfigError("config error: unknown key '" + key + "' in " + path);
  }
}

gkde::BlobConfig blob_config(const RunConfig& cfg) {
  gkde::BlobConfig bc;
  bc.tasks = cfg.tasks;
  bc.classes_per_task = cfg.classes_per_task;
  bc.dim = cfg.input_dim;
  bc.separation = cfg.separation;
  bc.cluster_std = cfg.cluster_std;
  bc.samples_per_class = cfg.samples_per_class;
  bc.test_fraction = cfg.test_fraction;
  return bc;
}

std::vector<std::vector<int>> load_partition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open partition file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("tasks") || !j["tasks"].is_array()) {
    throw std::runtime_error(path + R"(: expected {"tasks": [[labels...], ...]})");
  }
  std::vector<std::vector<int>> partition;
  for (const auto& group : j["tasks"]) {
    if (!group.is_array()) throw std::runtime_error(path + ": task entries must be arrays");
    partition.push_back(group.get<std::vector<int>>());
  }
  return partition;
}

// Assemble the task sequence from either source.  CSV ingestion and the
// synthetic generator both derive their splits from the run seed, so a train
// followed by an eval with the same flags sees the same test rows.
std::vector<gkde::TaskDataset> load_tasks(const RunConfig& cfg) {
  if (!cfg.data_csv.empty()) {
    if (cfg.partition_json.empty()) {
      throw ConfigError("config error: --data requires --partition");
    }
    gkde::CsvOptions options;
    options.test_fraction = cfg.test_fraction;
    return gkde::ingest_csv(cfg.data_csv, load_partition(cfg.partition_json), options,
                            cfg.seed);
  }
  return gkde::synth_blobs(blob_config(cfg), cfg.seed);
}

int cmd_gen_data(const RunConfig& cfg, const std::string& data_out,
                 const std::string& partition_out) {
  cfg.validate();
  const auto tasks = gkde::synth_blobs(blob_config(cfg), cfg.seed);

  std::ofstream out(data_out);
  if (!out) throw std::runtime_error("cannot open " + data_out + " for writing");
  const std::size_t dim = tasks.front().x_train.cols();
  for (std::size_t k = 0; k < dim; ++k) out << 'f' << k << ',';
  out << "label\n";
  char buf[64];
  auto write_rows = [&](const gkde::Tensor& x, const std::vector<int>& y) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t k = 0; k < dim; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", x(r, k));
        out << buf << ',';
      }
      out << y[r] << '\n';
    }
  };
  for (const auto& task : tasks) {
    write_rows(task.x_train, task.y_train);
    write_rows(task.x_test, task.y_test);
  }
  if (!out.good()) throw std::runtime_error("write failed for " + data_out);
  out.close();

  json partition;
  partition["tasks"] = json::array();
  for (const auto& task : tasks) partition["tasks"].push_back(task.class_labels);
  std::ofstream pout(partition_out);
  if (!pout) throw std::runtime_error("cannot open " + partition_out + " for writing");
  pout << partition.dump(2) << '\n';
  if (!pout.good()) throw std::runtime_error("write failed for " + partition_out);

  std::size_t rows = 0;
  for (const auto& task : tasks) rows += task.x_train.rows() + task.x_test.rows();
  std::cout << "wrote " << rows << " rows (" << tasks.size() << " tasks, "
            << tasks.size() * cfg.classes_per_task << " classes) to " << data_out
            << "\nwrote task partition to " << partition_out << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  cfg.validate();
  auto tasks = load_tasks(cfg);
  gkde::TaskStream stream(std::move(tasks), cfg.epochs + cfg.warmup_epochs,
                          gkde::derive_seed(cfg.seed, 0x73747265616dULL));
  const gkde::StreamOutcome outcome = gkde::train_stream(stream, cfg.train_config());

  char buf[64];
  for (std::size_t i = 0; i < outcome.matrix.a.size(); ++i) {
    std::cout << "after task " << i << ": accuracy";
    for (double v : outcome.matrix.a[i]) {
      std::snprintf(buf, sizeof buf, " %.6f", v);
      std::cout << buf;
    }
    std::cout << "\n";
  }
  std::snprintf(buf, sizeof buf, "%.6f", outcome.avg_accuracy);
  std::cout << "average_accuracy: " << buf << "\n";
  if (outcome.matrix.a.size() >= 2) {
    std::snprintf(buf, sizeof buf, "%.6f", outcome.avg_forgetting);
    std::cout << "average_forgetting: " << buf << "\n";
  }

  gkde::save_model_bank(outcome.bank, cfg.bank_path);
  std::cout << "bank saved to " << cfg.bank_path << " (" << outcome.bank.size()
            << " tasks)\n";

  if (!cfg.metrics_csv.empty()) {
    std::ofstream m(cfg.metrics_csv);
    if (!m) throw std::runtime_error("cannot open " + cfg.metrics_csv + " for writing");
    gkde::write_metrics_csv(m, outcome.metrics);
    std::cout << "metrics written to " << cfg.metrics_csv << "\n";
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  if (cfg.data_csv.empty()) throw ConfigError("config error: eval requires --data");
  cfg.validate();
  const gkde::ModelBank bank = gkde::load_model_bank(cfg.bank_path);
  const auto tasks = load_tasks(cfg);

  std::vector<gkde::TaskMetrics> metrics;
  double overall_sum = 0.0;
  for (const auto& task : tasks) {
    const gkde::TaskEntry* own = nullptr;
    for (const auto& entry : bank.entries()) {
      if (entry.task_id == task.task_id) own = &entry;
    }
    if (own == nullptr) {
      throw std::runtime_error("eval: bank has no entry for task " +
                               std::to_string(task.task_id));
    }

    std::size_t tp = 0, wp = 0, both = 0;
    for (std::size_t r = 0; r < task.x_test.rows(); ++r) {
      const auto row = task.x_test.row_span(r);
      const auto selection = gkde::predict_task(bank, row);
      const gkde::Tensor z = gkde::embed_row(own->network, row);
      const auto within = gkde::predict_within_task(*own, z.row_span(0));
      const bool task_ok = selection.task_id == task.task_id;
      const bool class_ok = within.class_label == task.y_test[r];
      tp += task_ok;
      wp += class_ok;
      both += task_ok && class_ok;
    }
    const auto count = static_cast<double>(task.x_test.rows());
    metrics.push_back({task.task_id, tp / count, wp / count, both / count});
    overall_sum += both / count;
  }

  std::ostringstream table;
  gkde::write_metrics_csv(table, metrics);
  std::cout << table.str();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", overall_sum / static_cast<double>(tasks.size()));
  std::cout << "average_accuracy: " << buf << "\n";

  if (!cfg.metrics_csv.empty()) {
    std::ofstream m(cfg.metrics_csv);
    if (!m) throw std::runtime_error("cannot open " + cfg.metrics_csv + " for writing");
    gkde::write_metrics_csv(m, metrics);
  }
  return 0;
}

int cmd_predict(const RunConfig& cfg, const std::string& input) {
  if (input.empty()) throw ConfigError("config error: predict requires --input");
  std::vector<double> row;
  std::stringstream ss(input);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      row.push_back(std::stod(cell, &used));
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("config error: --input cell '" + cell + "' is not numeric");
    }
  }
  if (row.empty()) throw ConfigError("config error: --input is empty");

  const gkde::ModelBank bank = gkde::load_model_bank(cfg.bank_path);
  const gkde::Prediction p = gkde::predict(bank, row);

  char buf[64];
  std::cout << "task: " << p.task_id << "\n";
  std::cout << "class: " << p.class_label << "\n";
  std::snprintf(buf, sizeof buf, "%.6f", p.tp_probability);
  std::cout << "tp_probability: " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.6f", p.wp_posterior);
  std::cout << "wp_posterior: " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.6f", p.combined_log_prob);
  std::cout << "combined_log_prob: " << buf << "\n";
  return 0;
}

int cmd_analyze(const std::string& density_name, const std::vector<double>& zs,
                const std::vector<double>& hs, const std::vector<std::size_t>& ns,
                std::size_t reps, std::uint64_t seed, const std::string& out_path) {
  gkde::TestDensity density;
  if (density_name == "normal1d") density = gkde::standard_normal_density(1);
  else if (density_name == "normal2d") density = gkde::standard_normal_density(2);
  else if (density_name == "mixture1d") density = gkde::gaussian_mixture_1d();
  else
    throw ConfigError("config error: --density must be normal1d, normal2d, or mixture1d");
  if (reps < 100) throw ConfigError("config error: --reps must be >= 100");
  for (double h : hs)
    if (!(h > 0.0)) throw ConfigError("config error: --h values must be > 0");
  for (std::size_t n : ns)
    if (n < 1) throw ConfigError("config error: --n values must be >= 1");

  std::vector<gkde::BiasVarianceReport> reports;
  for (double zv : zs) {
    std::vector<double> z(density.dim, 0.0);
    z[0] = zv;  // probe along the first axis
    for (double h : hs) {
      for (std::size_t n : ns) {
        reports.push_back(gkde::monte_carlo_bias_variance(density, z, h, n, reps, seed));
      }
    }
  }
  gkde::write_bias_variance_csv(out_path, reports);
  std::cout << "wrote " << reports.size() << " rows to " << out_path << "\n";
  return 0;
}

// The config file must be applied before CLI11 binds flag defaults, so that
// explicitly passed flags override file values while untouched flags keep them.
std::optional<std::string> find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  try {
    if (const auto path = find_config_path(argc, argv)) apply_config_file(*path, cfg);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  CLI::App app{"GKDE continual learning: density-based task/class prediction"};
  app.require_subcommand(1);
  // long-form help only: --h is taken by the bandwidth option
  app.set_help_flag("--help", "print help and exit");
  std::string config_path;  // consumed above; registered so parsing accepts it
  app.add_option("--config", config_path, "JSON config file (flags override it)");

  auto add_dataset_flags = [&](CLI::App* c) {
    c->add_option("--data", cfg.data_csv, "dataset CSV (omit to use synthetic blobs)");
    c->add_option("--partition", cfg.partition_json, "task partition JSON");
    c->add_option("--tasks", cfg.tasks, "synthetic: number of tasks");
    c->add_option("--classes-per-task", cfg.classes_per_task, "synthetic: classes per task");
    c->add_option("--dim", cfg.input_dim, "synthetic: input feature dimension");
    c->add_option("--sep", cfg.separation, "synthetic: minimum class-center separation");
    c->add_option("--cluster-std", cfg.cluster_std, "synthetic: within-class std");
    c->add_option("--samples-per-class", cfg.samples_per_class, "synthetic: rows per class");
    c->add_option("--test-fraction", cfg.test_fraction, "held-out fraction per class");
  };
  auto add_model_flags = [&](CLI::App* c) {
    c->add_option("--d", cfg.d, "embedding dimension");
    c->add_option("--h", cfg.h, "kernel bandwidth");
    c->add_option("--n", cfg.n, "anchors per class");
    c->add_option("--gamma", cfg.gamma, "log-density clip floor");
    c->add_option("--hidden", cfg.hidden, "hidden layer widths")->delimiter(',');
    c->add_option("--activation", cfg.activation, "hidden activation: tanh | relu");
    c->add_option("--epochs", cfg.epochs, "training passes per task");
    c->add_option("--warmup-epochs", cfg.warmup_epochs, "passes against provisional anchors");
    c->add_option("--lr", cfg.learning_rate, "Adam learning rate");
    c->add_option("--weight-decay", cfg.weight_decay, "decoupled weight decay");
    c->add_option("--batch-size", cfg.batch_size, "minibatch size");
    c->add_flag("--refresh-anchors", cfg.refresh_anchors_every_epoch,
                "regenerate anchors every epoch");
    c->add_option("--repulsion-prior", cfg.repulsion_prior,
                  "loss weighting for other classes: per_class | anchor_class");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "synthesize a blob benchmark");
  gen->set_help_flag("--help", "print help and exit");
  std::string data_out = "data.csv";
  std::string partition_out = "partition.json";
  add_dataset_flags(gen);
  gen->add_option("--seed", cfg.seed, "RNG seed");
  gen->add_option("--out-data", data_out, "output CSV path");
  gen->add_option("--out-partition", partition_out, "output partition JSON path");

  CLI::App* train = app.add_subcommand("train", "run the online task stream");
  train->set_help_flag("--help", "print help and exit");
  add_dataset_flags(train);
  add_model_flags(train);
  train->add_option("--seed", cfg.seed, "RNG seed");
  train->add_option("--bank", cfg.bank_path, "output model-bank directory");
  train->add_option("--metrics", cfg.metrics_csv, "optional per-task metrics CSV");

  CLI::App* eval = app.add_subcommand("eval", "score a saved bank on a CSV dataset");
  eval->set_help_flag("--help", "print help and exit");
  add_dataset_flags(eval);
  eval->add_option("--seed", cfg.seed, "RNG seed (controls the train/test split)");
  eval->add_option("--bank", cfg.bank_path, "model-bank directory")->required();
  eval->add_option("--metrics", cfg.metrics_csv, "optional per-task metrics CSV");

  CLI::App* predict = app.add_subcommand("predict", "classify one feature row");
  predict->set_help_flag("--help", "print help and exit");
  std::string input;
  predict->add_option("--bank", cfg.bank_path, "model-bank directory")->required();
  predict->add_option("--input", input, "comma-separated feature row")->required();

  CLI::App* analyze = app.add_subcommand("analyze", "KDE bias/variance report");
  analyze->set_help_flag("--help", "print help and exit");
  std::string density_name = "normal1d";
  std::vector<double> zs = {0.0};
  std::vector<double> hs = {0.1, 0.2, 0.4, 5.0};
  std::vector<std::size_t> ns = {1000};
  std::size_t reps = 200;
  std::string report_out = "bias_variance.csv";
  analyze->add_option("--density", density_name, "normal1d | normal2d | mixture1d");
  analyze->add_option("--z", zs, "probe positions along the first axis")->delimiter(',');
  analyze->add_option("--h-grid", hs, "bandwidth grid")->delimiter(',');
  analyze->add_option("--n-grid", ns, "sample-size grid")->delimiter(',');
  analyze->add_option("--reps", reps, "Monte-Carlo replications (>= 100)");
  analyze->add_option("--seed", cfg.seed, "RNG seed");
  analyze->add_option("--out", report_out, "output report CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(cfg, data_out, partition_out);
    if (train->parsed()) return cmd_train(cfg);
    if (eval->parsed()) return cmd_eval(cfg);
    if (predict->parsed()) return cmd_predict(cfg, input);
    if (analyze->parsed())
      return cmd_analyze(density_name, zs, hs, ns, reps, cfg.seed, report_out);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
