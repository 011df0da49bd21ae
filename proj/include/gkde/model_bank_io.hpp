#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gkde/model_bank.hpp"

namespace gkde {

// Bank directory layout:
//   manifest.json          format version, shared dims/bandwidth, task file list
//   task_<id>.bin          one frozen TaskEntry
//
// Task files are a fixed sequence of sections, each a 4-byte tag, u64 rows, u64
// cols, then rows*cols little-endian doubles.  The fixed order and raw doubles make
// re-serialization byte-identical and round-trips bit-exact.

inline constexpr std::uint64_t kBankFormatVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "bank files are little-endian; a byte-swapping reader is not implemented");

struct BinaryWriter {
  std::ofstream out;

  explicit BinaryWriter(const std::filesystem::path& path)
      : out(path, std::ios::binary | std::ios::trunc) {
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  }

  void tag(const char t[5]) { out.write(t, 4); }
  void u64(std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
  void f64(const double* p, std::size_t count) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * 8));
  }
  void section(const char t[5], const Tensor& m) {
    tag(t);
    u64(m.rows());
    u64(m.cols());
    f64(m.data(), m.size());
  }
};

struct BinaryReader {
  std::ifstream in;
  std::string name;
  std::uint64_t offset = 0;

  explicit BinaryReader(const std::filesystem::path& path)
      : in(path, std::ios::binary), name(path.filename().string()) {
    if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error(name + ": parse error at offset " +
                             std::to_string(offset) + ": " + what);
  }

  void raw(char* dst, std::size_t count, const char* what) {
    in.read(dst, static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count) fail(std::string("truncated ") + what);
    offset += count;
  }

  void expect_tag(const char t[5]) {
    char got[5] = {0, 0, 0, 0, 0};
    const std::uint64_t at = offset;
    raw(got, 4, "section tag");
    if (std::memcmp(got, t, 4) != 0) {
      throw std::runtime_error(name + ": parse error at offset " + std::to_string(at) +
                               ": bad section tag '" + got + "' (expected '" + t + "')");
    }
  }

  std::uint64_t u64(const char* what) {
    std::uint64_t v = 0;
    raw(reinterpret_cast<char*>(&v), 8, what);
    return v;
  }

  Tensor section(const char t[5]) {
    expect_tag(t);
    const std::uint64_t rows = u64("row count");
    const std::uint64_t cols = u64("column count");
    if (rows == 0 || cols == 0 || rows * cols > (1ULL << 32)) {
      fail("implausible section shape " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    Tensor m(rows, cols);
    raw(reinterpret_cast<char*>(m.data()), m.size() * 8, "section payload");
    return m;
  }

  void expect_eof() {
    char c;
    in.read(&c, 1);
    if (!in.eof()) fail("trailing bytes after final section");
  }
};

inline std::string task_file_name(int task_id) {
  return "task_" + std::to_string(task_id) + ".bin";
}

inline void save_task_entry(const TaskEntry& entry, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.tag("GKTB");
  w.u64(static_cast<std::uint64_t>(entry.task_id));
  w.u64(entry.network.activation == Activation::tanh ? 0 : 1);
  w.u64(entry.network.extractor.size());
  w.u64(entry.pdfs.size());
  for (const auto& layer : entry.network.extractor) {
    w.section("WGT_", layer.weight);
    w.section("BIA_", layer.bias);
  }
  w.section("WGT_", entry.network.projection.weight);
  w.section("BIA_", entry.network.projection.bias);
  for (const auto& pdf : entry.pdfs) {
    Tensor meta(1, 3);
    meta[0] = static_cast<double>(pdf.label);
    meta[1] = pdf.prior;
    meta[2] = pdf.bandwidth;
    w.section("CLS_", meta);
    w.section("ANC_", pdf.anchors);
    w.section("MU__", pdf.mean);
    w.section("VAR_", pdf.variance);
  }
  if (!w.out) throw std::runtime_error("write failed for " + path.string());
}

inline TaskEntry load_task_entry(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_tag("GKTB");
  const auto task_id = static_cast<int>(r.u64("task id"));
  const std::uint64_t activation = r.u64("activation");
  if (activation > 1) r.fail("unknown activation code " + std::to_string(activation));
  const std::uint64_t layers = r.u64("layer count");
  const std::uint64_t classes = r.u64("class count");

  NetworkParams net;
  net.activation = activation == 0 ? Activation::tanh : Activation::relu;
  for (std::uint64_t i = 0; i < layers; ++i) {
    DenseLayer l;
    l.weight = r.section("WGT_");
    l.bias = r.section("BIA_");
    net.extractor.push_back(std::move(l));
  }
  net.projection.weight = r.section("WGT_");
  net.projection.bias = r.section("BIA_");

  std::vector<ClassPdf> pdfs;
  for (std::uint64_t c = 0; c < classes; ++c) {
    const Tensor meta = r.section("CLS_");
    if (meta.rows() != 1 || meta.cols() != 3) r.fail("malformed class metadata section");
    ClassPdf pdf;
    pdf.label = static_cast<int>(meta[0]);
    pdf.prior = meta[1];
    pdf.bandwidth = meta[2];
    pdf.anchors = r.section("ANC_");
    pdf.mean = r.section("MU__");
    pdf.variance = r.section("VAR_");
    pdfs.push_back(std::move(pdf));
  }
  r.expect_eof();
  return make_task_entry(task_id, std::move(net), std::move(pdfs));
}

}  // namespace detail

inline void save_model_bank(const ModelBank& bank, const std::filesystem::path& dir) {
  require(!bank.empty(), "save_model_bank: refusing to save an empty bank");
  std::filesystem::create_directories(dir);

  nlohmann::json manifest;
  manifest["format_version"] = kBankFormatVersion;
  manifest["input_dim"] = bank.input_dim();
  manifest["embedding_dim"] = bank.embedding_dim();
  manifest["bandwidth"] = bank.bandwidth();
  manifest["tasks"] = nlohmann::json::array();
  for (const auto& entry : bank.entries()) {
    manifest["tasks"].push_back({{"task_id", entry.task_id},
                                 {"file", detail::task_file_name(entry.task_id)}});
    detail::save_task_entry(entry, dir / detail::task_file_name(entry.task_id));
  }

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

inline ModelBank load_model_bank(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open " + manifest_path.string());

  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(manifest_path.string() + ": " + e.what());
  }

  const auto version = manifest.value("format_version", std::uint64_t{0});
  if (version != kBankFormatVersion) {
    throw std::runtime_error(manifest_path.string() + ": unsupported format version " +
                             std::to_string(version) + " (this build reads version " +
                             std::to_string(kBankFormatVersion) + ")");
  }

  ModelBank bank;
  for (const auto& t : manifest.at("tasks")) {
    TaskEntry entry = detail::load_task_entry(dir / t.at("file").get<std::string>());
    if (entry.task_id != t.at("task_id").get<int>()) {
      throw std::runtime_error(manifest_path.string() + ": task file " +
                               t.at("file").get<std::string>() +
                               " holds task " + std::to_string(entry.task_id) +
                               ", manifest says " + std::to_string(t.at("task_id").get<int>()));
    }
    bank.add_task(std::move(entry));  // re-validates disjointness and shared (d, h)
  }

  // cross-check the manifest's shared configuration against the loaded entries
  if (bank.embedding_dim() != manifest.at("embedding_dim").get<std::size_t>() ||
      bank.bandwidth() != manifest.at("bandwidth").get<double>()) {
    throw std::runtime_error(manifest_path.string() +
                             ": manifest configuration disagrees with task files");
  }
  return bank;
}

}  // namespace gkde
