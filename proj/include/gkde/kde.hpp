#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "gkde/class_pdf.hpp"
#include "gkde/tensor.hpp"

namespace gkde {

inline constexpr double kDefaultClipFloor = -700.0;

struct KernelSpec {
  std::size_t dim = 1;
  double bandwidth = 1.0;

  void validate() const {
    require(dim >= 1, "KernelSpec: dim must be >= 1");
    require(bandwidth > 0.0, "KernelSpec: bandwidth must be > 0");
  }
};

// Constants of the d-dimensional standard Gaussian kernel entering the bias and
// variance formulas: roughness R(K) = ∫K² = (2√π)^{-d} and per-axis second moment
// μ₂(K) = ∫ z_1² K(z) dz = 1.
struct KernelConstants {
  double roughness = 0.0;
  double second_moment = 1.0;
};

inline KernelConstants gaussian_kernel_constants(std::size_t dim) {
  KernelConstants c;
  c.roughness = std::pow(2.0 * std::sqrt(std::numbers::pi), -static_cast<double>(dim));
  c.second_moment = 1.0;
  return c;
}

// log K_h(delta) = -d ln h - (d/2) ln 2π - ‖delta‖² / (2h²)
inline double log_kernel_h(const KernelSpec& spec, std::span<const double> delta) {
  spec.validate();
  require(delta.size() == spec.dim, "kernel: delta length " + std::to_string(delta.size()) +
                                        " does not match dim " + std::to_string(spec.dim));
  double sq = 0.0;
  for (double v : delta) sq += v * v;
  const double d = static_cast<double>(spec.dim);
  return -d * std::log(spec.bandwidth) - 0.5 * d * std::log(2.0 * std::numbers::pi) -
         sq / (2.0 * spec.bandwidth * spec.bandwidth);
}

// K_h(delta) = h^{-d} (2π)^{-d/2} exp(-‖delta‖² / (2h²))
inline double kernel_h(const KernelSpec& spec, std::span<const double> delta) {
  return std::exp(log_kernel_h(spec, delta));
}

namespace detail {

// Per-anchor log kernels at z, clipped from below at `floor`.
inline void anchor_log_kernels(const Tensor& anchors, double h, std::span<const double> z,
                               double floor, std::vector<double>& out) {
  require(anchors.rows() >= 1, "pdf_density: empty anchor set");
  require(z.size() == anchors.cols(), "pdf_density: query dim " + std::to_string(z.size()) +
                                          " does not match anchor dim " +
                                          std::to_string(anchors.cols()));
  const double d = static_cast<double>(anchors.cols());
  const double norm = -d * std::log(h) - 0.5 * d * std::log(2.0 * std::numbers::pi);
  const double inv2h2 = 1.0 / (2.0 * h * h);
  out.resize(anchors.rows());
  for (std::size_t i = 0; i < anchors.rows(); ++i) {
    const double v = norm - squared_distance(z, anchors.row_span(i)) * inv2h2;
    out[i] = v > floor ? v : floor;
  }
}

}  // namespace detail

// Mean of kernel_h over a raw anchor matrix (anchors summed in storage order,
// pairwise tree summation).
inline double pdf_density(const Tensor& anchors, double h, std::span<const double> z) {
  require(h > 0.0, "pdf_density: bandwidth must be > 0");
  require(anchors.rows() >= 1, "pdf_density: empty anchor set");
  require(z.size() == anchors.cols(), "pdf_density: query/anchor dim mismatch");
  const double d = static_cast<double>(anchors.cols());
  const double norm = -d * std::log(h) - 0.5 * d * std::log(2.0 * std::numbers::pi);
  const double inv2h2 = 1.0 / (2.0 * h * h);
  std::vector<double> terms(anchors.rows());
  for (std::size_t i = 0; i < anchors.rows(); ++i) {
    terms[i] = std::exp(norm - squared_distance(z, anchors.row_span(i)) * inv2h2);
  }
  return pairwise_sum(terms.data(), terms.size()) / static_cast<double>(anchors.rows());
}

inline double pdf_density(const ClassPdf& pdf, std::span<const double> z) {
  pdf.validate();
  return pdf_density(pdf.anchors, pdf.bandwidth, z);
}

// Log-sum-exp over per-anchor log kernels (each clipped at `clip_floor` first)
// minus ln n.  Finite for every finite z: clipping bounds the exponents below.
inline double log_pdf_density(const Tensor& anchors, double h, std::span<const double> z,
                              double clip_floor = kDefaultClipFloor) {
  require(h > 0.0, "log_pdf_density: bandwidth must be > 0");
  require(std::isfinite(clip_floor), "log_pdf_density: clip floor must be finite");
  std::vector<double> logs;
  detail::anchor_log_kernels(anchors, h, z, clip_floor, logs);
  double m = logs[0];
  for (double v : logs) m = v > m ? v : m;
  for (double& v : logs) v = std::exp(v - m);
  const double s = pairwise_sum(logs.data(), logs.size());
  return m + std::log(s) - std::log(static_cast<double>(anchors.rows()));
}

inline double log_pdf_density(const ClassPdf& pdf, std::span<const double> z,
                              double clip_floor = kDefaultClipFloor) {
  pdf.validate();
  return log_pdf_density(pdf.anchors, pdf.bandwidth, z, clip_floor);
}

}  // namespace gkde
