#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gkde/class_pdf.hpp"
#include "gkde/rng.hpp"
#include "gkde/tensor.hpp"

namespace gkde {

// Relative class frequencies π̂_j = n_j / n over one task's labels.
inline PriorTable estimate_priors(const std::vector<int>& labels) {
  require(!labels.empty(), "estimate_priors: empty label list");
  PriorTable table;
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    table.labels.push_back(sorted[i]);
    table.counts.push_back(j - i);
    i = j;
  }
  const double n = static_cast<double>(labels.size());
  for (std::size_t c : table.counts) table.priors.push_back(static_cast<double>(c) / n);
  return table;
}

// Anchors are source feature rows (sampled uniformly with replacement) plus
// independent Gaussian noise with standard deviation h per coordinate.  The
// degenerate without-replacement mode exists for the h=0, n<=N diagnostic where
// anchors must be exactly a permutation of the source rows.
inline Tensor generate_anchors(const Tensor& features, std::size_t n, double h, Rng& rng,
                               bool without_replacement = false) {
  require(features.rows() >= 1, "generate_anchors: empty feature matrix");
  require(n >= 1, "generate_anchors: anchor count must be >= 1");
  require(h >= 0.0, "generate_anchors: bandwidth must be >= 0");

  std::vector<std::size_t> source(n);
  if (without_replacement) {
    require(n <= features.rows(),
            "generate_anchors: without-replacement mode needs n <= feature rows");
    std::vector<std::size_t> perm(features.rows());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    std::copy(perm.begin(), perm.begin() + n, source.begin());
  } else {
    for (auto& s : source) s = rng.index(features.rows());
  }

  Tensor anchors(n, features.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < features.cols(); ++c) {
      double noise = h > 0.0 ? rng.normal(0.0, h) : 0.0;
      anchors(i, c) = features(source[i], c) + noise;
    }
  }
  return anchors;
}

inline Tensor generate_anchors(const Tensor& features, std::size_t n, double h,
                               std::uint64_t seed, bool without_replacement = false) {
  Rng rng(seed);
  return generate_anchors(features, n, h, rng, without_replacement);
}

inline ClassPdf build_class_pdf(const Tensor& embedded_features, int label, double prior,
                                std::size_t n, double h, std::uint64_t seed,
                                bool without_replacement = false) {
  ClassPdf pdf;
  pdf.label = label;
  pdf.prior = prior;
  pdf.bandwidth = h;
  pdf.anchors = generate_anchors(embedded_features, n, h, seed, without_replacement);

  const std::size_t rows = embedded_features.rows();
  const std::size_t d = embedded_features.cols();
  pdf.mean = Tensor(1, d);
  pdf.variance = Tensor(1, d);
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += embedded_features(r, c);
    const double mu = s / static_cast<double>(rows);
    pdf.mean(0, c) = mu;
    if (rows > 1) {
      double ss = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double dev = embedded_features(r, c) - mu;
        ss += dev * dev;
      }
      pdf.variance(0, c) = ss / static_cast<double>(rows - 1);
    }
  }
  return pdf;
}

}  // namespace gkde
