#pragma once

#include <cstddef>
#include <vector>

#include "gkde/tensor.hpp"

namespace gkde {

// One class's density model: anchor embeddings z_i, the shared bandwidth, and the
// class prior.  mean/variance are per-dimension statistics of the source features,
// kept as diagnostics only — density evaluation never reads them.
struct ClassPdf {
  int label = 0;
  double prior = 1.0;
  double bandwidth = 0.5;
  Tensor anchors;   // n x d
  Tensor mean;      // 1 x d
  Tensor variance;  // 1 x d

  std::size_t anchor_count() const { return anchors.rows(); }
  std::size_t dim() const { return anchors.cols(); }

  void validate() const {
    require(anchors.rows() >= 1, "ClassPdf: anchor set must be non-empty");
    require(bandwidth > 0.0, "ClassPdf: bandwidth must be > 0");
    require(prior > 0.0 && prior <= 1.0, "ClassPdf: prior must be in (0, 1]");
  }
};

// Per-class sample counts and relative frequencies for one task's label set.
struct PriorTable {
  std::vector<int> labels;          // ascending
  std::vector<std::size_t> counts;  // n_j
  std::vector<double> priors;       // n_j / n

  double prior_of(int label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return priors[i];
    throw std::invalid_argument("PriorTable: unknown label " + std::to_string(label));
  }
};

}  // namespace gkde
