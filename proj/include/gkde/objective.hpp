#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "gkde/class_pdf.hpp"
#include "gkde/finite_diff.hpp"
#include "gkde/network.hpp"
#include "gkde/tape.hpp"

namespace gkde {

// Which prior weights the repulsion term for class j != y: the repelled class's
// own prior (canonical), or the sample's class prior applied to every term.
enum class RepulsionPrior { per_class, anchor_class };

enum class LossReduction { mean, sum };

struct LossConfig {
  double bandwidth = 0.5;
  double clip_floor = -700.0;
  LossReduction reduction = LossReduction::mean;
  RepulsionPrior repulsion_prior = RepulsionPrior::per_class;

  void validate() const {
    require(bandwidth > 0.0, "loss: bandwidth must be > 0");
    require(std::isfinite(clip_floor), "loss: clip floor must be finite");
  }
};

// Density-based training loss: attract each sample to its own class PDF and repel
// it from every other class PDF of the task,
//
//   loss(z) = -π̂_y k̂_y(z) + Σ_{j≠y} w_j k̂_j(z),
//
// where k̂_j is the anchor-mean kernel density with per-anchor log clipping (clipped
// anchors are flat: they contribute exp(floor) and no gradient).  Reduced over the
// batch per config.
inline Var gkde_loss(Tape& tape, Var z, const std::vector<int>& labels,
                     const std::vector<ClassPdf>& pdfs, const LossConfig& config) {
  config.validate();
  const std::size_t batch = z.value().rows();
  const std::size_t dim = z.value().cols();
  require(batch >= 1, "gkde_loss: empty batch");
  require(labels.size() == batch, "gkde_loss: one label per batch row required");
  require(!pdfs.empty(), "gkde_loss: no class PDFs");

  auto pdf_index_of = [&](int label) -> std::size_t {
    for (std::size_t j = 0; j < pdfs.size(); ++j)
      if (pdfs[j].label == label) return j;
    throw std::invalid_argument("gkde_loss: batch label " + std::to_string(label) +
                                " has no class PDF");
  };
  std::vector<std::size_t> own(batch);
  for (std::size_t b = 0; b < batch; ++b) own[b] = pdf_index_of(labels[b]);

  const double h = config.bandwidth;
  const double norm = [&] {
    const double d = static_cast<double>(dim);
    return -d * std::log(h) - 0.5 * d * std::log(2.0 * std::numbers::pi);
  }();

  Var total = tape.constant(Tensor::scalar(0.0));
  for (std::size_t j = 0; j < pdfs.size(); ++j) {
    const ClassPdf& pdf = pdfs[j];
    pdf.validate();
    require(pdf.dim() == dim, "gkde_loss: PDF dim does not match embedding dim");
    require(pdf.bandwidth == h, "gkde_loss: PDF bandwidth differs from config bandwidth");

    Var logk = add_scalar(scale(pairwise_sqdist(z, pdf.anchors), -1.0 / (2.0 * h * h)),
                          norm);
    Var density = row_mean(exp(clip_min(logk, config.clip_floor)));  // batch x 1

    Tensor weights(batch, 1);
    for (std::size_t b = 0; b < batch; ++b) {
      if (own[b] == j) {
        weights(b, 0) = -pdf.prior;
      } else {
        weights(b, 0) = config.repulsion_prior == RepulsionPrior::per_class
                            ? pdf.prior
                            : pdfs[own[b]].prior;
      }
    }
    total = add(total, sum(mul(density, tape.constant(std::move(weights)))));
  }

  if (config.reduction == LossReduction::mean) {
    total = scale(total, 1.0 / static_cast<double>(batch));
  }
  return total;
}

// Forward-only evaluation: records on a scratch tape and discards it.
inline double gkde_loss_value(NetworkParams& net, const Tensor& x,
                              const std::vector<int>& labels,
                              const std::vector<ClassPdf>& pdfs,
                              const LossConfig& config) {
  Tape tape;
  TapedNetwork staged = stage_network(tape, net);
  Var z = embed(tape, staged, tape.constant(x));
  return gkde_loss(tape, z, labels, pdfs, config).value()(0, 0);
}

struct GradientCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t coordinates_checked = 0;
  bool pass = true;
};

// Backward gradients of the loss versus central finite differences over every
// network parameter.  Coordinates with |grad| <= grad_floor are skipped: below
// that scale the difference quotient is dominated by rounding noise.
inline GradientCheckReport loss_gradient_check(NetworkParams& net, const Tensor& x,
                                               const std::vector<int>& labels,
                                               const std::vector<ClassPdf>& pdfs,
                                               const LossConfig& config,
                                               double step = 1e-5, double tolerance = 1e-5,
                                               double grad_floor = 1e-8) {
  Tape tape;
  TapedNetwork staged = stage_network(tape, net);
  Var z = embed(tape, staged, tape.constant(x));
  Var loss = gkde_loss(tape, z, labels, pdfs, config);
  GradientMap grads = backward(loss);

  std::vector<Tensor> analytic;
  for (Var p : staged.params) analytic.push_back(grads.grad(p));

  auto f = [&]() { return gkde_loss_value(net, x, labels, pdfs, config); };
  std::vector<Tensor> numeric =
      finite_difference_gradient(f, parameter_list(net), step);

  GradientCheckReport report;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    for (std::size_t k = 0; k < analytic[i].size(); ++k) {
      const double a = analytic[i][k];
      const double n = numeric[i][k];
      const double mag = std::max(std::abs(a), std::abs(n));
      if (mag <= grad_floor) continue;
      const double abs_err = std::abs(a - n);
      const double rel_err = abs_err / mag;
      report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
      report.max_relative_error = std::max(report.max_relative_error, rel_err);
      ++report.coordinates_checked;
    }
  }
  report.pass = report.max_relative_error <= tolerance;
  return report;
}

}  // namespace gkde
