#pragma once

#include <stdexcept>
#include <vector>

#include "gkde/tensor.hpp"

namespace gkde {

// Central differences (f(p + s·e) − f(p − s·e)) / (2s), one coordinate at a time.
// f re-reads the tensors behind `params` on every call; it must not cache them.
// This is the independent reference every backward implementation is checked against.
template <class F>
std::vector<Tensor> finite_difference_gradient(F&& f, const std::vector<Tensor*>& params,
                                               double step) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("finite_difference_gradient: step must be > 0");
  }
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (Tensor* p : params) {
    Tensor g(p->rows(), p->cols());
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double saved = (*p)[i];
      (*p)[i] = saved + step;
      const double fp = f();
      (*p)[i] = saved - step;
      const double fm = f();
      (*p)[i] = saved;
      g[i] = (fp - fm) / (2.0 * step);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace gkde
