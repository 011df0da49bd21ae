#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gkde/network.hpp"
#include "gkde/tensor.hpp"

namespace gkde {

enum class WeightDecayMode {
  decoupled,      // p -= lr * wd * p after the Adam update
  l2_in_gradient  // g += wd * p before the moment updates
};

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-4;
  WeightDecayMode decay_mode = WeightDecayMode::decoupled;

  void validate() const {
    require(beta1 >= 0.0 && beta1 < 1.0, "adam: beta1 must be in [0,1)");
    require(beta2 >= 0.0 && beta2 < 1.0, "adam: beta2 must be in [0,1)");
    require(epsilon > 0.0, "adam: epsilon must be > 0");
  }
};

class AdamState {
 public:
  AdamState(NetworkParams& net, AdamConfig config) : config_(config) {
    config_.validate();
    for_each_parameter(net, [&](Tensor& t) {
      m_.emplace_back(t.rows(), t.cols());
      v_.emplace_back(t.rows(), t.cols());
    });
  }

  long step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }

  // Standard Adam with bias correction; weight decay per the configured mode.
  void step(NetworkParams& net, const std::vector<Tensor>& grads) {
    std::vector<Tensor*> params = parameter_list(net);
    require(grads.size() == params.size(),
            "adam_step: expected " + std::to_string(params.size()) +
                " gradient tensors, got " + std::to_string(grads.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
      require(params[i]->same_shape(grads[i]),
              "adam_step: gradient " + std::to_string(i) + " shape mismatch");
    }

    ++step_count_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));

    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor& p = *params[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        double g = grads[i][k];
        if (config_.decay_mode == WeightDecayMode::l2_in_gradient) {
          g += config_.weight_decay * p[k];
        }
        m_[i][k] = b1 * m_[i][k] + (1.0 - b1) * g;
        v_[i][k] = b2 * v_[i][k] + (1.0 - b2) * g * g;
        const double m_hat = m_[i][k] / bc1;
        const double v_hat = v_[i][k] / bc2;
        p[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        if (config_.decay_mode == WeightDecayMode::decoupled) {
          p[k] -= config_.learning_rate * config_.weight_decay * p[k];
        }
      }
    }
  }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long step_count_ = 0;
};

inline void adam_step(AdamState& state, NetworkParams& net,
                      const std::vector<Tensor>& grads) {
  state.step(net, grads);
}

}  // namespace gkde
