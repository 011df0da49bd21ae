#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gkde/rng.hpp"
#include "gkde/tape.hpp"
#include "gkde/tensor.hpp"

namespace gkde {

enum class Activation { tanh, relu };

struct DenseLayer {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

// Feature extractor (hidden dense layers with an activation between them) followed
// by a purely linear projection head onto the embedding space.
struct NetworkParams {
  std::vector<DenseLayer> extractor;
  DenseLayer projection;
  Activation activation = Activation::tanh;

  std::size_t input_dim() const {
    return extractor.empty() ? projection.weight.rows() : extractor.front().weight.rows();
  }
  std::size_t embedding_dim() const { return projection.weight.cols(); }

  std::size_t parameter_count() const {
    std::size_t n = projection.weight.size() + projection.bias.size();
    for (const auto& l : extractor) n += l.weight.size() + l.bias.size();
    return n;
  }

  void validate() const {
    std::size_t dim = input_dim();
    for (std::size_t i = 0; i < extractor.size(); ++i) {
      const auto& l = extractor[i];
      require(l.weight.rows() == dim, "network: extractor layer " + std::to_string(i) +
                                          " expects input " + std::to_string(l.weight.rows()) +
                                          ", got " + std::to_string(dim));
      require(l.bias.rows() == 1 && l.bias.cols() == l.weight.cols(),
              "network: extractor layer " + std::to_string(i) + " bias shape mismatch");
      dim = l.weight.cols();
    }
    require(projection.weight.rows() == dim, "network: projection expects input " +
                                                 std::to_string(projection.weight.rows()) +
                                                 ", got " + std::to_string(dim));
    require(projection.bias.rows() == 1 &&
                projection.bias.cols() == projection.weight.cols(),
            "network: projection bias shape mismatch");
    require(embedding_dim() >= 1, "network: embedding dimension must be >= 1");
  }
};

namespace detail {
inline DenseLayer init_layer(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return DenseLayer{random_uniform(fan_in, fan_out, -bound, bound, rng),
                    Tensor(1, fan_out)};
}
}  // namespace detail

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
inline NetworkParams make_network(std::size_t input_dim,
                                  const std::vector<std::size_t>& hidden,
                                  std::size_t embedding_dim, Activation activation,
                                  Rng& rng) {
  require(input_dim >= 1 && embedding_dim >= 1, "make_network: dimensions must be >= 1");
  NetworkParams net;
  net.activation = activation;
  std::size_t dim = input_dim;
  for (std::size_t width : hidden) {
    require(width >= 1, "make_network: hidden width must be >= 1");
    net.extractor.push_back(detail::init_layer(dim, width, rng));
    dim = width;
  }
  net.projection = detail::init_layer(dim, embedding_dim, rng);
  net.validate();
  return net;
}

// Zero-depth extractor with an identity projection: embed(x) == x.
inline NetworkParams identity_network(std::size_t dim) {
  NetworkParams net;
  net.projection = DenseLayer{Tensor::identity(dim), Tensor(1, dim)};
  return net;
}

// Fixed parameter enumeration order shared by the optimizer, the finite-difference
// harness and the serializer: extractor weight/bias per layer, then projection.
template <class Fn>
void for_each_parameter(NetworkParams& net, Fn&& fn) {
  for (auto& l : net.extractor) {
    fn(l.weight);
    fn(l.bias);
  }
  fn(net.projection.weight);
  fn(net.projection.bias);
}

inline std::vector<Tensor*> parameter_list(NetworkParams& net) {
  std::vector<Tensor*> out;
  for_each_parameter(net, [&](Tensor& t) { out.push_back(&t); });
  return out;
}

inline Tensor embed(const NetworkParams& net, const Tensor& x) {
  require(x.cols() == net.input_dim(), "embed: input has " + std::to_string(x.cols()) +
                                           " columns, network expects " +
                                           std::to_string(net.input_dim()));
  Tensor h = x;
  for (const auto& l : net.extractor) {
    Tensor a = matmul(h, l.weight);
    for (std::size_t r = 0; r < a.rows(); ++r)
      for (std::size_t c = 0; c < a.cols(); ++c) {
        double v = a(r, c) + l.bias(0, c);
        a(r, c) = net.activation == Activation::tanh ? std::tanh(v) : (v > 0.0 ? v : 0.0);
      }
    h = std::move(a);
  }
  Tensor z = matmul(h, net.projection.weight);
  for (std::size_t r = 0; r < z.rows(); ++r)
    for (std::size_t c = 0; c < z.cols(); ++c) z(r, c) += net.projection.bias(0, c);
  return z;
}

inline Tensor embed_row(const NetworkParams& net, std::span<const double> x) {
  return embed(net, Tensor(1, x.size(), std::vector<double>(x.begin(), x.end())));
}

// Network parameters staged as tape leaves, in enumeration order.
struct TapedNetwork {
  std::vector<Var> params;
  Activation activation = Activation::tanh;
  std::size_t layer_count = 0;
};

inline TapedNetwork stage_network(Tape& tape, NetworkParams& net) {
  TapedNetwork staged;
  staged.activation = net.activation;
  staged.layer_count = net.extractor.size();
  for_each_parameter(net, [&](Tensor& t) { staged.params.push_back(tape.leaf(t)); });
  return staged;
}

inline Var embed(Tape& tape, const TapedNetwork& net, Var x) {
  Var h = x;
  for (std::size_t i = 0; i < net.layer_count; ++i) {
    Var a = add(matmul(h, net.params[2 * i]), net.params[2 * i + 1]);
    h = net.activation == Activation::tanh ? tanh(a) : relu(a);
  }
  return add(matmul(h, net.params[2 * net.layer_count]),
             net.params[2 * net.layer_count + 1]);
}

}  // namespace gkde
