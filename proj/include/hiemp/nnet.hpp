#pragma once

// Dense tanh networks with analytic backpropagation and an Adam optimizer.
//
// Batched entry points take one sample per column. Gradients are returned
// summed over the batch; callers fold any 1/B into the upstream signal.

#include <Eigen/Dense>

#include <iosfwd>
#include <utility>
#include <vector>

#include "hiemp/rng.hpp"

namespace hiemp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Feed-forward network: tanh on hidden layers, identity on the output layer.
/// weights[l] has shape layer_dims[l+1] x layer_dims[l].
struct Net {
  std::vector<int> layer_dims;
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t num_layers() const { return weights.size(); }
  std::size_t parameter_count() const;
  bool all_finite() const;

  bool operator==(const Net& other) const;
};

/// Parameter-shaped gradient container.
struct NetGrads {
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  static NetGrads zeros_like(const Net& net);
  NetGrads& operator+=(const NetGrads& other);
  NetGrads& operator*=(double s);
};

/// Uniform fan-in initialization, zero biases. The final layer's weights are
/// multiplied by `output_scale` (policies use 0.01 so initial outputs sit near zero).
Net make_net(const std::vector<int>& layer_dims, Rng& rng, double output_scale = 1.0);

Vec forward(const Net& net, const Vec& input);

struct Backprop {
  NetGrads params;
  Vec input;
};

/// Gradients of upstream . forward(net, input) with respect to parameters and input.
Backprop backward(const Net& net, const Vec& input, const Vec& upstream);

/// Post-activation values of every layer, recorded by forward_batch for backward_batch.
struct BatchTrace {
  std::vector<Mat> activations;
};

Mat forward_batch(const Net& net, const Mat& inputs, BatchTrace* trace = nullptr);

struct BatchBackprop {
  NetGrads params;  // summed over columns
  Mat inputs;       // one input gradient per column
};

BatchBackprop backward_batch(const Net& net, const BatchTrace& trace, const Mat& upstream);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptState {
  NetGrads first_moment;
  NetGrads second_moment;
  long step = 0;
};

OptState make_opt_state(const Net& net);

/// In-place bias-corrected Adam step. Throws RuntimeAbort naming the layer
/// when a gradient entry is not finite; the net is left untouched in that case.
void adam_update(Net& net, const NetGrads& grads, OptState& state, double lr,
                 const AdamConfig& cfg = {});

/// Value-returning form of adam_update.
std::pair<Net, OptState> opt_step(const Net& net, const NetGrads& grads, const OptState& state,
                                  double lr, const AdamConfig& cfg = {});

/// Header of layer dims followed by a flat little-endian double array
/// (each layer: row-major weights, then biases).
void write_net(std::ostream& os, const Net& net);
Net read_net(std::istream& is);

}  // namespace hiemp
