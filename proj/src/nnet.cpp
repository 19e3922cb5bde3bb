#include "hiemp/nnet.hpp"

#include <cmath>
#include <string>

#include "hiemp/binary_io.hpp"
#include "hiemp/error.hpp"

namespace hiemp {

std::size_t Net::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) total += weights[l].size() + biases[l].size();
  return total;
}

bool Net::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

bool Net::operator==(const Net& other) const {
  if (layer_dims != other.layer_dims) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
  }
  return true;
}

NetGrads NetGrads::zeros_like(const Net& net) {
  NetGrads g;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    g.weights.push_back(Mat::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.biases.push_back(Vec::Zero(net.biases[l].size()));
  }
  return g;
}

NetGrads& NetGrads::operator+=(const NetGrads& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

NetGrads& NetGrads::operator*=(double s) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] *= s;
    biases[l] *= s;
  }
  return *this;
}

Net make_net(const std::vector<int>& layer_dims, Rng& rng, double output_scale) {
  if (layer_dims.size() < 2) throw InvalidInput("a net needs at least an input and an output layer");
  for (int d : layer_dims) {
    if (d <= 0) throw InvalidInput("layer dims must be positive");
  }
  Net net;
  net.layer_dims = layer_dims;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Mat w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-bound, bound);
    if (l + 2 == layer_dims.size()) w *= output_scale;
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vec::Zero(fan_out));
  }
  return net;
}

namespace {

// Eigen's double tanh is scalar; this form vectorizes through exp and
// saturates cleanly to +-1 when exp overflows or underflows.
Mat fast_tanh(const Mat& z) { return (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix(); }

}  // namespace

Mat forward_batch(const Net& net, const Mat& inputs, BatchTrace* trace) {
  if (inputs.rows() != net.input_dim()) {
    throw InvalidInput("net input has " + std::to_string(inputs.rows()) + " rows, expected " +
                       std::to_string(net.input_dim()));
  }
  if (trace) {
    trace->activations.clear();
    trace->activations.push_back(inputs);
  }
  Mat a = inputs;
  const std::size_t last = net.num_layers() - 1;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Mat z = net.weights[l] * a;
    z.colwise() += net.biases[l];
    if (l < last) {
      a = fast_tanh(z);
    } else {
      a = std::move(z);
    }
    if (trace) trace->activations.push_back(a);
  }
  return a;
}

BatchBackprop backward_batch(const Net& net, const BatchTrace& trace, const Mat& upstream) {
  const auto& acts = trace.activations;
  if (acts.size() != net.num_layers() + 1) throw InvalidInput("trace does not belong to this net");
  if (upstream.rows() != net.output_dim() || upstream.cols() != acts.front().cols()) {
    throw InvalidInput("upstream gradient shape does not match the net output");
  }
  BatchBackprop out{NetGrads::zeros_like(net), Mat()};
  Mat delta = upstream;
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    out.params.weights[l].noalias() = delta * acts[l].transpose();
    out.params.biases[l] = delta.rowwise().sum();
    Mat up = net.weights[l].transpose() * delta;
    if (l > 0) {
      delta = (up.array() * (1.0 - acts[l].array().square())).matrix();
    } else {
      out.inputs = std::move(up);
    }
  }
  return out;
}

Vec forward(const Net& net, const Vec& input) {
  if (input.size() != net.input_dim()) {
    throw InvalidInput("net input has length " + std::to_string(input.size()) + ", expected " +
                       std::to_string(net.input_dim()));
  }
  return forward_batch(net, input).col(0);
}

Backprop backward(const Net& net, const Vec& input, const Vec& upstream) {
  if (input.size() != net.input_dim()) throw InvalidInput("backward: input length mismatch");
  if (upstream.size() != net.output_dim()) throw InvalidInput("backward: upstream length mismatch");
  BatchTrace trace;
  forward_batch(net, input, &trace);
  auto bp = backward_batch(net, trace, upstream);
  return {std::move(bp.params), bp.inputs.col(0)};
}

OptState make_opt_state(const Net& net) {
  return {NetGrads::zeros_like(net), NetGrads::zeros_like(net), 0};
}

void adam_update(Net& net, const NetGrads& grads, OptState& state, double lr, const AdamConfig& cfg) {
  if (grads.weights.size() != net.num_layers()) throw InvalidInput("gradient does not match net shape");
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    if (grads.weights[l].rows() != net.weights[l].rows() || grads.weights[l].cols() != net.weights[l].cols() ||
        grads.biases[l].size() != net.biases[l].size()) {
      throw InvalidInput("gradient does not match net shape at layer " + std::to_string(l));
    }
    if (!grads.weights[l].allFinite()) {
      throw RuntimeAbort("non-finite weight gradient in layer " + std::to_string(l));
    }
    if (!grads.biases[l].allFinite()) {
      throw RuntimeAbort("non-finite bias gradient in layer " + std::to_string(l));
    }
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto apply = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    apply(net.weights[l], grads.weights[l], state.first_moment.weights[l], state.second_moment.weights[l]);
    apply(net.biases[l], grads.biases[l], state.first_moment.biases[l], state.second_moment.biases[l]);
  }
}

std::pair<Net, OptState> opt_step(const Net& net, const NetGrads& grads, const OptState& state, double lr,
                                  const AdamConfig& cfg) {
  std::pair<Net, OptState> out{net, state};
  adam_update(out.first, grads, out.second, lr, cfg);
  return out;
}

void write_net(std::ostream& os, const Net& net) {
  io::put_u32(os, static_cast<std::uint32_t>(net.layer_dims.size()));
  for (int d : net.layer_dims) io::put_u32(os, static_cast<std::uint32_t>(d));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const Mat& w = net.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) io::put_f64(os, w(i, j));
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) io::put_f64(os, net.biases[l](i));
  }
}

Net read_net(std::istream& is) {
  const auto count = io::get_u32(is);
  if (count < 2 || count > 64) throw RuntimeAbort("corrupt net header");
  Net net;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto d = io::get_u32(is);
    if (d == 0 || d > (1u << 20)) throw RuntimeAbort("corrupt net layer dim");
    net.layer_dims.push_back(static_cast<int>(d));
  }
  for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
    Mat w(net.layer_dims[l + 1], net.layer_dims[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = io::get_f64(is);
    Vec b(net.layer_dims[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = io::get_f64(is);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

}  // namespace hiemp
