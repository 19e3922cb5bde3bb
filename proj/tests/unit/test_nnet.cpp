#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hiemp/error.hpp"
#include "hiemp/nnet.hpp"

using namespace hiemp;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

double objective(const Net& net, const Vec& x, const Vec& u) { return u.dot(forward(net, x)); }

Net formula_net() {
  const std::vector<int> dims{3, 5, 4, 2};
  Net net;
  net.layer_dims = dims;
  for (int l = 0; l < 3; ++l) {
    Mat w(dims[l + 1], dims[l]);
    Vec b(dims[l + 1]);
    for (int i = 0; i < dims[l + 1]; ++i) {
      for (int j = 0; j < dims[l]; ++j) w(i, j) = 0.5 * std::sin(1.3 * i + 0.7 * j + l);
      b(i) = 0.1 * std::cos(i + l);
    }
    net.weights.push_back(w);
    net.biases.push_back(b);
  }
  return net;
}

}  // namespace

TEST_CASE("zero weights return the bias") {
  Rng rng(1);
  Net net = make_net({3, 4, 2}, rng);
  for (auto& w : net.weights) w.setZero();
  net.biases.back() << 0.25, -1.5;
  const Vec y = forward(net, Vec::Constant(3, 7.0));
  CHECK(y(0) == 0.25);
  CHECK(y(1) == -1.5);
}

TEST_CASE("single linear layer computes Wx + b and its gradients") {
  Rng rng(2);
  Net net = make_net({3, 2}, rng);
  const Vec x = Vec::Random(3);
  const Vec y = forward(net, x);
  CHECK((y - (net.weights[0] * x + net.biases[0])).norm() < 1e-15);

  const Vec u = Vec::Random(2);
  const Backprop bp = backward(net, x, u);
  CHECK((bp.input - net.weights[0].transpose() * u).norm() < 1e-15);
  CHECK((bp.params.weights[0] - u * x.transpose()).norm() < 1e-15);
  CHECK((bp.params.biases[0] - u).norm() < 1e-15);
}

TEST_CASE("forward matches an independently computed value") {
  // Frozen from a NumPy evaluation of the same closed-form weights.
  const Vec y = forward(formula_net(), Vec(Eigen::Vector3d(0.3, -0.2, 0.5)));
  CHECK(y(0) == doctest::Approx(0.30198381730739887).epsilon(1e-13));
  CHECK(y(1) == doctest::Approx(-0.020523527529686156).epsilon(1e-12));
}

TEST_CASE("seeded random net output is a frozen regression fixture") {
  Rng rng(20240601);
  const Net net = make_net({4, 8, 8, 3}, rng);
  const Vec y = forward(net, Vec(Eigen::Vector4d(0.1, -0.4, 0.9, 0.3)));
  const double golden[] = {0.033242435959520464, -0.088722109895297038, -0.019304207027911632};
  for (int i = 0; i < 3; ++i) CHECK(y(i) == doctest::Approx(golden[i]).epsilon(1e-12));
}

TEST_CASE("forward is bit-identical across calls and across batch layouts") {
  Rng rng(3);
  const Net net = make_net({5, 16, 16, 2}, rng);
  const Mat X = Mat::Random(5, 7);
  const Mat Y = forward_batch(net, X);
  for (int j = 0; j < 7; ++j) {
    const Vec y1 = forward(net, X.col(j));
    const Vec y2 = forward(net, X.col(j));
    CHECK(y1 == y2);
    CHECK((y1 - Y.col(j)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("analytic gradients match central finite differences on 100 random nets") {
  const double h = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(1000 + trial);
    const int in = 1 + static_cast<int>(rng.index(5));
    const int out = 1 + static_cast<int>(rng.index(3));
    std::vector<int> dims{in};
    const int hidden_layers = static_cast<int>(rng.index(3));
    for (int l = 0; l < hidden_layers; ++l) dims.push_back(2 + static_cast<int>(rng.index(6)));
    dims.push_back(out);
    Net net = make_net(dims, rng);
    for (auto& b : net.biases) {
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.5, 0.5);
    }
    Vec x(in);
    for (int i = 0; i < in; ++i) x(i) = rng.uniform(-1.5, 1.5);
    Vec u(out);
    for (int i = 0; i < out; ++i) u(i) = rng.uniform(-1.0, 1.0);
    const Backprop bp = backward(net, x, u);

    for (int i = 0; i < in; ++i) {
      Vec xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (objective(net, xp, u) - objective(net, xm, u)) / (2 * h);
      CHECK(rel_err(bp.input(i), fd) < 1e-4);
      ++checked;
    }
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
        for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
          Net p = net, m = net;
          p.weights[l](r, c) += h;
          m.weights[l](r, c) -= h;
          const double fd = (objective(p, x, u) - objective(m, x, u)) / (2 * h);
          CHECK(rel_err(bp.params.weights[l](r, c), fd) < 1e-4);
          ++checked;
        }
        Net p = net, m = net;
        p.biases[l](r) += h;
        m.biases[l](r) -= h;
        const double fd = (objective(p, x, u) - objective(m, x, u)) / (2 * h);
        CHECK(rel_err(bp.params.biases[l](r), fd) < 1e-4);
        ++checked;
      }
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("batched backward sums parameter gradients over columns") {
  Rng rng(4);
  const Net net = make_net({3, 6, 2}, rng);
  const Mat X = Mat::Random(3, 4);
  const Mat U = Mat::Random(2, 4);
  BatchTrace trace;
  forward_batch(net, X, &trace);
  const BatchBackprop bb = backward_batch(net, trace, U);
  NetGrads sum = NetGrads::zeros_like(net);
  for (int j = 0; j < 4; ++j) {
    const Backprop bp = backward(net, X.col(j), U.col(j));
    sum += bp.params;
    CHECK((bp.input - bb.inputs.col(j)).norm() < 1e-13);
  }
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    CHECK((sum.weights[l] - bb.params.weights[l]).norm() < 1e-13);
    CHECK((sum.biases[l] - bb.params.biases[l]).norm() < 1e-13);
  }
}

TEST_CASE("zero upstream gives zero gradients") {
  Rng rng(5);
  const Net net = make_net({3, 6, 2}, rng);
  const Backprop bp = backward(net, Vec::Random(3), Vec::Zero(2));
  CHECK(bp.input.isZero(0.0));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    CHECK(bp.params.weights[l].isZero(0.0));
    CHECK(bp.params.biases[l].isZero(0.0));
  }
}

TEST_CASE("dimension mismatches are rejected") {
  Rng rng(6);
  const Net net = make_net({3, 4, 2}, rng);
  CHECK_THROWS_AS(forward(net, Vec::Zero(2)), InvalidInput);
  CHECK_THROWS_AS(backward(net, Vec::Zero(3), Vec::Zero(3)), InvalidInput);
  CHECK_THROWS_AS(backward(net, Vec::Zero(4), Vec::Zero(2)), InvalidInput);
  CHECK_THROWS_AS(make_net({3}, rng), InvalidInput);
  CHECK_THROWS_AS(make_net({3, 0, 2}, rng), InvalidInput);
}

TEST_CASE("Adam: zero gradient leaves parameters unchanged and counts the step") {
  Rng rng(7);
  const Net net = make_net({2, 3, 1}, rng);
  const OptState st = make_opt_state(net);
  auto [next, st2] = opt_step(net, NetGrads::zeros_like(net), st, 1e-2);
  CHECK(next == net);
  CHECK(st2.step == st.step + 1);
}

TEST_CASE("Adam: constant gradient moves parameters against its sign") {
  Rng rng(8);
  Net net = make_net({1, 1}, rng);
  const double w0 = net.weights[0](0, 0);
  OptState st = make_opt_state(net);
  NetGrads g = NetGrads::zeros_like(net);
  g.weights[0](0, 0) = 3.0;
  g.biases[0](0) = -2.0;
  for (int i = 0; i < 50; ++i) adam_update(net, g, st, 1e-2);
  CHECK(net.weights[0](0, 0) < w0);
  CHECK(net.biases[0](0) > 0.0);
}

TEST_CASE("Adam minimizes the quadratic bowl 0.5 w^2") {
  Net net;
  net.layer_dims = {1, 1};
  net.weights = {Mat::Constant(1, 1, 1.0)};
  net.biases = {Vec::Constant(1, -0.7)};
  OptState st = make_opt_state(net);
  int steps = 0;
  for (; steps < 2000; ++steps) {
    NetGrads g = NetGrads::zeros_like(net);
    g.weights[0](0, 0) = net.weights[0](0, 0);
    g.biases[0](0) = net.biases[0](0);
    adam_update(net, g, st, 1e-2);
  }
  CHECK(std::abs(net.weights[0](0, 0)) < 1e-3);
  CHECK(std::abs(net.biases[0](0)) < 1e-3);
}

TEST_CASE("Adam rejects non-finite gradients, naming the layer, without modifying the net") {
  Rng rng(9);
  Net net = make_net({2, 3, 1}, rng);
  const Net before = net;
  OptState st = make_opt_state(net);
  NetGrads g = NetGrads::zeros_like(net);
  g.weights[1](0, 1) = std::nan("");
  try {
    adam_update(net, g, st, 1e-2);
    FAIL("expected an abort");
  } catch (const RuntimeAbort& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
  CHECK(net == before);
  CHECK(st.step == 0);
}

TEST_CASE("net serialization round-trips exactly") {
  Rng rng(10);
  const Net net = make_net({3, 7, 2}, rng, 0.01);
  std::stringstream ss;
  write_net(ss, net);
  const Net back = read_net(ss);
  CHECK(back == net);
  std::stringstream truncated(ss.str().substr(0, 20));
  CHECK_THROWS_AS(read_net(truncated), RuntimeAbort);
}

TEST_CASE("policy output scale shrinks the final layer") {
  Rng a(11), b(11);
  const Net full = make_net({4, 8, 2}, a);
  const Net small = make_net({4, 8, 2}, b, 0.01);
  CHECK((small.weights[1] - 0.01 * full.weights[1]).norm() < 1e-15);
  CHECK(small.weights[0] == full.weights[0]);
}
