// Copyright 2026 The optverify Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "optverify/lp/linear_program.hpp"

namespace optverify {

enum class Activation { kRelu, kIdentity };

struct DenseLayer {
  Eigen::MatrixXd w;  // rows = outputs, cols = inputs
  Eigen::VectorXd b;
  Activation act = Activation::kRelu;
};

// Pre-activation bounds, one vector pair per layer.
struct LayerBounds {
  std::vector<Eigen::VectorXd> lower;
  std::vector<Eigen::VectorXd> upper;

  int num_layers() const { return static_cast<int>(lower.size()); }
};

class MlpNetwork {
 public:
  struct Trace {
    std::vector<Eigen::VectorXd> pre;   // pre[i]: layer i pre-activation
    std::vector<Eigen::VectorXd> post;  // post[0] = input, post[i+1] = layer i
  };
  struct Gradients {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    Eigen::VectorXd input;
  };

  MlpNetwork() = default;
  explicit MlpNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    validate();
  }

  // ReLU hidden layers, identity output; uniform(+-1/sqrt(fan_in)) weights.
  static MlpNetwork random(const std::vector<int>& widths, std::uint64_t seed) {
    if (widths.size() < 2) throw ModelError("network needs input and output widths");
    std::mt19937_64 rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t i = 1; i < widths.size(); ++i) {
      const double r = 1.0 / std::sqrt(static_cast<double>(widths[i - 1]));
      std::uniform_real_distribution<double> u(-r, r);
      DenseLayer l;
      l.w.resize(widths[i], widths[i - 1]);
      l.b.resize(widths[i]);
      for (int a = 0; a < widths[i]; ++a) {
        for (int c = 0; c < widths[i - 1]; ++c) l.w(a, c) = u(rng);
      }
      for (int a = 0; a < widths[i]; ++a) l.b(a) = u(rng);
      l.act = i + 1 == widths.size() ? Activation::kIdentity : Activation::kRelu;
      layers.push_back(std::move(l));
    }
    return MlpNetwork(std::move(layers));
  }

  int num_layers() const { return static_cast<int>(layers_.size()); }
  int input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().w.cols()); }
  int output_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().w.rows()); }
  const DenseLayer& layer(int i) const { return layers_.at(i); }
  DenseLayer& layer(int i) { return layers_.at(i); }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  void validate() const {
    if (layers_.empty()) throw ModelError("network has no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.b.size() != l.w.rows())
        throw ModelError("layer " + std::to_string(i) + ": bias length mismatch");
      if (i > 0 && l.w.cols() != layers_[i - 1].w.rows())
        throw ModelError("layer " + std::to_string(i) + ": input width mismatch");
      if (!l.w.allFinite() || !l.b.allFinite())
        throw ModelError("layer " + std::to_string(i) + ": non-finite weights");
    }
    if (layers_.back().act != Activation::kIdentity)
      throw ModelError("final layer must use the identity activation");
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
    check_input(x);
    Eigen::VectorXd h = x;
    for (const auto& l : layers_) {
      Eigen::VectorXd y = l.w * h + l.b;
      if (l.act == Activation::kRelu) y = y.cwiseMax(0.0);
      h = std::move(y);
    }
    return h;
  }

  Trace forward_trace(const Eigen::VectorXd& x) const {
    check_input(x);
    Trace t;
    t.post.push_back(x);
    for (const auto& l : layers_) {
      Eigen::VectorXd y = l.w * t.post.back() + l.b;
      t.pre.push_back(y);
      t.post.push_back(l.act == Activation::kRelu ? Eigen::VectorXd(y.cwiseMax(0.0)) : y);
    }
    return t;
  }

  // Reverse pass for cotangent `g` on the output. ReLU'(0) = 0.
  Gradients backward(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const {
    if (g.size() != output_dim()) throw ModelError("cotangent length mismatch");
    const Trace t = forward_trace(x);
    Gradients out;
    out.w.resize(layers_.size());
    out.b.resize(layers_.size());
    Eigen::VectorXd gy = g;
    for (int i = num_layers() - 1; i >= 0; --i) {
      const auto& l = layers_[i];
      if (l.act == Activation::kRelu)
        for (int k = 0; k < gy.size(); ++k)
          if (!(t.pre[i](k) > 0.0)) gy(k) = 0.0;
      out.w[i] = gy * t.post[i].transpose();
      out.b[i] = gy;
      gy = l.w.transpose() * gy;
    }
    out.input = std::move(gy);
    return out;
  }

  Eigen::VectorXd input_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const {
    if (g.size() != output_dim()) throw ModelError("cotangent length mismatch");
    const Trace t = forward_trace(x);
    Eigen::VectorXd gy = g;
    for (int i = num_layers() - 1; i >= 0; --i) {
      if (layers_[i].act == Activation::kRelu)
        for (int k = 0; k < gy.size(); ++k)
          if (!(t.pre[i](k) > 0.0)) gy(k) = 0.0;
      gy = layers_[i].w.transpose() * gy;
    }
    return gy;
  }

 private:
  void check_input(const Eigen::VectorXd& x) const {
    if (x.size() != input_dim())
      throw ModelError("input length " + std::to_string(x.size()) + " != " +
                       std::to_string(input_dim()));
  }

  std::vector<DenseLayer> layers_;
};

inline nlohmann::json to_json(const MlpNetwork& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    std::vector<double> w;
    w.reserve(l.w.size());
    for (int r = 0; r < l.w.rows(); ++r)
      for (int c = 0; c < l.w.cols(); ++c) w.push_back(l.w(r, c));
    layers.push_back({{"rows", l.w.rows()},
                      {"cols", l.w.cols()},
                      {"w", w},
                      {"b", std::vector<double>(l.b.data(), l.b.data() + l.b.size())},
                      {"act", l.act == Activation::kRelu ? "relu" : "id"}});
  }
  return {{"layers", layers}};
}

inline MlpNetwork network_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array())
    throw ModelError("weights: expected object with a 'layers' array");
  std::vector<DenseLayer> layers;
  for (const auto& jl : j["layers"]) {
    for (const char* key : {"rows", "cols", "w", "b", "act"})
      if (!jl.contains(key)) throw ModelError(std::string("weights: layer missing '") + key + "'");
    const int rows = jl["rows"].get<int>(), cols = jl["cols"].get<int>();
    const auto w = jl["w"].get<std::vector<double>>();
    const auto b = jl["b"].get<std::vector<double>>();
    if (rows <= 0 || cols <= 0 || static_cast<long>(w.size()) != static_cast<long>(rows) * cols ||
        static_cast<int>(b.size()) != rows)
      throw ModelError("weights: layer dimensions do not match data");
    const std::string act = jl["act"].get<std::string>();
    if (act != "relu" && act != "id") throw ModelError("weights: unknown activation '" + act + "'");
    DenseLayer l;
    l.w.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) l.w(r, c) = w[static_cast<std::size_t>(r) * cols + c];
    l.b = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
    l.act = act == "relu" ? Activation::kRelu : Activation::kIdentity;
    layers.push_back(std::move(l));
  }
  return MlpNetwork(std::move(layers));
}

inline void save_weights(const std::string& path, const MlpNetwork& net) {
  std::ofstream os(path);
  if (!os) throw ModelError("cannot write " + path);
  os << to_json(net).dump(1) << '\n';
}

inline MlpNetwork load_weights(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ModelError("cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(path + ": " + e.what());
  }
  return network_from_json(j);
}

// Plain full-batch gradient descent. `loss` returns the sample loss and the
// cotangent on the network output. Epoch 0 loss is recorded before any step.
struct TrainResult {
  MlpNetwork net;
  std::vector<double> loss;  // mean loss per epoch, before that epoch's update
};

template <typename LossFn>
TrainResult toy_train(MlpNetwork net, const std::vector<Eigen::VectorXd>& samples,
                      int epochs, double lr, LossFn&& loss) {
  if (samples.empty()) throw ModelError("toy_train needs at least one sample");
  TrainResult res;
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (int e = 0; e < epochs; ++e) {
    std::vector<Eigen::MatrixXd> gw;
    std::vector<Eigen::VectorXd> gb;
    for (const auto& l : net.layers()) {
      gw.push_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
      gb.push_back(Eigen::VectorXd::Zero(l.b.size()));
    }
    double total = 0.0;
    for (const auto& x : samples) {
      const Eigen::VectorXd out = net.forward(x);
      auto [value, cot] = loss(x, out);
      total += value;
      const auto g = net.backward(x, cot);
      for (int i = 0; i < net.num_layers(); ++i) {
        gw[i] += g.w[i];
        gb[i] += g.b[i];
      }
    }
    res.loss.push_back(total * inv);
    for (int i = 0; i < net.num_layers(); ++i) {
      net.layer(i).w -= lr * inv * gw[i];
      net.layer(i).b -= lr * inv * gb[i];
    }
  }
  net.validate();
  res.net = std::move(net);
  return res;
}

}  // namespace optverify
