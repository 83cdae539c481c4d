// Copyright 2026 sefpnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "sefpnet/ops_conv.hpp"
#include "sefpnet/ops_norm.hpp"

namespace sefpnet {

// Ordered registry of named parameters and buffers. Names are stable for a
// given model config, which is what checkpointing relies on.
class ParamSet {
 public:
  struct ParamEntry {
    std::string name;
    Var var;
  };
  struct BufferEntry {
    std::string name;
    std::shared_ptr<Tensor> buf;
  };

  Var make(const std::string& name, Tensor init) {
    if (index_.count(name)) throw ConfigError("duplicate parameter: " + name);
    Var v(std::move(init), /*requires_grad=*/true);
    index_[name] = params_.size();
    params_.push_back({name, v});
    return v;
  }

  std::shared_ptr<Tensor> make_buffer(const std::string& name, Tensor init) {
    if (buf_index_.count(name)) throw ConfigError("duplicate buffer: " + name);
    auto b = std::make_shared<Tensor>(std::move(init));
    buf_index_[name] = buffers_.size();
    buffers_.push_back({name, b});
    return b;
  }

  std::vector<ParamEntry>& params() { return params_; }
  const std::vector<ParamEntry>& params() const { return params_; }
  std::vector<BufferEntry>& buffers() { return buffers_; }
  const std::vector<BufferEntry>& buffers() const { return buffers_; }

  Var* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second].var;
  }

  int64_t total_size() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p.var.numel();
    return n;
  }

  void zero_grads() {
    for (auto& p : params_) p.var.zero_grad();
  }

 private:
  std::vector<ParamEntry> params_;
  std::vector<BufferEntry> buffers_;
  std::unordered_map<std::string, size_t> index_;
  std::unordered_map<std::string, size_t> buf_index_;
};

namespace init {

// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)), torch-style conv default.
inline Tensor conv_uniform(Shape shape, int64_t fan_in, std::mt19937_64& rng) {
  double bound = 1.0 / std::sqrt(double(fan_in));
  return Tensor::uniform(std::move(shape), rng, -bound, bound);
}

}  // namespace init

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamSet& ps, const std::string& prefix, int64_t cin, int64_t cout,
         int64_t kh, int64_t kw, int64_t sh, int64_t sw, int64_t ph, int64_t pw,
         std::mt19937_64& rng)
      : sh_(sh), sw_(sw), ph_(ph), pw_(pw) {
    int64_t fan_in = cin * kh * kw;
    w_ = ps.make(prefix + ".weight",
                 init::conv_uniform({cout, cin, kh, kw}, fan_in, rng));
    b_ = ps.make(prefix + ".bias", init::conv_uniform({cout}, fan_in, rng));
  }

  Var forward(const Var& x) const { return conv2d(x, w_, b_, sh_, sw_, ph_, pw_); }
  Var operator()(const Var& x) const { return forward(x); }

  Var& weight() { return w_; }
  Var& bias() { return b_; }
  void zero_init() {
    w_.value().fill(0.0);
    b_.value().fill(0.0);
  }

 private:
  Var w_, b_;
  int64_t sh_ = 1, sw_ = 1, ph_ = 0, pw_ = 0;
};

class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(ParamSet& ps, const std::string& prefix, int64_t cin,
                  int64_t cout, int64_t kh, int64_t kw, int64_t sh, int64_t sw,
                  int64_t ph, int64_t pw, std::mt19937_64& rng)
      : sh_(sh), sw_(sw), ph_(ph), pw_(pw) {
    int64_t fan_in = cin * kh * kw;
    w_ = ps.make(prefix + ".weight",
                 init::conv_uniform({cin, cout, kh, kw}, fan_in, rng));
    b_ = ps.make(prefix + ".bias", init::conv_uniform({cout}, fan_in, rng));
  }

  Var forward(const Var& x) const {
    return conv_transpose2d(x, w_, b_, sh_, sw_, ph_, pw_);
  }
  Var operator()(const Var& x) const { return forward(x); }

 private:
  Var w_, b_;
  int64_t sh_ = 1, sw_ = 1, ph_ = 0, pw_ = 0;
};

class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(ParamSet& ps, const std::string& prefix, int64_t c)
      : gamma_(ps.make(prefix + ".gamma", Tensor::full({c}, 1.0))),
        beta_(ps.make(prefix + ".beta", Tensor::zeros({c}))),
        running_mean_(ps.make_buffer(prefix + ".running_mean", Tensor::zeros({c}))),
        running_var_(ps.make_buffer(prefix + ".running_var", Tensor::full({c}, 1.0))) {}

  Var forward(const Var& x, bool training) const {
    return batch_norm2d(x, gamma_, beta_, running_mean_, running_var_, training);
  }

 private:
  Var gamma_, beta_;
  std::shared_ptr<Tensor> running_mean_, running_var_;
};

class PReLU {
 public:
  PReLU() = default;
  PReLU(ParamSet& ps, const std::string& prefix, int64_t c)
      : alpha_(ps.make(prefix + ".alpha", Tensor::full({c}, 0.25))) {}

  Var forward(const Var& x) const { return prelu(x, alpha_); }
  Var operator()(const Var& x) const { return forward(x); }

 private:
  Var alpha_;
};

class DepthwiseConv1d {
 public:
  DepthwiseConv1d() = default;
  DepthwiseConv1d(ParamSet& ps, const std::string& prefix, int64_t c, int64_t k,
                  int64_t dilation, std::mt19937_64& rng)
      : dilation_(dilation) {
    w_ = ps.make(prefix + ".weight", init::conv_uniform({c, k}, k, rng));
    b_ = ps.make(prefix + ".bias", init::conv_uniform({c}, k, rng));
  }

  Var forward(const Var& x) const { return depthwise_conv1d(x, w_, b_, dilation_); }
  Var operator()(const Var& x) const { return forward(x); }

 private:
  Var w_, b_;
  int64_t dilation_ = 1;
};

}  // namespace sefpnet
