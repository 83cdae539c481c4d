// Copyright 2026 sefpnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sefpnet/autograd.hpp"

namespace sefpnet::testing {

struct FdReport {
  double max_rel = 0.0;
  std::string worst;
};

// Central finite-difference check of a scalar-valued graph against the
// analytic gradients of the given leaves. `make_loss` must rebuild the graph
// from the leaves' current values on every call.
inline FdReport fd_check(const std::function<Var()>& make_loss,
                         std::vector<std::pair<std::string, Var>> leaves,
                         double h = 1e-5) {
  for (auto& [name, v] : leaves) v.zero_grad();
  Var loss = make_loss();
  backward(loss);
  std::vector<Tensor> analytic;
  analytic.reserve(leaves.size());
  for (auto& [name, v] : leaves) analytic.push_back(v.grad());

  FdReport rep;
  for (size_t li = 0; li < leaves.size(); ++li) {
    Var& v = leaves[li].second;
    for (int64_t i = 0; i < v.numel(); ++i) {
      double orig = v.value()[i];
      v.value()[i] = orig + h;
      double up = make_loss().value()[0];
      v.value()[i] = orig - h;
      double dn = make_loss().value()[0];
      v.value()[i] = orig;
      double fd = (up - dn) / (2.0 * h);
      double an = analytic[li][i];
      double denom = std::max(std::fabs(an), std::fabs(fd));
      double err = denom < 1e-8 ? std::fabs(an - fd) : std::fabs(an - fd) / denom;
      if (err > rep.max_rel) {
        rep.max_rel = err;
        rep.worst = leaves[li].first + "[" + std::to_string(i) + "]";
      }
    }
  }
  return rep;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace sefpnet::testing
