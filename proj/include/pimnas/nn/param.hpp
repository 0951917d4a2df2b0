// Copyright 2026 The pimnas Authors.
//
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

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pimnas/nn/tensor.hpp"

namespace pimnas::nn {

/// A named parameter tensor with an arbitrary-rank shape.
///
/// Supernet parameters are allocated at their maximal shape; a forward pass
/// touches only a prefix region `[0, active[0]) x [0, active[1]) x ...`.
/// The active extent is recorded so the optimizer leaves every other element
/// (and its moment buffers) untouched.
template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;
  std::vector<int> active;  // empty: not touched since the last clear
  bool trainable = true;

  std::size_t size() const { return value.size(); }
  bool touched() const { return !active.empty(); }

  /// Widens the active extent to cover `extent` (elementwise max).
  void touch(const std::vector<int>& extent);
};

/// Calls `fn(flat_index)` for every element of the prefix region `extent` of
/// a row-major tensor with `shape`.
void for_each_prefix(const std::vector<int>& shape, const std::vector<int>& extent,
                     const std::function<void(std::size_t)>& fn);

/// Copies the prefix region `extent` of `src` (laid out with `src_shape`) into
/// a dense tensor of shape `extent`.
template <typename T>
std::vector<T> slice_prefix(const std::vector<T>& src, const std::vector<int>& src_shape,
                            const std::vector<int>& extent);

/// Ordered collection of parameters. Iteration order is by name, which keeps
/// checkpoints and optimizer traversal deterministic.
template <typename T>
class ParamStore {
 public:
  Param<T>& add(const std::string& name, std::vector<int> shape, bool trainable = true);
  Param<T>& get(const std::string& name);
  const Param<T>& get(const std::string& name) const;
  Param<T>* find(const std::string& name);
  const Param<T>* find(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::map<std::string, Param<T>>& all() { return params_; }
  const std::map<std::string, Param<T>>& all() const { return params_; }
  std::size_t count() const { return params_.size(); }

  /// Zeroes every gradient and clears every active extent.
  void clear_grads();
  std::vector<Param<T>*> touched();

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, p] : params_) {
      auto& q = out.add(name, p.shape, p.trainable);
      for (std::size_t i = 0; i < p.value.size(); ++i) q.value[i] = static_cast<U>(p.value[i]);
    }
    return out;
  }

 private:
  std::map<std::string, Param<T>> params_;
};

std::size_t shape_size(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

}  // namespace pimnas::nn
