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

#include "pimnas/nn/param.hpp"

#include <algorithm>
#include <sstream>

namespace pimnas::nn {

std::string Shape4::str() const {
  std::ostringstream os;
  os << "(" << n << "," << c << "," << h << "," << w << ")";
  return os.str();
}

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

template <typename T>
void Param<T>::touch(const std::vector<int>& extent) {
  if (extent.size() != shape.size()) {
    throw EngineError("parameter " + name + ": extent " + shape_str(extent) +
                      " has wrong rank for shape " + shape_str(shape));
  }
  if (active.empty()) {
    active = extent;
  } else {
    for (std::size_t i = 0; i < extent.size(); ++i) active[i] = std::max(active[i], extent[i]);
  }
}

void for_each_prefix(const std::vector<int>& shape, const std::vector<int>& extent,
                     const std::function<void(std::size_t)>& fn) {
  const std::size_t rank = shape.size();
  if (rank == 0) return;
  for (std::size_t i = 0; i < rank; ++i) {
    if (extent[i] > shape[i]) {
      throw EngineError("prefix extent " + shape_str(extent) + " exceeds shape " + shape_str(shape));
    }
    if (extent[i] <= 0) return;
  }
  std::vector<std::size_t> stride(rank, 1);
  for (std::size_t i = rank - 1; i > 0; --i) stride[i - 1] = stride[i] * shape[i];
  // The innermost dimension is contiguous; walk the outer ones as an odometer.
  std::vector<int> idx(rank, 0);
  const int inner = extent[rank - 1];
  while (true) {
    std::size_t base = 0;
    for (std::size_t i = 0; i + 1 < rank; ++i) base += idx[i] * stride[i];
    for (int j = 0; j < inner; ++j) fn(base + j);
    if (rank == 1) return;
    std::size_t d = rank - 2;
    while (true) {
      if (++idx[d] < extent[d]) break;
      idx[d] = 0;
      if (d == 0) return;
      --d;
    }
  }
}

template <typename T>
std::vector<T> slice_prefix(const std::vector<T>& src, const std::vector<int>& src_shape,
                            const std::vector<int>& extent) {
  std::vector<T> out;
  out.reserve(shape_size(extent));
  for_each_prefix(src_shape, extent, [&](std::size_t i) { out.push_back(src[i]); });
  return out;
}

template <typename T>
Param<T>& ParamStore<T>::add(const std::string& name, std::vector<int> shape, bool trainable) {
  if (params_.count(name)) throw EngineError("duplicate parameter " + name);
  Param<T> p;
  p.name = name;
  p.value.assign(shape_size(shape), T(0));
  p.grad.assign(p.value.size(), T(0));
  p.shape = std::move(shape);
  p.trainable = trainable;
  return params_.emplace(name, std::move(p)).first->second;
}

template <typename T>
Param<T>& ParamStore<T>::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw EngineError("unknown parameter " + name);
  return it->second;
}

template <typename T>
const Param<T>& ParamStore<T>::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw EngineError("unknown parameter " + name);
  return it->second;
}

template <typename T>
Param<T>* ParamStore<T>::find(const std::string& name) {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : &it->second;
}

template <typename T>
const Param<T>* ParamStore<T>::find(const std::string& name) const {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : &it->second;
}

template <typename T>
void ParamStore<T>::clear_grads() {
  for (auto& [name, p] : params_) {
    std::fill(p.grad.begin(), p.grad.end(), T(0));
    p.active.clear();
  }
}

template <typename T>
std::vector<Param<T>*> ParamStore<T>::touched() {
  std::vector<Param<T>*> out;
  for (auto& [name, p] : params_) {
    if (p.touched()) out.push_back(&p);
  }
  return out;
}

template struct Param<float>;
template struct Param<double>;
template class ParamStore<float>;
template class ParamStore<double>;
template std::vector<float> slice_prefix(const std::vector<float>&, const std::vector<int>&,
                                         const std::vector<int>&);
template std::vector<double> slice_prefix(const std::vector<double>&, const std::vector<int>&,
                                          const std::vector<int>&);

}  // namespace pimnas::nn
