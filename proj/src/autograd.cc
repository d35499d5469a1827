/* Copyright 2026 The bam Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "bam/autograd.h"

#include <stdexcept>

namespace bam {

Parameter& ParameterStore::Create(std::string name, Eigen::Index rows,
                                  Eigen::Index cols) {
  if (by_name_.count(name)) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = Matrix::Zero(rows, cols);
  p->grad = Matrix::Zero(rows, cols);
  Parameter* raw = p.get();
  by_name_.emplace(raw->name, raw);
  params_.push_back(std::move(p));
  return *raw;
}

Parameter* ParameterStore::Find(std::string_view name) {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? nullptr : it->second;
}

const Parameter* ParameterStore::Find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? nullptr : it->second;
}

std::vector<Parameter*> ParameterStore::All() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::All() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

size_t ParameterStore::NumScalars() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p->value.size());
  return n;
}

void ParameterStore::ZeroGrad() {
  for (auto& p : params_) p->ZeroGrad();
}

Var Graph::Constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::Constant(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return Constant(std::move(m));
}

Var Graph::Param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.needs_grad = tracking_;
  n.param = &p;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return Var(this, id);
}

Var Graph::Record(Matrix value, std::span<const Var> inputs,
                  BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  if (tracking_) {
    for (const Var& in : inputs) {
      if (in.graph() != this) {
        throw std::logic_error("Var from a different graph");
      }
      n.needs_grad = n.needs_grad || nodes_[in.id()].needs_grad;
    }
    if (n.needs_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix Graph::grad(int id) const {
  const Node& n = nodes_[id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::Backward(const Var& root) {
  if (root.graph() != this) throw std::logic_error("root from another graph");
  if (root.rows() != 1 || root.cols() != 1) {
    throw std::invalid_argument("Backward root must be 1x1");
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  Node& r = nodes_[root.id()];
  if (!r.needs_grad) return;
  r.grad = Matrix::Ones(1, 1);
  for (int i = root.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    // The closure only touches earlier nodes, so `n` stays valid.
    n.backward(*this, n.value, n.grad);
  }
}

void Graph::ExportParameterGrads() const {
  for (const auto& [param, id] : param_nodes_) {
    const Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    if (param->grad.size() == 0) param->ZeroGrad();
    param->grad += n.grad;
  }
}

}  // namespace bam
