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

#ifndef BAM_AUTOGRAD_H_
#define BAM_AUTOGRAD_H_

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bam {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A named trainable tensor. `grad` accumulates across graphs until cleared.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

// Owns parameters with stable addresses, in creation order.
class ParameterStore {
 public:
  Parameter& Create(std::string name, Eigen::Index rows, Eigen::Index cols);
  Parameter* Find(std::string_view name);
  const Parameter* Find(std::string_view name) const;

  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;
  size_t size() const { return params_.size(); }
  size_t NumScalars() const;
  void ZeroGrad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse
// sweep is a valid topological order.
class Graph {
 public:
  // (graph, forward value of this node, gradient w.r.t. this node)
  using BackwardFn =
      std::function<void(Graph&, const Matrix& value, const Matrix& grad)>;

  explicit Graph(bool track_gradients = true)
      : tracking_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool tracking() const { return tracking_; }

  Var Constant(Matrix value);
  Var Constant(double value);
  // Leaf bound to `p`. Repeated calls return the same node.
  Var Param(Parameter& p);

  // Appends an interior node. `backward` is dropped when no input needs a
  // gradient.
  Var Record(Matrix value, std::span<const Var> inputs, BackwardFn backward);
  Var Record(Matrix value, std::initializer_list<Var> inputs,
             BackwardFn backward) {
    return Record(std::move(value), std::span<const Var>(inputs.begin(),
                                                        inputs.size()),
                  std::move(backward));
  }

  const Matrix& value(int id) const { return nodes_[id].value; }
  // Gradient of the last Backward() root w.r.t. node `id` (zeros if unreached).
  Matrix grad(int id) const;
  bool NeedsGrad(const Var& v) const { return nodes_[v.id()].needs_grad; }

  template <typename Derived>
  void Accumulate(const Var& v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[v.id()];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  // Seeds d(root)/d(root) = 1 (root must be 1x1) and sweeps the tape.
  void Backward(const Var& root);

  // Adds leaf gradients into the bound Parameter::grad.
  void ExportParameterGrads() const;

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    bool needs_grad = false;
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> param_nodes_;
  bool tracking_;
};

inline const Matrix& Var::value() const { return graph_->value(id_); }

}  // namespace bam

#endif  // BAM_AUTOGRAD_H_
