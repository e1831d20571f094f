// Copyright 2026 The RankNCE Authors.
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

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ranknce/tensor.hpp"

namespace ranknce {

class Tape;
using NodeId = std::uint32_t;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// tape that issued it is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape& tape() const;
  NodeId id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t numel() const { return value().numel(); }
  double item() const { return value().item(); }
  Tensor grad() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

/// Append-only record of a computation for reverse-mode differentiation.
///
/// Nodes are stored in creation order, so inputs always precede their
/// consumers and backward() is a single reverse sweep. Each non-leaf node
/// carries a closure that reads its own gradient and accumulates into the
/// gradients of its inputs. Accumulation order is tape order, which makes
/// repeated runs bit-identical.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, NodeId)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);
  Var constant(Tensor value);

  // Appends an op node. Throws NumericError if `value` is not finite.
  Var record(std::string_view op, Tensor value, std::vector<NodeId> inputs,
             BackwardFn backward);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const std::string& op(NodeId id) const { return nodes_[id].op; }
  const std::vector<NodeId>& inputs(NodeId id) const {
    return nodes_[id].inputs;
  }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }

  // Gradient of the last backward root w.r.t. this node; zeros if the node
  // was not reached.
  Tensor grad(NodeId id) const;

  // Adds `delta` into the gradient buffer of `id` (no-op for constants).
  void accumulate(NodeId id, std::span<const double> delta);
  // Mutable gradient buffer, allocated on first use.
  std::span<double> grad_buffer(NodeId id);

  // Runs the reverse sweep from a scalar root. Earlier gradients are cleared.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

  // Ops with a non-differentiable point (relu, selection thresholds) report
  // how far the evaluated input sits from it; finite-difference checks use
  // the minimum to reject inputs where a perturbation could cross the kink.
  void note_kink(double distance);
  double kink_margin() const { return kink_margin_; }
  // The same ops fold their discrete decisions (active units, surviving and
  // selected negatives) into a signature. Equal signatures at two inputs
  // mean both were evaluated on the same smooth piece.
  void note_branch(std::uint64_t word);
  std::uint64_t branch_signature() const { return branch_signature_; }

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  double kink_margin_ = std::numeric_limits<double>::infinity();
  std::uint64_t branch_signature_ = 0xcbf29ce484222325ULL;
};

}  // namespace ranknce
