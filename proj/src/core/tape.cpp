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

#include "ranknce/tape.hpp"

#include <algorithm>

#include "ranknce/error.hpp"

namespace ranknce {

Tape& Var::tape() const {
  if (!tape_) throw Error("use of an unbound Var");
  return *tape_;
}

const Tensor& Var::value() const { return tape().value(id_); }
Tensor Var::grad() const { return tape().grad(id_); }

Var Tape::leaf(Tensor value) {
  if (!value.all_finite()) throw NumericError("leaf value is not finite");
  nodes_.push_back(Node{"leaf", std::move(value), {}, {}, {}, true});
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant value is not finite");
  nodes_.push_back(Node{"constant", std::move(value), {}, {}, {}, false});
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Tape::record(std::string_view op, Tensor value, std::vector<NodeId> inputs,
                 BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError("non-finite output from op '" + std::string(op) + "'");
  }
  bool needs = false;
  for (NodeId in : inputs) {
    if (in >= nodes_.size()) throw Error("op input refers to a future node");
    needs = needs || nodes_[in].requires_grad;
  }
  nodes_.push_back(Node{std::string(op), std::move(value), {},
                        std::move(inputs), std::move(backward), needs});
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Tensor Tape::grad(NodeId id) const {
  const Node& n = nodes_[id];
  if (n.grad.numel() == n.value.numel()) return n.grad;
  return Tensor(n.value.shape());
}

std::span<double> Tape::grad_buffer(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.numel() != n.value.numel()) n.grad = Tensor(n.value.shape());
  return n.grad.data();
}

void Tape::accumulate(NodeId id, std::span<const double> delta) {
  if (!nodes_[id].requires_grad) return;
  auto g = grad_buffer(id);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

void Tape::backward(Var root) {
  if (&root.tape() != this) throw Error("backward root from another tape");
  const Node& r = nodes_[root.id()];
  if (r.value.numel() != 1) {
    throw ShapeError("backward root must be scalar, got shape " +
                     shape_string(r.value.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  grad_buffer(root.id())[0] = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.numel() == 0) continue;
    n.backward(*this, static_cast<NodeId>(i));
  }
}

void Tape::note_kink(double distance) {
  kink_margin_ = std::min(kink_margin_, distance);
}

void Tape::note_branch(std::uint64_t word) {
  branch_signature_ = (branch_signature_ ^ word) * 0x100000001b3ULL;
}

}  // namespace ranknce
