#include "m2t/autodiff.hpp"

#include "m2t/errors.hpp"

namespace m2t {

const Tensor& Var::value() const {
  if (!tape_) throw StateError("use of an unbound Var");
  return tape_->value(id_);
}

bool Var::tracked() const { return tape_ && tape_->requires_grad(id_); }

const Tensor& Gradients::at(NodeId id) const {
  auto it = grads_.find(id);
  if (it == grads_.end()) throw StateError("no gradient recorded for node " + std::to_string(id));
  return it->second;
}

namespace {

constexpr std::size_t kPooledBlocks = 32;

std::vector<std::unique_ptr<std::byte[]>>& block_pool() {
  thread_local std::vector<std::unique_ptr<std::byte[]>> pool;
  return pool;
}

}  // namespace

Tape::NodeStore::Block Tape::NodeStore::acquire_block() {
  auto& pool = block_pool();
  if (pool.empty()) {
    // operator new[] storage is aligned for any fundamental type, hence for Node.
    return std::make_unique_for_overwrite<std::byte[]>(kBlock * sizeof(Node));
  }
  Block b = std::move(pool.back());
  pool.pop_back();
  return b;
}

Tape::NodeStore::~NodeStore() {
  for (std::size_t i = 0; i < size_; ++i) (*this)[i].~Node();
  auto& pool = block_pool();
  for (auto& b : blocks_)
    if (pool.size() < kPooledBlocks) pool.push_back(std::move(b));
}

Var Tape::leaf(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.owned = std::move(value);
  n.requires_grad = grad_enabled_;
  n.is_leaf = true;
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Tape::leaf_view(const Tensor& value) {
  Node& n = nodes_.emplace_back();
  n.view = &value;
  n.requires_grad = grad_enabled_;
  n.is_leaf = true;
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  nodes_.emplace_back().owned = std::move(value);
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Tape::constant_view(const Tensor& value) {
  nodes_.emplace_back().view = &value;
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

bool Tape::tracks_any(std::span<const Var> inputs) const {
  if (!grad_enabled_) return false;
  bool tracked = false;
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw StateError("operation mixes Vars from different tapes");
    if (nodes_[in.id()].requires_grad) tracked = true;
  }
  return tracked;
}

Var Tape::append(Tensor value, BackwardFn fn) {
  Node& n = nodes_.emplace_back();
  n.owned = std::move(value);
  if (fn) {
    n.requires_grad = true;
    n.fn = std::move(fn);
  }
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

const Tensor& Tape::value(NodeId id) const {
  const Node& n = nodes_[id];
  return n.view ? *n.view : n.owned;
}

Tensor* Tape::accumulate(NodeId id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Tensor(value(id).shape());
    n.has_grad = true;
  }
  return &n.grad;
}

Gradients Tape::backward(const Var& loss) {
  if (!grad_enabled_) throw StateError("backward on a tape recorded without gradients");
  if (consumed_) throw StateError("backward already ran on this tape");
  if (!loss.valid() || &loss.tape() != this) throw StateError("loss does not belong to this tape");
  if (!requires_grad(loss.id())) throw StateError("backward on an untracked tensor");
  if (value(loss.id()).size() != 1) {
    throw StateError("backward needs a scalar loss, got " + shape_string(value(loss.id()).shape()));
  }
  consumed_ = true;

  accumulate(loss.id())->fill(1.0);
  for (NodeId id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.has_grad && n.fn) n.fn(*this, id);
  }

  Gradients out;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (!n.is_leaf || !n.requires_grad) continue;
    out.grads_.emplace(id, n.has_grad ? std::move(n.grad) : Tensor(value(id).shape()));
  }
  return out;
}

}  // namespace m2t
