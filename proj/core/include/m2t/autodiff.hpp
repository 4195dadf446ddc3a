#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <cstddef>
#include <memory>
#include <new>
#include <span>
#include <unordered_map>
#include <vector>

#include "m2t/tensor.hpp"

namespace m2t {

using NodeId = std::uint32_t;

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  double item() const { return value().item(); }
  NodeId id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  /// True when gradients flow through this value.
  bool tracked() const;

 private:
  friend class Tape;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

/// Gradients of a loss with respect to every tracked leaf, keyed by node id.
class Gradients {
 public:
  const Tensor& operator[](const Var& v) const { return at(v.id()); }
  const Tensor& at(NodeId id) const;
  bool contains(NodeId id) const { return grads_.count(id) != 0; }
  std::size_t size() const noexcept { return grads_.size(); }

 private:
  friend class Tape;
  std::unordered_map<NodeId, Tensor> grads_;
};

/// Single-use gradient tape. Nodes are appended in execution order, which is
/// a topological order by construction. One backward pass per recording.
///
/// A tape and its Vars belong to one thread; independent tapes may run in
/// parallel.
class Tape {
 public:
  /// Propagates the output gradient of node `self` into its inputs through
  /// Tape::accumulate.
  using BackwardFn = std::function<void(Tape&, NodeId self)>;

  /// With grad_enabled=false the tape only stores values (inference mode).
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Tracked input owning its value.
  Var leaf(Tensor value);
  /// Tracked input referring to external storage that must outlive the tape.
  Var leaf_view(const Tensor& value);
  Var constant(Tensor value);
  Var constant_view(const Tensor& value);

  /// Append an operation result. `fn` is dropped, without ever being wrapped
  /// in a BackwardFn, when no input is tracked or gradients are disabled.
  template <class F>
  Var record(Tensor value, std::initializer_list<Var> inputs, F&& fn) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::forward<F>(fn));
  }
  template <class F>
  Var record(Tensor value, std::span<const Var> inputs, F&& fn) {
    if (!tracks_any(inputs)) return append(std::move(value), nullptr);
    return append(std::move(value), BackwardFn(std::forward<F>(fn)));
  }

  const Tensor& value(NodeId id) const;
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  /// Gradient flowing into `id`; only meaningful inside a BackwardFn.
  const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
  /// Zero-initialised gradient buffer of `id`, or nullptr when `id` does not
  /// take gradients.
  Tensor* accumulate(NodeId id);

  Gradients backward(const Var& loss);

  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* view = nullptr;
    Tensor grad;
    BackwardFn fn;
    bool requires_grad = false;
    bool is_leaf = false;
    bool has_grad = false;
  };

  bool tracks_any(std::span<const Var> inputs) const;
  Var append(Tensor value, BackwardFn fn);

  /// Blocks of nodes with stable addresses. Nodes are constructed only when
  /// appended; std::deque fits just a few nodes per block and spends most of
  /// a small op on allocation.
  class NodeStore {
   public:
    NodeStore() = default;
    NodeStore(const NodeStore&) = delete;
    NodeStore& operator=(const NodeStore&) = delete;
    ~NodeStore();
    Node& operator[](std::size_t i) { return *std::launder(reinterpret_cast<Node*>(slot(i))); }
    const Node& operator[](std::size_t i) const {
      return *std::launder(reinterpret_cast<const Node*>(slot(i)));
    }
    Node& emplace_back() {
      if (size_ % kBlock == 0) blocks_.push_back(acquire_block());
      Node* n = new (slot(size_)) Node();
      ++size_;
      return *n;
    }
    std::size_t size() const noexcept { return size_; }

   private:
    static constexpr std::size_t kBlock = 256;
    static_assert(alignof(Node) <= __STDCPP_DEFAULT_NEW_ALIGNMENT__);
    using Block = std::unique_ptr<std::byte[]>;
    /// Blocks are recycled through a small per-thread pool, since tapes are
    /// short-lived and created in tight loops.
    static Block acquire_block();
    std::byte* slot(std::size_t i) const { return blocks_[i / kBlock].get() + (i % kBlock) * sizeof(Node); }
    std::vector<Block> blocks_;
    std::size_t size_ = 0;
  };

  NodeStore nodes_;
  bool grad_enabled_;
  bool consumed_ = false;
};

}  // namespace m2t
