#pragma once

#include <functional>
#include <vector>

#include "treglab/rng.hpp"
#include "treglab/tensor.hpp"

namespace treglab {

enum class Mode { train, eval };

using ValueId = int;

// Reverse-mode tape over dense tensors. Nodes are appended in topological
// order by construction; backward() walks the tape once in reverse.
//
// Parameter leaves are registered by pointer and accumulate gradients
// directly into Tensor::grad() when requires_grad is set. Frozen leaves are
// never written to.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  ValueId parameter(Tensor* t);
  ValueId constant(Tensor t);

  ValueId matmul(ValueId a, ValueId b, bool transpose_b = false);
  ValueId add(ValueId a, ValueId b);
  ValueId add_bias_rows(ValueId x, ValueId bias);
  ValueId scale(ValueId x, double factor);
  ValueId layer_norm_rows(ValueId x, ValueId gain, ValueId bias, double eps = 1e-5);
  ValueId softmax_rows(ValueId x);
  ValueId gelu(ValueId x);
  ValueId tanh(ValueId x);
  ValueId embedding_rows(ValueId table, std::vector<int> ids);
  ValueId dropout(ValueId x, double p, Mode mode, Rng* rng);
  ValueId mean_pool_rows(ValueId x, std::vector<double> row_weights);
  ValueId mse(ValueId pred, ValueId target);
  ValueId slice_cols(ValueId x, int begin, int count);
  ValueId concat_cols(const std::vector<ValueId>& xs);
  ValueId concat(const std::vector<ValueId>& xs);
  // Mean negative log-likelihood over rows of logits, weighted per row.
  ValueId cross_entropy_rows(ValueId logits, std::vector<int> targets,
                             std::vector<double> row_weights);

  const Tensor& value(ValueId id) const { return node(id).v(); }
  // Gradient buffer of an intermediate node (empty if never needed).
  const std::vector<double>& grad(ValueId id) const { return node(id).grad; }

  // Seeds d(loss)/d(loss)=1 and accumulates gradients into every reachable
  // requires_grad leaf. Loss must be scalar. A second call without a new
  // graph is a state error.
  void backward(ValueId loss);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;             // value for computed/constant nodes
    Tensor* param = nullptr;  // set for parameter leaves
    bool needs_grad = false;
    std::vector<double> grad;
    std::function<void(Graph&, ValueId)> backprop;

    const Tensor& v() const { return param != nullptr ? *param : owned; }
  };

  Node& node(ValueId id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& node(ValueId id) const { return nodes_[static_cast<size_t>(id)]; }

  ValueId push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<ValueId>(nodes_.size() - 1);
  }

  // Gradient sink for a node: the external tensor grad for parameter
  // leaves, the local buffer otherwise. Callers must check needs_grad.
  std::vector<double>& grad_sink(ValueId id);
  bool wants_grad(ValueId id) const { return node(id).needs_grad; }

  ValueId make_op(Tensor value, std::vector<ValueId> inputs,
                  std::function<void(Graph&, ValueId)> backprop,
                  const char* op_name);

  const Tensor& require_matrix(ValueId id, const char* op) const;
  const Tensor& require_vector(ValueId id, const char* op) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace treglab
