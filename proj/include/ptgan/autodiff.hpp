#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tensor is a value plus an optional handle into a Graph. Operations on
// untracked tensors are plain numerics; as soon as one operand is tracked the
// result is recorded on that operand's graph. backward() with create_graph
// set emits the gradient computation itself as graph nodes, so expressions
// built from first-order gradients (gradient penalties) can be differentiated
// again.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace ptgan::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  MatMul,
  Add,
  Sub,
  Mul,
  Scale,
  AddScalar,
  ConcatCols,
  SliceCols,
  PadCols,
  Transpose,
  Relu,
  LRelu,
  Tanh,
  Sigmoid,
  Abs,
  Square,
  Sqrt,
  Exp,
  Log,
  InvOrZero,
  SoftmaxRows,
  MeanAll,
  SumAll,
  SumRows,
  RowSums,
  DotRows,
  MaxAll,
  BroadcastRows,
  BroadcastCols,
  Expand,
};

std::string_view op_name(Op op);

class Graph;

class Tensor {
 public:
  Tensor();
  explicit Tensor(Matrix value);

  static Tensor scalar(double v);
  static Tensor zeros(Index rows, Index cols);

  Index rows() const { return value_->rows(); }
  Index cols() const { return value_->cols(); }
  Index size() const { return value_->size(); }
  const Matrix& value() const { return *value_; }
  /// Value of a 1x1 tensor.
  double item() const;

  bool tracked() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  std::size_t node() const { return node_; }

  /// Same value, no graph handle.
  Tensor detach() const;

 private:
  friend class Graph;
  Tensor(std::shared_ptr<const Matrix> value, Graph* graph, std::size_t node)
      : value_(std::move(value)), graph_(graph), node_(node) {}

  std::shared_ptr<const Matrix> value_;
  Graph* graph_ = nullptr;
  std::size_t node_ = 0;
};

/// Append-only operation record. Single owner, not thread-safe; tensors hold
/// a raw pointer to it, so a Graph must outlive every tensor recorded on it.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// A differentiable input.
  Tensor leaf(Matrix value);
  Tensor leaf(const Tensor& value) { return leaf(value.value()); }

  /// Gradients of the scalar `root` with respect to each of `wrt`. Targets the
  /// root does not depend on get a zero tensor. With `create_graph` the
  /// returned tensors are nodes of this graph.
  std::vector<Tensor> backward(const Tensor& root, std::span<const Tensor> wrt,
                               bool create_graph = false);

  std::size_t size() const { return nodes_.size(); }
  Op op_at(std::size_t id) const { return nodes_.at(id).op; }
  std::span<const std::size_t> parents_of(std::size_t id) const;

 private:
  friend Tensor record(Op, std::span<const Tensor>, Matrix, double, Index, Index);

  struct Node {
    Op op = Op::Leaf;
    std::uint8_t arity = 0;
    bool requires_grad = false;
    std::size_t parents[2] = {0, 0};
    std::shared_ptr<const Matrix> value;
    double param = 0.0;
    Index p0 = 0;
    Index p1 = 0;
  };

  Tensor push(Node node);
  std::size_t intern(const Tensor& t);
  Tensor view(std::size_t id, bool tracked);

  std::vector<Node> nodes_;
};

// Forward operations. Shape violations throw ShapeError; domain violations
// (log of a non-positive entry, overflowing exp) throw DomainError.

Tensor matmul(const Tensor& a, const Tensor& b);
/// Elementwise sum. `b` may also be a single row, added to every row of `a`.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise (Hadamard) product.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor concat_cols(const Tensor& a, const Tensor& b);
/// Columns [begin, end).
Tensor slice_cols(const Tensor& a, Index begin, Index end);
/// Embeds `a` at column `offset` of a zero matrix with `total` columns.
Tensor pad_cols(const Tensor& a, Index offset, Index total);
Tensor transpose(const Tensor& a);

/// Subgradient at exactly 0 is 0 for relu, lrelu and abs.
Tensor relu(const Tensor& a);
Tensor lrelu(const Tensor& a, double slope);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);
/// Derivative at 0 is defined as 0.
Tensor sqrt(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
/// 1/x elementwise, with 1/0 := 0.
Tensor inv_or_zero(const Tensor& a);
Tensor softmax_rows(const Tensor& a);

Tensor mean_all(const Tensor& a);
Tensor sum_all(const Tensor& a);
/// Column sums: (n x c) -> (1 x c).
Tensor sum_rows(const Tensor& a);
/// Row sums: (n x c) -> (n x 1).
Tensor row_sums(const Tensor& a);
/// Row-wise inner products: (n x c), (n x c) -> (n x 1).
Tensor dot_rows(const Tensor& a, const Tensor& b);
/// Largest entry; the gradient flows to the first maximizer.
Tensor max_all(const Tensor& a);
Tensor broadcast_rows(const Tensor& row, Index rows);
Tensor broadcast_cols(const Tensor& col, Index cols);
Tensor expand(const Tensor& scalar, Index rows, Index cols);

/// Central-difference gradient of `f` at `theta`, one coordinate at a time.
Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& f, const Matrix& theta,
                            double step);

}  // namespace ptgan::ad
