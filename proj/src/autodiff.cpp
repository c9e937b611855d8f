#include "ptgan/autodiff.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "ptgan/error.hpp"

namespace ptgan::ad {

namespace {

std::string shape_str(const Tensor& t) {
  std::ostringstream os;
  os << '(' << t.rows() << 'x' << t.cols() << ')';
  return os.str();
}

[[noreturn]] void shape_fail(Op op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b));
}

[[noreturn]] void shape_fail(Op op, const Tensor& a, const std::string& why) {
  throw ShapeError(std::string(op_name(op)) + ": " + why + " for shape " + shape_str(a));
}

Graph* graph_of(std::span<const Tensor> inputs) {
  Graph* g = nullptr;
  for (const auto& t : inputs) {
    if (!t.tracked()) continue;
    if (g != nullptr && g != t.graph()) {
      throw Error("tensors from different graphs combined in one operation");
    }
    g = t.graph();
  }
  return g;
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceCols: return "slice_cols";
    case Op::PadCols: return "pad_cols";
    case Op::Transpose: return "transpose";
    case Op::Relu: return "relu";
    case Op::LRelu: return "lrelu";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Abs: return "abs";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::InvOrZero: return "inv_or_zero";
    case Op::SoftmaxRows: return "softmax_rows";
    case Op::MeanAll: return "mean_all";
    case Op::SumAll: return "sum_all";
    case Op::SumRows: return "sum_rows";
    case Op::RowSums: return "row_sums";
    case Op::DotRows: return "dot_rows";
    case Op::MaxAll: return "max_all";
    case Op::BroadcastRows: return "broadcast_rows";
    case Op::BroadcastCols: return "broadcast_cols";
    case Op::Expand: return "expand";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor() : value_(std::make_shared<const Matrix>(Matrix(0, 0))) {}

Tensor::Tensor(Matrix value) : value_(std::make_shared<const Matrix>(std::move(value))) {}

Tensor Tensor::scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return Tensor(std::move(m));
}

Tensor Tensor::zeros(Index rows, Index cols) { return Tensor(Matrix::Zero(rows, cols)); }

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) {
    throw ShapeError("item: expected a 1x1 tensor, got " + shape_str(*this));
  }
  return (*value_)(0, 0);
}

Tensor Tensor::detach() const { return Tensor(value_, nullptr, 0); }

// ---------------------------------------------------------------------------
// Graph

Tensor Graph::push(Node node) {
  auto value = node.value;
  nodes_.push_back(std::move(node));
  return Tensor(std::move(value), this, nodes_.size() - 1);
}

Tensor Graph::leaf(Matrix value) {
  Node n;
  n.op = Op::Leaf;
  n.requires_grad = true;
  n.value = std::make_shared<const Matrix>(std::move(value));
  return push(std::move(n));
}

std::size_t Graph::intern(const Tensor& t) {
  if (t.tracked()) return t.node();
  Node n;
  n.op = Op::Constant;
  n.value = t.value_;
  push(std::move(n));
  return nodes_.size() - 1;
}

Tensor Graph::view(std::size_t id, bool tracked) {
  const auto& n = nodes_[id];
  return tracked ? Tensor(n.value, this, id) : Tensor(n.value, nullptr, 0);
}

std::span<const std::size_t> Graph::parents_of(std::size_t id) const {
  const auto& n = nodes_.at(id);
  return {n.parents, n.arity};
}

Tensor record(Op op, std::span<const Tensor> inputs, Matrix value, double param, Index p0,
              Index p1) {
  Graph* g = graph_of(inputs);
  if (g == nullptr) return Tensor(std::move(value));
  Graph::Node n;
  n.op = op;
  n.arity = static_cast<std::uint8_t>(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    n.parents[i] = g->intern(inputs[i]);
    n.requires_grad = n.requires_grad || g->nodes_[n.parents[i]].requires_grad;
  }
  n.value = std::make_shared<const Matrix>(std::move(value));
  n.param = param;
  n.p0 = p0;
  n.p1 = p1;
  return g->push(std::move(n));
}

namespace {

Tensor record1(Op op, const Tensor& a, Matrix value, double param = 0.0, Index p0 = 0,
               Index p1 = 0) {
  const Tensor in[1] = {a};
  return record(op, in, std::move(value), param, p0, p1);
}

Tensor record2(Op op, const Tensor& a, const Tensor& b, Matrix value) {
  const Tensor in[2] = {a, b};
  return record(op, in, std::move(value), 0.0, 0, 0);
}

Matrix step_mask(const Matrix& x, double neg) {
  return x.unaryExpr([neg](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? neg : 0.0); });
}

Matrix sign_mask(const Matrix& x) {
  return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Index argmax_first(const Matrix& x) {
  Index best = 0;
  for (Index i = 1; i < x.size(); ++i) {
    if (x.data()[i] > x.data()[best]) best = i;
  }
  return best;
}

}  // namespace

// Vector-Jacobian products, written with the public ops so that they record
// themselves when their inputs are tracked.
std::vector<Tensor> Graph::backward(const Tensor& root, std::span<const Tensor> wrt,
                                    bool create_graph) {
  if (root.rows() != 1 || root.cols() != 1) {
    throw ShapeError("backward: root must be a scalar, got " + shape_str(root));
  }
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  if (!root.tracked() || root.graph() != this) {
    for (const auto& w : wrt) out.push_back(Tensor::zeros(w.rows(), w.cols()));
    return out;
  }

  const std::size_t root_id = root.node();
  std::vector<char> relevant(root_id + 1, 0);
  for (const auto& w : wrt) {
    if (w.tracked() && w.graph() == this && w.node() <= root_id) relevant[w.node()] = 1;
  }
  for (std::size_t i = 0; i <= root_id; ++i) {
    if (relevant[i]) continue;
    const auto& n = nodes_[i];
    for (std::uint8_t k = 0; k < n.arity; ++k) {
      if (relevant[n.parents[k]]) {
        relevant[i] = 1;
        break;
      }
    }
  }

  std::vector<Tensor> grads(root_id + 1);
  std::vector<char> has(root_id + 1, 0);
  grads[root_id] = Tensor::scalar(1.0);
  has[root_id] = 1;

  auto accumulate = [&](std::size_t id, Tensor g) {
    if (!relevant[id]) return;
    if (has[id]) {
      grads[id] = add(grads[id], g);
    } else {
      grads[id] = std::move(g);
      has[id] = 1;
    }
  };

  for (std::size_t i = root_id + 1; i-- > 0;) {
    if (!has[i] || !relevant[i]) continue;
    // Copy what we need: pushing nodes below may reallocate nodes_.
    const Node n = nodes_[i];
    if (n.op == Op::Leaf || n.op == Op::Constant) continue;
    const Tensor g = grads[i];
    const Tensor y = view(i, create_graph);
    const Tensor a = view(n.parents[0], create_graph);
    const Tensor b = n.arity > 1 ? view(n.parents[1], create_graph) : Tensor();
    const bool need_a = relevant[n.parents[0]] != 0;
    const bool need_b = n.arity > 1 && relevant[n.parents[1]] != 0;

    switch (n.op) {
      case Op::MatMul:
        if (need_a) accumulate(n.parents[0], matmul(g, transpose(b)));
        if (need_b) accumulate(n.parents[1], matmul(transpose(a), g));
        break;
      case Op::Add:
      case Op::Sub: {
        if (need_a) accumulate(n.parents[0], g);
        if (need_b) {
          Tensor gb = (b.rows() == 1 && a.rows() != 1) ? sum_rows(g) : g;
          accumulate(n.parents[1], n.op == Op::Sub ? scale(gb, -1.0) : gb);
        }
        break;
      }
      case Op::Mul:
        if (need_a) accumulate(n.parents[0], mul(g, b));
        if (need_b) accumulate(n.parents[1], mul(g, a));
        break;
      case Op::Scale:
        accumulate(n.parents[0], scale(g, n.param));
        break;
      case Op::AddScalar:
        accumulate(n.parents[0], g);
        break;
      case Op::ConcatCols:
        if (need_a) accumulate(n.parents[0], slice_cols(g, 0, a.cols()));
        if (need_b) accumulate(n.parents[1], slice_cols(g, a.cols(), a.cols() + b.cols()));
        break;
      case Op::SliceCols:
        accumulate(n.parents[0], pad_cols(g, n.p0, a.cols()));
        break;
      case Op::PadCols:
        accumulate(n.parents[0], slice_cols(g, n.p0, n.p0 + a.cols()));
        break;
      case Op::Transpose:
        accumulate(n.parents[0], transpose(g));
        break;
      case Op::Relu:
        accumulate(n.parents[0], mul(g, Tensor(step_mask(a.value(), 0.0))));
        break;
      case Op::LRelu:
        accumulate(n.parents[0], mul(g, Tensor(step_mask(a.value(), n.param))));
        break;
      case Op::Tanh:
        accumulate(n.parents[0], mul(g, add_scalar(scale(square(y), -1.0), 1.0)));
        break;
      case Op::Sigmoid:
        accumulate(n.parents[0], mul(g, mul(y, add_scalar(scale(y, -1.0), 1.0))));
        break;
      case Op::Abs:
        accumulate(n.parents[0], mul(g, Tensor(sign_mask(a.value()))));
        break;
      case Op::Square:
        accumulate(n.parents[0], mul(g, scale(a, 2.0)));
        break;
      case Op::Sqrt:
        accumulate(n.parents[0], mul(g, scale(inv_or_zero(y), 0.5)));
        break;
      case Op::Exp:
        accumulate(n.parents[0], mul(g, y));
        break;
      case Op::Log:
        accumulate(n.parents[0], mul(g, inv_or_zero(a)));
        break;
      case Op::InvOrZero:
        accumulate(n.parents[0], mul(g, scale(square(y), -1.0)));
        break;
      case Op::SoftmaxRows: {
        Tensor inner = broadcast_cols(row_sums(mul(g, y)), y.cols());
        accumulate(n.parents[0], mul(y, sub(g, inner)));
        break;
      }
      case Op::MeanAll:
        accumulate(n.parents[0],
                   expand(scale(g, 1.0 / static_cast<double>(a.size())), a.rows(), a.cols()));
        break;
      case Op::SumAll:
        accumulate(n.parents[0], expand(g, a.rows(), a.cols()));
        break;
      case Op::SumRows:
        accumulate(n.parents[0], broadcast_rows(g, a.rows()));
        break;
      case Op::RowSums:
        accumulate(n.parents[0], broadcast_cols(g, a.cols()));
        break;
      case Op::DotRows: {
        Tensor gb = broadcast_cols(g, a.cols());
        if (need_a) accumulate(n.parents[0], mul(gb, b));
        if (need_b) accumulate(n.parents[1], mul(gb, a));
        break;
      }
      case Op::MaxAll: {
        Matrix onehot = Matrix::Zero(a.rows(), a.cols());
        onehot.data()[argmax_first(a.value())] = 1.0;
        accumulate(n.parents[0], mul(expand(g, a.rows(), a.cols()), Tensor(std::move(onehot))));
        break;
      }
      case Op::BroadcastRows:
        accumulate(n.parents[0], sum_rows(g));
        break;
      case Op::BroadcastCols:
        accumulate(n.parents[0], row_sums(g));
        break;
      case Op::Expand:
        accumulate(n.parents[0], sum_all(g));
        break;
      case Op::Leaf:
      case Op::Constant:
        break;
    }
  }

  for (const auto& w : wrt) {
    if (w.tracked() && w.graph() == this && w.node() <= root_id && has[w.node()]) {
      out.push_back(create_graph ? grads[w.node()] : grads[w.node()].detach());
    } else {
      out.push_back(Tensor::zeros(w.rows(), w.cols()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward operations

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_fail(Op::MatMul, a, b);
  Matrix v(a.rows(), b.cols());
  v.noalias() = a.value() * b.value();
  return record2(Op::MatMul, a, b, std::move(v));
}

namespace {

Matrix add_or_sub(Op op, const Tensor& a, const Tensor& b) {
  const double sign = op == Op::Sub ? -1.0 : 1.0;
  if (a.rows() == b.rows() && a.cols() == b.cols()) {
    return op == Op::Sub ? Matrix(a.value() - b.value()) : Matrix(a.value() + b.value());
  }
  if (b.rows() == 1 && a.cols() == b.cols()) {
    Matrix v = a.value();
    v.rowwise() += sign * b.value().row(0);
    return v;
  }
  shape_fail(op, a, b);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return record2(Op::Add, a, b, add_or_sub(Op::Add, a, b));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return record2(Op::Sub, a, b, add_or_sub(Op::Sub, a, b));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail(Op::Mul, a, b);
  return record2(Op::Mul, a, b, a.value().cwiseProduct(b.value()));
}

Tensor scale(const Tensor& a, double c) { return record1(Op::Scale, a, a.value() * c, c); }

Tensor add_scalar(const Tensor& a, double c) {
  return record1(Op::AddScalar, a, a.value().array() + c, c);
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) shape_fail(Op::ConcatCols, a, b);
  Matrix v(a.rows(), a.cols() + b.cols());
  v.leftCols(a.cols()) = a.value();
  v.rightCols(b.cols()) = b.value();
  return record2(Op::ConcatCols, a, b, std::move(v));
}

Tensor slice_cols(const Tensor& a, Index begin, Index end) {
  if (begin < 0 || end > a.cols() || begin > end) {
    shape_fail(Op::SliceCols, a,
               "column range [" + std::to_string(begin) + ", " + std::to_string(end) + ") invalid");
  }
  return record1(Op::SliceCols, a, a.value().middleCols(begin, end - begin), 0.0, begin, end);
}

Tensor pad_cols(const Tensor& a, Index offset, Index total) {
  if (offset < 0 || offset + a.cols() > total) {
    shape_fail(Op::PadCols, a,
               "offset " + std::to_string(offset) + " exceeds width " + std::to_string(total));
  }
  Matrix v = Matrix::Zero(a.rows(), total);
  v.middleCols(offset, a.cols()) = a.value();
  return record1(Op::PadCols, a, std::move(v), 0.0, offset, total);
}

Tensor transpose(const Tensor& a) { return record1(Op::Transpose, a, a.value().transpose()); }

Tensor relu(const Tensor& a) { return record1(Op::Relu, a, a.value().cwiseMax(0.0)); }

Tensor lrelu(const Tensor& a, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw DomainError("lrelu: slope must lie in (0,1), got " + std::to_string(slope));
  }
  Matrix v = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  return record1(Op::LRelu, a, std::move(v), slope);
}

Tensor tanh(const Tensor& a) { return record1(Op::Tanh, a, a.value().array().tanh()); }

Tensor sigmoid(const Tensor& a) {
  Matrix v = a.value().unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return record1(Op::Sigmoid, a, std::move(v));
}

Tensor abs(const Tensor& a) { return record1(Op::Abs, a, a.value().cwiseAbs()); }

Tensor square(const Tensor& a) { return record1(Op::Square, a, a.value().array().square()); }

Tensor sqrt(const Tensor& a) {
  if (a.size() > 0 && a.value().minCoeff() < 0.0) {
    throw DomainError("sqrt: negative entry " + std::to_string(a.value().minCoeff()));
  }
  return record1(Op::Sqrt, a, a.value().array().sqrt());
}

Tensor exp(const Tensor& a) {
  Matrix v = a.value().array().exp();
  if (!v.allFinite()) throw DomainError("exp: result overflows for input " + shape_str(a));
  return record1(Op::Exp, a, std::move(v));
}

Tensor log(const Tensor& a) {
  if (a.size() > 0 && !(a.value().minCoeff() > 0.0)) {
    throw DomainError("log: input must be strictly positive, min entry " +
                      std::to_string(a.value().minCoeff()));
  }
  return record1(Op::Log, a, a.value().array().log());
}

Tensor inv_or_zero(const Tensor& a) {
  Matrix v = a.value().unaryExpr([](double x) { return x == 0.0 ? 0.0 : 1.0 / x; });
  return record1(Op::InvOrZero, a, std::move(v));
}

Tensor softmax_rows(const Tensor& a) {
  Matrix v = a.value();
  for (Index i = 0; i < v.rows(); ++i) {
    const double m = v.row(i).maxCoeff();
    v.row(i) = (v.row(i).array() - m).exp();
    v.row(i) /= v.row(i).sum();
  }
  return record1(Op::SoftmaxRows, a, std::move(v));
}

Tensor mean_all(const Tensor& a) {
  if (a.size() == 0) shape_fail(Op::MeanAll, a, "empty input");
  Matrix v(1, 1);
  v(0, 0) = a.value().mean();
  return record1(Op::MeanAll, a, std::move(v));
}

Tensor sum_all(const Tensor& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return record1(Op::SumAll, a, std::move(v));
}

Tensor sum_rows(const Tensor& a) { return record1(Op::SumRows, a, a.value().colwise().sum()); }

Tensor row_sums(const Tensor& a) { return record1(Op::RowSums, a, a.value().rowwise().sum()); }

Tensor dot_rows(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail(Op::DotRows, a, b);
  return record2(Op::DotRows, a, b, a.value().cwiseProduct(b.value()).rowwise().sum());
}

Tensor max_all(const Tensor& a) {
  if (a.size() == 0) shape_fail(Op::MaxAll, a, "empty input");
  Matrix v(1, 1);
  v(0, 0) = a.value().data()[argmax_first(a.value())];
  return record1(Op::MaxAll, a, std::move(v));
}

Tensor broadcast_rows(const Tensor& row, Index rows) {
  if (row.rows() != 1) shape_fail(Op::BroadcastRows, row, "expected a single row");
  return record1(Op::BroadcastRows, row, row.value().replicate(rows, 1), 0.0, rows);
}

Tensor broadcast_cols(const Tensor& col, Index cols) {
  if (col.cols() != 1) shape_fail(Op::BroadcastCols, col, "expected a single column");
  return record1(Op::BroadcastCols, col, col.value().replicate(1, cols), 0.0, cols);
}

Tensor expand(const Tensor& scalar, Index rows, Index cols) {
  if (scalar.rows() != 1 || scalar.cols() != 1) shape_fail(Op::Expand, scalar, "expected 1x1");
  return record1(Op::Expand, scalar, Matrix::Constant(rows, cols, scalar.item()), 0.0, rows, cols);
}

Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& f, const Matrix& theta,
                            double step) {
  if (!(step > 0.0)) throw DomainError("finite_diff_gradient: step must be positive");
  Matrix grad(theta.rows(), theta.cols());
  Matrix probe = theta;
  for (Index i = 0; i < theta.size(); ++i) {
    const double x = theta.data()[i];
    probe.data()[i] = x + step;
    const double up = f(probe);
    probe.data()[i] = x - step;
    const double down = f(probe);
    probe.data()[i] = x;
    grad.data()[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace ptgan::ad
