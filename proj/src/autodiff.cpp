#include "moveint/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace moveint::ad {

int ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("ParamStore: no tensor named " + name);
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

VectorXd ParamStore::flatten() const {
  VectorXd flat(total_size());
  Eigen::Index off = 0;
  for (const auto& t : tensors) {
    flat.segment(off, t.size()) = Eigen::Map<const VectorXd>(t.data(), t.size());
    off += t.size();
  }
  return flat;
}

void ParamStore::unflatten(const VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != total_size())
    throw std::invalid_argument("ParamStore::unflatten: size mismatch");
  Eigen::Index off = 0;
  for (auto& t : tensors) {
    Eigen::Map<VectorXd>(t.data(), t.size()) = flat.segment(off, t.size());
    off += t.size();
  }
}

Value Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Value Graph::input(MatrixXd v) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(v);
  return push(std::move(n));
}

Value Graph::param(int index) {
  if (params_ == nullptr) throw std::logic_error("Graph has no bound ParamStore");
  if (param_leaf_.size() < params_->count()) param_leaf_.resize(params_->count(), -1);
  if (param_leaf_[index] >= 0) return {param_leaf_[index]};
  Node n;
  n.op = Op::kParam;
  n.i0 = index;
  n.value = params_->tensors[index];
  Value v = push(std::move(n));
  param_leaf_[index] = v.id;
  return v;
}

namespace {
void check_same_shape(const MatrixXd& a, const MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}
}  // namespace

Value Graph::matmul(Value a, Value b) {
  const MatrixXd& va = nodes_[a.id].value;
  const MatrixXd& vb = nodes_[b.id].value;
  if (va.cols() != vb.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Node n;
  n.op = Op::kMatMul;
  n.a = a.id;
  n.b = b.id;
  n.value = va * vb;
  return push(std::move(n));
}

#define MOVEINT_BINOP(NAME, OP_ENUM, EXPR)                          \
  Value Graph::NAME(Value a, Value b) {                             \
    const MatrixXd& va = nodes_[a.id].value;                        \
    const MatrixXd& vb = nodes_[b.id].value;                        \
    check_same_shape(va, vb, #NAME);                                \
    Node n;                                                         \
    n.op = Op::OP_ENUM;                                             \
    n.a = a.id;                                                     \
    n.b = b.id;                                                     \
    n.value = EXPR;                                                 \
    return push(std::move(n));                                      \
  }

MOVEINT_BINOP(add, kAdd, va + vb)
MOVEINT_BINOP(sub, kSub, va - vb)
MOVEINT_BINOP(cmul, kCMul, va.cwiseProduct(vb))
MOVEINT_BINOP(cdiv, kCDiv, va.cwiseQuotient(vb))
#undef MOVEINT_BINOP

Value Graph::affine(Value a, double k, double c) {
  Node n;
  n.op = Op::kAffine;
  n.a = a.id;
  n.d0 = k;
  n.d1 = c;
  n.value = (k * nodes_[a.id].value.array() + c).matrix();
  return push(std::move(n));
}

Value Graph::leaky_relu(Value a, double slope) {
  Node n;
  n.op = Op::kLeakyRelu;
  n.a = a.id;
  n.d0 = slope;
  const auto& x = nodes_[a.id].value.array();
  n.value = (x >= 0.0).select(x, slope * x).matrix();
  return push(std::move(n));
}

Value Graph::sigmoid(Value a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a.id;
  n.value = (1.0 / (1.0 + (-nodes_[a.id].value.array()).exp())).matrix();
  return push(std::move(n));
}

Value Graph::tanh(Value a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a.id;
  n.value = nodes_[a.id].value.array().tanh().matrix();
  return push(std::move(n));
}

Value Graph::exp(Value a) {
  Node n;
  n.op = Op::kExp;
  n.a = a.id;
  n.value = nodes_[a.id].value.array().exp().matrix();
  return push(std::move(n));
}

Value Graph::log(Value a) {
  Node n;
  n.op = Op::kLog;
  n.a = a.id;
  n.value = nodes_[a.id].value.array().log().matrix();
  return push(std::move(n));
}

Value Graph::sqrt(Value a) {
  Node n;
  n.op = Op::kSqrt;
  n.a = a.id;
  n.value = nodes_[a.id].value.array().sqrt().matrix();
  return push(std::move(n));
}

Value Graph::clamp(Value a, double lo, double hi) {
  Node n;
  n.op = Op::kClamp;
  n.a = a.id;
  n.d0 = lo;
  n.d1 = hi;
  n.value = nodes_[a.id].value.cwiseMax(lo).cwiseMin(hi);
  return push(std::move(n));
}

Value Graph::softmax(Value a) {
  const MatrixXd& x = nodes_[a.id].value;
  if (x.cols() != 1) throw std::invalid_argument("softmax: expects a column vector");
  Node n;
  n.op = Op::kSoftmax;
  n.a = a.id;
  Eigen::ArrayXd e = (x.col(0).array() - x.col(0).maxCoeff()).exp();
  n.value = (e / e.sum()).matrix();
  return push(std::move(n));
}

Value Graph::sum(Value a) {
  Node n;
  n.op = Op::kSum;
  n.a = a.id;
  n.value = MatrixXd::Constant(1, 1, nodes_[a.id].value.sum());
  return push(std::move(n));
}

Value Graph::dot(Value a, Value b) {
  const MatrixXd& va = nodes_[a.id].value;
  const MatrixXd& vb = nodes_[b.id].value;
  check_same_shape(va, vb, "dot");
  Node n;
  n.op = Op::kDot;
  n.a = a.id;
  n.b = b.id;
  n.value = MatrixXd::Constant(1, 1, va.cwiseProduct(vb).sum());
  return push(std::move(n));
}

Value Graph::slice_rows(Value a, int first, int count) {
  const MatrixXd& va = nodes_[a.id].value;
  if (first < 0 || count < 0 || first + count > va.rows())
    throw std::invalid_argument("slice_rows: out of range");
  Node n;
  n.op = Op::kSliceRows;
  n.a = a.id;
  n.i0 = first;
  n.i1 = count;
  n.value = va.middleRows(first, count);
  return push(std::move(n));
}

double Graph::scalar(Value v) const {
  const MatrixXd& m = nodes_[v.id].value;
  if (m.size() != 1) throw std::invalid_argument("scalar: node is not 1x1");
  return m(0, 0);
}

MatrixXd& Graph::grad_slot(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = MatrixXd::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(Value loss) {
  if (nodes_[loss.id].value.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  param_grads_.assign(params_ ? params_->count() : 0, MatrixXd());
  grad_slot(loss.id)(0, 0) = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;  // not on any path to the loss
    const MatrixXd& g = n.grad;
    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kParam: {
        MatrixXd& pg = param_grads_[n.i0];
        if (pg.size() == 0)
          pg = g;
        else
          pg += g;
        break;
      }
      case Op::kMatMul:
        grad_slot(n.a) += g * nodes_[n.b].value.transpose();
        grad_slot(n.b) += nodes_[n.a].value.transpose() * g;
        break;
      case Op::kAdd:
        grad_slot(n.a) += g;
        grad_slot(n.b) += g;
        break;
      case Op::kSub:
        grad_slot(n.a) += g;
        grad_slot(n.b) -= g;
        break;
      case Op::kCMul:
        grad_slot(n.a) += g.cwiseProduct(nodes_[n.b].value);
        grad_slot(n.b) += g.cwiseProduct(nodes_[n.a].value);
        break;
      case Op::kCDiv:
        grad_slot(n.a) += g.cwiseQuotient(nodes_[n.b].value);
        grad_slot(n.b) -= g.cwiseProduct(n.value).cwiseQuotient(nodes_[n.b].value);
        break;
      case Op::kAffine:
        grad_slot(n.a) += n.d0 * g;
        break;
      case Op::kLeakyRelu: {
        const auto& x = nodes_[n.a].value.array();
        grad_slot(n.a) +=
            (g.array() * (x >= 0.0).select(Eigen::ArrayXXd::Ones(x.rows(), x.cols()),
                                           Eigen::ArrayXXd::Constant(x.rows(), x.cols(), n.d0)))
                .matrix();
        break;
      }
      case Op::kSigmoid:
        grad_slot(n.a) +=
            (g.array() * n.value.array() * (1.0 - n.value.array())).matrix();
        break;
      case Op::kTanh:
        grad_slot(n.a) += (g.array() * (1.0 - n.value.array().square())).matrix();
        break;
      case Op::kExp:
        grad_slot(n.a) += g.cwiseProduct(n.value);
        break;
      case Op::kLog:
        grad_slot(n.a) += g.cwiseQuotient(nodes_[n.a].value);
        break;
      case Op::kSqrt:
        grad_slot(n.a) += (0.5 * g.array() / n.value.array()).matrix();
        break;
      case Op::kClamp: {
        const auto& x = nodes_[n.a].value.array();
        grad_slot(n.a) +=
            (g.array() * ((x >= n.d0) && (x <= n.d1)).cast<double>()).matrix();
        break;
      }
      case Op::kSoftmax: {
        const Eigen::ArrayXd y = n.value.col(0).array();
        const Eigen::ArrayXd gc = g.col(0).array();
        const double inner = (gc * y).sum();
        grad_slot(n.a).col(0) += (y * (gc - inner)).matrix();
        break;
      }
      case Op::kSum:
        grad_slot(n.a).array() += g(0, 0);
        break;
      case Op::kDot:
        grad_slot(n.a) += g(0, 0) * nodes_[n.b].value;
        grad_slot(n.b) += g(0, 0) * nodes_[n.a].value;
        break;
      case Op::kSliceRows:
        grad_slot(n.a).middleRows(n.i0, n.i1) += g;
        break;
    }
  }
  // Zero-fill grads for params never touched by this graph.
  if (params_) {
    for (std::size_t i = 0; i < param_grads_.size(); ++i)
      if (param_grads_[i].size() == 0)
        param_grads_[i] =
            MatrixXd::Zero(params_->tensors[i].rows(), params_->tensors[i].cols());
  }
}

}  // namespace moveint::ad
