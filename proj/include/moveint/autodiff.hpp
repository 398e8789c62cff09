#pragma once

#include <string>
#include <vector>

#include "moveint/common.hpp"

namespace moveint::ad {

// Named tensor list; owns model parameters. Order is the identity used by
// graphs, optimizers and checkpoints, so it must stay stable.
struct ParamStore {
  std::vector<std::string> names;
  std::vector<MatrixXd> tensors;

  int add(std::string name, MatrixXd init) {
    names.push_back(std::move(name));
    tensors.push_back(std::move(init));
    return static_cast<int>(tensors.size()) - 1;
  }
  int index_of(const std::string& name) const;
  std::size_t count() const { return tensors.size(); }
  std::size_t total_size() const;
  VectorXd flatten() const;
  void unflatten(const VectorXd& flat);
};

struct Value {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Node values are dense matrices (column vectors are
// n x 1). Parents always precede children, so reverse creation order is a
// valid backward schedule.
class Graph {
 public:
  Graph() = default;
  explicit Graph(const ParamStore* params) : params_(params) {}

  Value input(MatrixXd v);
  Value param(int index);  // leaf bound to params_->tensors[index]; cached per index

  Value matmul(Value a, Value b);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value cmul(Value a, Value b);
  Value cdiv(Value a, Value b);
  Value affine(Value a, double k, double c);  // k*a + c elementwise
  Value leaky_relu(Value a, double slope);
  Value sigmoid(Value a);
  Value tanh(Value a);
  Value exp(Value a);
  Value log(Value a);
  Value sqrt(Value a);
  Value clamp(Value a, double lo, double hi);
  Value softmax(Value a);  // column vector
  Value sum(Value a);      // 1x1
  Value dot(Value a, Value b);  // Frobenius inner product, 1x1
  Value slice_rows(Value a, int first, int count);

  const MatrixXd& value(Value v) const { return nodes_[v.id].value; }
  double scalar(Value v) const;

  // Accumulates d(loss)/d(param) for every param leaf into param_grads().
  void backward(Value loss);
  const std::vector<MatrixXd>& param_grads() const { return param_grads_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    kInput, kParam, kMatMul, kAdd, kSub, kCMul, kCDiv, kAffine, kLeakyRelu,
    kSigmoid, kTanh, kExp, kLog, kSqrt, kClamp, kSoftmax, kSum, kDot, kSliceRows,
  };
  struct Node {
    Op op;
    int a = -1, b = -1;
    double d0 = 0.0, d1 = 0.0;
    int i0 = 0, i1 = 0;
    MatrixXd value;
    MatrixXd grad;  // empty until touched by backward
  };

  Value push(Node n);
  MatrixXd& grad_slot(int id);

  const ParamStore* params_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<int> param_leaf_;  // param index -> node id (or -1)
  std::vector<MatrixXd> param_grads_;
};

}  // namespace moveint::ad
