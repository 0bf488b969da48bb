#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace emomt::toy {

using Matrix = Eigen::MatrixXf;

// A trainable tensor with its gradient accumulator and Adam moments.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  Parameter() = default;
  Parameter(std::string n, Matrix v);
};

// Reverse-mode autodiff over small dense matrices. A tape records one
// forward pass; backward() replays it in reverse, adding gradients into the
// Parameters that were read. Vectors are single-column matrices.
class Tape {
 public:
  struct Var {
    int id = -1;
  };

  Var param(Parameter& p);
  Var constant(Matrix m);
  // Column `index` of an embedding table.
  Var embed(Parameter& table, int index);

  Var matmul(Var a, Var b);     // a * b
  Var matmul_tn(Var a, Var b);  // a^T * b
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);        // elementwise
  Var add_bias(Var a, Var bias);  // bias column broadcast over every column of a
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var rows(Var a, int start, int count);
  Var col(Var a, int index);
  Var vcat(const std::vector<Var>& parts);  // stack column vectors
  Var hcat(const std::vector<Var>& cols);   // side-by-side column vectors
  Var softmax(Var a);                       // over a column vector
  // -log softmax(logits)[target], a 1x1 result.
  Var cross_entropy(Var logits, int target);
  Var sum(const std::vector<Var>& scalars);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  float scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root) = 1 and propagates. Call at most once per tape.
  void backward(Var root);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> back;
  };

  Var push(Matrix value, std::function<void()> back = {});
  Matrix& grad(Var v) { return nodes_[v.id].grad; }
  const Matrix& val(Var v) const { return nodes_[v.id].value; }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;  // one node per parameter per tape
};

}  // namespace emomt::toy
