#include "emomt/toy/tape.hpp"

#include <cassert>
#include <cmath>

namespace emomt::toy {

Parameter::Parameter(std::string n, Matrix v)
    : name(std::move(n)), value(std::move(v)),
      grad(Matrix::Zero(value.rows(), value.cols())),
      adam_m(Matrix::Zero(value.rows(), value.cols())),
      adam_v(Matrix::Zero(value.rows(), value.cols())) {}

Tape::Var Tape::push(Matrix value, std::function<void()> back) {
  nodes_.push_back({std::move(value), Matrix(), std::move(back)});
  return {static_cast<int>(nodes_.size()) - 1};
}

Tape::Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{it->second};
  Var out{static_cast<int>(nodes_.size())};
  param_nodes_.emplace(&p, out.id);
  return push(p.value, [this, out, &p] { p.grad += grad(out); });
}

Tape::Var Tape::constant(Matrix m) { return push(std::move(m)); }

Tape::Var Tape::embed(Parameter& table, int index) {
  assert(index >= 0 && index < table.value.cols());
  Var out{static_cast<int>(nodes_.size())};
  return push(table.value.col(index), [this, out, &table, index] { table.grad.col(index) += grad(out); });
}

Tape::Var Tape::matmul(Var a, Var b) {
  Var out{static_cast<int>(nodes_.size())};
  return push(val(a) * val(b), [this, out, a, b] {
    grad(a).noalias() += grad(out) * val(b).transpose();
    grad(b).noalias() += val(a).transpose() * grad(out);
  });
}

Tape::Var Tape::matmul_tn(Var a, Var b) {
  Var out{static_cast<int>(nodes_.size())};
  return push(val(a).transpose() * val(b), [this, out, a, b] {
    grad(a).noalias() += val(b) * grad(out).transpose();
    grad(b).noalias() += val(a) * grad(out);
  });
}

Tape::Var Tape::add(Var a, Var b) {
  Var out{static_cast<int>(nodes_.size())};
  return push(val(a) + val(b), [this, out, a, b] {
    grad(a) += grad(out);
    grad(b) += grad(out);
  });
}

Tape::Var Tape::sub(Var a, Var b) {
  Var out{static_cast<int>(nodes_.size())};
  return push(val(a) - val(b), [this, out, a, b] {
    grad(a) += grad(out);
    grad(b) -= grad(out);
  });
}

Tape::Var Tape::mul(Var a, Var b) {
  Var out{static_cast<int>(nodes_.size())};
  return push(val(a).cwiseProduct(val(b)), [this, out, a, b] {
    grad(a) += grad(out).cwiseProduct(val(b));
    grad(b) += grad(out).cwiseProduct(val(a));
  });
}

Tape::Var Tape::add_bias(Var a, Var bias) {
  Var out{static_cast<int>(nodes_.size())};
  Matrix v = val(a);
  v.colwise() += val(bias).col(0);
  return push(std::move(v), [this, out, a, bias] {
    grad(a) += grad(out);
    grad(bias) += grad(out).rowwise().sum();
  });
}

Tape::Var Tape::tanh(Var a) {
  Var out{static_cast<int>(nodes_.size())};
  return push(val(a).array().tanh().matrix(), [this, out, a] {
    const auto& y = val(out).array();
    grad(a).array() += grad(out).array() * (1.0f - y * y);
  });
}

Tape::Var Tape::sigmoid(Var a) {
  Var out{static_cast<int>(nodes_.size())};
  Matrix y = (1.0f / (1.0f + (-val(a).array()).exp())).matrix();
  return push(std::move(y), [this, out, a] {
    const auto& y = val(out).array();
    grad(a).array() += grad(out).array() * y * (1.0f - y);
  });
}

Tape::Var Tape::rows(Var a, int start, int count) {
  Var out{static_cast<int>(nodes_.size())};
  return push(val(a).middleRows(start, count), [this, out, a, start, count] {
    grad(a).middleRows(start, count) += grad(out);
  });
}

Tape::Var Tape::col(Var a, int index) {
  Var out{static_cast<int>(nodes_.size())};
  return push(val(a).col(index), [this, out, a, index] { grad(a).col(index) += grad(out); });
}

Tape::Var Tape::vcat(const std::vector<Var>& parts) {
  Eigen::Index total = 0;
  for (auto p : parts) total += val(p).rows();
  Matrix v(total, 1);
  Eigen::Index at = 0;
  for (auto p : parts) {
    v.middleRows(at, val(p).rows()) = val(p);
    at += val(p).rows();
  }
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(v), [this, out, parts] {
    Eigen::Index at = 0;
    for (auto p : parts) {
      grad(p) += grad(out).middleRows(at, val(p).rows());
      at += val(p).rows();
    }
  });
}

Tape::Var Tape::hcat(const std::vector<Var>& cols) {
  assert(!cols.empty());
  Matrix v(val(cols.front()).rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) v.col(static_cast<Eigen::Index>(i)) = val(cols[i]);
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(v), [this, out, cols] {
    for (std::size_t i = 0; i < cols.size(); ++i) grad(cols[i]) += grad(out).col(static_cast<Eigen::Index>(i));
  });
}

Tape::Var Tape::softmax(Var a) {
  Matrix y = (val(a).array() - val(a).maxCoeff()).exp().matrix();
  y /= y.sum();
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), [this, out, a] {
    const Matrix& y = val(out);
    const float dot = grad(out).cwiseProduct(y).sum();
    grad(a).array() += y.array() * (grad(out).array() - dot);
  });
}

Tape::Var Tape::cross_entropy(Var logits, int target) {
  const Matrix& z = val(logits);
  const float m = z.maxCoeff();
  const float lse = m + std::log((z.array() - m).exp().sum());
  Matrix loss(1, 1);
  loss(0, 0) = lse - z(target, 0);
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(loss), [this, out, logits, target, lse] {
    Matrix p = (val(logits).array() - lse).exp().matrix();
    p(target, 0) -= 1.0f;
    grad(logits) += grad(out)(0, 0) * p;
  });
}

Tape::Var Tape::sum(const std::vector<Var>& scalars) {
  Matrix s = Matrix::Zero(1, 1);
  for (auto v : scalars) s += val(v);
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(s), [this, out, scalars] {
    for (auto v : scalars) grad(v) += grad(out);
  });
}

void Tape::backward(Var root) {
  for (auto& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_[root.id].grad.setOnes();
  for (int i = root.id; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back();
  }
}

}  // namespace emomt::toy
