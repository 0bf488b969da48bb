#include <doctest.h>

#include <functional>
#include <random>

#include "emomt/toy/seq2seq.hpp"
#include "emomt/toy/tape.hpp"

using namespace emomt::toy;

namespace {

Parameter random_param(const std::string& name, int r, int c, std::mt19937_64& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -1.0f, 1.0f);
  return Parameter(name, m);
}

// Central differences in double-checked float; returns the max abs error.
double grad_error(std::vector<Parameter*> params, const std::function<Tape::Var(Tape&)>& f) {
  for (auto* p : params) p->grad.setZero();
  {
    Tape t;
    t.backward(f(t));
  }
  double worst = 0.0;
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const float old = p->value.data()[i];
      constexpr float h = 1e-2f;
      p->value.data()[i] = old + h;
      double up;
      {
        Tape t;
        up = t.scalar(f(t));
      }
      p->value.data()[i] = old - h;
      double down;
      {
        Tape t;
        down = t.scalar(f(t));
      }
      p->value.data()[i] = old;
      worst = std::max(worst, std::abs((up - down) / (2.0 * h) - p->grad.data()[i]));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("tape") {
  TEST_CASE("elementwise and matrix ops") {
    std::mt19937_64 rng(1);
    auto a = random_param("a", 4, 3, rng);
    auto b = random_param("b", 3, 2, rng);
    auto c = random_param("c", 4, 2, rng);
    auto bias = random_param("bias", 4, 1, rng);
    auto err = grad_error({&a, &b, &c, &bias}, [&](Tape& t) {
      auto ab = t.matmul(t.param(a), t.param(b));
      auto x = t.add_bias(t.mul(t.tanh(ab), t.sigmoid(t.param(c))), t.param(bias));
      auto y = t.sub(x, t.param(c));
      auto tn = t.matmul_tn(t.param(c), y);  // 2x2
      return t.cross_entropy(t.vcat({t.col(tn, 0), t.rows(t.col(tn, 1), 1, 1)}), 2);
    });
    CHECK(err < 2e-3);
  }

  TEST_CASE("embedding, concatenation and softmax") {
    std::mt19937_64 rng(2);
    auto table = random_param("table", 3, 5, rng);
    auto w = random_param("w", 4, 3, rng);
    auto err = grad_error({&table, &w}, [&](Tape& t) {
      auto e0 = t.embed(table, 1);
      auto e1 = t.embed(table, 4);
      auto e2 = t.embed(table, 1);
      auto m = t.hcat({e0, e1, e2});
      auto k = t.matmul(t.param(w), m);
      auto att = t.softmax(t.col(k, 2));
      auto ctx = t.matmul(k, t.rows(att, 0, 3));
      return t.sum({t.cross_entropy(ctx, 0), t.cross_entropy(t.col(k, 0), 3)});
    });
    CHECK(err < 2e-3);
  }

  TEST_CASE("full model loss gradient") {
    ToyConfig cfg;
    cfg.embed_dim = 4;
    cfg.encoder_hidden = 3;
    cfg.decoder_hidden = 5;
    Seq2Seq model(cfg, 3);
    auto params = model.parameters();
    // Restrict to small tensors and touched embedding columns to keep this fast.
    std::vector<Parameter*> small;
    for (auto* p : params)
      if (p->value.size() <= 400) small.push_back(p);
    auto err = grad_error(small, [&](Tape& t) {
      int n = 0;
      return model.loss(t, "ab c", "xy", &n);
    });
    CHECK(err < 5e-3);
  }

  TEST_CASE("softmax and cross entropy values") {
    Tape t;
    Matrix logits(3, 1);
    logits << 1.0f, 2.0f, 3.0f;
    auto v = t.constant(logits);
    auto s = t.softmax(v);
    CHECK(t.value(s).sum() == doctest::Approx(1.0));
    CHECK(t.scalar(t.cross_entropy(v, 2)) == doctest::Approx(std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)) - 3.0));
  }
}
