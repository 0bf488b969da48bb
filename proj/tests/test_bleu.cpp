#include <doctest.h>

#include <algorithm>
#include <random>

#include "emomt/bleu.hpp"
#include "emomt/error.hpp"
#include "emomt/jsonl.hpp"
#include "testkit.hpp"

using namespace emomt;

namespace {

const json& fixtures() {
  static const json j = read_json_file(testkit::fixture("bleu_fixtures.json"));
  return j;
}

std::vector<EvalPair> pairs_of(const json& arr) {
  std::vector<EvalPair> out;
  for (const auto& p : arr) out.push_back({p[0].get<std::string>(), p[1].get<std::string>()});
  return out;
}

void check_against(const json& expected, const BleuScore& got) {
  CHECK(std::abs(got.score - expected["score"].get<double>()) <= 0.05);
  CHECK(got.hyp_len == expected["sys_len"].get<std::size_t>());
  CHECK(got.ref_len == expected["ref_len"].get<std::size_t>());
  CHECK(got.brevity_penalty == doctest::Approx(expected["bp"].get<double>()));
  for (std::size_t n = 0; n < kBleuMaxOrder; ++n) {
    CHECK(got.correct[n] == expected["counts"][n].get<std::size_t>());
    CHECK(got.total[n] == expected["totals"][n].get<std::size_t>());
  }
}

}  // namespace

TEST_SUITE("bleu") {
  TEST_CASE("identity corpus scores exactly 100") {
    std::vector<EvalPair> pairs;
    for (const auto& p : fixtures()["mixed_50"]["pairs"]) pairs.push_back({p[1], p[1]});
    const auto s = corpus_bleu(pairs);
    CHECK(s.score == 100.0);
    CHECK(s.brevity_penalty == 1.0);
    CHECK(s.hyp_len == fixtures()["identity"]["sys_len"].get<std::size_t>());
    for (double p : s.precisions) CHECK(p == 1.0);
  }

  TEST_CASE("no shared unigrams") {
    const auto& fx = fixtures()["no_overlap"];
    check_against(fx, corpus_bleu(pairs_of(fx["pairs"])));
  }

  TEST_CASE("50-pair mixed corpus") {
    const auto& fx = fixtures()["mixed_50"];
    REQUIRE(fx["pairs"].size() == 50);
    check_against(fx, corpus_bleu(pairs_of(fx["pairs"])));
  }

  TEST_CASE("200 random corpora") {
    const auto& corpora = fixtures()["random"];
    REQUIRE(corpora.size() == 200);
    int within = 0;
    for (const auto& fx : corpora) {
      const auto s = corpus_bleu(pairs_of(fx["pairs"]));
      within += std::abs(s.score - fx["score"].get<double>()) <= 0.05;
      check_against(fx, s);
    }
    CHECK(within == 200);
  }

  TEST_CASE("13a tokenizer matches reference tokens") {
    for (const auto& c : fixtures()["tokenizer"]) {
      const std::string in = c["input"];
      CAPTURE(in);
      CHECK(tokenize_13a(in) == c["tokens"].get<std::vector<std::string>>());
    }
  }

  TEST_CASE("permutation invariance") {
    auto pairs = pairs_of(fixtures()["mixed_50"]["pairs"]);
    const double base = corpus_bleu(pairs).score;
    std::mt19937 rng(9);
    for (int i = 0; i < 5; ++i) {
      std::shuffle(pairs.begin(), pairs.end(), rng);
      CHECK(corpus_bleu(pairs).score == doctest::Approx(base).epsilon(1e-12));
    }
  }

  TEST_CASE("range, perfection and brevity") {
    auto pairs = pairs_of(fixtures()["mixed_50"]["pairs"]);
    const auto full = corpus_bleu(pairs);
    CHECK(full.score >= 0.0);
    CHECK(full.score < 100.0);

    auto truncated = pairs;
    for (auto& p : truncated) {
      const auto cut = p.hypothesis.rfind(' ');
      if (cut != std::string::npos) p.hypothesis.resize(cut);
    }
    const auto shorter = corpus_bleu(truncated);
    CHECK(shorter.hyp_len <= full.hyp_len);
    CHECK(shorter.brevity_penalty <= full.brevity_penalty);

    // Equal token sequences with different spacing still score 100.
    CHECK(corpus_bleu(std::vector<EvalPair>{{"Bonjour , le monde !", "Bonjour, le monde!"},
                                            {"a b c d e", "a  b c d e"}})
              .score == 100.0);
    // Short hypotheses without 4-grams never reach 100.
    CHECK(corpus_bleu(std::vector<EvalPair>{{"oui", "oui"}}).score < 100.0);
  }

  TEST_CASE("empty inputs") {
    CHECK_THROWS_AS(corpus_bleu(std::vector<EvalPair>{}), UsageError);
    CHECK_THROWS_AS(corpus_bleu(std::vector<EvalPair>{{"a", ""}}), UsageError);
    const auto s = corpus_bleu(std::vector<EvalPair>{{"", "le chat"}, {"le chien est là", "le chien est là"}});
    CHECK(s.score > 0.0);
    CHECK(s.brevity_penalty < 1.0);
    CHECK(corpus_bleu(std::vector<EvalPair>{{"", "le chat"}}).score == 0.0);
  }
}
