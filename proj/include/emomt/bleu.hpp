#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emomt {

struct EvalPair {
  std::string hypothesis;
  std::string reference;
};

inline constexpr int kBleuMaxOrder = 4;

struct BleuScore {
  double score = 0.0;                               // 0..100
  std::array<double, kBleuMaxOrder> precisions{};   // 0..1, after smoothing
  double brevity_penalty = 1.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  std::array<std::size_t, kBleuMaxOrder> correct{};
  std::array<std::size_t, kBleuMaxOrder> total{};
};

// mteval-v13a tokenization as done by sacreBLEU's default "13a" tokenizer:
// drop <skipped>, join "-\n" hyphenations, unescape the four common HTML
// entities, pad ASCII punctuation/symbols, split '.' and ',' unless a digit
// sits on the relevant side, split '-' after a digit, collapse whitespace.
// Case is preserved. Input is UTF-8; malformed bytes become U+FFFD.
std::vector<std::string> tokenize_13a(std::string_view line);

// Corpus BLEU-4 from clipped n-gram counts accumulated over all pairs, with the
// exponential ("exp") smoothing of zero-match orders and brevity penalty
// exp(1 - ref_len / hyp_len) for short output. Matches sacreBLEU's corpus_bleu
// defaults, including a 0 score when no n-gram of any order matches.
// Throws UsageError on an empty collection or an empty reference.
BleuScore corpus_bleu(std::span<const EvalPair> pairs);

}  // namespace emomt
