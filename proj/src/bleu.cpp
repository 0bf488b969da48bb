#include "emomt/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "emomt/error.hpp"

namespace emomt {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (int k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlongs, surrogates and out-of-range values.
    if (ok && ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
               (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF)) {
      ok = false;
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Python's str.isspace() set, which drives str.split() and str.rstrip().
bool is_py_space(char32_t c) {
  if ((c >= 0x09 && c <= 0x0D) || (c >= 0x1C && c <= 0x20)) return true;
  switch (c) {
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
bool is_period_comma(char32_t c) { return c == U'.' || c == U','; }

// [{-~[-` -&(-+:-@/]
bool is_padded_symbol(char32_t c) {
  return (c >= 0x7B && c <= 0x7E) || (c >= 0x5B && c <= 0x60) || (c >= 0x20 && c <= 0x26) ||
         (c >= 0x28 && c <= 0x2B) || (c >= 0x3A && c <= 0x40) || c == U'/';
}

void replace_all(std::u32string& s, std::u32string_view from, std::u32string_view to) {
  std::u32string out;
  std::size_t pos = 0;
  while (true) {
    const auto hit = s.find(from, pos);
    if (hit == std::u32string::npos) break;
    out.append(s, pos, hit - pos);
    out.append(to);
    pos = hit + from.size();
  }
  if (pos == 0) return;
  out.append(s, pos, std::u32string::npos);
  s = std::move(out);
}

// Non-overlapping left-to-right rewrite of two-character matches, the way
// re.sub treats a fixed-width two-group pattern.
template <typename Match, typename Emit>
std::u32string rewrite_pairs(const std::u32string& s, Match match, Emit emit) {
  std::u32string out;
  out.reserve(s.size() + s.size() / 2);
  std::size_t i = 0;
  while (i < s.size()) {
    if (i + 1 < s.size() && match(s[i], s[i + 1])) {
      emit(out, s[i], s[i + 1]);
      i += 2;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

struct Segment {
  std::unordered_map<std::string, std::size_t> ngrams;
  std::size_t length = 0;
};

Segment count_ngrams(const std::vector<std::string>& tokens) {
  Segment seg;
  seg.length = tokens.size();
  for (int n = 1; n <= kBleuMaxOrder; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string key = tokens[i];
      for (int k = 1; k < n; ++k) {
        key.push_back(' ');
        key += tokens[i + k];
      }
      ++seg.ngrams[key];
    }
  }
  return seg;
}

int order_of(const std::string& key) { return 1 + static_cast<int>(std::count(key.begin(), key.end(), ' ')); }

double floored_log(double x) { return x == 0.0 ? -9999999999.0 : std::log(x); }

}  // namespace

std::vector<std::string> tokenize_13a(std::string_view line) {
  std::u32string s = decode_utf8(line);
  while (!s.empty() && is_py_space(s.back())) s.pop_back();

  replace_all(s, U"<skipped>", U"");
  replace_all(s, U"-\n", U"");
  replace_all(s, U"\n", U" ");
  if (s.find(U'&') != std::u32string::npos) {
    replace_all(s, U"&quot;", U"\"");
    replace_all(s, U"&amp;", U"&");
    replace_all(s, U"&lt;", U"<");
    replace_all(s, U"&gt;", U">");
  }

  std::u32string padded;
  padded.reserve(s.size() * 2 + 2);
  padded.push_back(U' ');
  for (char32_t c : s) {
    if (is_padded_symbol(c)) {
      padded.push_back(U' ');
      padded.push_back(c);
      padded.push_back(U' ');
    } else {
      padded.push_back(c);
    }
  }
  padded.push_back(U' ');

  s = rewrite_pairs(
      padded, [](char32_t a, char32_t b) { return !is_digit(a) && is_period_comma(b); },
      [](std::u32string& o, char32_t a, char32_t b) { o += a; o += U' '; o += b; o += U' '; });
  s = rewrite_pairs(
      s, [](char32_t a, char32_t b) { return is_period_comma(a) && !is_digit(b); },
      [](std::u32string& o, char32_t a, char32_t b) { o += U' '; o += a; o += U' '; o += b; });
  s = rewrite_pairs(
      s, [](char32_t a, char32_t b) { return is_digit(a) && b == U'-'; },
      [](std::u32string& o, char32_t a, char32_t b) { o += a; o += U' '; o += b; o += U' '; });

  std::vector<std::string> tokens;
  std::string current;
  bool in_token = false;
  for (char32_t c : s) {
    if (is_py_space(c)) {
      if (in_token) tokens.push_back(std::move(current));
      current.clear();
      in_token = false;
    } else {
      append_utf8(current, c);
      in_token = true;
    }
  }
  if (in_token) tokens.push_back(std::move(current));
  return tokens;
}

BleuScore corpus_bleu(std::span<const EvalPair> pairs) {
  if (pairs.empty()) throw UsageError("corpus_bleu needs at least one pair");

  BleuScore out;
  for (const auto& p : pairs) {
    if (p.reference.empty()) throw UsageError("corpus_bleu: empty reference");
    const Segment hyp = count_ngrams(tokenize_13a(p.hypothesis));
    const Segment ref = count_ngrams(tokenize_13a(p.reference));
    out.hyp_len += hyp.length;
    out.ref_len += ref.length;
    for (int n = 1; n <= kBleuMaxOrder; ++n) {
      if (hyp.length >= static_cast<std::size_t>(n)) out.total[n - 1] += hyp.length - n + 1;
    }
    for (const auto& [gram, count] : hyp.ngrams) {
      auto it = ref.ngrams.find(gram);
      if (it != ref.ngrams.end()) out.correct[order_of(gram) - 1] += std::min(count, it->second);
    }
  }

  if (out.hyp_len < out.ref_len) {
    out.brevity_penalty = out.hyp_len > 0
        ? std::exp(1.0 - static_cast<double>(out.ref_len) / static_cast<double>(out.hyp_len))
        : 0.0;
  }

  const bool any_match = std::any_of(out.correct.begin(), out.correct.end(), [](std::size_t c) { return c > 0; });
  if (!any_match) return out;

  // Percent-scale precisions, exactly as the reference scorer carries them.
  std::array<double, kBleuMaxOrder> pct{};
  double smooth = 1.0;
  for (int n = 0; n < kBleuMaxOrder; ++n) {
    if (out.total[n] == 0) break;
    if (out.correct[n] == 0) {
      smooth *= 2.0;
      pct[n] = 100.0 / (smooth * static_cast<double>(out.total[n]));
    } else {
      pct[n] = 100.0 * static_cast<double>(out.correct[n]) / static_cast<double>(out.total[n]);
    }
  }
  double log_sum = 0.0;
  for (double p : pct) log_sum += floored_log(p);
  out.score = out.brevity_penalty * std::exp(log_sum / kBleuMaxOrder);
  // exp(mean(log 100)) lands a few ulps off 100; a perfect corpus is exactly 100.
  const bool perfect = out.correct == out.total && out.total.back() > 0 && out.brevity_penalty == 1.0;
  if (perfect) out.score = 100.0;
  for (int n = 0; n < kBleuMaxOrder; ++n) out.precisions[n] = pct[n] / 100.0;
  return out;
}

}  // namespace emomt
