#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace emomt {

enum class Split { train, dev, test };

inline constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::dev, Split::test};

std::string_view to_string(Split split);
// Throws ValidationError on anything other than "train", "dev" or "test".
Split parse_split(std::string_view label);

// One corpus triplet. Texts are kept exactly as read.
struct Utterance {
  std::string id;
  std::optional<std::string> audio_ref;
  std::string src_text;
  std::string tgt_text;
  Split split = Split::train;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;

  std::size_t operator[](Split s) const;
  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

// Validated, immutable parallel corpus. Construction enforces id uniqueness
// and the newline-free text invariant.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Utterance> utterances);

  const std::vector<Utterance>& utterances() const { return utterances_; }
  const SplitCounts& split_counts() const { return counts_; }
  std::size_t size() const { return utterances_.size(); }
  bool contains(std::string_view id) const;
  const Utterance& at(std::string_view id) const;

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.utterances_ == b.utterances_; }

 private:
  std::vector<Utterance> utterances_;
  SplitCounts counts_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Reads a JSONL manifest (`id`, `src_text`, `tgt_text`, `split`, optional
// `audio_ref`). Record-level problems raise RecordError carrying the line;
// duplicate ids raise ValidationError naming the id and both lines.
Corpus load_corpus(const std::filesystem::path& manifest_path);

void save_corpus(const Corpus& corpus, const std::filesystem::path& manifest_path);

std::vector<Utterance> select_split(const Corpus& corpus, Split split);

}  // namespace emomt
