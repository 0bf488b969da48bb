#include "emomt/corpus.hpp"

#include <algorithm>

#include "emomt/error.hpp"
#include "emomt/jsonl.hpp"

namespace emomt {

namespace {

bool has_newline(std::string_view s) { return s.find_first_of("\r\n") != std::string_view::npos; }

void check_texts(const Utterance& u) {
  if (u.id.empty()) throw ValidationError("utterance with empty id");
  if (u.src_text.empty()) throw ValidationError("utterance " + u.id + ": empty src_text");
  if (u.tgt_text.empty()) throw ValidationError("utterance " + u.id + ": empty tgt_text");
  if (has_newline(u.src_text)) throw ValidationError("utterance " + u.id + ": src_text contains a newline");
  if (has_newline(u.tgt_text)) throw ValidationError("utterance " + u.id + ": tgt_text contains a newline");
}

std::string required_string(const json& record, const char* key, const std::string& path, std::size_t line) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) throw RecordError(path, line, std::string("missing required field '") + key + "'");
  if (!it->is_string()) throw RecordError(path, line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view label) {
  if (label == "train") return Split::train;
  if (label == "dev") return Split::dev;
  if (label == "test") return Split::test;
  throw ValidationError("unknown split label '" + std::string(label) + "' (expected train, dev or test)");
}

std::size_t SplitCounts::operator[](Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::dev: return dev;
    case Split::test: return test;
  }
  return 0;
}

Corpus::Corpus(std::vector<Utterance> utterances) : utterances_(std::move(utterances)) {
  index_.reserve(utterances_.size());
  for (std::size_t i = 0; i < utterances_.size(); ++i) {
    const auto& u = utterances_[i];
    check_texts(u);
    if (!index_.emplace(u.id, i).second) throw ValidationError("duplicate utterance id '" + u.id + "'");
    switch (u.split) {
      case Split::train: ++counts_.train; break;
      case Split::dev: ++counts_.dev; break;
      case Split::test: ++counts_.test; break;
    }
  }
}

bool Corpus::contains(std::string_view id) const { return index_.contains(std::string(id)); }

const Utterance& Corpus::at(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw CoverageError("unknown utterance id '" + std::string(id) + "'");
  return utterances_[it->second];
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
  const std::string path = manifest_path.string();
  std::vector<Utterance> utterances;
  std::unordered_map<std::string, std::size_t> first_line;

  for_each_jsonl(manifest_path, [&](const json& record, std::size_t line) {
    Utterance u;
    u.id = required_string(record, "id", path, line);
    u.src_text = required_string(record, "src_text", path, line);
    u.tgt_text = required_string(record, "tgt_text", path, line);
    const std::string split = required_string(record, "split", path, line);
    try {
      u.split = parse_split(split);
    } catch (const ValidationError& e) {
      throw RecordError(path, line, e.what());
    }
    if (auto it = record.find("audio_ref"); it != record.end() && !it->is_null()) {
      if (!it->is_string()) throw RecordError(path, line, "field 'audio_ref' must be a string or null");
      u.audio_ref = it->get<std::string>();
    }
    try {
      check_texts(u);
    } catch (const ValidationError& e) {
      throw RecordError(path, line, e.what());
    }
    if (auto [it, inserted] = first_line.emplace(u.id, line); !inserted) {
      throw ValidationError(path + ": duplicate utterance id '" + u.id + "' on lines " +
                            std::to_string(it->second) + " and " + std::to_string(line));
    }
    utterances.push_back(std::move(u));
  });
  return Corpus(std::move(utterances));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& manifest_path) {
  std::vector<json> records;
  records.reserve(corpus.size());
  for (const auto& u : corpus.utterances()) {
    json r = {{"id", u.id}, {"src_text", u.src_text}, {"tgt_text", u.tgt_text}, {"split", to_string(u.split)}};
    if (u.audio_ref) r["audio_ref"] = *u.audio_ref;
    records.push_back(std::move(r));
  }
  write_jsonl(manifest_path, records);
}

std::vector<Utterance> select_split(const Corpus& corpus, Split split) {
  std::vector<Utterance> out;
  std::copy_if(corpus.utterances().begin(), corpus.utterances().end(), std::back_inserter(out),
               [split](const Utterance& u) { return u.split == split; });
  return out;
}

}  // namespace emomt
