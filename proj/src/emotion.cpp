#include "emomt/emotion.hpp"

#include <algorithm>
#include <future>
#include <sstream>

#include "emomt/error.hpp"
#include "emomt/http.hpp"
#include "emomt/jsonl.hpp"

namespace emomt {

namespace {

double number_field(const json& record, const char* key, const std::string& where) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_number()) {
    throw ValidationError(where + ": field '" + key + "' missing or not a number");
  }
  return it->get<double>();
}

EmotionScores scores_from_json(const json& record, const std::string& where) {
  return {number_field(record, "arousal", where), number_field(record, "dominance", where),
          number_field(record, "valence", where)};
}

}  // namespace

std::string_view to_string(EmotionDimension d) {
  switch (d) {
    case EmotionDimension::arousal: return "arousal";
    case EmotionDimension::dominance: return "dominance";
    case EmotionDimension::valence: return "valence";
  }
  return "?";
}

EmotionDimension parse_dimension(std::string_view name) {
  for (auto d : kAllDimensions)
    if (to_string(d) == name) return d;
  throw UsageError("unknown emotion dimension '" + std::string(name) + "' (expected arousal, dominance or valence)");
}

std::string_view to_string(EmotionStatus s) { return s == EmotionStatus::with ? "with" : "without"; }
std::string_view to_string(EmotionPolarity p) { return p == EmotionPolarity::positive ? "positive" : "negative"; }

double EmotionScores::operator[](EmotionDimension d) const {
  switch (d) {
    case EmotionDimension::arousal: return arousal;
    case EmotionDimension::dominance: return dominance;
    case EmotionDimension::valence: return valence;
  }
  return 0.0;
}

EmotionTag binarize(const EmotionScores& scores, EmotionDimension dimension, double threshold) {
  const bool high = scores[dimension] >= threshold;
  return {dimension, high ? EmotionStatus::with : EmotionStatus::without,
          high ? EmotionPolarity::positive : EmotionPolarity::negative};
}

const EmotionScores& AnnotationSet::at(std::string_view id) const {
  auto it = scores_.find(std::string(id));
  if (it == scores_.end()) throw CoverageError("no emotion annotation for utterance '" + std::string(id) + "'");
  return it->second;
}

FileAnnotator::FileAnnotator(std::filesystem::path path) : path_(std::move(path)) {
  const std::string p = path_.string();
  for_each_jsonl(path_, [&](const json& record, std::size_t line) {
    auto idit = record.find("id");
    if (idit == record.end() || !idit->is_string()) throw RecordError(p, line, "missing required field 'id'");
    const std::string id = idit->get<std::string>();
    EmotionScores s;
    try {
      s = scores_from_json(record, "utterance " + id);
    } catch (const ValidationError& e) {
      throw RecordError(p, line, e.what());
    }
    if (!table_.emplace(id, s).second) throw RecordError(p, line, "duplicate annotation for id '" + id + "'");
  });
}

std::string FileAnnotator::id() const { return "file:" + path_.filename().string(); }

std::vector<ScoredUtterance> FileAnnotator::score(std::span<const Utterance> utterances) {
  std::vector<ScoredUtterance> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) {
    if (auto it = table_.find(u.id); it != table_.end()) out.push_back({u.id, it->second});
  }
  return out;
}

EndpointAnnotator::EndpointAnnotator(std::string url, std::size_t batch_size, std::size_t max_in_flight)
    : url_(std::move(url)), batch_size_(std::max<std::size_t>(1, batch_size)),
      max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {}

std::string EndpointAnnotator::id() const { return "endpoint:" + url_; }

std::vector<ScoredUtterance> EndpointAnnotator::score(std::span<const Utterance> utterances) {
  auto post_batch = [this](std::span<const Utterance> batch) {
    json items = json::array();
    for (const auto& u : batch) {
      items.push_back({{"id", u.id}, {"audio_ref", u.audio_ref ? json(*u.audio_ref) : json(nullptr)}});
    }
    const json reply = http_post_json(url_, {{"items", std::move(items)}});
    auto it = reply.find("scores");
    if (it == reply.end() || !it->is_array()) throw TransportError(url_ + ": reply lacks a 'scores' array");
    std::vector<ScoredUtterance> got;
    for (const auto& r : *it) {
      if (!r.is_object() || !r.contains("id") || !r["id"].is_string()) throw TransportError(url_ + ": score without an id");
      const std::string id = r["id"].get<std::string>();
      try {
        got.push_back({id, scores_from_json(r, "utterance " + id)});
      } catch (const ValidationError& e) {
        throw TransportError(url_ + ": " + e.what());
      }
    }
    return got;
  };

  std::vector<ScoredUtterance> out;
  std::vector<std::future<std::vector<ScoredUtterance>>> in_flight;
  auto drain_one = [&] {
    auto part = in_flight.front().get();
    in_flight.erase(in_flight.begin());
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  };
  for (std::size_t start = 0; start < utterances.size(); start += batch_size_) {
    if (in_flight.size() >= max_in_flight_) drain_one();
    auto batch = utterances.subspan(start, std::min(batch_size_, utterances.size() - start));
    in_flight.push_back(std::async(std::launch::async, post_batch, batch));
  }
  while (!in_flight.empty()) drain_one();
  return out;
}

AnnotationSet annotate(const Corpus& corpus, EmotionAnnotator& annotator) {
  const auto raw = annotator.score(corpus.utterances());
  std::map<std::string, EmotionScores> scores;
  for (const auto& r : raw) {
    if (!corpus.contains(r.id)) continue;
    for (auto d : kAllDimensions) {
      const double v = r.scores[d];
      if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream msg;
        msg << "utterance '" << r.id << "': " << to_string(d) << " = " << v << " is outside [0, 1]";
        throw ValidationError(msg.str());
      }
    }
    scores.insert_or_assign(r.id, r.scores);
  }

  std::vector<std::string> missing;
  for (const auto& u : corpus.utterances())
    if (!scores.contains(u.id)) missing.push_back(u.id);
  if (!missing.empty()) {
    std::string msg = "annotator " + annotator.id() + " left " + std::to_string(missing.size()) + " utterance(s) unscored:";
    const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg += " " + missing[i];
    if (shown < missing.size()) msg += " ...";
    throw CoverageError(msg);
  }
  return AnnotationSet(annotator.id(), std::move(scores));
}

void save_annotations(const AnnotationSet& annotations, const std::filesystem::path& path) {
  std::vector<json> records;
  for (const auto& [id, s] : annotations.scores()) {
    records.push_back({{"id", id}, {"arousal", s.arousal}, {"dominance", s.dominance}, {"valence", s.valence}});
  }
  write_jsonl(path, records);
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw UsageError("median of an empty sample");
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

AnnotationStats annotation_stats(const AnnotationSet& annotations) {
  if (annotations.empty()) throw UsageError("annotation statistics need a non-empty annotation set");
  AnnotationStats stats;
  for (auto d : kAllDimensions) {
    std::vector<double> values;
    std::size_t positive = 0;
    for (const auto& [id, s] : annotations.scores()) {
      values.push_back(s[d]);
      if (binarize(s, d).status == EmotionStatus::with) ++positive;
    }
    auto& out = stats[static_cast<std::size_t>(d)];
    out.count = values.size();
    out.min = *std::min_element(values.begin(), values.end());
    out.max = *std::max_element(values.begin(), values.end());
    out.positive_fraction = static_cast<double>(positive) / static_cast<double>(values.size());
    out.median = median_of(std::move(values));
  }
  return stats;
}

}  // namespace emomt
