#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emomt/corpus.hpp"

namespace emomt {

enum class EmotionDimension { arousal, dominance, valence };

inline constexpr std::array<EmotionDimension, 3> kAllDimensions = {
    EmotionDimension::arousal, EmotionDimension::dominance, EmotionDimension::valence};

std::string_view to_string(EmotionDimension d);
EmotionDimension parse_dimension(std::string_view name);

// Dimensional scores for one utterance. Values are kept exactly as the
// annotator produced them; range is checked by annotate().
struct EmotionScores {
  double arousal = 0.0;
  double dominance = 0.0;
  double valence = 0.0;

  double operator[](EmotionDimension d) const;
  friend bool operator==(const EmotionScores&, const EmotionScores&) = default;
};

enum class EmotionStatus { with, without };
enum class EmotionPolarity { positive, negative };

std::string_view to_string(EmotionStatus s);
std::string_view to_string(EmotionPolarity p);

// Both labels derive from one threshold comparison, so status == with
// exactly when polarity == positive. Construct through binarize().
struct EmotionTag {
  EmotionDimension dimension = EmotionDimension::arousal;
  EmotionStatus status = EmotionStatus::with;
  EmotionPolarity polarity = EmotionPolarity::positive;

  friend bool operator==(const EmotionTag&, const EmotionTag&) = default;
};

inline constexpr double kDefaultThreshold = 0.5;

// value >= threshold -> (with, positive); value < threshold -> (without, negative).
// A value sitting exactly on the threshold counts as "with".
EmotionTag binarize(const EmotionScores& scores, EmotionDimension dimension,
                    double threshold = kDefaultThreshold);

// Scores keyed by utterance id, plus the identifier of whoever produced them.
class AnnotationSet {
 public:
  AnnotationSet() = default;
  AnnotationSet(std::string provenance, std::map<std::string, EmotionScores> scores)
      : provenance_(std::move(provenance)), scores_(std::move(scores)) {}

  const std::string& provenance() const { return provenance_; }
  const std::map<std::string, EmotionScores>& scores() const { return scores_; }
  std::size_t size() const { return scores_.size(); }
  bool empty() const { return scores_.empty(); }
  bool contains(std::string_view id) const { return scores_.contains(std::string(id)); }
  // Throws CoverageError for an unknown id.
  const EmotionScores& at(std::string_view id) const;

  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;

 private:
  std::string provenance_;
  std::map<std::string, EmotionScores> scores_;
};

struct ScoredUtterance {
  std::string id;
  EmotionScores scores;
};

// Source of emotion scores. Implementations return whatever they have for the
// requested utterances; annotate() decides what is missing or invalid.
class EmotionAnnotator {
 public:
  virtual ~EmotionAnnotator() = default;
  virtual std::string id() const = 0;
  virtual std::vector<ScoredUtterance> score(std::span<const Utterance> utterances) = 0;
};

// Precomputed JSONL file: one `{id, arousal, dominance, valence}` per line.
class FileAnnotator : public EmotionAnnotator {
 public:
  explicit FileAnnotator(std::filesystem::path path);
  std::string id() const override;
  std::vector<ScoredUtterance> score(std::span<const Utterance> utterances) override;

 private:
  std::filesystem::path path_;
  std::map<std::string, EmotionScores> table_;
};

// Client for a remote SER service.
//
// Request:  POST <url>  {"items": [{"id": "...", "audio_ref": "..." | null}, ...]}
// Response: {"scores": [{"id": "...", "arousal": x, "dominance": y, "valence": z}, ...]}
//
// Utterances are sent in batches of `batch_size`, with up to `max_in_flight`
// batches outstanding at once. Results are keyed by id so reply order and
// batch interleaving do not matter.
class EndpointAnnotator : public EmotionAnnotator {
 public:
  explicit EndpointAnnotator(std::string url, std::size_t batch_size = 32, std::size_t max_in_flight = 4);
  std::string id() const override;
  std::vector<ScoredUtterance> score(std::span<const Utterance> utterances) override;

 private:
  std::string url_;
  std::size_t batch_size_;
  std::size_t max_in_flight_;
};

// Scores every corpus utterance. Missing ids raise CoverageError listing them;
// values outside [0, 1] raise ValidationError with the id and value. Scores
// for ids not in the corpus are dropped.
AnnotationSet annotate(const Corpus& corpus, EmotionAnnotator& annotator);

void save_annotations(const AnnotationSet& annotations, const std::filesystem::path& path);

struct DimensionSummary {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  double positive_fraction = 0.0;  // share binarized as (with, positive) at 0.5
};

using AnnotationStats = std::array<DimensionSummary, 3>;  // indexed by EmotionDimension

AnnotationStats annotation_stats(const AnnotationSet& annotations);

// Median of a non-empty sample; even counts take the midpoint of the two middle values.
double median_of(std::vector<double> values);

}  // namespace emomt
