#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emomt/corpus.hpp"
#include "emomt/emotion.hpp"
#include "emomt/jsonl.hpp"

namespace emomt {

enum class TemplateKind { base_plain, base_instruct, emotion_source, emotion_target, emotion_token };

inline constexpr std::array<TemplateKind, 5> kAllTemplates = {
    TemplateKind::base_plain, TemplateKind::base_instruct, TemplateKind::emotion_source,
    TemplateKind::emotion_target, TemplateKind::emotion_token};

std::string_view to_string(TemplateKind kind);
TemplateKind parse_template(std::string_view name);
bool is_emotion_template(TemplateKind kind);

// A rendered example. In training mode prompt_text + completion_text is the
// full training string; in inference mode completion_text is empty.
struct PromptExample {
  std::string utterance_id;
  std::string prompt_text;
  std::string completion_text;
  TemplateKind kind = TemplateKind::base_plain;
  std::optional<EmotionDimension> dimension;

  friend bool operator==(const PromptExample&, const PromptExample&) = default;
};

json to_json(const PromptExample& example);
PromptExample prompt_example_from_json(const json& record);

// Renders one template. `tgt` absent selects inference mode. Emotion kinds need
// a tag, base kinds refuse one (UsageError either way). Layouts, with \n a
// literal newline:
//
//   base_plain      "English: {src}\nFrench:"                            + " {tgt}"
//   base_instruct   "[INST] Translate from English to French: {src} [/INST]\n" + "{tgt}"
//   emotion_source  "English {status} {dim}: {src}\nFrench:"             + " {tgt}"
//   emotion_target  "English: {src}\nFrench {status} {dim}:"             + " {tgt}"
//   emotion_token   "English: [{dim} {polarity}] {src}\nFrench:"         + " {tgt}"
PromptExample render(TemplateKind kind, std::string_view src, std::optional<std::string_view> tgt,
                     std::optional<EmotionTag> tag);

struct PromptSetOptions {
  std::optional<EmotionDimension> dimension;
  const AnnotationSet* annotations = nullptr;
  double threshold = kDefaultThreshold;
  bool with_targets = true;  // false renders inference prompts
};

// One example per utterance of `split`, in corpus order. Emotion kinds require
// a dimension and annotations covering the split (CoverageError names the
// first uncovered id).
std::vector<PromptExample> build_prompt_set(const Corpus& corpus, Split split, TemplateKind kind,
                                            const PromptSetOptions& options);

std::vector<PromptExample> build_training_set(const Corpus& corpus, Split split, TemplateKind kind,
                                              std::optional<EmotionDimension> dimension = std::nullopt,
                                              const AnnotationSet* annotations = nullptr);

// Raw continuation -> hypothesis: everything before the first newline, trimmed.
std::string parse_hypothesis(TemplateKind kind, std::string_view generated_text);

// True when `text` carries any of the markers the emotion templates inject:
// "{English|French} {with|without} {dim}:" or "[{dim} {positive|negative}]".
bool has_emotion_markup(std::string_view text);

void save_prompt_set(const std::vector<PromptExample>& examples, const std::filesystem::path& path);
std::vector<PromptExample> load_prompt_set(const std::filesystem::path& path);

}  // namespace emomt
