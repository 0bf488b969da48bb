#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emomt/bleu.hpp"
#include "emomt/comet.hpp"
#include "emomt/corpus.hpp"
#include "emomt/prompting.hpp"
#include "emomt/training.hpp"

namespace emomt {

struct EvaluationResult {
  Split split = Split::test;
  TemplateKind kind = TemplateKind::base_plain;
  std::optional<EmotionDimension> dimension;
  BleuScore bleu;
  CometScore comet;
  std::vector<PromptExample> prompts;
  std::vector<std::string> sources;
  std::vector<std::string> hypotheses;
  std::vector<std::string> references;

  std::size_t n_pairs() const { return hypotheses.size(); }
};

struct EvaluateOptions {
  const AnnotationSet* annotations = nullptr;
  double threshold = kDefaultThreshold;
};

// Renders inference prompts for `split`, decodes them with `model`, and scores
// the hypotheses with BLEU and the COMET client. Base-template runs are
// checked for emotion markup in every prompt (ValidationError if found).
EvaluationResult evaluate_run(TrainerBackend& backend, const ModelHandle& model, const Corpus& corpus, Split split,
                              TemplateKind kind, std::optional<EmotionDimension> dimension,
                              const EvaluateOptions& options, CometClient& comet);

json to_json(const BleuScore& b);
json to_json(const CometScore& c);
// {bleu: {...}, comet: {...}, n_pairs, template, dimension, split}
json scores_json(const EvaluationResult& r);

// Writes prompts, hypotheses and scores for one split into `dir`.
void save_evaluation_artifacts(const EvaluationResult& r, const std::filesystem::path& dir);

}  // namespace emomt
