#include "emomt/evaluation.hpp"

#include "emomt/error.hpp"

namespace emomt {

EvaluationResult evaluate_run(TrainerBackend& backend, const ModelHandle& model, const Corpus& corpus, Split split,
                              TemplateKind kind, std::optional<EmotionDimension> dimension,
                              const EvaluateOptions& options, CometClient& comet) {
  EvaluationResult r;
  r.split = split;
  r.kind = kind;
  r.dimension = dimension;
  r.prompts = build_prompt_set(corpus, split, kind,
                               {.dimension = dimension,
                                .annotations = options.annotations,
                                .threshold = options.threshold,
                                .with_targets = false});
  if (r.prompts.empty()) throw UsageError("split '" + std::string(to_string(split)) + "' is empty");
  if (!is_emotion_template(kind)) {
    for (const auto& p : r.prompts) {
      if (has_emotion_markup(p.prompt_text)) {
        throw ValidationError("emotion markup leaked into base prompt for utterance '" + p.utterance_id + "'");
      }
    }
  }

  r.hypotheses = translate(backend, model, r.prompts);
  std::vector<EvalPair> pairs;
  pairs.reserve(r.prompts.size());
  for (std::size_t i = 0; i < r.prompts.size(); ++i) {
    const auto& u = corpus.at(r.prompts[i].utterance_id);
    r.sources.push_back(u.src_text);
    r.references.push_back(u.tgt_text);
    pairs.push_back({r.hypotheses[i], u.tgt_text});
  }
  r.bleu = corpus_bleu(pairs);
  r.comet = comet_score(r.sources, pairs, comet);
  return r;
}

json to_json(const BleuScore& b) {
  return {{"score", b.score},
          {"precisions", b.precisions},
          {"brevity_penalty", b.brevity_penalty},
          {"hyp_len", b.hyp_len},
          {"ref_len", b.ref_len},
          {"correct", b.correct},
          {"total", b.total}};
}

json to_json(const CometScore& c) { return {{"score", c.score}, {"scorer_id", c.scorer_id}}; }

json scores_json(const EvaluationResult& r) {
  return {{"bleu", to_json(r.bleu)},
          {"comet", to_json(r.comet)},
          {"n_pairs", r.n_pairs()},
          {"template", to_string(r.kind)},
          {"dimension", r.dimension ? json(to_string(*r.dimension)) : json(nullptr)},
          {"split", to_string(r.split)}};
}

void save_evaluation_artifacts(const EvaluationResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string split(to_string(r.split));
  save_prompt_set(r.prompts, dir / ("prompts_" + split + ".jsonl"));
  std::vector<json> hyps;
  for (std::size_t i = 0; i < r.hypotheses.size(); ++i) {
    hyps.push_back({{"utterance_id", r.prompts[i].utterance_id},
                    {"source", r.sources[i]},
                    {"hypothesis", r.hypotheses[i]},
                    {"reference", r.references[i]}});
  }
  write_jsonl(dir / ("hypotheses_" + split + ".jsonl"), hyps);
  write_json_file(dir / ("scores_" + split + ".json"), scores_json(r));
}

}  // namespace emomt
