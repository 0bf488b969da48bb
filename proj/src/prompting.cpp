#include "emomt/prompting.hpp"

#include "emomt/error.hpp"

namespace emomt {

namespace {

bool has_newline(std::string_view s) { return s.find_first_of("\r\n") != std::string_view::npos; }

std::string cat(std::initializer_list<std::string_view> parts) {
  std::string out;
  for (auto p : parts) out.append(p);
  return out;
}

}  // namespace

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::base_plain: return "base_plain";
    case TemplateKind::base_instruct: return "base_instruct";
    case TemplateKind::emotion_source: return "emotion_source";
    case TemplateKind::emotion_target: return "emotion_target";
    case TemplateKind::emotion_token: return "emotion_token";
  }
  return "?";
}

TemplateKind parse_template(std::string_view name) {
  for (auto k : kAllTemplates)
    if (to_string(k) == name) return k;
  throw UsageError("unknown template '" + std::string(name) +
                   "' (expected base_plain, base_instruct, emotion_source, emotion_target or emotion_token)");
}

bool is_emotion_template(TemplateKind kind) {
  return kind == TemplateKind::emotion_source || kind == TemplateKind::emotion_target ||
         kind == TemplateKind::emotion_token;
}

json to_json(const PromptExample& e) {
  return {{"utterance_id", e.utterance_id},
          {"prompt", e.prompt_text},
          {"completion", e.completion_text},
          {"template", to_string(e.kind)},
          {"dimension", e.dimension ? json(to_string(*e.dimension)) : json(nullptr)}};
}

PromptExample prompt_example_from_json(const json& r) {
  PromptExample e;
  try {
    e.utterance_id = r.at("utterance_id").get<std::string>();
    e.prompt_text = r.at("prompt").get<std::string>();
    e.completion_text = r.value("completion", std::string());
    e.kind = parse_template(r.at("template").get<std::string>());
    if (auto it = r.find("dimension"); it != r.end() && !it->is_null())
      e.dimension = parse_dimension(it->get<std::string>());
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed prompt record: ") + ex.what());
  }
  return e;
}

PromptExample render(TemplateKind kind, std::string_view src, std::optional<std::string_view> tgt,
                     std::optional<EmotionTag> tag) {
  if (is_emotion_template(kind) && !tag) throw UsageError(std::string(to_string(kind)) + " needs an emotion tag");
  if (!is_emotion_template(kind) && tag) throw UsageError(std::string(to_string(kind)) + " does not take an emotion tag");
  if (has_newline(src)) throw UsageError("source text contains a newline");
  if (tgt && has_newline(*tgt)) throw UsageError("target text contains a newline");

  PromptExample out;
  out.kind = kind;
  if (tag) out.dimension = tag->dimension;

  std::string_view lead = " ";
  switch (kind) {
    case TemplateKind::base_plain:
      out.prompt_text = cat({"English: ", src, "\nFrench:"});
      break;
    case TemplateKind::base_instruct:
      out.prompt_text = cat({"[INST] Translate from English to French: ", src, " [/INST]\n"});
      lead = "";
      break;
    case TemplateKind::emotion_source:
      out.prompt_text = cat({"English ", to_string(tag->status), " ", to_string(tag->dimension), ": ", src, "\nFrench:"});
      break;
    case TemplateKind::emotion_target:
      out.prompt_text = cat({"English: ", src, "\nFrench ", to_string(tag->status), " ", to_string(tag->dimension), ":"});
      break;
    case TemplateKind::emotion_token:
      out.prompt_text = cat({"English: [", to_string(tag->dimension), " ", to_string(tag->polarity), "] ", src, "\nFrench:"});
      break;
  }
  if (tgt) out.completion_text = cat({lead, *tgt});
  return out;
}

std::vector<PromptExample> build_prompt_set(const Corpus& corpus, Split split, TemplateKind kind,
                                            const PromptSetOptions& options) {
  const bool emotional = is_emotion_template(kind);
  if (emotional && !options.dimension) throw UsageError(std::string(to_string(kind)) + " needs an emotion dimension");
  if (emotional && !options.annotations) throw UsageError(std::string(to_string(kind)) + " needs emotion annotations");
  if (!emotional && options.dimension) throw UsageError(std::string(to_string(kind)) + " does not take an emotion dimension");

  std::vector<PromptExample> out;
  for (const auto& u : corpus.utterances()) {
    if (u.split != split) continue;
    std::optional<EmotionTag> tag;
    if (emotional) {
      if (!options.annotations->contains(u.id))
        throw CoverageError("no emotion annotation for utterance '" + u.id + "'");
      tag = binarize(options.annotations->at(u.id), *options.dimension, options.threshold);
    }
    std::optional<std::string_view> tgt;
    if (options.with_targets) tgt = u.tgt_text;
    auto e = render(kind, u.src_text, tgt, tag);
    e.utterance_id = u.id;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<PromptExample> build_training_set(const Corpus& corpus, Split split, TemplateKind kind,
                                              std::optional<EmotionDimension> dimension,
                                              const AnnotationSet* annotations) {
  return build_prompt_set(corpus, split, kind, {.dimension = dimension, .annotations = annotations});
}

std::string parse_hypothesis(TemplateKind, std::string_view generated_text) {
  auto line = generated_text.substr(0, generated_text.find('\n'));
  constexpr std::string_view ws = " \t\r\f\v";
  const auto first = line.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = line.find_last_not_of(ws);
  return std::string(line.substr(first, last - first + 1));
}

bool has_emotion_markup(std::string_view text) {
  for (auto d : kAllDimensions) {
    const std::string dim(to_string(d));
    for (std::string_view lang : {"English ", "French "}) {
      for (std::string_view status : {"with ", "without "}) {
        if (text.find(cat({lang, status, dim, ":"})) != std::string_view::npos) return true;
      }
    }
    for (std::string_view pol : {" positive]", " negative]"}) {
      if (text.find(cat({"[", dim, pol})) != std::string_view::npos) return true;
    }
  }
  return false;
}

void save_prompt_set(const std::vector<PromptExample>& examples, const std::filesystem::path& path) {
  std::vector<json> records;
  records.reserve(examples.size());
  for (const auto& e : examples) records.push_back(to_json(e));
  write_jsonl(path, records);
}

std::vector<PromptExample> load_prompt_set(const std::filesystem::path& path) {
  std::vector<PromptExample> out;
  for_each_jsonl(path, [&](const json& r, std::size_t line) {
    try {
      out.push_back(prompt_example_from_json(r));
    } catch (const Error& e) {
      throw RecordError(path.string(), line, e.what());
    }
  });
  return out;
}

}  // namespace emomt
