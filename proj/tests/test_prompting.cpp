#include <doctest.h>

#include "emomt/error.hpp"
#include "emomt/prompting.hpp"
#include "testkit.hpp"

using namespace emomt;

namespace {

const EmotionTag kArousalWith{EmotionDimension::arousal, EmotionStatus::with, EmotionPolarity::positive};

using testkit::Golden;
using testkit::golden_cases;

std::optional<std::string_view> view(const std::optional<std::string>& s) {
  if (!s) return std::nullopt;
  return std::string_view(*s);
}

}  // namespace

TEST_SUITE("prompting") {
  TEST_CASE("golden renders") {
    const auto& cases = golden_cases();
    REQUIRE(cases.size() == 15);
    for (const auto& g : cases) {
      CAPTURE(g.prompt);
      const auto e = render(g.kind, g.src, view(g.tgt), g.tag);
      CHECK(e.prompt_text == g.prompt);
      CHECK(e.completion_text == g.completion);
      CHECK(e.kind == g.kind);
      CHECK(e.completion_text.find('\n') == std::string::npos);
    }
  }

  TEST_CASE("training render equals inference prompt plus completion") {
    for (const auto& g : golden_cases()) {
      if (!g.tgt) continue;
      const auto train = render(g.kind, g.src, view(g.tgt), g.tag);
      const auto infer = render(g.kind, g.src, std::nullopt, g.tag);
      const std::string lead = g.kind == TemplateKind::base_instruct ? "" : " ";
      CHECK(train.prompt_text + train.completion_text == infer.prompt_text + lead + *g.tgt);
      CHECK(parse_hypothesis(g.kind, train.completion_text) == std::string(parse_hypothesis(g.kind, *g.tgt)));
    }
  }

  TEST_CASE("tag must match template family") {
    CHECK_THROWS_AS(render(TemplateKind::base_plain, "a", "b", kArousalWith), UsageError);
    CHECK_THROWS_AS(render(TemplateKind::emotion_token, "a", "b", std::nullopt), UsageError);
    CHECK_THROWS_AS(render(TemplateKind::base_plain, "a\nb", "b", std::nullopt), UsageError);
    CHECK_THROWS_AS(render(TemplateKind::base_plain, "a", "b\n", std::nullopt), UsageError);
  }

  TEST_CASE("parse_hypothesis") {
    CHECK(parse_hypothesis(TemplateKind::base_plain, " Bonjour.\nEnglish: next") == "Bonjour.");
    CHECK(parse_hypothesis(TemplateKind::base_plain, " Bonjour.") == "Bonjour.");
    CHECK(parse_hypothesis(TemplateKind::base_plain, "\n") == "");
    CHECK(parse_hypothesis(TemplateKind::base_instruct, "") == "");
    CHECK(parse_hypothesis(TemplateKind::emotion_token, "\t Salut  \r\nx") == "Salut");
  }

  TEST_CASE("build_prompt_set") {
    const auto syn = testkit::make_synthetic(30, 5, testkit::caesar);
    const auto base = build_training_set(syn.corpus, Split::train, TemplateKind::base_plain, std::nullopt, nullptr);
    CHECK(base.size() == syn.corpus.split_counts().train);
    for (const auto& e : base) {
      for (const char* w : {"arousal", "dominance", "valence"}) CHECK(e.prompt_text.find(w) == std::string::npos);
      CHECK_FALSE(has_emotion_markup(e.prompt_text + e.completion_text));
      CHECK(e.utterance_id == syn.corpus.at(e.utterance_id).id);
    }

    std::map<std::string, EmotionScores> hot;
    for (const auto& u : syn.corpus.utterances()) hot[u.id] = {0.9, 0.9, 0.9};
    const AnnotationSet all_high("t", hot);
    const auto src = build_training_set(syn.corpus, Split::train, TemplateKind::emotion_source,
                                        EmotionDimension::arousal, &all_high);
    for (const auto& e : src) {
      CHECK(e.prompt_text.rfind("English with arousal:", 0) == 0);
      CHECK(e.dimension == EmotionDimension::arousal);
      CHECK(has_emotion_markup(e.prompt_text));
    }

    auto missing = hot;
    const std::string gone = select_split(syn.corpus, Split::dev).front().id;
    missing.erase(gone);
    const AnnotationSet partial("t", missing);
    try {
      build_training_set(syn.corpus, Split::dev, TemplateKind::emotion_target, EmotionDimension::dominance, &partial);
      FAIL("no error");
    } catch (const CoverageError& e) {
      CHECK(std::string(e.what()).find(gone) != std::string::npos);
    }

    CHECK_THROWS_AS(build_training_set(syn.corpus, Split::train, TemplateKind::emotion_token, std::nullopt, nullptr), UsageError);
    CHECK_THROWS_AS(build_training_set(syn.corpus, Split::train, TemplateKind::base_plain, EmotionDimension::valence, nullptr),
                    UsageError);
  }

  TEST_CASE("emotion markup detector") {
    CHECK(has_emotion_markup("English with valence: x"));
    CHECK(has_emotion_markup("French without dominance:"));
    CHECK(has_emotion_markup("[arousal negative] hi"));
    CHECK_FALSE(has_emotion_markup("English: I spoke with arousal in my voice"));
    CHECK_FALSE(has_emotion_markup("English: valence is a chemistry term"));
  }

  TEST_CASE("prompt set file round trip") {
    testkit::TempDir dir;
    const auto syn = testkit::make_synthetic(20, 8, testkit::caesar);
    const auto set = build_training_set(syn.corpus, Split::train, TemplateKind::emotion_token, EmotionDimension::valence,
                                        &syn.annotations);
    save_prompt_set(set, dir / "p.jsonl");
    CHECK(load_prompt_set(dir / "p.jsonl") == set);
  }

  TEST_CASE("template names") {
    for (auto k : kAllTemplates) CHECK(parse_template(to_string(k)) == k);
    CHECK_THROWS_AS(parse_template("emotion"), UsageError);
  }
}
