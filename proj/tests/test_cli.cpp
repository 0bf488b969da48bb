#include <doctest.h>

#include "emomt/experiment.hpp"
#include "emomt/jsonl.hpp"
#include "emomt/prompting.hpp"
#include "testkit.hpp"

using namespace emomt;
using testkit::sh;

namespace {

std::string cli() { return EMOMT_CLI; }
std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("ingest, annotate, build-prompts, train, evaluate") {
    testkit::TempDir dir;
    const auto syn = testkit::make_synthetic(50, 41, testkit::caesar);
    save_corpus(syn.corpus, dir / "m.jsonl");
    save_annotations(syn.annotations, dir / "a.jsonl");

    auto r = sh(cli() + " ingest --manifest " + q(dir / "m.jsonl") + " --check");
    CHECK(r.status == 0);
    CHECK(r.out.find("train 40") != std::string::npos);
    CHECK(r.out.find("dev   5") != std::string::npos);
    CHECK(r.out.find("test  5") != std::string::npos);

    r = sh(cli() + " annotate --manifest " + q(dir / "m.jsonl") + " --from-file " + q(dir / "a.jsonl") + " --stats");
    CHECK(r.status == 0);
    CHECK(r.out.find("arousal") != std::string::npos);
    CHECK(r.out.find("median") != std::string::npos);

    r = sh(cli() + " build-prompts --manifest " + q(dir / "m.jsonl") +
           " --split train --template emotion_source --dimension arousal --annotations " + q(dir / "a.jsonl") +
           " --out " + q(dir / "p.jsonl"));
    CHECK(r.status == 0);
    const auto prompts = load_prompt_set(dir / "p.jsonl");
    CHECK(prompts.size() == 40);
    CHECK(prompts[0].kind == TemplateKind::emotion_source);

    testkit::write_file(dir / "toy.json", R"({"backend": {"embed_dim": 8, "encoder_hidden": 12, "decoder_hidden": 16,
      "max_output_len": 24}, "training": {"max_epochs": 2, "seed": 5}})");
    r = sh(cli() + " train --manifest " + q(dir / "m.jsonl") + " --template emotion_token --dimension valence" +
           " --annotations " + q(dir / "a.jsonl") + " --backend toy --config " + q(dir / "toy.json") + " --out-dir " +
           q(dir / "run") + " 2>&1");
    CHECK(r.status == 0);
    CHECK(r.out.find("selected epoch") != std::string::npos);
    const auto handle = ModelHandle::from_json(read_json_file(dir / "run" / "handle.json"));
    CHECK(handle.epochs_ran <= 2);
    CHECK(handle.kind == TemplateKind::emotion_token);

    r = sh("env -u EMOMT_COMET_ENDPOINT " + cli() + " evaluate --model " + q(dir / "run") + " --manifest " +
           q(dir / "m.jsonl") + " --split test --annotations " + q(dir / "a.jsonl") + " --out " +
           q(dir / "eval" / "scores.json"));
    CHECK(r.status == 0);
    const auto scores = read_json_file(dir / "eval" / "scores.json");
    for (const char* key : {"bleu", "comet", "n_pairs", "template", "dimension"}) CHECK(scores.contains(key));
    CHECK(scores["n_pairs"] == 5);
    CHECK(scores["template"] == "emotion_token");
    CHECK(scores["dimension"] == "valence");
    CHECK(std::filesystem::exists(dir / "eval" / "hypotheses_test.jsonl"));
  }

  TEST_CASE("report re-renders a stored report") {
    testkit::TempDir dir;
    auto r = sh(cli() + " report --from " + q(testkit::fixture("emotion_grid.json")) + " --out " + q(dir / "report.md"));
    CHECK(r.status == 0);
    CHECK(r.out.find("TowerBase +arousal source-side") != std::string::npos);
    const auto md = testkit::read_file(dir / "report.md");
    CHECK(md.find("```") != std::string::npos);
    CHECK(md.find("+1.4") != std::string::npos);
    r = sh(cli() + " report --from " + q(testkit::fixture("emotion_grid.json")) + " --out " + q(dir / "report.json"));
    CHECK(r.status == 0);
    const auto j = read_json_file(dir / "report.json");
    CHECK(j["best_label"] == "TowerBase +arousal source-side");
    CHECK(j["rows"].size() == 10);
  }

  TEST_CASE("errors map to exit codes") {
    testkit::TempDir dir;
    testkit::write_file(dir / "bad.jsonl", R"({"id": "u1", "src_text": "a", "split": "train"})" "\n");
    auto r = sh(cli() + " ingest --manifest " + q(dir / "bad.jsonl") + " 2>&1");
    CHECK(r.status == 1);
    CHECK(r.out.find(":1:") != std::string::npos);
    r = sh(cli() + " build-prompts --manifest " + q(testkit::fixture("model_comparison.json")) + " --template nope --out x 2>&1");
    CHECK(r.status != 0);
    r = sh(cli() + " frobnicate 2>&1");
    CHECK(r.status != 0);
    const auto syn = testkit::make_synthetic(10, 1, testkit::caesar);
    save_corpus(syn.corpus, dir / "m.jsonl");
    r = sh("env -u EMOMT_SER_ENDPOINT " + cli() + " annotate --manifest " + q(dir / "m.jsonl") + " 2>&1");
    CHECK(r.status == 2);
  }
}
