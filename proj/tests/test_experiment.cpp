#include <doctest.h>

#include <algorithm>
#include <set>

#include "emomt/error.hpp"
#include "emomt/experiment.hpp"
#include "testkit.hpp"

using namespace emomt;
using testkit::load_report;

namespace {

const RowDelta& delta_of(const ExperimentReport& r, const std::string& label) {
  for (std::size_t i = 0; i < r.rows.size(); ++i)
    if (r.rows[i].label == label) return r.deltas.at(i).value();
  throw std::runtime_error("no row " + label);
}

json grid_configurations(bool full) {
  json c = json::array({{{"template", "base"}}});
  for (const char* d : {"arousal", "dominance", "valence"}) {
    for (const char* t : {"emotion_source", "emotion_target", "emotion_token"}) c.push_back({{"template", t}, {"dimension", d}});
    if (!full) break;
  }
  return c;
}

// Fake external fine-tuner: one epoch, checkpoint named after the train file's first prompt.
const char* kTrain = R"PY(
import json, sys, os, hashlib
train, out_dir = sys.argv[1], sys.argv[2]
first = open(train).readline()
tag = hashlib.sha1(first.encode()).hexdigest()[:8]
ck = os.path.join(out_dir, "ckpt-" + tag)
open(ck, "w").write(first)
print(json.dumps({"checkpoint_ref": ck, "epochs": [{"epoch": 1, "dev_loss": 0.5, "checkpoint_ref": ck}]}))
)PY";
const char* kGen = R"PY(
import json, sys
prompts, output = sys.argv[1], sys.argv[2]
with open(output, "w") as out:
    for line in open(prompts):
        src = json.loads(line)["prompt"].split("\n")[0].split(": ", 1)[1].split("] ")[-1]
        out.write(json.dumps({"text": " " + src}) + "\n")
)PY";

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("model comparison fixture selects TowerBase") {
    const auto t1 = load_report("model_comparison.json");
    REQUIRE(t1.rows.size() == 5);
    CHECK(t1.complete());
    CHECK(select_best(t1) == "TowerBase");
    CHECK(*t1.row("TowerBase").comet_dev == 73.8);
  }

  TEST_CASE("emotion grid fixture: tie on dev COMET broken by dev BLEU") {
    const auto t2 = load_report("emotion_grid.json");
    REQUIRE(t2.rows.size() == 10);
    CHECK(select_best(t2) == "TowerBase +arousal source-side");
    CHECK(*t2.row("TowerBase +dominance target-side").comet_dev == *t2.row("TowerBase +arousal source-side").comet_dev);
  }

  TEST_CASE("emotion grid deltas after one-decimal rounding") {
    const auto t2 = compute_deltas(load_report("emotion_grid.json"), "TowerBase");
    const auto& src = delta_of(t2, "TowerBase +arousal source-side");
    CHECK(round1(src.comet_dev) == 1.1);
    CHECK(round1(src.comet_test) == 1.4);
    const auto& tgt = delta_of(t2, "TowerBase +arousal target-side");
    CHECK(round1(tgt.bleu_dev) == 1.6);
    CHECK(round1(tgt.bleu_test) == 3.5);
    const auto& base = delta_of(t2, "TowerBase");
    CHECK(base.bleu_dev == 0.0);
    CHECK(base.bleu_test == 0.0);
    CHECK(base.comet_dev == 0.0);
    CHECK(base.comet_test == 0.0);
    // Stored deltas equal a recomputation from the cells.
    for (std::size_t i = 0; i < t2.rows.size(); ++i) {
      CHECK(t2.deltas[i]->comet_dev == *t2.rows[i].comet_dev - 73.8);
      CHECK(t2.deltas[i]->bleu_test == *t2.rows[i].bleu_test - 20.6);
    }
    CHECK_THROWS_AS(compute_deltas(t2, "GPT"), UsageError);
  }

  TEST_CASE("selection is stable under reordering apart from the final tie-break") {
    auto t2 = load_report("emotion_grid.json");
    std::reverse(t2.rows.begin(), t2.rows.end());
    CHECK(select_best(t2) == "TowerBase +arousal source-side");
    ExperimentReport tie;
    tie.rows = {{"first", 1.0, 1.0, 50.0, 50.0}, {"second", 1.0, 2.0, 50.0, 60.0}};
    CHECK(select_best(tie) == "first");
    std::swap(tie.rows[0], tie.rows[1]);
    CHECK(select_best(tie) == "second");
  }

  TEST_CASE("single row and incomplete reports") {
    ExperimentReport one;
    one.rows = {{"only", 1.0, 2.0, 3.0, 4.0}};
    CHECK(select_best(one) == "only");
    one.rows.push_back({"broken", 1.0, std::nullopt, 3.0, 4.0});
    CHECK_FALSE(one.complete());
    CHECK_THROWS_AS(select_best(one), ValidationError);
    CHECK_THROWS_AS(select_best(ExperimentReport{}), ValidationError);
    const auto with_deltas = compute_deltas(one, "only");
    CHECK_FALSE(with_deltas.deltas[1].has_value());
  }

  TEST_CASE("report JSON round trip and table rendering") {
    auto t2 = compute_deltas(load_report("emotion_grid.json"), "TowerBase");
    t2.best_label = select_best(t2);
    const auto back = ExperimentReport::from_json(json::parse(t2.to_json().dump()));
    CHECK(back.rows.size() == 10);
    CHECK(back.baseline_label == "TowerBase");
    CHECK(back.best_label == t2.best_label);
    CHECK(delta_of(back, "TowerBase +valence token").bleu_dev == delta_of(t2, "TowerBase +valence token").bleu_dev);

    const auto table = render_table(t2);
    CHECK(table.find("* TowerBase +arousal source-side") != std::string::npos);
    CHECK(table.find("22.1") != std::string::npos);
    CHECK(table.find("+1.1") != std::string::npos);
    CHECK(table.find("+3.5") != std::string::npos);
    CHECK(table.find("-7.5") != std::string::npos);  // dominance token BLEU dev
    std::size_t lines = std::count(table.begin(), table.end(), '\n');
    CHECK(lines >= 13);
  }

  TEST_CASE("spec validation") {
    const json base = {{"manifest", "m.jsonl"},
                       {"annotations", "a.jsonl"},
                       {"backends", {{{"label", "TowerBase"}, {"config", {{"type", "toy"}}}}}},
                       {"configurations", grid_configurations(true)}};
    const auto spec = ExperimentSpec::from_json(base, "/data");
    CHECK(spec.manifest == "/data/m.jsonl");
    REQUIRE(spec.configurations.size() == 10);
    const auto t2 = load_report("emotion_grid.json");
    for (std::size_t i = 0; i < 10; ++i) CHECK(row_label(spec.backends[0], spec.configurations[i]) == t2.rows[i].label);

    auto warm = base;
    warm["configurations"][3]["init_from"] = "runs/TowerBase/checkpoint";
    CHECK_THROWS_AS(ExperimentSpec::from_json(warm), UsageError);
    auto two_baselines = base;
    two_baselines["configurations"].push_back({{"template", "base_instruct"}});
    CHECK_THROWS_AS(ExperimentSpec::from_json(two_baselines), UsageError);
    auto dup = base;
    dup["configurations"].push_back({{"template", "emotion_token"}, {"dimension", "valence"}});
    CHECK_THROWS_AS(ExperimentSpec::from_json(dup), UsageError);
    auto no_dim = base;
    no_dim["configurations"][1].erase("dimension");
    CHECK_THROWS_AS(ExperimentSpec::from_json(no_dim), UsageError);
    auto no_ann = base;
    no_ann.erase("annotations");
    ::unsetenv("EMOMT_SER_ENDPOINT");
    CHECK_THROWS_AS(ExperimentSpec::from_json(no_ann), UsageError);

    // Model comparison: several backends, base template only.
    const json cmp = {{"manifest", "m.jsonl"},
                      {"backends",
                       {{{"label", "small"}, {"config", {{"type", "toy"}}}},
                        {{"label", "small-instruct"}, {"base_template", "base_instruct"}, {"config", {{"type", "toy"}}}}}},
                      {"configurations", {{{"template", "base"}}}}};
    CHECK(ExperimentSpec::from_json(cmp).backends.size() == 2);
  }

  TEST_CASE("toy backend: baseline plus arousal x 3 templates") {
    testkit::TempDir dir;
    const auto syn = testkit::make_synthetic(60, 31, testkit::caesar);
    save_corpus(syn.corpus, dir / "m.jsonl");
    save_annotations(syn.annotations, dir / "a.jsonl");
    const json j = {{"name", "toy grid"},
                    {"manifest", "m.jsonl"},
                    {"annotations", "a.jsonl"},
                    {"backends",
                     {{{"label", "Toy"},
                       {"config",
                        {{"type", "toy"}, {"embed_dim", 8}, {"encoder_hidden", 12}, {"decoder_hidden", 16},
                         {"max_output_len", 24}}}}}},
                    {"configurations", grid_configurations(false)},
                    {"training", {{"max_epochs", 1}, {"seed", 7}}},
                    {"run_dir", "runs"}};
    testkit::write_file(dir / "spec.json", j.dump());
    const auto report = run_experiment(ExperimentSpec::load(dir / "spec.json"));
    REQUIRE(report.rows.size() == 4);
    CHECK(report.complete());
    CHECK(report.baseline_label == "Toy");
    CHECK(report.best_label.has_value());
    std::set<std::string> checkpoints, checksums;
    for (const auto& r : report.rows) {
      CAPTURE(r.label);
      CHECK(r.error.empty());
      checkpoints.insert(r.checkpoint_ref);
      checksums.insert(r.initial_checksum);
      CHECK(r.epochs_ran == 1);
      const std::filesystem::path run(r.run_dir);
      CHECK(run.filename().string().ends_with("__seed7"));
      for (const char* f : {"config.json", "handle.json", "train.jsonl", "prompts_dev.jsonl", "prompts_test.jsonl",
                            "hypotheses_test.jsonl", "scores_dev.json", "scores_test.json"})
        CHECK(std::filesystem::exists(run / f));
    }
    CHECK(checkpoints.size() == 4);
    CHECK(checksums.size() == 1);
    for (const auto& e : load_prompt_set(std::filesystem::path(report.rows[0].run_dir) / "train.jsonl"))
      CHECK_FALSE(has_emotion_markup(e.prompt_text + e.completion_text));
  }

  TEST_CASE("external backend runs the full ten-row grid; failures mark rows incomplete") {
    testkit::TempDir dir;
    const auto syn = testkit::make_synthetic(40, 32, testkit::caesar);
    save_corpus(syn.corpus, dir / "m.jsonl");
    save_annotations(syn.annotations, dir / "a.jsonl");
    testkit::write_file(dir / "train.py", kTrain);
    testkit::write_file(dir / "gen.py", kGen);
    json backend = {{"type", "external"},
                    {"base_model", "towerbase-7b"},
                    {"train_command", "python3 " + (dir / "train.py").string() + " {train} {out_dir}"},
                    {"generate_command", "python3 " + (dir / "gen.py").string() + " {prompts} {output}"}};
    json j = {{"manifest", "m.jsonl"},
              {"annotations", "a.jsonl"},
              {"backends", {{{"label", "TowerBase"}, {"config", backend}}}},
              {"configurations", grid_configurations(true)},
              {"run_dir", "runs"}};
    const auto report = run_experiment(ExperimentSpec::from_json(j, dir.path()));
    const auto t2 = load_report("emotion_grid.json");
    REQUIRE(report.rows.size() == t2.rows.size());
    for (std::size_t i = 0; i < t2.rows.size(); ++i) CHECK(report.rows[i].label == t2.rows[i].label);
    CHECK(report.complete());

    j["backends"][0]["config"]["generate_command"] = "false";
    const auto broken = run_experiment(ExperimentSpec::from_json(j, dir.path()));
    CHECK_FALSE(broken.complete());
    CHECK_FALSE(broken.rows[3].error.empty());
    CHECK_FALSE(broken.best_label.has_value());
    CHECK(render_table(broken).find("incomplete:") != std::string::npos);
  }
}
