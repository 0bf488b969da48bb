// emomt: command-line driver for the corpus, annotation, prompting, training,
// evaluation and reporting steps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "emomt/comet.hpp"
#include "emomt/corpus.hpp"
#include "emomt/emotion.hpp"
#include "emomt/error.hpp"
#include "emomt/evaluation.hpp"
#include "emomt/experiment.hpp"
#include "emomt/http.hpp"
#include "emomt/prompting.hpp"
#include "emomt/training.hpp"

namespace fs = std::filesystem;
using namespace emomt;

namespace {

std::optional<EmotionDimension> optional_dimension(const std::string& name) {
  if (name.empty() || name == "none") return std::nullopt;
  return parse_dimension(name);
}

std::optional<AnnotationSet> load_annotations_for(const Corpus& corpus, const std::string& path) {
  if (path.empty()) return std::nullopt;
  FileAnnotator annotator(path);
  return annotate(corpus, annotator);
}

void print_stats(const AnnotationSet& set, double threshold) {
  const auto stats = annotation_stats(set);
  std::printf("%-10s %6s %8s %8s %8s %10s\n", "dimension", "count", "min", "median", "max", "positive");
  for (auto d : kAllDimensions) {
    const auto& s = stats[static_cast<std::size_t>(d)];
    std::printf("%-10s %6zu %8.4f %8.4f %8.4f %10.4f\n", std::string(to_string(d)).c_str(), s.count, s.min, s.median,
                s.max, s.positive_fraction);
  }
  std::printf("threshold %.4g (values >= threshold count as with/positive)\n", threshold);
}

// A model reference is a handle.json file or a directory holding one.
ModelHandle load_handle(const std::string& ref) {
  fs::path p(ref);
  if (fs::is_directory(p)) p /= "handle.json";
  if (!fs::exists(p)) throw UsageError("model reference '" + ref + "' is neither handle.json nor a directory with one");
  try {
    return ModelHandle::from_json(read_json_file(p));
  } catch (const json::exception& e) {
    throw ValidationError(p.string() + ": malformed model handle: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

std::string report_markdown(const ExperimentReport& report) {
  return "# " + (report.name.empty() ? std::string("Experiment report") : report.name) + "\n\n```\n" +
         render_table(report) + "```\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion-conditioned MT experiment pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "emomt 0.1.0");

  // ingest
  std::string manifest;
  bool check_only = false;
  std::string normalized_out;
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus manifest and print split counts");
  ingest->add_option("--manifest", manifest, "JSONL manifest")->required();
  ingest->add_flag("--check", check_only, "Validate only");
  ingest->add_option("--out", normalized_out, "Write the validated manifest here");

  // annotate
  std::string from_file, endpoint, annotations_out;
  bool stats = false;
  double threshold = kDefaultThreshold;
  auto* annotate_cmd = app.add_subcommand("annotate", "Attach arousal/dominance/valence scores to every utterance");
  annotate_cmd->add_option("--manifest", manifest, "JSONL manifest")->required();
  auto* from_opt = annotate_cmd->add_option("--from-file", from_file, "Annotation JSONL {id, arousal, dominance, valence}");
  annotate_cmd->add_option("--endpoint", endpoint, "SER endpoint URL (default: $EMOMT_SER_ENDPOINT)")->excludes(from_opt);
  annotate_cmd->add_option("--out", annotations_out, "Write validated annotations here");
  annotate_cmd->add_flag("--stats", stats, "Print per-dimension summary");
  annotate_cmd->add_option("--threshold", threshold, "Binarization threshold for --stats");

  // build-prompts
  std::string split_name = "train", template_name, dimension_name, annotations_path, out_path;
  bool inference = false;
  auto* build = app.add_subcommand("build-prompts", "Render a split into prompt/completion JSONL");
  build->add_option("--manifest", manifest, "JSONL manifest")->required();
  build->add_option("--split", split_name, "train|dev|test");
  build->add_option("--template", template_name, "Template kind")->required();
  build->add_option("--dimension", dimension_name, "arousal|dominance|valence");
  build->add_option("--annotations", annotations_path, "Annotation JSONL");
  build->add_option("--threshold", threshold, "Binarization threshold");
  build->add_flag("--inference", inference, "Leave completions empty");
  build->add_option("--out", out_path, "Output JSONL")->required();

  // train
  std::string backend_type = "toy", config_path, out_dir = "runs/train";
  auto* train_cmd = app.add_subcommand("train", "Fine-tune a backend on the train split, selecting the best dev epoch");
  train_cmd->add_option("--manifest", manifest, "JSONL manifest")->required();
  train_cmd->add_option("--template", template_name, "Template kind")->required();
  train_cmd->add_option("--dimension", dimension_name, "arousal|dominance|valence");
  train_cmd->add_option("--annotations", annotations_path, "Annotation JSONL");
  train_cmd->add_option("--threshold", threshold, "Binarization threshold");
  train_cmd->add_option("--backend", backend_type, "toy|external")->check(CLI::IsMember({"toy", "external"}));
  train_cmd->add_option("--config", config_path, "JSON with optional 'backend' and 'training' objects");
  train_cmd->add_option("--out-dir", out_dir, "Run directory");

  // evaluate
  std::string model_ref, comet_endpoint;
  auto* eval_cmd = app.add_subcommand("evaluate", "Decode a split and score it with BLEU and COMET");
  eval_cmd->add_option("--model", model_ref, "handle.json or its directory")->required();
  eval_cmd->add_option("--manifest", manifest, "JSONL manifest")->required();
  eval_cmd->add_option("--split", split_name, "train|dev|test")->default_val("test");
  eval_cmd->add_option("--template", template_name, "Template kind (must match the model)");
  eval_cmd->add_option("--dimension", dimension_name, "arousal|dominance|valence");
  eval_cmd->add_option("--annotations", annotations_path, "Annotation JSONL");
  eval_cmd->add_option("--threshold", threshold, "Binarization threshold");
  eval_cmd->add_option("--comet-endpoint", comet_endpoint, "COMET endpoint URL (default: $EMOMT_COMET_ENDPOINT)");
  eval_cmd->add_option("--out", out_path, "scores.json")->required();

  // report
  std::string spec_path, from_report;
  auto* report_cmd = app.add_subcommand("report", "Run an experiment spec (or load a report) and render it");
  auto* spec_opt = report_cmd->add_option("--spec", spec_path, "Experiment spec JSON");
  report_cmd->add_option("--from", from_report, "Existing report.json to re-render")->excludes(spec_opt);
  report_cmd->add_option("--out", out_path, "report.md or report.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const Corpus corpus = load_corpus(manifest);
      const auto& c = corpus.split_counts();
      for (auto s : kAllSplits) std::printf("%-5s %zu\n", std::string(to_string(s)).c_str(), c[s]);
      std::printf("total %zu\n", corpus.size());
      if (!check_only && !normalized_out.empty()) save_corpus(corpus, normalized_out);
    } else if (*annotate_cmd) {
      const Corpus corpus = load_corpus(manifest);
      std::unique_ptr<EmotionAnnotator> annotator;
      if (!from_file.empty()) {
        annotator = std::make_unique<FileAnnotator>(from_file);
      } else {
        if (endpoint.empty()) endpoint = env_or_empty("EMOMT_SER_ENDPOINT");
        if (endpoint.empty()) throw UsageError("annotate needs --from-file, --endpoint or EMOMT_SER_ENDPOINT");
        annotator = std::make_unique<EndpointAnnotator>(endpoint);
      }
      const auto set = annotate(corpus, *annotator);
      if (!annotations_out.empty()) save_annotations(set, annotations_out);
      std::printf("annotated %zu utterances (%s)\n", set.size(), set.provenance().c_str());
      if (stats) print_stats(set, threshold);
    } else if (*build) {
      const Corpus corpus = load_corpus(manifest);
      const auto annotations = load_annotations_for(corpus, annotations_path);
      const auto examples = build_prompt_set(corpus, parse_split(split_name), parse_template(template_name),
                                             {.dimension = optional_dimension(dimension_name),
                                              .annotations = annotations ? &*annotations : nullptr,
                                              .threshold = threshold,
                                              .with_targets = !inference});
      save_prompt_set(examples, out_path);
      std::printf("wrote %zu examples to %s\n", examples.size(), out_path.c_str());
    } else if (*train_cmd) {
      const Corpus corpus = load_corpus(manifest);
      const auto annotations = load_annotations_for(corpus, annotations_path);
      json cfg = config_path.empty() ? json::object() : read_json_file(config_path);
      json backend_cfg = cfg.contains("backend") ? cfg["backend"] : json::object();
      if (!cfg.contains("backend")) {
        backend_cfg = cfg;
        backend_cfg.erase("training");
      }
      backend_cfg["type"] = backend_type;
      const TrainingConfig tc = cfg.contains("training") ? TrainingConfig::from_json(cfg["training"]) : TrainingConfig{};
      const TemplateKind kind = parse_template(template_name);
      const PromptSetOptions opts{.dimension = optional_dimension(dimension_name),
                                  .annotations = annotations ? &*annotations : nullptr,
                                  .threshold = threshold};
      const auto train_set = build_prompt_set(corpus, Split::train, kind, opts);
      const auto dev_set = build_prompt_set(corpus, Split::dev, kind, opts);
      auto backend = make_backend(backend_cfg);
      const auto handle = train(*backend, train_set, dev_set, tc, fs::path(out_dir) / "model");
      write_json_file(fs::path(out_dir) / "handle.json", handle.to_json());
      for (const auto& e : handle.history) {
        std::printf("epoch %d  train_loss %.4f  dev_loss %.4f", e.epoch, e.train_loss, e.dev_loss);
        if (e.dev_bleu) std::printf("  dev_bleu %.2f", *e.dev_bleu);
        std::printf("\n");
      }
      std::printf("selected epoch %d of %d; handle %s\n", handle.selected_epoch, handle.epochs_ran,
                  (fs::path(out_dir) / "handle.json").c_str());
    } else if (*eval_cmd) {
      const ModelHandle model = load_handle(model_ref);
      const TemplateKind kind = template_name.empty() ? model.kind : parse_template(template_name);
      const auto dimension = dimension_name.empty() ? model.dimension : optional_dimension(dimension_name);
      const Corpus corpus = load_corpus(manifest);
      const auto annotations = load_annotations_for(corpus, annotations_path);
      auto backend = make_backend(model.backend_config);
      auto comet = make_comet_client(comet_endpoint);
      const auto result = evaluate_run(*backend, model, corpus, parse_split(split_name), kind, dimension,
                                       {.annotations = annotations ? &*annotations : nullptr, .threshold = threshold},
                                       *comet);
      const fs::path out(out_path);
      write_json_file(out, scores_json(result));
      save_evaluation_artifacts(result, out.has_parent_path() ? out.parent_path() : fs::path("."));
      std::printf("BLEU %.2f  COMET %.2f  n_pairs %zu\n", result.bleu.score, result.comet.score, result.n_pairs());
    } else if (*report_cmd) {
      ExperimentReport report;
      if (!from_report.empty()) {
        report = ExperimentReport::from_json(read_json_file(from_report));
        if (report.complete()) report.best_label = select_best(report);
      } else if (!spec_path.empty()) {
        report = run_experiment(ExperimentSpec::load(spec_path));
      } else {
        throw UsageError("report needs --spec or --from");
      }
      const fs::path out(out_path);
      if (out.extension() == ".json") write_json_file(out, report.to_json());
      else write_text(out, report_markdown(report));
      std::fputs(render_table(report).c_str(), stdout);
      if (!report.complete()) return 3;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "emomt: usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "emomt: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
