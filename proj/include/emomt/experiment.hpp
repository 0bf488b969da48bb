#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emomt/jsonl.hpp"
#include "emomt/prompting.hpp"
#include "emomt/training.hpp"

namespace emomt {

struct BackendSpec {
  std::string label;        // row label for this backend's base configuration
  json config;              // passed to make_backend()
  TemplateKind base_template = TemplateKind::base_plain;
};

// One configuration to fine-tune. `kind` empty means "the backend's base template".
struct ConfigurationSpec {
  std::optional<TemplateKind> kind;
  std::optional<EmotionDimension> dimension;
};

// Experiment description, read from JSON:
//
//   {"name": "...",
//    "manifest": "corpus.jsonl",
//    "annotations": "scores.jsonl",            // optional
//    "ser_endpoint": "http://...",             // optional, used when no annotations file
//    "backends": [{"label": "TowerBase", "base_template": "base_plain", "config": {"type": "toy", ...}}],
//    "configurations": [{"template": "base"}, {"template": "emotion_source", "dimension": "arousal"}, ...],
//    "training": {"max_epochs": 5, "early_stopping_metric": "dev_loss", "seed": 1, ...},
//    "comet_endpoint": "http://...",           // optional; stub scorer when absent
//    "baseline": "TowerBase",                  // optional; first base row otherwise
//    "threshold": 0.5,
//    "run_dir": "runs"}
//
// Relative paths resolve against the spec file's directory. Each configuration
// trains from the backend's initial state; a configuration that names a
// checkpoint to start from ("init_from", "checkpoint", "resume_from") is rejected.
struct ExperimentSpec {
  std::string name = "experiment";
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> annotations;
  std::string ser_endpoint;
  std::vector<BackendSpec> backends;
  std::vector<ConfigurationSpec> configurations;
  TrainingConfig training;
  std::string comet_endpoint;
  std::optional<std::string> baseline;
  double threshold = 0.5;
  std::filesystem::path run_dir = "runs";

  static ExperimentSpec from_json(const json& j, const std::filesystem::path& base_dir = {});
  static ExperimentSpec load(const std::filesystem::path& path);
};

// "<backend label>" for a base configuration, otherwise
// "<backend label> +<dimension> <source-side|target-side|token>".
std::string row_label(const BackendSpec& backend, const ConfigurationSpec& config);

struct ReportRow {
  std::string label;
  std::optional<double> bleu_dev, bleu_test, comet_dev, comet_test;
  // Provenance; empty for fixture rows.
  std::string backend;
  std::string template_name;
  std::string dimension;
  std::string checkpoint_ref;
  std::string initial_checksum;
  int epochs_ran = 0;
  std::string run_dir;
  std::string error;

  bool complete() const { return bleu_dev && bleu_test && comet_dev && comet_test; }
};

struct RowDelta {
  double bleu_dev = 0.0, bleu_test = 0.0, comet_dev = 0.0, comet_test = 0.0;
};

struct ExperimentReport {
  std::string name;
  std::vector<ReportRow> rows;
  std::string baseline_label;
  std::vector<std::optional<RowDelta>> deltas;  // parallel to rows; empty until computed
  std::optional<std::string> best_label;

  bool complete() const;
  const ReportRow& row(const std::string& label) const;

  json to_json() const;
  static ExperimentReport from_json(const json& j);
};

// Trains and evaluates every (backend, configuration) row on dev and test,
// persisting artifacts under run_dir/<label>__seed<seed>/. A failing row is
// recorded with its error and left incomplete; spec-level problems throw.
ExperimentReport run_experiment(const ExperimentSpec& spec);

// Label with the highest dev COMET; ties go to higher dev BLEU, then to the
// earlier row. Throws ValidationError on an incomplete report.
std::string select_best(const ExperimentReport& report);

// Cellwise (row - baseline) at full precision. Incomplete rows get no delta.
ExperimentReport compute_deltas(ExperimentReport report, const std::string& baseline_label);

// Display rounding used by the rendered tables.
double round1(double x);

// Aligned text table: label, BLEU dev/test, COMET dev/test, then the deltas.
std::string render_table(const ExperimentReport& report);

}  // namespace emomt
