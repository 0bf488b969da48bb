#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emomt/jsonl.hpp"
#include "emomt/prompting.hpp"

namespace emomt {

enum class StoppingMetric { dev_loss, dev_bleu };

std::string_view to_string(StoppingMetric m);
StoppingMetric parse_stopping_metric(std::string_view name);

struct TrainingConfig {
  int max_epochs = 5;
  StoppingMetric early_stopping_metric = StoppingMetric::dev_loss;
  std::uint64_t seed = 1;
  // Stop once the metric has not improved for this many epochs; 0 runs all epochs.
  int patience = 2;
  // Free-form record of the backend's adapter/quantization setup.
  std::string adapter_note;

  json to_json() const;
  static TrainingConfig from_json(const json& j);
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  std::optional<double> dev_bleu;
  std::string checkpoint_ref;

  json to_json() const;
  static EpochRecord from_json(const json& j);
};

// What a backend reports back from one fine-tuning run.
struct TrainingRun {
  std::vector<EpochRecord> epochs;
  std::string initial_checksum;  // fingerprint of the state training started from
  std::string fallback_checkpoint;  // used when epochs carry no checkpoint_ref
};

struct ModelHandle {
  std::string backend_id;
  json backend_config;  // enough for make_backend() to rebuild the backend
  std::string checkpoint_ref;
  TemplateKind kind = TemplateKind::base_plain;
  std::optional<EmotionDimension> dimension;
  int epochs_ran = 0;
  int max_epochs = 0;
  int selected_epoch = 0;  // 0 = untrained initial state
  std::string initial_checksum;
  std::vector<EpochRecord> history;

  json to_json() const;
  static ModelHandle from_json(const json& j);
};

// Called after every epoch; returning false ends training early.
using EpochCallback = std::function<bool(const EpochRecord&)>;

// A fine-tunable translation model. fit() always starts from the backend's
// pre-trained initial state for the configured seed, never from an earlier
// run's checkpoint.
class TrainerBackend {
 public:
  virtual ~TrainerBackend() = default;
  virtual std::string backend_id() const = 0;
  virtual json config() const = 0;
  // Fingerprint of the initial state fit() starts from for this seed.
  virtual std::string initial_checksum(std::uint64_t seed) const = 0;
  virtual TrainingRun fit(std::span<const PromptExample> train_set, std::span<const PromptExample> dev_set,
                          const TrainingConfig& config, const std::filesystem::path& workdir,
                          const EpochCallback& on_epoch) = 0;
  // Checkpoint of the untouched initial state, for untrained baselines.
  virtual std::string initial_checkpoint(const TrainingConfig& config, const std::filesystem::path& workdir) = 0;
  // Raw continuations, one per prompt, in order.
  virtual std::vector<std::string> generate(const std::string& checkpoint_ref, std::span<const std::string> prompts) = 0;
};

// {"type": "toy", ...toy hyperparameters} or
// {"type": "external", "train_command": ..., "generate_command": ..., "base_model": ...}
std::unique_ptr<TrainerBackend> make_backend(const json& backend_config);

// Index into `epochs` of the best record under `metric` (lowest dev loss or
// highest dev BLEU; earliest epoch wins ties).
std::size_t select_epoch(std::span<const EpochRecord> epochs, StoppingMetric metric);

// Fine-tunes `backend` and returns the best epoch's checkpoint. Train and dev
// sets must share one template and dimension (UsageError otherwise).
ModelHandle train(TrainerBackend& backend, std::span<const PromptExample> train_set,
                  std::span<const PromptExample> dev_set, const TrainingConfig& config,
                  const std::filesystem::path& workdir);

// Handle for the backend's untrained initial state, trained_on the given template.
ModelHandle untrained_handle(TrainerBackend& backend, TemplateKind kind, std::optional<EmotionDimension> dimension,
                             const TrainingConfig& config, const std::filesystem::path& workdir);

// Decodes inference prompts and cuts each continuation with parse_hypothesis.
// Prompts rendered with another template than the model's raise UsageError.
std::vector<std::string> translate(TrainerBackend& backend, const ModelHandle& model,
                                   std::span<const PromptExample> prompts);
std::vector<std::string> translate(const ModelHandle& model, std::span<const PromptExample> prompts);

}  // namespace emomt
