#pragma once

#include <map>
#include <memory>
#include <string>

#include "emomt/toy/seq2seq.hpp"
#include "emomt/training.hpp"

namespace emomt {

// Reference backend: a byte-level encoder-decoder trained from scratch on CPU.
// Its "pre-trained initial state" is the seeded random initialization.
class ToyBackend : public TrainerBackend {
 public:
  explicit ToyBackend(toy::ToyConfig config = {}, std::string label = "toy");

  std::string backend_id() const override { return "toy"; }
  json config() const override;
  std::string initial_checksum(std::uint64_t seed) const override;
  TrainingRun fit(std::span<const PromptExample> train_set, std::span<const PromptExample> dev_set,
                  const TrainingConfig& config, const std::filesystem::path& workdir,
                  const EpochCallback& on_epoch) override;
  std::string initial_checkpoint(const TrainingConfig& config, const std::filesystem::path& workdir) override;
  std::vector<std::string> generate(const std::string& checkpoint_ref, std::span<const std::string> prompts) override;

  const toy::ToyConfig& toy_config() const { return config_; }

 private:
  toy::ToyConfig config_;
  std::string label_;
  std::map<std::string, std::shared_ptr<toy::Seq2Seq>> loaded_;
};

// Drives a user-supplied fine-tuning program through shell commands.
//
// Training: the driver writes train.jsonl / dev.jsonl (PromptExample records)
// into the run directory and runs `train_command` with these placeholders
// substituted (each shell-quoted):
//   {train} {dev} {out_dir} {max_epochs} {seed} {metric} {base_model}
// On success the command prints one JSON object on stdout:
//   {"checkpoint_ref": "...",
//    "epochs": [{"epoch": 1, "dev_loss": x, "dev_bleu": y?, "train_loss": z?, "checkpoint_ref": "..."?}, ...],
//    "initial_checksum": "..."?}
// Per-epoch checkpoint refs let the driver pick the best epoch; without them
// the top-level checkpoint_ref is used. Stderr goes to {out_dir}/train.log.
//
// Generation: the driver writes {"prompt": ...} lines to a prompts file and
// runs `generate_command` with {checkpoint} {prompts} {output}; the command
// writes one {"text": ...} line per prompt, in order, to {output}.
class ExternalBackend : public TrainerBackend {
 public:
  explicit ExternalBackend(json config);

  std::string backend_id() const override { return "external"; }
  json config() const override { return config_; }
  std::string initial_checksum(std::uint64_t seed) const override;
  TrainingRun fit(std::span<const PromptExample> train_set, std::span<const PromptExample> dev_set,
                  const TrainingConfig& config, const std::filesystem::path& workdir,
                  const EpochCallback& on_epoch) override;
  std::string initial_checkpoint(const TrainingConfig& config, const std::filesystem::path& workdir) override;
  std::vector<std::string> generate(const std::string& checkpoint_ref, std::span<const std::string> prompts) override;

 private:
  json config_;
  std::string base_model_;
  std::string train_command_;
  std::string generate_command_;
};

// Single-quotes `s` for /bin/sh.
std::string shell_quote(const std::string& s);

// Replaces every "{key}" in `tmpl` with the shell-quoted value.
std::string expand_command(const std::string& tmpl, const std::map<std::string, std::string>& values);

}  // namespace emomt
