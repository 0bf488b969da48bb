#include "emomt/training.hpp"

#include <cmath>
#include <limits>

#include "emomt/backends.hpp"
#include "emomt/error.hpp"

namespace emomt {

std::string_view to_string(StoppingMetric m) { return m == StoppingMetric::dev_loss ? "dev_loss" : "dev_bleu"; }

StoppingMetric parse_stopping_metric(std::string_view name) {
  if (name == "dev_loss") return StoppingMetric::dev_loss;
  if (name == "dev_bleu") return StoppingMetric::dev_bleu;
  throw UsageError("unknown early-stopping metric '" + std::string(name) + "' (expected dev_loss or dev_bleu)");
}

json TrainingConfig::to_json() const {
  return {{"max_epochs", max_epochs}, {"early_stopping_metric", to_string(early_stopping_metric)},
          {"seed", seed},             {"patience", patience},
          {"adapter_note", adapter_note}};
}

TrainingConfig TrainingConfig::from_json(const json& j) {
  TrainingConfig c;
  try {
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.early_stopping_metric = parse_stopping_metric(j.value("early_stopping_metric", std::string("dev_loss")));
    c.seed = j.value("seed", c.seed);
    c.patience = j.value("patience", c.patience);
    c.adapter_note = j.value("adapter_note", c.adapter_note);
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed training config: ") + e.what());
  }
  if (c.max_epochs < 1) throw UsageError("max_epochs must be at least 1");
  if (c.patience < 0) throw UsageError("patience must be non-negative");
  return c;
}

json EpochRecord::to_json() const {
  return {{"epoch", epoch},
          {"train_loss", train_loss},
          {"dev_loss", dev_loss},
          {"dev_bleu", dev_bleu ? json(*dev_bleu) : json(nullptr)},
          {"checkpoint_ref", checkpoint_ref}};
}

EpochRecord EpochRecord::from_json(const json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.train_loss = j.value("train_loss", 0.0);
  r.dev_loss = j.at("dev_loss").get<double>();
  if (auto it = j.find("dev_bleu"); it != j.end() && !it->is_null()) r.dev_bleu = it->get<double>();
  r.checkpoint_ref = j.value("checkpoint_ref", std::string());
  return r;
}

json ModelHandle::to_json() const {
  json hist = json::array();
  for (const auto& e : history) hist.push_back(e.to_json());
  return {{"backend_id", backend_id},
          {"backend_config", backend_config},
          {"checkpoint_ref", checkpoint_ref},
          {"template", to_string(kind)},
          {"dimension", dimension ? json(to_string(*dimension)) : json(nullptr)},
          {"epochs_ran", epochs_ran},
          {"max_epochs", max_epochs},
          {"selected_epoch", selected_epoch},
          {"initial_checksum", initial_checksum},
          {"history", std::move(hist)}};
}

ModelHandle ModelHandle::from_json(const json& j) {
  ModelHandle h;
  try {
    h.backend_id = j.at("backend_id").get<std::string>();
    h.backend_config = j.at("backend_config");
    h.checkpoint_ref = j.at("checkpoint_ref").get<std::string>();
    h.kind = parse_template(j.at("template").get<std::string>());
    if (auto it = j.find("dimension"); it != j.end() && !it->is_null()) h.dimension = parse_dimension(it->get<std::string>());
    h.epochs_ran = j.value("epochs_ran", 0);
    h.max_epochs = j.value("max_epochs", 0);
    h.selected_epoch = j.value("selected_epoch", 0);
    h.initial_checksum = j.value("initial_checksum", std::string());
    for (const auto& e : j.value("history", json::array())) h.history.push_back(EpochRecord::from_json(e));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model handle: ") + e.what());
  }
  return h;
}

std::unique_ptr<TrainerBackend> make_backend(const json& backend_config) {
  const std::string type = backend_config.value("type", std::string("toy"));
  if (type == "toy") {
    return std::make_unique<ToyBackend>(toy::ToyConfig::from_json(backend_config),
                                        backend_config.value("label", std::string("toy")));
  }
  if (type == "external") return std::make_unique<ExternalBackend>(backend_config);
  throw UsageError("unknown backend type '" + type + "' (expected toy or external)");
}

std::size_t select_epoch(std::span<const EpochRecord> epochs, StoppingMetric metric) {
  if (epochs.empty()) throw BackendError("training produced no epochs");
  std::size_t best = 0;
  auto value = [&](const EpochRecord& r) {
    if (metric == StoppingMetric::dev_loss) return -r.dev_loss;
    if (!r.dev_bleu) throw BackendError("epoch " + std::to_string(r.epoch) + " has no dev BLEU to select on");
    return *r.dev_bleu;
  };
  double best_value = value(epochs[0]);
  for (std::size_t i = 1; i < epochs.size(); ++i) {
    const double v = value(epochs[i]);
    if (v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

namespace {

void check_uniform_template(std::span<const PromptExample> set, TemplateKind kind,
                            std::optional<EmotionDimension> dim, const char* what) {
  for (const auto& e : set) {
    if (e.kind != kind || e.dimension != dim) {
      throw UsageError(std::string(what) + " example '" + e.utterance_id + "' is rendered with " +
                       std::string(to_string(e.kind)) + (e.dimension ? "/" + std::string(to_string(*e.dimension)) : "") +
                       ", expected " + std::string(to_string(kind)) + (dim ? "/" + std::string(to_string(*dim)) : ""));
    }
  }
}

}  // namespace

ModelHandle train(TrainerBackend& backend, std::span<const PromptExample> train_set,
                  std::span<const PromptExample> dev_set, const TrainingConfig& config,
                  const std::filesystem::path& workdir) {
  if (train_set.empty()) throw UsageError("empty training set");
  if (dev_set.empty()) throw UsageError("empty dev set");
  if (config.max_epochs < 1) throw UsageError("max_epochs must be at least 1");
  const TemplateKind kind = train_set.front().kind;
  const auto dim = train_set.front().dimension;
  check_uniform_template(train_set, kind, dim, "training");
  check_uniform_template(dev_set, kind, dim, "dev");
  for (const auto& e : train_set) {
    if (e.completion_text.empty()) throw UsageError("training example '" + e.utterance_id + "' has no completion");
  }

  std::filesystem::create_directories(workdir);

  // Early stopping: quit after `patience` epochs without improvement.
  double best = -std::numeric_limits<double>::infinity();
  int stale = 0;
  auto on_epoch = [&](const EpochRecord& r) {
    const double v = config.early_stopping_metric == StoppingMetric::dev_loss ? -r.dev_loss : r.dev_bleu.value_or(0.0);
    if (v > best) {
      best = v;
      stale = 0;
    } else {
      ++stale;
    }
    if (r.epoch >= config.max_epochs) return false;
    return config.patience == 0 || stale < config.patience;
  };

  const std::string expected_start = backend.initial_checksum(config.seed);
  TrainingRun run = backend.fit(train_set, dev_set, config, workdir, on_epoch);
  if (run.epochs.empty()) throw BackendError(backend.backend_id() + ": training produced no epochs");
  if (static_cast<int>(run.epochs.size()) > config.max_epochs) {
    throw BackendError(backend.backend_id() + ": ran " + std::to_string(run.epochs.size()) +
                       " epochs, over the budget of " + std::to_string(config.max_epochs));
  }
  if (run.initial_checksum != expected_start) {
    throw BackendError(backend.backend_id() + ": training did not start from the initial state (checksum " +
                       run.initial_checksum + ", expected " + expected_start + ")");
  }

  const std::size_t idx = select_epoch(run.epochs, config.early_stopping_metric);
  ModelHandle h;
  h.backend_id = backend.backend_id();
  h.backend_config = backend.config();
  h.checkpoint_ref = run.epochs[idx].checkpoint_ref.empty() ? run.fallback_checkpoint : run.epochs[idx].checkpoint_ref;
  if (h.checkpoint_ref.empty()) throw BackendError(backend.backend_id() + ": no checkpoint reference reported");
  h.kind = kind;
  h.dimension = dim;
  h.epochs_ran = static_cast<int>(run.epochs.size());
  h.max_epochs = config.max_epochs;
  h.selected_epoch = run.epochs[idx].epoch;
  h.initial_checksum = run.initial_checksum;
  h.history = std::move(run.epochs);
  return h;
}

ModelHandle untrained_handle(TrainerBackend& backend, TemplateKind kind, std::optional<EmotionDimension> dimension,
                             const TrainingConfig& config, const std::filesystem::path& workdir) {
  std::filesystem::create_directories(workdir);
  ModelHandle h;
  h.backend_id = backend.backend_id();
  h.backend_config = backend.config();
  h.checkpoint_ref = backend.initial_checkpoint(config, workdir);
  h.kind = kind;
  h.dimension = dimension;
  h.max_epochs = config.max_epochs;
  h.initial_checksum = backend.initial_checksum(config.seed);
  return h;
}

std::vector<std::string> translate(TrainerBackend& backend, const ModelHandle& model,
                                   std::span<const PromptExample> prompts) {
  if (backend.backend_id() != model.backend_id) {
    throw UsageError("model was trained by backend '" + model.backend_id + "', not '" + backend.backend_id() + "'");
  }
  check_uniform_template(prompts, model.kind, model.dimension, "inference");
  std::vector<std::string> texts;
  texts.reserve(prompts.size());
  for (const auto& p : prompts) {
    if (!p.completion_text.empty()) throw UsageError("prompt '" + p.utterance_id + "' is not in inference mode");
    texts.push_back(p.prompt_text);
  }
  if (texts.empty()) return {};
  auto raw = backend.generate(model.checkpoint_ref, texts);
  if (raw.size() != texts.size()) {
    throw BackendError(backend.backend_id() + ": generated " + std::to_string(raw.size()) + " outputs for " +
                       std::to_string(texts.size()) + " prompts");
  }
  std::vector<std::string> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(parse_hypothesis(model.kind, r));
  return out;
}

std::vector<std::string> translate(const ModelHandle& model, std::span<const PromptExample> prompts) {
  auto backend = make_backend(model.backend_config);
  return translate(*backend, model, prompts);
}

}  // namespace emomt
