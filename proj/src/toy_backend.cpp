#include <algorithm>
#include <numeric>

#include "emomt/backends.hpp"
#include "emomt/bleu.hpp"
#include "emomt/error.hpp"

namespace emomt {

namespace {

std::uint64_t shuffle_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

double dev_loss(toy::Seq2Seq& model, std::span<const PromptExample> dev) {
  double total = 0.0;
  long tokens = 0;
  for (const auto& e : dev) {
    toy::Tape tape;
    int n = 0;
    total += tape.scalar(model.loss(tape, e.prompt_text, e.completion_text, &n));
    tokens += n;
  }
  return total / static_cast<double>(std::max(1L, tokens));
}

double dev_bleu(toy::Seq2Seq& model, std::span<const PromptExample> dev) {
  std::vector<EvalPair> pairs;
  for (const auto& e : dev) {
    auto ref = parse_hypothesis(e.kind, e.completion_text);
    if (ref.empty()) continue;
    pairs.push_back({parse_hypothesis(e.kind, model.generate(e.prompt_text)), std::move(ref)});
  }
  return pairs.empty() ? 0.0 : corpus_bleu(pairs).score;
}

}  // namespace

ToyBackend::ToyBackend(toy::ToyConfig config, std::string label) : config_(config), label_(std::move(label)) {}

json ToyBackend::config() const {
  json j = config_.to_json();
  j["type"] = "toy";
  j["label"] = label_;
  return j;
}

std::string ToyBackend::initial_checksum(std::uint64_t seed) const { return toy::Seq2Seq(config_, seed).checksum(); }

TrainingRun ToyBackend::fit(std::span<const PromptExample> train_set, std::span<const PromptExample> dev_set,
                            const TrainingConfig& config, const std::filesystem::path& workdir,
                            const EpochCallback& on_epoch) {
  std::filesystem::create_directories(workdir);
  toy::Seq2Seq model(config_, config.seed);
  TrainingRun run;
  run.initial_checksum = model.checksum();

  std::mt19937_64 rng(shuffle_seed(config.seed));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = static_cast<std::size_t>(config_.batch_size);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    long epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      model.zero_grad();
      const std::size_t end = std::min(order.size(), start + batch);
      int batch_tokens = 0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& e = train_set[order[k]];
        toy::Tape tape;
        int n = 0;
        auto loss = model.loss(tape, e.prompt_text, e.completion_text, &n);
        epoch_loss += tape.scalar(loss);
        batch_tokens += n;
        tape.backward(loss);
      }
      epoch_tokens += batch_tokens;
      model.adam_step(1.0f / static_cast<float>(std::max(1, batch_tokens)));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(std::max(1L, epoch_tokens));
    rec.dev_loss = dev_loss(model, dev_set);
    rec.dev_bleu = dev_bleu(model, dev_set);
    const auto path = workdir / ("toy_epoch" + std::to_string(epoch) + ".bin");
    model.save(path);
    rec.checkpoint_ref = path.string();
    run.epochs.push_back(rec);
    if (on_epoch && !on_epoch(rec)) break;
  }
  return run;
}

std::string ToyBackend::initial_checkpoint(const TrainingConfig& config, const std::filesystem::path& workdir) {
  std::filesystem::create_directories(workdir);
  const auto path = workdir / "toy_epoch0.bin";
  toy::Seq2Seq(config_, config.seed).save(path);
  return path.string();
}

std::vector<std::string> ToyBackend::generate(const std::string& checkpoint_ref, std::span<const std::string> prompts) {
  auto it = loaded_.find(checkpoint_ref);
  if (it == loaded_.end()) {
    it = loaded_.emplace(checkpoint_ref, std::make_shared<toy::Seq2Seq>(toy::Seq2Seq::load(checkpoint_ref))).first;
  }
  std::vector<std::string> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) out.push_back(it->second->generate(p));
  return out;
}

}  // namespace emomt
