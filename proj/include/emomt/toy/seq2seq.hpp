#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "emomt/jsonl.hpp"
#include "emomt/toy/tape.hpp"

namespace emomt::toy {

struct ToyConfig {
  int embed_dim = 32;
  int encoder_hidden = 64;   // per direction
  int decoder_hidden = 128;
  float learning_rate = 1e-3f;
  int batch_size = 1;
  float clip_norm = 5.0f;
  int max_output_len = 160;  // bytes

  json to_json() const;
  static ToyConfig from_json(const json& j);
  friend bool operator==(const ToyConfig&, const ToyConfig&) = default;
};

// Byte-level GRU encoder-decoder with dot-product attention and input
// feeding. The encoder is bidirectional over the prompt bytes; the decoder
// emits completion bytes followed by an end symbol.
class Seq2Seq {
 public:
  static constexpr int kBytes = 256;
  static constexpr int kBos = 256;  // decoder input only
  static constexpr int kEos = 256;  // decoder output only

  Seq2Seq(const ToyConfig& config, std::uint64_t seed);
  Seq2Seq(const Seq2Seq&) = delete;
  Seq2Seq& operator=(const Seq2Seq&) = delete;
  Seq2Seq(Seq2Seq&&) = default;
  Seq2Seq& operator=(Seq2Seq&&) = default;

  const ToyConfig& config() const { return config_; }

  // Summed token cross-entropy of `completion` (plus the end symbol) given
  // `prompt`; *tokens receives the number of predicted symbols.
  Tape::Var loss(Tape& tape, std::string_view prompt, std::string_view completion, int* tokens);

  // Greedy continuation of `prompt`, stopping at the end symbol, a newline
  // or the length cap.
  std::string generate(std::string_view prompt);

  std::vector<Parameter*> parameters();
  void zero_grad();
  // One Adam update from the accumulated gradients, scaled by `grad_scale`
  // and clipped to the configured global norm.
  void adam_step(float grad_scale);

  // FNV-1a over all parameter bytes, as 16 hex digits.
  std::string checksum() const;

  void save(const std::filesystem::path& path) const;
  static Seq2Seq load(const std::filesystem::path& path);

 private:
  struct Encoded {
    Tape::Var states;  // 2*He x S
    Tape::Var keys;    // D x S
    Tape::Var init;    // D
  };
  struct GruWeights {
    Parameter* w;  // 3H x in
    Parameter* u;  // 3H x H
    Parameter* b;  // 3H x 1
    Parameter* bu;  // 3H x 1 (recurrent bias, gates the candidate via r)
  };

  Encoded encode(Tape& tape, std::string_view prompt);
  Tape::Var gru_step(Tape& tape, const GruWeights& g, Tape::Var x_proj, Tape::Var h, int hidden);
  struct DecoderStep {
    Tape::Var logits;
    Tape::Var state;
    Tape::Var feed;
  };
  DecoderStep decode_step(Tape& tape, const Encoded& enc, int prev_symbol, Tape::Var state, Tape::Var feed);

  explicit Seq2Seq(const ToyConfig& config);
  void build(std::mt19937_64* rng);
  Parameter& add(std::string name, int rows, int cols, float init_range, std::mt19937_64* rng);

  ToyConfig config_;
  std::deque<Parameter> params_;  // stable addresses for the raw pointers below
  std::int64_t adam_t_ = 0;

  GruWeights enc_fwd_{}, enc_bwd_{}, dec_{};
  Parameter* src_embed_ = nullptr;
  Parameter* tgt_embed_ = nullptr;
  Parameter* init_w_ = nullptr;
  Parameter* init_b_ = nullptr;
  Parameter* attn_w_ = nullptr;
  Parameter* combine_w_ = nullptr;
  Parameter* combine_b_ = nullptr;
  Parameter* out_w_ = nullptr;
  Parameter* out_b_ = nullptr;
};

// Uniform float in [lo, hi) from raw engine bits; independent of the
// standard library's distribution implementations.
float uniform(std::mt19937_64& rng, float lo, float hi);

}  // namespace emomt::toy
