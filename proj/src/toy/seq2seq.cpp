#include "emomt/toy/seq2seq.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "emomt/error.hpp"

namespace emomt::toy {

namespace {

constexpr char kMagic[8] = {'E', 'M', 'O', 'M', 'T', 'T', 'O', 'Y'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw BackendError("truncated toy checkpoint");
  return v;
}

std::string prompt_or_space(std::string_view prompt) { return prompt.empty() ? std::string(" ") : std::string(prompt); }

}  // namespace

float uniform(std::mt19937_64& rng, float lo, float hi) {
  const double u = static_cast<double>(rng() >> 11) / static_cast<double>(1ULL << 53);
  return lo + static_cast<float>(u) * (hi - lo);
}

json ToyConfig::to_json() const {
  return {{"embed_dim", embed_dim},         {"encoder_hidden", encoder_hidden}, {"decoder_hidden", decoder_hidden},
          {"learning_rate", learning_rate}, {"batch_size", batch_size},         {"clip_norm", clip_norm},
          {"max_output_len", max_output_len}};
}

ToyConfig ToyConfig::from_json(const json& j) {
  ToyConfig c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
  c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.max_output_len = j.value("max_output_len", c.max_output_len);
  if (c.embed_dim < 1 || c.encoder_hidden < 1 || c.decoder_hidden < 1 || c.batch_size < 1 || c.max_output_len < 1 ||
      !(c.learning_rate > 0.0f)) {
    throw UsageError("toy backend: dimensions, batch size, output cap and learning rate must be positive");
  }
  return c;
}

Seq2Seq::Seq2Seq(const ToyConfig& config) : config_(config) { build(nullptr); }

Seq2Seq::Seq2Seq(const ToyConfig& config, std::uint64_t seed) : config_(config) {
  std::mt19937_64 rng(seed);
  build(&rng);
}

Parameter& Seq2Seq::add(std::string name, int rows, int cols, float init_range, std::mt19937_64* rng) {
  Matrix m = Matrix::Zero(rows, cols);
  if (rng && init_range > 0.0f) {
    // Column-major fill order is part of the checksum contract.
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = uniform(*rng, -init_range, init_range);
  }
  params_.emplace_back(std::move(name), std::move(m));
  return params_.back();
}

void Seq2Seq::build(std::mt19937_64* rng) {
  const int e = config_.embed_dim, he = config_.encoder_hidden, d = config_.decoder_hidden;
  auto xavier = [](int rows, int cols) { return std::sqrt(6.0f / static_cast<float>(rows + cols)); };
  auto gru = [&](const std::string& prefix, int in, int h) {
    GruWeights g;
    g.w = &add(prefix + ".w", 3 * h, in, xavier(3 * h, in), rng);
    g.u = &add(prefix + ".u", 3 * h, h, xavier(3 * h, h), rng);
    g.b = &add(prefix + ".b", 3 * h, 1, 0.0f, rng);
    g.bu = &add(prefix + ".bu", 3 * h, 1, 0.0f, rng);
    return g;
  };

  src_embed_ = &add("src_embed", e, kBytes, 1.0f, rng);
  tgt_embed_ = &add("tgt_embed", e, kBytes + 1, 1.0f, rng);
  enc_fwd_ = gru("enc_fwd", e, he);
  enc_bwd_ = gru("enc_bwd", e, he);
  init_w_ = &add("init.w", d, 2 * he, xavier(d, 2 * he), rng);
  init_b_ = &add("init.b", d, 1, 0.0f, rng);
  dec_ = gru("dec", e + d, d);
  attn_w_ = &add("attn.w", d, 2 * he + e, xavier(d, 2 * he + e), rng);
  combine_w_ = &add("combine.w", d, d + 2 * he + e, xavier(d, d + 2 * he + e), rng);
  combine_b_ = &add("combine.b", d, 1, 0.0f, rng);
  out_w_ = &add("out.w", kBytes + 1, d, xavier(kBytes + 1, d), rng);
  out_b_ = &add("out.b", kBytes + 1, 1, 0.0f, rng);
}

Tape::Var Seq2Seq::gru_step(Tape& t, const GruWeights& g, Tape::Var x_proj, Tape::Var h, int hidden) {
  auto hu = t.add(t.matmul(t.param(*g.u), h), t.param(*g.bu));
  auto r = t.sigmoid(t.add(t.rows(x_proj, 0, hidden), t.rows(hu, 0, hidden)));
  auto z = t.sigmoid(t.add(t.rows(x_proj, hidden, hidden), t.rows(hu, hidden, hidden)));
  auto n = t.tanh(t.add(t.rows(x_proj, 2 * hidden, hidden), t.mul(r, t.rows(hu, 2 * hidden, hidden))));
  return t.add(n, t.mul(z, t.sub(h, n)));
}

Seq2Seq::Encoded Seq2Seq::encode(Tape& t, std::string_view prompt_view) {
  const std::string prompt = prompt_or_space(prompt_view);
  const int he = config_.encoder_hidden;
  const int len = static_cast<int>(prompt.size());

  std::vector<Tape::Var> embeds;
  embeds.reserve(prompt.size());
  for (unsigned char c : prompt) embeds.push_back(t.embed(*src_embed_, c));
  auto x = t.hcat(embeds);
  auto xf = t.add_bias(t.matmul(t.param(*enc_fwd_.w), x), t.param(*enc_fwd_.b));
  auto xb = t.add_bias(t.matmul(t.param(*enc_bwd_.w), x), t.param(*enc_bwd_.b));

  std::vector<Tape::Var> fwd(len), bwd(len);
  auto h = t.constant(Matrix::Zero(he, 1));
  for (int i = 0; i < len; ++i) fwd[i] = h = gru_step(t, enc_fwd_, t.col(xf, i), h, he);
  h = t.constant(Matrix::Zero(he, 1));
  for (int i = len - 1; i >= 0; --i) bwd[i] = h = gru_step(t, enc_bwd_, t.col(xb, i), h, he);

  std::vector<Tape::Var> cols(len);
  for (int i = 0; i < len; ++i) cols[i] = t.vcat({fwd[i], bwd[i], embeds[i]});
  Encoded enc;
  enc.states = t.hcat(cols);
  enc.keys = t.matmul(t.param(*attn_w_), enc.states);
  enc.init = t.tanh(t.add(t.matmul(t.param(*init_w_), t.vcat({fwd[len - 1], bwd[0]})), t.param(*init_b_)));
  return enc;
}

Seq2Seq::DecoderStep Seq2Seq::decode_step(Tape& t, const Encoded& enc, int prev_symbol, Tape::Var state,
                                          Tape::Var feed) {
  const int d = config_.decoder_hidden;
  auto x = t.vcat({t.embed(*tgt_embed_, prev_symbol), feed});
  auto x_proj = t.add(t.matmul(t.param(*dec_.w), x), t.param(*dec_.b));
  auto s = gru_step(t, dec_, x_proj, state, d);
  auto weights = t.softmax(t.matmul_tn(enc.keys, s));
  auto ctx = t.matmul(enc.states, weights);
  auto next_feed = t.tanh(t.add(t.matmul(t.param(*combine_w_), t.vcat({s, ctx})), t.param(*combine_b_)));
  auto logits = t.add(t.matmul(t.param(*out_w_), next_feed), t.param(*out_b_));
  return {logits, s, next_feed};
}

Tape::Var Seq2Seq::loss(Tape& t, std::string_view prompt, std::string_view completion, int* tokens) {
  const auto enc = encode(t, prompt);
  auto state = enc.init;
  auto feed = t.constant(Matrix::Zero(config_.decoder_hidden, 1));
  std::vector<Tape::Var> losses;
  losses.reserve(completion.size() + 1);
  int prev = kBos;
  for (std::size_t i = 0; i <= completion.size(); ++i) {
    const int target = i < completion.size() ? static_cast<unsigned char>(completion[i]) : kEos;
    auto step = decode_step(t, enc, prev, state, feed);
    losses.push_back(t.cross_entropy(step.logits, target));
    state = step.state;
    feed = step.feed;
    prev = target;
  }
  if (tokens) *tokens = static_cast<int>(losses.size());
  return t.sum(losses);
}

std::string Seq2Seq::generate(std::string_view prompt) {
  Tape t;
  const auto enc = encode(t, prompt);
  auto state = enc.init;
  auto feed = t.constant(Matrix::Zero(config_.decoder_hidden, 1));
  std::string out;
  int prev = kBos;
  for (int i = 0; i < config_.max_output_len; ++i) {
    auto step = decode_step(t, enc, prev, state, feed);
    Eigen::Index best = 0;
    t.value(step.logits).col(0).maxCoeff(&best);
    if (best == kEos || best == '\n') break;
    out.push_back(static_cast<char>(best));
    state = step.state;
    feed = step.feed;
    prev = static_cast<int>(best);
  }
  return out;
}

std::vector<Parameter*> Seq2Seq::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

void Seq2Seq::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

void Seq2Seq::adam_step(float grad_scale) {
  constexpr float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
  double norm_sq = 0.0;
  for (auto& p : params_) {
    p.grad *= grad_scale;
    norm_sq += p.grad.squaredNorm();
  }
  const float norm = static_cast<float>(std::sqrt(norm_sq));
  const float clip = (config_.clip_norm > 0.0f && norm > config_.clip_norm) ? config_.clip_norm / norm : 1.0f;

  ++adam_t_;
  const float c1 = 1.0f - std::pow(beta1, static_cast<float>(adam_t_));
  const float c2 = 1.0f - std::pow(beta2, static_cast<float>(adam_t_));
  for (auto& p : params_) {
    p.grad *= clip;
    p.adam_m = beta1 * p.adam_m + (1.0f - beta1) * p.grad;
    p.adam_v = beta2 * p.adam_v + (1.0f - beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= config_.learning_rate * (p.adam_m.array() / c1) / ((p.adam_v.array() / c2).sqrt() + eps);
  }
}

std::string Seq2Seq::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params_) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.value.data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(p.value.size()) * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Seq2Seq::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BackendError("cannot write toy checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kFormatVersion);
  const std::string cfg = config_.to_json().dump();
  write_pod(out, static_cast<std::uint64_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  write_pod(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& p : params_) {
    write_pod(out, static_cast<std::uint32_t>(p.value.rows()));
    write_pod(out, static_cast<std::uint32_t>(p.value.cols()));
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(float)));
  }
  if (!out) throw BackendError("failed writing toy checkpoint " + path.string());
}

Seq2Seq Seq2Seq::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendError("cannot open toy checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw BackendError(path.string() + " is not a toy checkpoint");
  if (read_pod<std::uint32_t>(in) != kFormatVersion) throw BackendError(path.string() + ": unsupported checkpoint version");
  std::string cfg(read_pod<std::uint64_t>(in), '\0');
  in.read(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  Seq2Seq model(ToyConfig::from_json(json::parse(cfg)));
  if (read_pod<std::uint32_t>(in) != model.params_.size()) throw BackendError(path.string() + ": parameter count mismatch");
  for (auto& p : model.params_) {
    const auto rows = read_pod<std::uint32_t>(in);
    const auto cols = read_pod<std::uint32_t>(in);
    if (rows != p.value.rows() || cols != p.value.cols()) throw BackendError(path.string() + ": shape mismatch for " + p.name);
    in.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(float)));
    if (!in) throw BackendError("truncated toy checkpoint " + path.string());
  }
  return model;
}

}  // namespace emomt::toy
