#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "summ/summarizer.hpp"

namespace summ::model {
namespace {

using text::Vocabulary;

std::vector<double> floored_log(std::span<const double> probs) {
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = std::log(std::max(probs[i], kProbFloor));
  return out;
}

int feed_back_id(int token, std::size_t vocab_size) {
  if (token < 0) throw std::out_of_range("negative token id " + std::to_string(token));
  return static_cast<std::size_t>(token) >= vocab_size ? Vocabulary::kUnk : token;
}

class RnnSummarizer final : public Summarizer {
 public:
  RnnSummarizer(const SummarizerConfig& config, std::uint64_t seed) : Summarizer(config) {
    Rng rng(seed);
    const std::size_t V = config.vocab_size, E = config.embedding_dim, h = config.hidden_size;
    const std::size_t a = config.attention_size, p = config.projection_size;
    enc_.embedding = params_.uniform("embedding", {V, E}, rng);
    enc_.forward = LstmCell::create(params_, "encoder.forward", E, h, rng);
    enc_.backward = LstmCell::create(params_, "encoder.backward", E, h, rng);
    enc_.init_h_weight = params_.uniform("reduce.h.weight", {h, 2 * h}, rng);
    enc_.init_h_bias = params_.constant("reduce.h.bias", {h});
    enc_.init_c_weight = params_.uniform("reduce.c.weight", {h, 2 * h}, rng);
    enc_.init_c_bias = params_.constant("reduce.c.bias", {h});
    decoder_ = LstmCell::create(params_, "decoder", E, h, rng);
    att_.enc_weight = params_.uniform("attention.enc_weight", {a, 2 * h}, rng);
    att_.dec_weight = params_.uniform("attention.dec_weight", {a, h}, rng);
    att_.bias = params_.constant("attention.bias", {a});
    att_.v = params_.uniform("attention.v", {a}, rng);
    proj_.hidden_weight = params_.uniform("output.hidden_weight", {p, 3 * h}, rng);
    proj_.hidden_bias = params_.constant("output.hidden_bias", {p});
    proj_.vocab_weight = params_.uniform("output.vocab_weight", {V, p}, rng);
    proj_.vocab_bias = params_.constant("output.vocab_bias", {V});
    if (uses_copy(config.kind)) {
      ptr_.w_context = params_.uniform("pointer.w_context", {2 * h}, rng);
      ptr_.w_state = params_.uniform("pointer.w_state", {h}, rng);
      ptr_.w_input = params_.uniform("pointer.w_input", {E}, rng);
      ptr_.bias = params_.constant("pointer.bias", {});
    }
    // Created last so that a coverage model with coverage off matches the
    // plain pointer model parameter for parameter.
    if (config.kind == ModelKind::PointerCoverage) {
      att_.coverage_weight = params_.uniform("attention.coverage_weight", {a}, rng);
    }
  }

  struct Step {
    LstmState lstm;
    Attention attention;
    ag::Tensor distribution;
    ag::Tensor p_gen;
  };

  Step decode_step(const EncoderStates& enc, const ag::Tensor& features, const text::EncodedPair& pair,
                   const LstmState& prev, int input_id, const ag::Tensor* coverage) const {
    Step s;
    const ag::Tensor x = ag::embedding_row(enc_.embedding, input_id);
    s.lstm = lstm_step(decoder_, x, prev);
    s.attention = attention_scores(features, s.lstm.h, att_, coverage);
    const ag::Tensor context = context_vector(s.attention.weights, enc.states);
    const ag::Tensor p_vocab = vocab_distribution(s.lstm.h, context, proj_);
    if (uses_copy(kind())) {
      s.p_gen = generation_probability(context, s.lstm.h, x, ptr_);
      s.distribution =
          final_distribution(s.p_gen, p_vocab, s.attention.weights, pair.article_ext_ids, pair.article_oovs.size());
    } else {
      s.distribution = p_vocab;
    }
    return s;
  }

  ag::Tensor loss(const text::EncodedPair& pair) const override {
    const EncoderStates enc = encode(pair.article_ids, enc_);
    const ag::Tensor features = attention_features(enc.states, att_);
    const std::vector<int> inputs = decoder_inputs(pair);
    const std::vector<int> targets = decoder_targets(pair, kind());
    LstmState state = enc.decoder_init;
    CoverageState cov = CoverageState::initial(enc.length());
    std::vector<ag::Tensor> nll, covloss;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      Step s = decode_step(enc, features, pair, state, inputs[t], coverage_active_ ? &cov.c : nullptr);
      nll.push_back(step_loss(s.distribution, targets[t]));
      if (coverage_active_) {
        covloss.push_back(coverage_loss(s.attention.weights, cov.c));
        cov = coverage_update(cov, s.attention.weights);
      }
      state = s.lstm;
    }
    return coverage_active_ ? total_loss(nll, covloss) : sequence_loss(nll);
  }

  std::unique_ptr<DecodeSession> begin(const text::EncodedPair& pair) const override;

  const EncoderParams& encoder() const { return enc_; }
  const AttentionParams& attention() const { return att_; }

 private:
  EncoderParams enc_;
  LstmCell decoder_;
  AttentionParams att_;
  OutputProjection proj_;
  PointerHead ptr_;
};

class RnnSession final : public DecodeSession {
 public:
  RnnSession(const RnnSummarizer& model, const text::EncodedPair& pair) : model_(model), pair_(pair) {
    ag::NoGradGuard guard;
    enc_ = encode(pair_.article_ids, model_.encoder());
    features_ = attention_features(enc_.states, model_.attention());
  }

  std::size_t vocab_size() const override { return model_.vocab_size(); }
  std::size_t extended_size() const override {
    return uses_copy(model_.kind()) ? pair_.extended_size(model_.vocab_size()) : model_.vocab_size();
  }

  DecoderStepState initial() const override {
    DecoderStepState s;
    s.lstm = enc_.decoder_init;
    s.coverage = ag::Tensor::zeros({enc_.length()});
    return s;
  }

  StepOutput step(const DecoderStepState& state, int prev_token) const override {
    ag::NoGradGuard guard;
    const bool cov = model_.coverage_active();
    auto s = model_.decode_step(enc_, features_, pair_, state.lstm, feed_back_id(prev_token, vocab_size()),
                                cov ? &state.coverage : nullptr);
    StepOutput out;
    out.log_probs = floored_log(s.distribution.data());
    out.next.lstm = s.lstm;
    out.next.coverage = ag::add(state.coverage, s.attention.weights);
    const auto a = s.attention.weights.data();
    out.next.attention.assign(a.begin(), a.end());
    out.next.p_gen = s.p_gen.defined() ? s.p_gen.item() : 1.0;
    return out;
  }

 private:
  const RnnSummarizer& model_;
  text::EncodedPair pair_;
  EncoderStates enc_;
  ag::Tensor features_;
};

std::unique_ptr<DecodeSession> RnnSummarizer::begin(const text::EncodedPair& pair) const {
  return std::make_unique<RnnSession>(*this, pair);
}

std::span<const int> truncated(const std::vector<int>& ids, std::size_t n) {
  return std::span<const int>(ids).first(std::min(ids.size(), n));
}

class TransformerSummarizer final : public Summarizer {
 public:
  TransformerSummarizer(const SummarizerConfig& config, std::uint64_t seed) : Summarizer(config) {
    Rng rng(seed);
    tp_ = TransformerParams::create(params_, config_.transformer, rng);
  }

  const TransformerConfig& tconfig() const { return config_.transformer; }
  const TransformerParams& tparams() const { return tp_; }

  ag::Tensor memory(const text::EncodedPair& pair) const {
    return encoder_forward(truncated(pair.article_ids, tconfig().max_length), tconfig(), tp_);
  }

  ag::Tensor loss(const text::EncodedPair& pair) const override {
    const ag::Tensor z = memory(pair);
    const std::vector<int> inputs = decoder_inputs(pair);
    const std::vector<int> targets = decoder_targets(pair, kind());
    const std::span<const int> in = truncated(inputs, tconfig().max_length);
    const ag::Tensor probs = ag::softmax(decoder_forward(in, z, tconfig(), tp_));
    const std::size_t V = vocab_size();
    std::vector<ag::Tensor> nll;
    nll.reserve(in.size());
    for (std::size_t t = 0; t < in.size(); ++t) {
      if (targets[t] < 0 || static_cast<std::size_t>(targets[t]) >= V) {
        throw std::out_of_range("target id " + std::to_string(targets[t]) + " outside vocabulary");
      }
      const ag::Tensor p = ag::pick(probs, t * V + static_cast<std::size_t>(targets[t]));
      nll.push_back(ag::neg(ag::log(ag::clamp_min(p, kProbFloor))));
    }
    return sequence_loss(nll);
  }

  std::unique_ptr<DecodeSession> begin(const text::EncodedPair& pair) const override;

 private:
  TransformerParams tp_;
};

class TransformerSession final : public DecodeSession {
 public:
  TransformerSession(const TransformerSummarizer& model, const text::EncodedPair& pair) : model_(model) {
    ag::NoGradGuard guard;
    memory_ = model_.memory(pair);
  }

  std::size_t vocab_size() const override { return model_.vocab_size(); }
  std::size_t extended_size() const override { return model_.vocab_size(); }
  DecoderStepState initial() const override { return {}; }

  StepOutput step(const DecoderStepState& state, int prev_token) const override {
    ag::NoGradGuard guard;
    StepOutput out;
    out.next.prefix = state.prefix;
    out.next.prefix.push_back(feed_back_id(prev_token, vocab_size()));
    const std::size_t T = out.next.prefix.size();
    const ag::Tensor logits = decoder_forward(out.next.prefix, memory_, model_.tconfig(), model_.tparams());
    out.log_probs = floored_log(ag::softmax(ag::slice(logits, 0, T - 1, T)).data());
    return out;
  }

 private:
  const TransformerSummarizer& model_;
  ag::Tensor memory_;
};

std::unique_ptr<DecodeSession> TransformerSummarizer::begin(const text::EncodedPair& pair) const {
  return std::make_unique<TransformerSession>(*this, pair);
}

}  // namespace

std::string_view model_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Baseline: return "baseline";
    case ModelKind::Pointer: return "pointer";
    case ModelKind::PointerCoverage: return "pointer-coverage";
    case ModelKind::Transformer: return "transformer";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::Baseline, ModelKind::Pointer, ModelKind::PointerCoverage, ModelKind::Transformer}) {
    if (model_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown model '" + std::string(name) +
                              "' (expected baseline, pointer, pointer-coverage or transformer)");
}

bool uses_copy(ModelKind kind) noexcept {
  return kind == ModelKind::Pointer || kind == ModelKind::PointerCoverage;
}

void SummarizerConfig::validate() const {
  if (vocab_size < Vocabulary::kNumSpecials) {
    throw std::invalid_argument("vocabulary of " + std::to_string(vocab_size) + " cannot hold the special tokens");
  }
  if (kind == ModelKind::Transformer) {
    if (transformer.vocab_size != vocab_size) throw std::invalid_argument("transformer vocab_size mismatch");
    transformer.validate();
  } else if (embedding_dim == 0 || hidden_size == 0 || attention_size == 0 || projection_size == 0) {
    throw std::invalid_argument("recurrent model sizes must be positive");
  }
}

std::string SummarizerConfig::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = std::string(model_name(kind));
  j["vocab_size"] = vocab_size;
  j["embedding_dim"] = embedding_dim;
  j["hidden_size"] = hidden_size;
  j["attention_size"] = attention_size;
  j["projection_size"] = projection_size;
  j["transformer"] = {{"d_model", transformer.d_model},   {"heads", transformer.heads},
                      {"layers", transformer.layers},     {"ffn_size", transformer.ffn_size},
                      {"max_length", transformer.max_length}, {"norm_eps", transformer.norm_eps}};
  return j.dump();
}

SummarizerConfig SummarizerConfig::from_json(std::string_view text) {
  SummarizerConfig c;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    c.kind = parse_model_kind(j.at("model").get<std::string>());
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.hidden_size = j.at("hidden_size").get<std::size_t>();
    c.attention_size = j.at("attention_size").get<std::size_t>();
    c.projection_size = j.at("projection_size").get<std::size_t>();
    const auto& t = j.at("transformer");
    c.transformer.vocab_size = c.vocab_size;
    c.transformer.d_model = t.at("d_model").get<std::size_t>();
    c.transformer.heads = t.at("heads").get<std::size_t>();
    c.transformer.layers = t.at("layers").get<std::size_t>();
    c.transformer.ffn_size = t.at("ffn_size").get<std::size_t>();
    c.transformer.max_length = t.at("max_length").get<std::size_t>();
    c.transformer.norm_eps = t.at("norm_eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
  return c;
}

std::unique_ptr<Summarizer> make_summarizer(const SummarizerConfig& config, std::uint64_t seed) {
  SummarizerConfig c = config;
  c.transformer.vocab_size = c.vocab_size;
  c.validate();
  if (c.kind == ModelKind::Transformer) return std::make_unique<TransformerSummarizer>(c, seed);
  return std::make_unique<RnnSummarizer>(c, seed);
}

std::vector<int> decoder_targets(const text::EncodedPair& pair, ModelKind kind) {
  std::vector<int> t = uses_copy(kind) ? pair.summary_ext_ids : pair.summary_ids;
  t.push_back(Vocabulary::kStop);
  return t;
}

std::vector<int> decoder_inputs(const text::EncodedPair& pair) {
  std::vector<int> in;
  in.reserve(pair.summary_ids.size() + 1);
  in.push_back(Vocabulary::kStart);
  in.insert(in.end(), pair.summary_ids.begin(), pair.summary_ids.end());
  return in;
}

}  // namespace summ::model
