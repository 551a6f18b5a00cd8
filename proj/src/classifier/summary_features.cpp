#include "summ/classifier.hpp"

namespace summ::news {
namespace {

bool is_marker(const text::Token& t) {
  return t == "<s>" || t == "</s>" || t == "<p>" || t == "</p>";
}

}  // namespace

BodySummarizer model_summarizer(std::shared_ptr<const model::Summarizer> model,
                                std::shared_ptr<const text::Vocabulary> vocab, decode::DecodeConfig decode,
                                bool with_markers) {
  decode.validate();
  return [model, vocab, decode, with_markers](const NewsRecord& r) {
    text::Tokens article = text::prepare(r.body, with_markers);
    if (article.empty()) article = text::prepare(r.headline, with_markers);
    if (article.empty()) return text::Tokens{};
    const text::EncodedPair pair = text::encode_pair(article, {}, *vocab);
    const decode::Hypothesis best = decode::beam_search(*model, pair, decode);
    text::Tokens out = decode::map_extended_tokens(decode::strip_stop(best.tokens), *vocab, pair.article_oovs);
    std::erase_if(out, is_marker);
    return out;
  };
}

BodySummarizer train_lead_summarizer(std::span<const NewsRecord> records, const LeadSummarizerOptions& options) {
  std::vector<text::RawPair> pairs;
  for (const NewsRecord& r : records) {
    const text::Tokens body = text::tokenize(r.body);
    if (body.empty()) continue;
    const auto sentences = text::split_sentences(body);
    pairs.push_back({r.body, text::join(sentences.front())});
  }
  if (pairs.empty()) throw std::invalid_argument("no record has a body to summarize");

  std::vector<text::Tokens> corpus;
  for (const auto& p : pairs) {
    corpus.push_back(text::tokenize(p.article));
    corpus.push_back(text::tokenize(p.summary));
  }
  auto vocab = std::make_shared<const text::Vocabulary>(text::Vocabulary::build(corpus, options.vocab_size));
  const auto encoded = train::prepare_pairs(pairs, *vocab, false);

  model::SummarizerConfig mc;
  mc.kind = model::ModelKind::Pointer;
  mc.vocab_size = vocab->size();
  mc.embedding_dim = options.hidden_size;
  mc.hidden_size = options.hidden_size;
  mc.attention_size = options.hidden_size;
  mc.projection_size = options.hidden_size;
  std::shared_ptr<model::Summarizer> m = model::make_summarizer(mc, options.seed);

  train::TrainConfig tc;
  tc.max_iterations = options.iterations;
  tc.eval_interval = options.iterations;
  tc.seed = options.seed;
  train::train_loop(tc, *m, encoded, {}, vocab->hash());
  return model_summarizer(m, vocab, options.decode, false);
}

}  // namespace summ::news
