#include "summ/summarizer.hpp"

namespace summ::model {

SummarizerConfig toy_config(ModelKind kind, std::size_t vocab_size) {
  SummarizerConfig c;
  c.kind = kind;
  c.vocab_size = vocab_size;
  c.embedding_dim = 6;
  c.hidden_size = 8;
  c.attention_size = 8;
  c.projection_size = 8;
  c.transformer.vocab_size = vocab_size;
  c.transformer.d_model = 8;
  c.transformer.heads = 2;
  c.transformer.layers = 1;
  c.transformer.ffn_size = 16;
  c.transformer.max_length = 16;
  return c;
}

std::vector<text::EncodedPair> toy_pairs() {
  text::EncodedPair a;
  a.article_ids = {8, 9, 1, 10, 11, 1};
  a.article_ext_ids = {8, 9, 12, 10, 11, 13};
  a.article_oovs = {"xanadu", "maysak"};
  a.summary_ids = {9, 1, 8};
  a.summary_ext_ids = {9, 12, 8};
  text::EncodedPair b;
  b.article_ids = {10, 8, 9, 11};
  b.article_ext_ids = b.article_ids;
  b.summary_ids = {11, 10};
  b.summary_ext_ids = b.summary_ids;
  return {a, b};
}

std::vector<ag::GradCase> model_grad_cases(std::uint64_t seed) {
  std::vector<ag::GradCase> cases;
  for (ModelKind kind : {ModelKind::Baseline, ModelKind::Pointer, ModelKind::PointerCoverage, ModelKind::Transformer}) {
    cases.push_back({"model:" + std::string(model_name(kind)), [kind, seed]() {
                       auto m = make_summarizer(toy_config(kind, 12), seed);
                       m->set_coverage_active(true);
                       const auto pairs = toy_pairs();
                       std::vector<ag::Tensor> leaves;
                       for (const auto& p : m->params().entries()) leaves.push_back(p.tensor);
                       return ag::grad_check_leaves(
                           [&]() { return ag::scale(ag::add(m->loss(pairs[0]), m->loss(pairs[1])), 0.5); }, leaves);
                     }});
  }
  return cases;
}

}  // namespace summ::model
