// summ: preprocess corpora, train and run summarizers, score with ROUGE,
// classify news and verify gradients.
//
// Exit status: 0 success, 1 usage error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "summ/classifier.hpp"
#include "summ/decoding.hpp"
#include "summ/gradcheck.hpp"
#include "summ/kernels.hpp"
#include "summ/rouge.hpp"
#include "summ/summarizer.hpp"
#include "summ/text.hpp"
#include "summ/training.hpp"

namespace fs = std::filesystem;
using namespace summ;

namespace {

void log(const std::string& line) { std::cerr << line << '\n'; }

std::vector<text::Tokens> corpus_tokens(std::span<const text::RawPair> pairs, bool markers) {
  std::vector<text::Tokens> out;
  out.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    out.push_back(text::prepare(p.article, markers));
    out.push_back(text::prepare(p.summary, markers));
  }
  return out;
}

std::string vocab_path_for(const fs::path& checkpoint) { return checkpoint.string() + ".vocab.tsv"; }

void write_encoded(const fs::path& path, std::span<const text::EncodedPair> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : pairs) {
    nlohmann::ordered_json j;
    j["article_ids"] = p.article_ids;
    j["article_ext_ids"] = p.article_ext_ids;
    j["article_oovs"] = p.article_oovs;
    j["summary_ids"] = p.summary_ids;
    j["summary_ext_ids"] = p.summary_ext_ids;
    out << j.dump() << '\n';
  }
}

// ---- preprocess / build-vocab ------------------------------------------------

struct PreprocessArgs {
  std::string corpus;
  std::string out = "data";
  std::size_t vocab_size = 1000;
  std::uint64_t seed = 1;
  bool markers = false;
  std::vector<double> split{0.92, 0.042, 0.038};
};

int run_preprocess(const PreprocessArgs& a) {
  const auto pairs = text::ingest_jsonl(a.corpus);
  if (a.split.size() != 3) throw std::invalid_argument("--split takes three fractions");
  const auto split = text::split_corpus(pairs, {a.split[0], a.split[1], a.split[2]}, a.seed);
  fs::create_directories(a.out);
  const fs::path dir(a.out);
  const auto vocab = text::Vocabulary::build(corpus_tokens(split.train, a.markers), a.vocab_size);
  vocab.save(dir / "vocab.tsv");
  const std::pair<const char*, const std::vector<text::RawPair>*> parts[] = {
      {"train", &split.train}, {"dev", &split.dev}, {"test", &split.test}};
  for (const auto& [name, set] : parts) {
    text::write_jsonl(dir / (std::string(name) + ".jsonl"), *set);
    write_encoded(dir / (std::string(name) + ".encoded.jsonl"), train::prepare_pairs(*set, vocab, a.markers));
  }
  std::printf("train %zu  dev %zu  test %zu  vocab %zu  -> %s\n", split.train.size(), split.dev.size(),
              split.test.size(), vocab.size(), a.out.c_str());
  return 0;
}

struct VocabArgs {
  std::string corpus;
  std::string out = "vocab.tsv";
  std::size_t vocab_size = 1000;
  bool markers = false;
};

int run_build_vocab(const VocabArgs& a) {
  const auto pairs = text::ingest_jsonl(a.corpus);
  const auto vocab = text::Vocabulary::build(corpus_tokens(pairs, a.markers), a.vocab_size);
  vocab.save(a.out);
  std::printf("%zu tokens -> %s\n", vocab.size(), a.out.c_str());
  return 0;
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string model = "pointer";
  std::string corpus;
  std::string dev;
  std::string vocab;
  std::size_t vocab_size = 1000;
  std::size_t iters = 2000;
  std::size_t batch = 8;
  std::size_t eval_interval = 100;
  std::size_t cov_start = 0;
  std::uint64_t seed = 1;
  std::size_t embedding = 32;
  std::size_t hidden = 64;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t ffn = 128;
  std::size_t max_article = 400;
  std::size_t max_summary = 100;
  bool markers = false;
  std::string out = "model.ckpt";
  std::string loss_csv;
};

int run_train(const TrainArgs& a) {
  const auto train_raw = text::ingest_jsonl(a.corpus);
  const auto dev_raw = a.dev.empty() ? std::vector<text::RawPair>{} : text::ingest_jsonl(a.dev);
  const text::Vocabulary vocab = a.vocab.empty()
                                     ? text::Vocabulary::build(corpus_tokens(train_raw, a.markers), a.vocab_size)
                                     : text::Vocabulary::load(a.vocab);
  const auto train_set = train::prepare_pairs(train_raw, vocab, a.markers, a.max_article, a.max_summary);
  const auto dev_set = train::prepare_pairs(dev_raw, vocab, a.markers, a.max_article, a.max_summary);

  model::SummarizerConfig mc;
  mc.kind = model::parse_model_kind(a.model);
  mc.vocab_size = vocab.size();
  mc.embedding_dim = a.embedding;
  mc.hidden_size = mc.attention_size = mc.projection_size = a.hidden;
  mc.transformer.d_model = a.d_model;
  mc.transformer.heads = a.heads;
  mc.transformer.layers = a.layers;
  mc.transformer.ffn_size = a.ffn;
  mc.transformer.max_length = std::max<std::size_t>(256, std::max(a.max_article, a.max_summary + 1));
  auto m = model::make_summarizer(mc, a.seed);

  train::TrainConfig tc;
  tc.batch_size = a.batch;
  tc.max_iterations = a.iters;
  tc.eval_interval = a.eval_interval;
  tc.cov_start_iteration = a.cov_start;
  tc.seed = a.seed;
  tc.on_eval = [](const train::LossRow& r) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "iter %zu  train %.5f  valid %.5f", r.iteration, r.train_loss, r.valid_loss);
    log(buf);
  };
  log("training " + std::string(model::model_name(mc.kind)) + " on " + std::to_string(train_set.size()) +
      " pairs, " + std::to_string(m->params().parameter_count()) + " parameters, kernels " +
      std::string(kernels::isa_name(kernels::active_isa())));
  train::TrainResult result = train::train_loop(tc, *m, train_set, dev_set, vocab.hash());

  nlohmann::ordered_json meta;
  meta["markers"] = a.markers;
  meta["max_article"] = a.max_article;
  meta["max_summary"] = a.max_summary;
  result.best.metadata = meta.dump();
  train::save_checkpoint(result.best, a.out);
  vocab.save(vocab_path_for(a.out));
  const std::string csv = a.loss_csv.empty() ? a.out + ".loss.csv" : a.loss_csv;
  result.log.write_csv(csv);
  std::printf("best valid loss %.5f at iteration %zu -> %s (vocab %s, log %s)\n", result.best_valid_loss,
              result.best_iteration, a.out.c_str(), vocab_path_for(a.out).c_str(), csv.c_str());
  return 0;
}

// ---- summarize ---------------------------------------------------------------

struct SummarizeArgs {
  std::string checkpoint;
  std::string vocab;
  std::string corpus;
  std::string out = "summaries.jsonl";
  std::size_t beam = 4;
  std::size_t min_len = 2;
  std::size_t max_len = 100;
  double alpha = 0.0;
};

int run_summarize(const SummarizeArgs& a) {
  const text::Vocabulary vocab = text::Vocabulary::load(a.vocab.empty() ? vocab_path_for(a.checkpoint) : a.vocab);
  const train::Checkpoint ckpt = train::load_checkpoint(a.checkpoint, {std::nullopt, vocab.hash()});
  const auto meta = nlohmann::json::parse(ckpt.metadata);
  const bool markers = meta.value("markers", false);
  const std::size_t max_article = meta.value("max_article", std::size_t{400});
  const auto m = train::instantiate(ckpt);
  const auto pairs = text::ingest_jsonl(a.corpus);
  const auto encoded = train::prepare_pairs(pairs, vocab, markers, max_article, 0);
  const decode::DecodeConfig dc{a.beam, a.min_len, a.max_len, a.alpha};

  std::vector<decode::SummaryRecord> records;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    const decode::Hypothesis h = decode::beam_search(*m, encoded[i], dc);
    text::Tokens words = decode::map_extended_tokens(decode::strip_stop(h.tokens), vocab, encoded[i].article_oovs);
    std::erase_if(words, [](const text::Token& t) { return t == "<s>" || t == "</s>" || t == "<p>" || t == "</p>"; });
    records.push_back({i, text::join(words), h.score(dc.length_alpha)});
  }
  decode::write_summaries(a.out, records);
  std::printf("%zu summaries -> %s\n", records.size(), a.out.c_str());
  return 0;
}

// ---- rouge -------------------------------------------------------------------

struct RougeArgs {
  std::vector<std::string> system;
  std::vector<std::string> names;
  std::string reference;
  std::string csv;
};

int run_rouge(const RougeArgs& a) {
  const auto refs = text::ingest_jsonl(a.reference);
  if (!a.names.empty() && a.names.size() != a.system.size()) {
    throw std::invalid_argument("--name must be given once per --system");
  }
  std::vector<std::pair<std::string, rouge::RougeReport>> rows;
  for (std::size_t s = 0; s < a.system.size(); ++s) {
    std::vector<rouge::ScoredPair> pairs;
    for (const auto& rec : decode::read_summaries(a.system[s])) {
      if (rec.article_idx >= refs.size()) {
        throw std::out_of_range(a.system[s] + ": article_idx " + std::to_string(rec.article_idx) +
                                " has no reference");
      }
      text::Tokens sys;
      std::istringstream words(rec.summary);
      for (std::string w; words >> w;) sys.push_back(w);
      pairs.push_back({std::move(sys), text::tokenize(refs[rec.article_idx].summary)});
    }
    const std::string name = a.names.empty() ? fs::path(a.system[s]).stem().string() : a.names[s];
    rows.emplace_back(name, rouge::report(pairs));
  }
  rouge::write_table(std::cout, rows);
  if (!a.csv.empty()) {
    std::ofstream out(a.csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + a.csv);
    rouge::write_csv(out, rows);
  }
  return 0;
}

// ---- classify ----------------------------------------------------------------

struct ClassifyArgs {
  std::string corpus;
  std::size_t synthetic = 0;
  std::string variant = "all";
  bool grid = false;
  std::string cells = "lstm";
  std::size_t size = 64;
  double dropout = 0.2;
  std::size_t epochs = 5;
  std::size_t kfold = 0;
  std::uint64_t seed = 1;
  double valid_fraction = 0.2;
  std::size_t summ_iters = 400;
  std::string checkpoint;
  std::string vocab;
  std::string out = "classify_results.csv";
  std::string write_corpus;
};

int run_classify(const ClassifyArgs& a) {
  if (a.corpus.empty() == (a.synthetic == 0)) throw std::invalid_argument("give exactly one of --corpus or --synthetic");
  const auto records = a.synthetic ? news::synthetic_news(a.synthetic, a.seed) : news::read_news_csv(a.corpus);
  if (!a.write_corpus.empty()) news::write_news_csv(a.write_corpus, records);

  std::vector<news::FeatureVariant> variants;
  if (a.variant == "all") {
    variants = {news::FeatureVariant::Body, news::FeatureVariant::Headline, news::FeatureVariant::Summary};
  } else {
    variants = {news::parse_variant(a.variant)};
  }

  news::ClassifierConfig base;
  base.epochs = a.epochs;
  base.seed = a.seed;
  if (a.cells == "lstm") {
    base.cell = news::CellKind::Lstm;
  } else if (a.cells == "bilstm") {
    base.cell = news::CellKind::BiLstm;
  } else {
    throw std::invalid_argument("--cells must be lstm or bilstm");
  }
  base.hidden_size = a.size;
  base.dropout = a.dropout;
  const auto configs = a.grid ? news::grid_configs(base) : std::vector<news::ClassifierConfig>{base};

  std::vector<news::GridRow> rows;
  std::ostringstream confusion;
  for (news::FeatureVariant v : variants) {
    news::BodySummarizer summarizer;
    if (v == news::FeatureVariant::Summary) {
      if (!a.checkpoint.empty()) {
        auto vocab = std::make_shared<const text::Vocabulary>(
            text::Vocabulary::load(a.vocab.empty() ? vocab_path_for(a.checkpoint) : a.vocab));
        const auto ckpt = train::load_checkpoint(a.checkpoint, {std::nullopt, vocab->hash()});
        const bool markers = nlohmann::json::parse(ckpt.metadata).value("markers", false);
        summarizer = news::model_summarizer(train::instantiate(ckpt), vocab, {4, 2, 30, 0.0}, markers);
      } else {
        log("training the lead-sentence summarizer for the summary variant");
        news::LeadSummarizerOptions opt;
        opt.iterations = a.summ_iters;
        opt.seed = a.seed;
        summarizer = news::train_lead_summarizer(records, opt);
      }
    }
    const auto features = news::build_features(records, v, &summarizer);
    const std::string vname(news::variant_name(v));
    log(vname + ": " + std::to_string(features.size()) + " examples, mean length " +
        std::to_string(news::average_length(features)));

    const auto [train_set, valid_set] = news::holdout_split(features, a.valid_fraction, a.seed);
    std::size_t best = 0;
    for (std::size_t e = 0; e < configs.size(); ++e) {
      std::vector<news::EpochStats> curve;
      const news::Classifier clf = news::train_classifier(train_set, configs[e], valid_set, &curve);
      news::GridRow row{vname, a.grid ? e + 1 : 1, configs[e], curve.back(), news::evaluate(clf, valid_set)};
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s exp %zu %s %zu drop %.1f: valid acc %.2f%%", vname.c_str(), row.experiment,
                    std::string(news::cell_name(row.config.cell)).c_str(), row.config.hidden_size,
                    row.config.dropout, 100.0 * row.valid.accuracy);
      log(buf);
      rows.push_back(row);
      if (row.valid.accuracy > rows[rows.size() - 1 - e + best].valid.accuracy) best = e;
    }
    const news::GridRow& top = rows[rows.size() - configs.size() + best];
    news::write_confusion(confusion, vname + " (experiment " + std::to_string(top.experiment) + ", validation)",
                          top.valid.matrix);
    if (a.kfold) {
      const auto folds = news::kfold(features, a.kfold, top.config);
      double mean = 0.0;
      for (std::size_t f = 0; f < folds.size(); ++f) {
        news::write_confusion(confusion, vname + " fold " + std::to_string(f + 1), folds[f].matrix);
        mean += folds[f].accuracy / static_cast<double>(folds.size());
      }
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s %zu-fold mean accuracy %.2f%%\n", vname.c_str(), a.kfold, 100.0 * mean);
      confusion << buf;
    }
    confusion << '\n';
  }

  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + a.out);
  news::write_results_csv(out, rows);
  const std::string matrix_path = fs::path(a.out).replace_extension(".confusion.txt").string();
  std::ofstream(matrix_path, std::ios::binary) << confusion.str();
  news::write_results_csv(std::cout, rows);
  std::cout << '\n' << confusion.str();
  return 0;
}

// ---- gradcheck ---------------------------------------------------------------

struct GradcheckArgs {
  double tolerance = 1e-4;
  std::uint64_t seed = 1234;
  bool ops_only = false;
};

int run_gradcheck(const GradcheckArgs& a) {
  auto cases = ag::op_grad_cases(a.seed);
  if (!a.ops_only) {
    auto models = model::model_grad_cases(a.seed);
    cases.insert(cases.end(), models.begin(), models.end());
  }
  std::size_t failed = 0;
  for (const auto& c : cases) {
    const ag::GradCheckResult r = c.run();
    const bool ok = r.max_rel_error < a.tolerance;
    failed += ok ? 0 : 1;
    std::printf("%-28s max_rel_error %.3e over %5zu coords  %s\n", c.name.c_str(), r.max_rel_error, r.coordinates,
                ok ? "PASS" : "FAIL");
  }
  std::printf("%zu/%zu cases pass at tolerance %.0e\n", cases.size() - failed, cases.size(), a.tolerance);
  if (failed) {
    std::fprintf(stderr, "error: %zu gradient checks failed\n", failed);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural summarization toolkit: preprocessing, training, decoding, ROUGE and news classification"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file of key=value lines (keys are long flag names, [command] sections)");
  app.option_defaults()->always_capture_default();

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Split a JSONL corpus, build the vocabulary and encode every split");
  p->add_option("--corpus", pre.corpus, "Input JSONL with article and summary fields")->required();
  p->add_option("--out", pre.out, "Output directory");
  p->add_option("--vocab-size", pre.vocab_size, "Maximum vocabulary size, specials included");
  p->add_option("--seed", pre.seed, "Shuffle seed");
  p->add_option("--split", pre.split, "Train, dev and test fractions")->expected(3);
  p->add_flag("--markers", pre.markers, "Insert sentence and paragraph markers");

  VocabArgs va;
  auto* v = app.add_subcommand("build-vocab", "Build a vocabulary file from a JSONL corpus");
  v->add_option("--corpus", va.corpus, "Input JSONL")->required();
  v->add_option("--out", va.out, "Vocabulary file");
  v->add_option("--vocab-size", va.vocab_size, "Maximum vocabulary size, specials included");
  v->add_flag("--markers", va.markers, "Insert sentence and paragraph markers");

  TrainArgs ta;
  auto* t = app.add_subcommand("train", "Train a summarizer; writes a checkpoint, its vocabulary and a loss CSV");
  t->add_option("--model", ta.model, "baseline, pointer, pointer-coverage or transformer")
      ->check(CLI::IsMember({"baseline", "pointer", "pointer-coverage", "transformer"}));
  t->add_option("--corpus", ta.corpus, "Training JSONL")->required();
  t->add_option("--dev", ta.dev, "Validation JSONL (training pairs are used when omitted)");
  t->add_option("--vocab", ta.vocab, "Vocabulary file (built from the corpus when omitted)");
  t->add_option("--vocab-size", ta.vocab_size, "Vocabulary size when building one");
  t->add_option("--iters", ta.iters, "Training iterations (batches)");
  t->add_option("--batch", ta.batch, "Pairs per batch");
  t->add_option("--eval-interval", ta.eval_interval, "Iterations between validation rows");
  t->add_option("--cov-start", ta.cov_start, "First iteration with the coverage loss (pointer-coverage)");
  t->add_option("--seed", ta.seed, "Seed for initialization and batch order");
  t->add_option("--embedding", ta.embedding, "Embedding size (recurrent models)");
  t->add_option("--hidden", ta.hidden, "Hidden, attention and projection size (recurrent models)");
  t->add_option("--d-model", ta.d_model, "Transformer model width");
  t->add_option("--heads", ta.heads, "Transformer attention heads");
  t->add_option("--layers", ta.layers, "Transformer encoder and decoder layers");
  t->add_option("--ffn", ta.ffn, "Transformer feed-forward inner size");
  t->add_option("--max-article", ta.max_article, "Article truncation in tokens");
  t->add_option("--max-summary", ta.max_summary, "Summary truncation in tokens");
  t->add_flag("--markers", ta.markers, "Insert sentence and paragraph markers");
  t->add_option("--out", ta.out, "Checkpoint path");
  t->add_option("--loss-csv", ta.loss_csv, "Loss CSV path (default <out>.loss.csv)");

  SummarizeArgs sa;
  auto* s = app.add_subcommand("summarize", "Beam-search summaries for every article of a JSONL corpus");
  s->add_option("--checkpoint", sa.checkpoint, "Checkpoint from train")->required();
  s->add_option("--vocab", sa.vocab, "Vocabulary file (default <checkpoint>.vocab.tsv)");
  s->add_option("--corpus", sa.corpus, "JSONL with articles")->required();
  s->add_option("--out", sa.out, "Output JSONL of article_idx, summary, score");
  s->add_option("--beam", sa.beam, "Beam size")->check(CLI::PositiveNumber);
  s->add_option("--min-len", sa.min_len, "Tokens before STOP is allowed");
  s->add_option("--max-len", sa.max_len, "Maximum emitted tokens, STOP included");
  s->add_option("--alpha", sa.alpha, "Length normalization exponent");

  RougeArgs ra;
  auto* r = app.add_subcommand("rouge", "ROUGE-1/2/L F1, precision and recall of system summaries");
  r->add_option("--system", ra.system, "Summary JSONL from summarize (repeatable)")->required();
  r->add_option("--name", ra.names, "Row label per --system (default file stem)");
  r->add_option("--reference", ra.reference, "Corpus JSONL holding the reference summaries")->required();
  r->add_option("--csv", ra.csv, "Also write model,metric,f1,precision,recall CSV here");

  ClassifyArgs ca;
  auto* c = app.add_subcommand("classify", "Fake-news classification on body, headline or summary features");
  c->add_option("--corpus", ca.corpus, "News CSV with headline,body,label");
  c->add_option("--synthetic", ca.synthetic, "Generate this many synthetic records instead of reading a CSV");
  c->add_option("--variant", ca.variant, "body, headline, summary or all")
      ->check(CLI::IsMember({"body", "headline", "summary", "all"}));
  c->add_flag("--grid", ca.grid, "Run the eight cells x size x dropout configurations");
  c->add_option("--cells", ca.cells, "lstm or bilstm (without --grid)")->check(CLI::IsMember({"lstm", "bilstm"}));
  c->add_option("--size", ca.size, "LSTM hidden size (without --grid)");
  c->add_option("--dropout", ca.dropout, "Dropout rate (without --grid)");
  c->add_option("--epochs", ca.epochs, "Training epochs");
  c->add_option("--kfold", ca.kfold, "Also run k-fold cross validation with the best configuration (0 = off)");
  c->add_option("--seed", ca.seed, "Seed for data, splits and training");
  c->add_option("--valid-fraction", ca.valid_fraction, "Held-out validation fraction");
  c->add_option("--summ-iters", ca.summ_iters, "Iterations for the built-in lead-sentence summarizer");
  c->add_option("--checkpoint", ca.checkpoint, "Summarizer checkpoint for the summary variant");
  c->add_option("--vocab", ca.vocab, "Vocabulary of --checkpoint (default <checkpoint>.vocab.tsv)");
  c->add_option("--out", ca.out, "Results CSV; confusion matrices go next to it");
  c->add_option("--write-corpus", ca.write_corpus, "Save the records used as a news CSV");

  GradcheckArgs ga;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of every autograd op and all four models");
  g->add_option("--tolerance", ga.tolerance, "Maximum relative error");
  g->add_option("--seed", ga.seed, "Seed for random inputs");
  g->add_flag("--ops-only", ga.ops_only, "Skip the end-to-end model checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*p) return run_preprocess(pre);
    if (*v) return run_build_vocab(va);
    if (*t) return run_train(ta);
    if (*s) return run_summarize(sa);
    if (*r) return run_rouge(ra);
    if (*c) return run_classify(ca);
    if (*g) return run_gradcheck(ga);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
