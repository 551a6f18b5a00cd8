#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "summ/training.hpp"

namespace summ::train {
namespace {

constexpr char kMagic[8] = {'S', 'U', 'M', 'M', 'C', 'K', 'P', 'T'};

std::uint32_t variant_tag(model::ModelKind kind) { return static_cast<std::uint32_t>(kind) + 1; }

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double d) { u64(std::bit_cast<std::uint64_t>(d)); }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::size_t end, std::string path) : buf_(buf), end_(end), path_(std::move(path)) {}

  void need(std::size_t n) const {
    if (pos_ + n > end_) throw FormatError(path_ + ": checkpoint is truncated or corrupt");
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string path_;
};

}  // namespace

Checkpoint make_checkpoint(const model::Summarizer& model, std::uint64_t vocab_hash, std::uint64_t iteration,
                           const AdagradState* optimizer) {
  Checkpoint c;
  c.config = model.config();
  c.coverage_active = model.coverage_active();
  c.vocab_hash = vocab_hash;
  c.iteration = iteration;
  for (const auto& p : model.params().entries()) {
    c.names.push_back(p.name);
    c.shapes.push_back(p.tensor.shape());
    c.values.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  }
  if (optimizer) c.optimizer = *optimizer;
  return c;
}

std::unique_ptr<model::Summarizer> instantiate(const Checkpoint& ckpt) {
  auto m = model::make_summarizer(ckpt.config, 0);
  const auto& entries = m->params().entries();
  if (entries.size() != ckpt.names.size()) {
    throw FormatError("checkpoint holds " + std::to_string(ckpt.names.size()) + " tensors, model expects " +
                      std::to_string(entries.size()));
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k].name != ckpt.names[k] || entries[k].tensor.shape() != ckpt.shapes[k]) {
      throw FormatError("checkpoint tensor " + ckpt.names[k] + " " + ag::shape_str(ckpt.shapes[k]) +
                        " does not match model tensor " + entries[k].name + " " +
                        ag::shape_str(entries[k].tensor.shape()));
    }
  }
  m->params().restore(ckpt.values);
  m->set_coverage_active(ckpt.coverage_active);
  return m;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::ordered_json manifest;
  manifest["model_config"] = nlohmann::ordered_json::parse(ckpt.config.to_json());
  manifest["coverage_active"] = ckpt.coverage_active;
  manifest["metadata"] = nlohmann::ordered_json::parse(ckpt.metadata);
  auto& tensors = manifest["tensors"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < ckpt.names.size(); ++k) {
    tensors.push_back({{"name", ckpt.names[k]}, {"shape", ckpt.shapes[k]}});
  }
  if (ckpt.optimizer) {
    manifest["optimizer"] = {{"learning_rate", ckpt.optimizer->config.learning_rate},
                             {"initial_accumulator", ckpt.optimizer->config.initial_accumulator},
                             {"epsilon", ckpt.optimizer->config.epsilon}};
  }
  const std::string text = manifest.dump();

  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(variant_tag(ckpt.config.kind));
  w.u64(ckpt.vocab_hash);
  w.u64(ckpt.iteration);
  w.u64(text.size());
  w.bytes(text.data(), text.size());
  for (std::size_t k = 0; k < ckpt.values.size(); ++k) {
    if (ckpt.values[k].size() != ag::shape_size(ckpt.shapes[k])) throw ShapeError("checkpoint tensor size mismatch");
    for (double v : ckpt.values[k]) w.f64(v);
  }
  if (ckpt.optimizer) {
    if (ckpt.optimizer->accumulators.size() != ckpt.values.size()) throw ShapeError("optimizer state size mismatch");
    for (std::size_t k = 0; k < ckpt.values.size(); ++k) {
      if (ckpt.optimizer->accumulators[k].size() != ckpt.values[k].size()) {
        throw ShapeError("optimizer accumulator size mismatch for " + ckpt.names[k]);
      }
      for (double v : ckpt.optimizer->accumulators[k]) w.f64(v);
    }
  }
  w.u64(fnv1a(w.data().data(), w.data().size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const LoadExpectations& expect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string();
  if (buf.size() < sizeof kMagic + 8 || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError(where + ": not a checkpoint file");
  }
  Reader trailer(buf, buf.size(), where);
  trailer.bytes(buf.size() - 8);
  if (fnv1a(buf.data(), buf.size() - 8) != trailer.uint(8)) {
    throw FormatError(where + ": checkpoint is truncated or corrupt (checksum mismatch)");
  }

  Reader r(buf, buf.size() - 8, where);
  r.bytes(sizeof kMagic);
  const auto version = static_cast<std::uint32_t>(r.uint(4));
  if (version != kCheckpointVersion) {
    throw FormatError(where + ": checkpoint version " + std::to_string(version) + ", expected " +
                      std::to_string(kCheckpointVersion));
  }
  const auto tag = static_cast<std::uint32_t>(r.uint(4));
  Checkpoint c;
  c.vocab_hash = r.uint(8);
  c.iteration = r.uint(8);
  const std::uint64_t manifest_len = r.uint(8);
  if (manifest_len > buf.size()) throw FormatError(where + ": checkpoint is truncated or corrupt");
  try {
    const auto manifest = nlohmann::json::parse(r.bytes(static_cast<std::size_t>(manifest_len)));
    c.config = model::SummarizerConfig::from_json(manifest.at("model_config").dump());
    c.coverage_active = manifest.at("coverage_active").get<bool>();
    if (manifest.contains("metadata")) c.metadata = manifest["metadata"].dump();
    for (const auto& t : manifest.at("tensors")) {
      c.names.push_back(t.at("name").get<std::string>());
      c.shapes.push_back(t.at("shape").get<ag::Shape>());
    }
    if (manifest.contains("optimizer")) {
      const auto& o = manifest["optimizer"];
      AdagradState s;
      s.config = {o.at("learning_rate").get<double>(), o.at("initial_accumulator").get<double>(),
                  o.at("epsilon").get<double>()};
      c.optimizer = s;
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + ": bad checkpoint manifest: " + e.what());
  }
  if (tag != variant_tag(c.config.kind)) throw FormatError(where + ": variant tag disagrees with manifest");

  if (expect.kind && *expect.kind != c.config.kind) {
    throw FormatError(where + ": checkpoint holds a " + std::string(model::model_name(c.config.kind)) +
                      " model, not " + std::string(model::model_name(*expect.kind)));
  }
  if (expect.vocab_hash && *expect.vocab_hash != c.vocab_hash) {
    throw FormatError(where + ": vocabulary hash mismatch (checkpoint was trained with a different vocabulary)");
  }

  const auto read_block = [&](std::vector<std::vector<double>>& out) {
    for (const ag::Shape& s : c.shapes) {
      std::vector<double> v(ag::shape_size(s));
      r.need(v.size() * 8);
      for (double& x : v) x = r.f64();
      out.push_back(std::move(v));
    }
  };
  read_block(c.values);
  if (c.optimizer) read_block(c.optimizer->accumulators);
  if (r.pos() != buf.size() - 8) throw FormatError(where + ": trailing bytes in checkpoint");
  return c;
}

}  // namespace summ::train
