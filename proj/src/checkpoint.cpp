#include "dblp/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dblp/errors.hpp"

namespace dblp {
namespace {

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  template <class T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
    }
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::uint64_t n, const char* what) {
    if (n > in_.size() - pos_) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <class T>
  T uint(const char* what) {
    const auto s = bytes(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    }
    return static_cast<T>(v);
  }
  double f64(const char* what) { return std::bit_cast<double>(uint<std::uint64_t>(what)); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

// Durations are stored as 20-digit strings so the file size does not
// depend on the measured time.
std::string fixed_width_nanoseconds(double seconds) {
  if (!(seconds >= 0.0) || seconds > 1e10) throw ContractError("checkpoint: invalid training time");
  char buf[24];
  std::snprintf(buf, sizeof buf, "%020llu", static_cast<unsigned long long>(std::llround(seconds * 1e9)));
  return buf;
}

double parse_nanoseconds(const std::string& text) {
  std::uint64_t ns = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), ns);
  if (ec != std::errc{} || end != text.data() + text.size() || text.size() != 20) {
    throw FormatError("checkpoint metadata: malformed training time '" + text + "'");
  }
  return static_cast<double>(ns) / 1e9;
}

}  // namespace

std::string serialize_checkpoint(const Model& model, const TrainingRecord& record) {
  nlohmann::json meta;
  meta["config"] = model.config().to_json();
  meta["vocab"] = model.vocab().tokens();
  meta["vocab_hash"] = model.vocab().digest();
  meta["label_names"] = model.label_names();
  meta["seed"] = model.seed();
  meta["best_epoch"] = record.best_epoch;
  meta["epochs_run"] = record.epochs_run;
  meta["train_nanoseconds"] = fixed_width_nanoseconds(record.train_seconds);
  meta["train_config"] = record.train_config;
  const std::string meta_text = meta.dump();

  Writer w;
  w.bytes(kCheckpointMagic);
  w.uint<std::uint32_t>(kCheckpointVersion);
  w.uint<std::uint64_t>(meta_text.size());
  w.bytes(meta_text);
  w.uint<std::uint64_t>(model.params().size());
  for (const Parameter& p : model.params()) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name);
    w.uint<std::uint8_t>(p.trainable ? 1 : 0);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t e : p.tensor.shape()) w.uint<std::uint64_t>(e);
    for (double v : p.tensor.values()) w.f64(v);
  }
  return w.take();
}

LoadedCheckpoint parse_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.remaining() < kCheckpointMagic.size() ||
      r.bytes(kCheckpointMagic.size(), "magic") != kCheckpointMagic) {
    throw FormatError("not a checkpoint: bad magic bytes");
  }
  const auto version = r.uint<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const auto meta_len = r.uint<std::uint64_t>("metadata length");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(r.bytes(meta_len, "metadata"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }

  ModelConfig config;
  Vocabulary vocab;
  std::vector<std::string> labels;
  std::uint64_t seed = 0;
  TrainingRecord record;
  try {
    config = ModelConfig::from_json(meta.at("config"));
    vocab = Vocabulary(meta.at("vocab").get<std::vector<std::string>>());
    if (vocab.digest() != meta.at("vocab_hash").get<std::uint64_t>()) {
      throw FormatError("checkpoint vocabulary does not match its recorded hash");
    }
    labels = meta.at("label_names").get<std::vector<std::string>>();
    seed = meta.at("seed").get<std::uint64_t>();
    record.best_epoch = meta.at("best_epoch").get<std::size_t>();
    record.epochs_run = meta.at("epochs_run").get<std::size_t>();
    record.train_seconds = parse_nanoseconds(meta.at("train_nanoseconds").get<std::string>());
    record.train_config = meta.at("train_config");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  } catch (const DataError& e) {
    throw FormatError(std::string("checkpoint vocabulary: ") + e.what());
  }

  const auto count = r.uint<std::uint64_t>("parameter count");
  std::vector<Parameter> params;
  for (std::uint64_t i = 0; i < count; ++i) {
    Parameter p;
    const auto name_len = r.uint<std::uint32_t>("parameter name length");
    p.name = std::string(r.bytes(name_len, "parameter name"));
    const auto trainable = r.uint<std::uint8_t>("trainable flag");
    if (trainable > 1) throw FormatError("checkpoint: bad trainable flag for " + p.name);
    p.trainable = trainable == 1;
    const auto rank = r.uint<std::uint32_t>("rank");
    Shape shape(rank);
    std::uint64_t n = 1;
    for (auto& e : shape) {
      e = r.uint<std::uint64_t>("extent");
      n *= e;
    }
    if (n > r.remaining() / 8) throw FormatError("checkpoint truncated in values of " + p.name);
    std::vector<double> values(n);
    for (auto& v : values) v = r.f64("values");
    p.tensor = Tensor(std::move(shape), std::move(values));
    params.push_back(std::move(p));
  }
  if (r.remaining() != 0) {
    throw FormatError("checkpoint has " + std::to_string(r.remaining()) + " trailing bytes");
  }
  Model model = Model::restore(std::move(config), std::move(vocab), std::move(labels), seed,
                               std::move(params));
  return LoadedCheckpoint{std::move(model), std::move(record), bytes.size()};
}

std::uint64_t save_checkpoint(const Model& model, const TrainingRecord& record,
                              const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model, record);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
  return std::filesystem::file_size(path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace dblp
