#include <fstream>
#include <iterator>

#include "doctest.h"
#include "dblp/checkpoint.hpp"
#include "dblp/errors.hpp"
#include "dblp/train.hpp"
#include "support.hpp"

using namespace dblp;

namespace {

TrainConfig tiny_config(std::size_t hidden = 8) {
  TrainConfig c;
  c.model.encoder.num_layers = 2;
  c.model.encoder.hidden = hidden;
  c.model.encoder.heads = 2;
  c.model.encoder.ff = 2 * hidden;
  c.model.encoder.max_positions = 32;
  c.model.max_len = 32;
  c.model.word_hidden = 6;
  c.model.sentence_hidden = 6;
  return c;
}

Model tiny_model(std::size_t hidden = 8) {
  const Dataset d = testing::synthetic_dataset(5);
  return build_model(tiny_config(hidden), d.examples, d.label_names);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

const TrainingRecord kRecord{3, 6, 1.25, nlohmann::json{{"learning_rate", 0.3}}};

}  // namespace

TEST_CASE("save, load and save again is byte-identical") {
  const auto dir = testing::scratch_dir("ckpt_roundtrip");
  const Model model = tiny_model();
  const std::uint64_t size = save_checkpoint(model, kRecord, dir / "a.ckpt");
  CHECK(size == std::filesystem::file_size(dir / "a.ckpt"));
  const LoadedCheckpoint loaded = load_checkpoint(dir / "a.ckpt");
  CHECK(loaded.size_bytes == size);
  CHECK(loaded.record == kRecord);
  save_checkpoint(loaded.model, loaded.record, dir / "b.ckpt");
  CHECK(read_file(dir / "a.ckpt") == read_file(dir / "b.ckpt"));

  CHECK(loaded.model.config() == model.config());
  CHECK(loaded.model.vocab().tokens() == model.vocab().tokens());
  CHECK(loaded.model.label_names() == model.label_names());
  CHECK(loaded.model.seed() == model.seed());
  for (const Parameter& p : model.params()) {
    const Parameter& q = loaded.model.params().get(p.name);
    CHECK(q.trainable == p.trainable);
    CHECK(q.tensor.shape() == p.tensor.shape());
    CHECK(q.tensor.data() == p.tensor.data());
  }
  const std::string text = "gap ket, mib lor.";
  CHECK(loaded.model.predict_proba(text) == model.predict_proba(text));
}

TEST_CASE("checkpoints start with the magic and version") {
  const std::string bytes = serialize_checkpoint(tiny_model(), kRecord);
  CHECK(bytes.substr(0, 8) == "DBLPCKPT");
  CHECK(static_cast<unsigned char>(bytes[8]) == kCheckpointVersion);
  CHECK(bytes[9] == 0);
  CHECK(bytes[10] == 0);
  CHECK(bytes[11] == 0);
}

TEST_CASE("checkpoint size does not depend on the recorded time") {
  const Model model = tiny_model();
  TrainingRecord fast = kRecord, slow = kRecord;
  fast.train_seconds = 0.1;
  slow.train_seconds = 12345.678901234;
  CHECK(serialize_checkpoint(model, fast).size() == serialize_checkpoint(model, slow).size());
  CHECK(parse_checkpoint(serialize_checkpoint(model, slow)).record.train_seconds ==
        doctest::Approx(12345.678901234).epsilon(1e-12));
}

TEST_CASE("damaged checkpoints are rejected") {
  const std::string good = serialize_checkpoint(tiny_model(), kRecord);
  CHECK_NOTHROW(parse_checkpoint(good));

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(bad_magic), FormatError);

  std::string future = good;
  future[8] = static_cast<char>(kCheckpointVersion + 1);
  try {
    parse_checkpoint(future);
    FAIL("expected a version error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_checkpoint(good.substr(0, good.size() - 1)), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(good.substr(0, 10)), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(good + "x"), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(""), FormatError);

  std::string bad_meta = good;
  bad_meta[20] = '\x01';
  CHECK_THROWS_AS(parse_checkpoint(bad_meta), FormatError);

  const auto dir = testing::scratch_dir("ckpt_damaged");
  write_file(dir / "corrupt.ckpt", bad_magic);
  CHECK_THROWS_AS(load_checkpoint(dir / "corrupt.ckpt"), FormatError);
  CHECK_THROWS(load_checkpoint(dir / "missing.ckpt"));
}

TEST_CASE("checkpoint size grows with parameter count") {
  std::uint64_t previous_params = 0, previous_size = 0;
  for (std::size_t hidden : {4u, 8u, 16u}) {
    const Model model = tiny_model(hidden);
    const std::uint64_t params = model.count_params().total;
    const std::uint64_t size = serialize_checkpoint(model, kRecord).size();
    CHECK(params > previous_params);
    CHECK(size > previous_size);
    CHECK(size > 8 * params);
    previous_params = params;
    previous_size = size;
  }
}
