#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dblp/cli.hpp"
#include "dblp/config_file.hpp"
#include "dblp/errors.hpp"
#include "support.hpp"

using namespace dblp;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(DBLP_SOURCE_DIR) / "configs";

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dblp");
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string tiny_config_text() {
  return "num_layers = 2\nhidden = 16\nheads = 2\nff = 32\nmax_positions = 32\nmax_len = 32\n"
         "word_hidden = 8\nsentence_hidden = 8\nmax_epochs = 2\nlearning_rate = 0.3\n";
}

void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("config text parses over the defaults") {
  const TrainConfig c = parse_config_text(
      "# comment\n\nnum_layers = 3\nlambda=0.25\nbidirectional = true\nmode = cls-ladder\n"
      "freeze_below = 1\nlearning_rate = 0.05\nsentence_direction = forward\n");
  CHECK(c.model.encoder.num_layers == 3);
  CHECK(c.model.fusion.lambda == 0.25);
  CHECK(c.model.fusion.bidirectional);
  CHECK(c.model.fusion.mode == ModelMode::cls_ladder);
  CHECK(c.model.encoder.freeze_below == 1u);
  CHECK(c.learning_rate == 0.05);
  CHECK(c.model.fusion.sentence_direction == Direction::forward);
  CHECK(c.patience == 3);
  CHECK_FALSE(parse_config_text("freeze_below = auto\n").model.encoder.freeze_below.has_value());
}

TEST_CASE("config errors name the offending key") {
  try {
    parse_config_text("hiden = 3\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("hiden") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("hidden = 16\nhidden = 32\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("hidden = sixteen\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("hidden 16\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("bidirectional = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("patience = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("hidden = 10\nheads = 4\n"), ConfigError);
  CHECK_THROWS(load_config("/nonexistent/dblp.cfg"));
}

TEST_CASE("config text round-trips") {
  TrainConfig c;
  c.model.encoder.num_layers = 4;
  c.model.encoder.freeze_below = 2;
  c.model.fusion.lambda = 0.125;
  c.model.loss.phi = 3e-4;
  c.model.fusion.bidirectional = true;
  c.batch_size = 5;
  c.seed = 99;
  const std::string text = to_config_text(c);
  const TrainConfig back = parse_config_text(text);
  CHECK(to_config_text(back) == text);
  CHECK(back.to_json() == c.to_json());
  for (const auto& key : config_keys()) CHECK(text.find(key + " = ") != std::string::npos);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"desk.cfg", "distil.cfg", "bert_base.cfg"}) {
    CHECK_NOTHROW(load_config(kConfigs / name));
  }
  const TrainConfig desk = load_config(kConfigs / "desk.cfg");
  const TrainConfig defaults;
  CHECK(to_config_text(desk) == to_config_text(defaults));
}

TEST_CASE("cli usage errors exit with code 1") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  const Run missing = cli({"split", "--input", "x.csv"});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find("--out") != std::string::npos);
  CHECK(cli({"evaluate", "--checkpoint", "a", "--split", "b", "--format", "xml"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("cli data errors exit with code 2") {
  const Run r = cli({"split", "--input", "/nonexistent/in.csv", "--out", "/tmp/dblp_never"});
  CHECK(r.code == kExitFailure);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK(cli({"param-count", "--config", "/nonexistent.cfg"}).code == kExitFailure);
  CHECK(cli({"split", "--input", "x.csv", "--out", "y", "--fractions", "0.5,0.5"}).code == kExitFailure);
}

TEST_CASE("cli split partitions every row") {
  const auto dir = testing::scratch_dir("cli_split");
  const Dataset d = testing::synthetic_dataset(25);
  save_csv(dir / "all.csv", d.examples, d.label_names);
  const Run r = cli({"split", "--input", (dir / "all.csv").string(), "--out", (dir / "splits").string(),
                     "--fractions", "0.64,0.16,0.20", "--seed", "3"});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("train").get<int>() + j.at("val").get<int>() + j.at("test").get<int>() == 100);
  const SplitDir back = read_split_dir(dir / "splits");
  CHECK(back.splits.train.size() + back.splits.val.size() + back.splits.test.size() == 100);
  CHECK(back.manifest.spec.seed == 3);

  const Run again = cli({"split", "--input", (dir / "all.csv").string(), "--out", (dir / "again").string(),
                         "--seed", "3"});
  CHECK(read_split_dir(dir / "again").splits.train == back.splits.train);
}

TEST_CASE("cli subsample and build-vocab") {
  const auto dir = testing::scratch_dir("cli_subsample");
  const Dataset d = testing::synthetic_dataset(50);
  save_csv(dir / "all.csv", d.examples, d.label_names);
  const Run sub = cli({"subsample", "--input", (dir / "all.csv").string(), "--out", (dir / "sub.csv").string(),
                       "--fraction", "0.05", "--seed", "1"});
  REQUIRE(sub.code == kExitOk);
  const Dataset kept = load_csv(dir / "sub.csv");
  CHECK(kept.examples.size() == 12);
  CHECK(kept.num_labels() == 4);

  const Run vocab = cli({"build-vocab", "--corpus", (dir / "all.csv").string(), "--out",
                         (dir / "vocab.txt").string(), "--max-size", "30"});
  REQUIRE(vocab.code == kExitOk);
  CHECK(Vocabulary::load(dir / "vocab.txt").size() == 30);
}

TEST_CASE("cli param-count matches the anchors") {
  const Run distil = cli({"param-count", "--config", (kConfigs / "distil.cfg").string()});
  REQUIRE(distil.code == kExitOk);
  const auto total = nlohmann::json::parse(distil.out).at("total").get<double>();
  CHECK(std::abs(total - 66127643.0) / 66127643.0 <= 0.03);
  const Run base = cli({"param-count", "--config", (kConfigs / "bert_base.cfg").string()});
  const auto j = nlohmann::json::parse(base.out);
  CHECK(std::abs(j.at("total").get<double>() - 109247003.0) / 109247003.0 <= 0.03);
  CHECK(j.at("trainable") == nlohmann::json::parse(distil.out).at("trainable"));
}

TEST_CASE("cli train, evaluate, predict and report agree with the library") {
  const auto dir = testing::scratch_dir("cli_train");
  const Dataset d = testing::synthetic_dataset(10);
  save_csv(dir / "all.csv", d.examples, d.label_names);
  write_text(dir / "run.cfg", tiny_config_text());
  REQUIRE(cli({"split", "--input", (dir / "all.csv").string(), "--out", (dir / "splits").string()}).code ==
          kExitOk);
  const Run trained = cli({"train", "--config", (dir / "run.cfg").string(), "--data",
                           (dir / "splits").string(), "--out", (dir / "model.ckpt").string()});
  REQUIRE(trained.code == kExitOk);
  CHECK(trained.err.find("epoch 1") != std::string::npos);
  const auto report = nlohmann::json::parse(trained.out);
  CHECK(report.at("epochs") == 2);
  CHECK(report.at("size_bytes") == std::filesystem::file_size(dir / "model.ckpt"));

  const std::string test_csv = (dir / "splits" / "test.csv").string();
  const std::string ckpt = (dir / "model.ckpt").string();
  const Run eval = cli({"evaluate", "--checkpoint", ckpt, "--split", test_csv});
  REQUIRE(eval.code == kExitOk);
  const LoadedCheckpoint loaded = load_checkpoint(ckpt);
  const MetricsReport in_process = evaluate(loaded.model, read_split_dir(dir / "splits").splits.test);
  CHECK(MetricsReport::from_json(nlohmann::json::parse(eval.out)) == in_process);
  CHECK(cli({"evaluate", "--checkpoint", ckpt, "--split", test_csv}).out == eval.out);
  CHECK(cli({"evaluate", "--checkpoint", ckpt, "--split", test_csv, "--format", "kv"}).out ==
        in_process.to_key_value());

  const Run pred = cli({"predict", "--checkpoint", ckpt, "--text", d.examples[0].text});
  REQUIRE(pred.code == kExitOk);
  const auto pj = nlohmann::json::parse(pred.out);
  double total = 0.0;
  for (double p : pj.at("probabilities")) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pj.at("probabilities").size() == 4);
  CHECK(pj.at("label") == d.label_names[pj.at("label_id").get<std::size_t>()]);

  const Run table = cli({"report", "--checkpoint", ckpt, "--split", test_csv, "--format", "table"});
  REQUIRE(table.code == kExitOk);
  CHECK(table.out.rfind("Precision", 0) == 0);
  const Run rj = cli({"report", "--checkpoint", ckpt, "--split", test_csv, "--format", "json"});
  auto from_report = ExperimentReport::from_json(nlohmann::json::parse(rj.out));
  auto from_train = ExperimentReport::from_json(report);
  CHECK(from_report == from_train);

  CHECK(cli({"evaluate", "--checkpoint", (dir / "missing.ckpt").string(), "--split", test_csv}).code ==
        kExitFailure);
}
