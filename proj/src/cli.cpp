#include "dblp/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "dblp/checkpoint.hpp"
#include "dblp/config_file.hpp"
#include "dblp/data.hpp"
#include "dblp/errors.hpp"
#include "dblp/train.hpp"

namespace dblp {
namespace {

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ConfigError("bad fraction '" + item + "'");
    out.push_back(v);
  }
  if (out.size() != 3) throw ConfigError("--fractions needs three comma-separated values");
  return out;
}

std::vector<std::string> read_corpus(const std::string& path) {
  if (std::filesystem::path(path).extension() == ".csv") {
    std::vector<std::string> texts;
    for (auto& ex : load_csv(path).examples) texts.push_back(std::move(ex.text));
    return texts;
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void report_rejected(const Dataset& ds, const std::string& path, std::ostream& err) {
  if (ds.rejected_rows.empty()) return;
  err << path << ": skipped " << ds.rejected_rows.size() << " row(s) with empty text or category:";
  for (std::size_t r : ds.rejected_rows) err << ' ' << r;
  err << '\n';
}

TrainConfig config_with_env(const std::string& path) {
  TrainConfig config = load_config(path);
  if (const char* env = std::getenv("DBLP_SEED")) {
    apply_setting(config, "seed", env);
  }
  return config;
}

std::vector<Example> load_eval_split(const Model& model, const std::string& path,
                                     std::ostream& err) {
  const Dataset ds = load_csv(path, &model.label_names());
  report_rejected(ds, path, err);
  return ds.examples;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical clause-level text classifier"};
  app.name(args.empty() ? "dblp" : std::filesystem::path(args[0]).filename().string());
  app.require_subcommand(1);

  std::string corpus, output, input, config_path, data_dir, checkpoint, split_path, text;
  std::size_t max_size = 8000, min_freq = 1;
  std::string fractions = "0.64,0.16,0.20";
  std::uint64_t seed = 0;
  double fraction = 0.05;
  std::optional<double> pre_subsample;
  std::string format = "json";

  auto* vocab_cmd = app.add_subcommand("build-vocab", "Build a vocabulary file from a corpus");
  vocab_cmd->add_option("--corpus", corpus, "CSV with a text column, or one text per line")
      ->required();
  vocab_cmd->add_option("--out", output, "Vocabulary file to write")->required();
  vocab_cmd->add_option("--max-size", max_size, "Maximum vocabulary size");
  vocab_cmd->add_option("--min-freq", min_freq, "Minimum word frequency");

  auto* split_cmd = app.add_subcommand("split", "Stratified train/val/test split of a CSV");
  split_cmd->add_option("--input", input, "Input CSV")->required();
  split_cmd->add_option("--out", output, "Output directory")->required();
  split_cmd->add_option("--fractions", fractions, "train,val,test fractions");
  split_cmd->add_option("--seed", seed, "Shuffle seed");
  split_cmd->add_option("--subsample", pre_subsample,
                        "Stratified subsample fraction applied before splitting");

  auto* sub_cmd = app.add_subcommand("subsample", "Stratified subsample of a CSV");
  sub_cmd->add_option("--input", input, "Input CSV")->required();
  sub_cmd->add_option("--out", output, "Output CSV")->required();
  sub_cmd->add_option("--fraction", fraction, "Fraction kept per class");
  sub_cmd->add_option("--seed", seed, "Sampling seed");

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--config", config_path, "Run configuration file")->required();
  train_cmd->add_option("--data", data_dir, "Directory written by split")->required();
  train_cmd->add_option("--out", checkpoint, "Checkpoint file to write")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "Weighted metrics of a checkpoint on a CSV");
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--split", split_path, "CSV to evaluate on")->required();
  eval_cmd->add_option("--format", format, "json or kv")->check(CLI::IsMember({"json", "kv"}));

  auto* predict_cmd = app.add_subcommand("predict", "Classify one text");
  predict_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  predict_cmd->add_option("--text", text, "Text to classify")->required();

  auto* count_cmd = app.add_subcommand("param-count", "Total and trainable parameter counts");
  count_cmd->add_option("--config", config_path, "Run configuration file")->required();

  auto* report_cmd = app.add_subcommand("report", "Experiment report row for a checkpoint");
  report_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  report_cmd->add_option("--split", split_path, "CSV to evaluate on")->required();
  report_cmd->add_option("--format", format, "json or table")->check(CLI::IsMember({"json", "table"}));

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("dblp");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    if (auto subs = app.get_subcommands(); !subs.empty()) {
      err << subs.front()->help();
    } else {
      err << app.help();
    }
    return kExitUsage;
  }

  try {
    if (*vocab_cmd) {
      const auto texts = read_corpus(corpus);
      const Vocabulary vocab = build_vocab(texts, max_size, min_freq);
      vocab.save(output);
      err << "wrote " << vocab.size() << " tokens to " << output << '\n';
      out << nlohmann::json{{"tokens", vocab.size()}, {"path", output}}.dump() << '\n';
    } else if (*split_cmd) {
      const auto fr = parse_fractions(fractions);
      SplitSpec spec{fr[0], fr[1], fr[2], seed};
      spec.validate();
      Dataset ds = load_csv(input);
      report_rejected(ds, input, err);
      SplitManifest manifest{spec, ds.label_names, {}, {}, input};
      std::vector<Example> examples = std::move(ds.examples);
      if (pre_subsample) {
        examples = stratified_subsample(examples, *pre_subsample, seed);
        manifest.subsample_fraction = *pre_subsample;
        manifest.subsample_seed = seed;
      }
      const Splits splits = stratified_split(examples, spec);
      write_split_dir(output, splits, manifest);
      out << nlohmann::json{{"train", splits.train.size()},
                            {"val", splits.val.size()},
                            {"test", splits.test.size()}}
                 .dump()
          << '\n';
    } else if (*sub_cmd) {
      const Dataset ds = load_csv(input);
      report_rejected(ds, input, err);
      const auto subset = stratified_subsample(ds.examples, fraction, seed);
      save_csv(output, subset, ds.label_names);
      out << nlohmann::json{{"input", ds.examples.size()}, {"kept", subset.size()}}.dump() << '\n';
    } else if (*train_cmd) {
      const TrainConfig config = config_with_env(config_path);
      const SplitDir data = read_split_dir(data_dir);
      Model model = build_model(config, data.splits.train, data.manifest.label_names);
      const ParamCount count = model.count_params();
      err << "model: " << count.total << " parameters, " << count.trainable << " trainable; vocab "
          << model.vocab().size() << '\n';
      TrainOptions options;
      options.on_epoch_end = [&](const EpochLog& log) {
        err << "epoch " << log.epoch << ": train_loss " << log.train_loss << " val_loss "
            << log.val_loss << (log.improved ? " *" : "") << '\n';
      };
      const TrainResult result =
          train(model, data.splits.train, data.splits.val, config, options);
      err << "best epoch " << result.best_epoch << " of " << result.epochs_run << '\n';
      const TrainingRecord record = result.record(config);
      const std::uint64_t size = save_checkpoint(model, record, checkpoint);
      const auto& test = data.splits.test.empty() ? data.splits.val : data.splits.test;
      const MetricsReport metrics = evaluate(model, test);
      out << experiment_report(model, record, metrics, size).to_json().dump() << '\n';
    } else if (*eval_cmd) {
      const LoadedCheckpoint ck = load_checkpoint(checkpoint);
      const auto examples = load_eval_split(ck.model, split_path, err);
      const MetricsReport metrics = evaluate(ck.model, examples);
      if (format == "kv") {
        out << metrics.to_key_value();
      } else {
        out << metrics.to_json().dump() << '\n';
      }
    } else if (*predict_cmd) {
      const LoadedCheckpoint ck = load_checkpoint(checkpoint);
      const auto probs = ck.model.predict_proba(text);
      const std::size_t label = predict_label(probs);
      out << nlohmann::json{{"label", ck.model.label_names()[label]},
                            {"label_id", label},
                            {"probabilities", probs}}
                 .dump()
          << '\n';
    } else if (*count_cmd) {
      const TrainConfig config = load_config(config_path);
      const auto specs = model_param_specs(config.model);
      const ParamCount count = count_params(specs);
      out << nlohmann::json{{"total", count.total}, {"trainable", count.trainable}}.dump() << '\n';
    } else if (*report_cmd) {
      const LoadedCheckpoint ck = load_checkpoint(checkpoint);
      const auto examples = load_eval_split(ck.model, split_path, err);
      const MetricsReport metrics = evaluate(ck.model, examples);
      const ExperimentReport report = experiment_report(ck.model, ck.record, metrics, ck.size_bytes);
      if (format == "json") {
        out << report.to_json().dump() << '\n';
      } else {
        out << report.to_table();
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace dblp
