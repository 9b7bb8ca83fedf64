#pragma once

// CSV ingestion of (text, category) rows, label encoding, stratified
// splitting and subsampling, and mini-batch index iteration.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dblp {

struct Example {
  std::string text;
  std::size_t label = 0;

  bool operator==(const Example&) const = default;
};

struct Dataset {
  std::vector<Example> examples;
  std::vector<std::string> label_names;
  /// 1-based file rows (header is row 1) skipped for empty text or category.
  std::vector<std::size_t> rejected_rows;

  std::size_t num_labels() const { return label_names.size(); }
};

/// Splits comma-separated, double-quoted records. Quoted fields may hold
/// commas, doubled quotes and line breaks; CRLF and LF both end a record.
/// Blank lines are ignored. Throws DataError on an unterminated quote.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

/// Parses a table whose header holds "text" and "category" in any order
/// and case. Labels get dense ids in first-appearance order unless
/// `known_labels` is given, in which case names must come from it.
Dataset parse_dataset(std::string_view content,
                      const std::vector<std::string>* known_labels = nullptr);
Dataset load_csv(const std::filesystem::path& path,
                 const std::vector<std::string>* known_labels = nullptr);

std::string to_csv(std::span<const Example> examples, std::span<const std::string> label_names);
void save_csv(const std::filesystem::path& path, std::span<const Example> examples,
              std::span<const std::string> label_names);

struct SplitSpec {
  double train = 0.64;
  double val = 0.16;
  double test = 0.20;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless all fractions are ≥ 0 and sum to 1.
  void validate() const;
};

struct Splits {
  std::vector<Example> train;
  std::vector<Example> val;
  std::vector<Example> test;
};

/// Per-class allocation counts for a class of size n: round(train·n) and
/// round(val·n), test takes the remainder, train keeps at least one.
struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};
SplitCounts split_counts(std::size_t n, const SplitSpec& spec);

/// Shuffles each class with the seed and allocates by split_counts. Each
/// split keeps the source order. Throws DataError on an empty dataset.
Splits stratified_split(std::span<const Example> examples, const SplitSpec& spec);

/// ceil(fraction·n_c) examples per class drawn without replacement, kept in
/// source order. Throws ConfigError unless 0 < fraction ≤ 1.
std::vector<Example> stratified_subsample(std::span<const Example> examples, double fraction,
                                          std::uint64_t seed);

/// Consecutive index batches over [0, n); the last may be partial. With a
/// seed the order is shuffled first. Throws ConfigError when batch_size is 0.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::optional<std::uint64_t> shuffle_seed = {});

/// Splits on disk: train.csv, val.csv, test.csv and manifest.json.
struct SplitManifest {
  SplitSpec spec;
  std::vector<std::string> label_names;
  std::optional<double> subsample_fraction;
  std::optional<std::uint64_t> subsample_seed;
  std::string source;
};

void write_split_dir(const std::filesystem::path& dir, const Splits& splits,
                     const SplitManifest& manifest);

struct SplitDir {
  Splits splits;
  SplitManifest manifest;
};
/// Labels are resolved against the manifest's label table.
SplitDir read_split_dir(const std::filesystem::path& dir);

/// One split by name ("train", "val" or "test").
const std::vector<Example>& split_by_name(const Splits& splits, std::string_view name);

}  // namespace dblp
