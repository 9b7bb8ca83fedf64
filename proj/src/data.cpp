#include "dblp/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "dblp/errors.hpp"
#include "dblp/rng.hpp"
#include "json.hpp"

namespace dblp {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("cannot write " + path.string());
}

std::vector<std::vector<std::size_t>> indices_by_class(std::span<const Example> examples) {
  std::vector<std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const std::size_t l = examples[i].label;
    if (l >= by_class.size()) by_class.resize(l + 1);
    by_class[l].push_back(i);
  }
  return by_class;
}

std::vector<Example> gather(std::span<const Example> examples, std::vector<std::size_t> idx) {
  std::sort(idx.begin(), idx.end());
  std::vector<Example> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(examples[i]);
  return out;
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
  if (content.size() >= 3 && content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // distinguishes an empty line from an empty field
  std::size_t line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    if (field_started || !row.empty()) {
      end_field();
      rows.push_back(std::move(row));
    }
    row.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < content.size() && content[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw DataError("csv: unterminated quoted field starting before line " +
                                 std::to_string(line));
  end_row();
  return rows;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

Dataset parse_dataset(std::string_view content, const std::vector<std::string>* known_labels) {
  const auto rows = parse_csv(content);
  if (rows.empty()) throw DataError("csv: missing header row");
  std::optional<std::size_t> text_col, label_col;
  for (std::size_t c = 0; c < rows[0].size(); ++c) {
    const std::string name = lower(trim(rows[0][c]));
    if (name == "text" && !text_col) text_col = c;
    if (name == "category" && !label_col) label_col = c;
  }
  if (!text_col || !label_col) {
    throw DataError(std::string("csv: header must contain columns text and category; missing ") +
                    (!text_col ? "text" : "category"));
  }

  Dataset ds;
  std::unordered_map<std::string, std::size_t> ids;
  if (known_labels) {
    ds.label_names = *known_labels;
    for (std::size_t i = 0; i < known_labels->size(); ++i) ids.emplace((*known_labels)[i], i);
  }
  const std::size_t width = rows[0].size();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::size_t file_row = r + 1;
    if (rows[r].size() != width) {
      throw DataError("csv: row " + std::to_string(file_row) + " has " +
                      std::to_string(rows[r].size()) + " fields, header has " +
                      std::to_string(width));
    }
    const std::string& text = rows[r][*text_col];
    const std::string category = trim(rows[r][*label_col]);
    if (trim(text).empty() || category.empty()) {
      ds.rejected_rows.push_back(file_row);
      continue;
    }
    auto it = ids.find(category);
    if (it == ids.end()) {
      if (known_labels) {
        throw DataError("csv: row " + std::to_string(file_row) + " has unknown category '" +
                        category + "'");
      }
      it = ids.emplace(category, ds.label_names.size()).first;
      ds.label_names.push_back(category);
    }
    ds.examples.push_back({text, it->second});
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const std::vector<std::string>* known_labels) {
  try {
    return parse_dataset(read_file(path), known_labels);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string to_csv(std::span<const Example> examples, std::span<const std::string> label_names) {
  std::string out = "text,category\n";
  for (const auto& ex : examples) {
    if (ex.label >= label_names.size()) {
      throw LookupError("to_csv: label id " + std::to_string(ex.label) + " has no name");
    }
    out += csv_escape(ex.text) + "," + csv_escape(label_names[ex.label]) + "\n";
  }
  return out;
}

void save_csv(const std::filesystem::path& path, std::span<const Example> examples,
              std::span<const std::string> label_names) {
  write_file(path, to_csv(examples, label_names));
}

void SplitSpec::validate() const {
  for (double f : {train, val, test}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split fractions must lie in [0, 1]");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  if (train == 0.0) throw ConfigError("train fraction must be positive");
}

SplitCounts split_counts(std::size_t n, const SplitSpec& spec) {
  if (n == 0) return {};
  const double dn = static_cast<double>(n);
  auto tr = static_cast<std::size_t>(std::llround(spec.train * dn));
  auto va = static_cast<std::size_t>(std::llround(spec.val * dn));
  tr = std::clamp<std::size_t>(tr, 1, n);
  va = std::min(va, n - tr);
  return {tr, va, n - tr - va};
}

Splits stratified_split(std::span<const Example> examples, const SplitSpec& spec) {
  spec.validate();
  if (examples.empty()) throw DataError("stratified_split: empty dataset");
  Rng rng(spec.seed);
  std::vector<std::size_t> tr, va, te;
  for (auto& idx : indices_by_class(examples)) {
    if (idx.empty()) continue;
    rng.shuffle(std::span(idx));
    const SplitCounts c = split_counts(idx.size(), spec);
    tr.insert(tr.end(), idx.begin(), idx.begin() + c.train);
    va.insert(va.end(), idx.begin() + c.train, idx.begin() + c.train + c.val);
    te.insert(te.end(), idx.begin() + c.train + c.val, idx.end());
  }
  return {gather(examples, tr), gather(examples, va), gather(examples, te)};
}

std::vector<Example> stratified_subsample(std::span<const Example> examples, double fraction,
                                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("subsample fraction must lie in (0, 1]");
  }
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& idx : indices_by_class(examples)) {
    if (idx.empty()) continue;
    rng.shuffle(std::span(idx));
    // The small slack keeps exact products such as 0.05·200 from rounding up.
    const double target = fraction * static_cast<double>(idx.size());
    auto k = static_cast<std::size_t>(std::ceil(target - 1e-9));
    k = std::clamp<std::size_t>(k, 1, idx.size());
    keep.insert(keep.end(), idx.begin(), idx.begin() + k);
  }
  return gather(examples, keep);
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::optional<std::uint64_t> shuffle_seed) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    rng.shuffle(std::span(order));
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b < n; b += batch_size) {
    out.emplace_back(order.begin() + b, order.begin() + std::min(n, b + batch_size));
  }
  return out;
}

void write_split_dir(const std::filesystem::path& dir, const Splits& splits,
                     const SplitManifest& manifest) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_csv(dir / "train.csv", splits.train, manifest.label_names);
  save_csv(dir / "val.csv", splits.val, manifest.label_names);
  save_csv(dir / "test.csv", splits.test, manifest.label_names);

  nlohmann::json j;
  j["seed"] = manifest.spec.seed;
  j["fractions"] = {manifest.spec.train, manifest.spec.val, manifest.spec.test};
  j["label_names"] = manifest.label_names;
  j["subsample_fraction"] = manifest.subsample_fraction ? nlohmann::json(*manifest.subsample_fraction)
                                                        : nlohmann::json(nullptr);
  j["subsample_seed"] = manifest.subsample_seed ? nlohmann::json(*manifest.subsample_seed)
                                                : nlohmann::json(nullptr);
  j["order"] = "subsample-then-split";
  j["source"] = manifest.source;
  j["counts"] = {{"train", splits.train.size()},
                 {"val", splits.val.size()},
                 {"test", splits.test.size()}};
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

SplitDir read_split_dir(const std::filesystem::path& dir) {
  SplitDir out;
  try {
    const auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
    auto& m = out.manifest;
    m.spec.seed = j.at("seed").get<std::uint64_t>();
    const auto fr = j.at("fractions").get<std::vector<double>>();
    if (fr.size() != 3) throw DataError("manifest: fractions must have three entries");
    m.spec.train = fr[0];
    m.spec.val = fr[1];
    m.spec.test = fr[2];
    m.label_names = j.at("label_names").get<std::vector<std::string>>();
    if (!j.at("subsample_fraction").is_null()) {
      m.subsample_fraction = j["subsample_fraction"].get<double>();
    }
    if (!j.at("subsample_seed").is_null()) {
      m.subsample_seed = j["subsample_seed"].get<std::uint64_t>();
    }
    m.source = j.value("source", "");
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  }
  const auto* labels = &out.manifest.label_names;
  out.splits.train = load_csv(dir / "train.csv", labels).examples;
  out.splits.val = load_csv(dir / "val.csv", labels).examples;
  out.splits.test = load_csv(dir / "test.csv", labels).examples;
  return out;
}

const std::vector<Example>& split_by_name(const Splits& splits, std::string_view name) {
  if (name == "train") return splits.train;
  if (name == "val") return splits.val;
  if (name == "test") return splits.test;
  throw LookupError("unknown split '" + std::string(name) + "'; expected train, val or test");
}

}  // namespace dblp
