#include "dblp/config_file.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "dblp/errors.hpp"

namespace dblp {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" +
                      std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true or false, got '" +
                    std::string(value) + "'");
}

struct Field {
  std::function<void(TrainConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const TrainConfig&)> get;
};

using FieldTable = std::vector<std::pair<std::string, Field>>;

#define DBLP_SIZE(key, expr)                                                                     \
  {key, Field{[](TrainConfig& c, std::string_view k, std::string_view v) {                      \
                expr = parse_number<std::size_t>(k, v);                                          \
              },                                                                                 \
              [](const TrainConfig& c) { return std::to_string(expr); }}}
#define DBLP_DOUBLE(key, expr)                                                                   \
  {key, Field{[](TrainConfig& c, std::string_view k, std::string_view v) {                      \
                expr = parse_number<double>(k, v);                                               \
              },                                                                                 \
              [](const TrainConfig& c) { return format_double(expr); }}}
#define DBLP_BOOL(key, expr)                                                                     \
  {key, Field{[](TrainConfig& c, std::string_view k, std::string_view v) {                      \
                expr = parse_bool(k, v);                                                         \
              },                                                                                 \
              [](const TrainConfig& c) { return std::string(expr ? "true" : "false"); }}}

const FieldTable& fields() {
  static const FieldTable table = {
      DBLP_SIZE("num_layers", c.model.encoder.num_layers),
      DBLP_SIZE("hidden", c.model.encoder.hidden),
      DBLP_SIZE("heads", c.model.encoder.heads),
      DBLP_SIZE("ff", c.model.encoder.ff),
      DBLP_SIZE("vocab_size", c.model.encoder.vocab_size),
      DBLP_SIZE("max_positions", c.model.encoder.max_positions),
      DBLP_SIZE("num_segments", c.model.encoder.num_segments),
      {"freeze_below",
       Field{[](TrainConfig& c, std::string_view k, std::string_view v) {
               if (v == "auto") {
                 c.model.encoder.freeze_below.reset();
               } else {
                 c.model.encoder.freeze_below = parse_number<std::size_t>(k, v);
               }
             },
             [](const TrainConfig& c) {
               return c.model.encoder.freeze_below ? std::to_string(*c.model.encoder.freeze_below)
                                                   : std::string("auto");
             }}},
      DBLP_BOOL("segment_embeddings", c.model.encoder.segment_embeddings),
      DBLP_DOUBLE("layer_norm_eps", c.model.encoder.layer_norm_eps),
      DBLP_SIZE("word_hidden", c.model.word_hidden),
      DBLP_SIZE("sentence_hidden", c.model.sentence_hidden),
      DBLP_DOUBLE("lambda", c.model.fusion.lambda),
      {"mode", Field{[](TrainConfig& c, std::string_view, std::string_view v) {
                       c.model.fusion.mode = parse_mode(v);
                     },
                     [](const TrainConfig& c) { return std::string(mode_name(c.model.fusion.mode)); }}},
      {"word_direction",
       Field{[](TrainConfig& c, std::string_view, std::string_view v) {
               c.model.fusion.word_direction = parse_direction(v);
             },
             [](const TrainConfig& c) {
               return std::string(direction_name(c.model.fusion.word_direction));
             }}},
      {"sentence_direction",
       Field{[](TrainConfig& c, std::string_view, std::string_view v) {
               c.model.fusion.sentence_direction = parse_direction(v);
             },
             [](const TrainConfig& c) {
               return std::string(direction_name(c.model.fusion.sentence_direction));
             }}},
      DBLP_BOOL("bidirectional", c.model.fusion.bidirectional),
      DBLP_SIZE("num_labels", c.model.num_labels),
      DBLP_DOUBLE("phi", c.model.loss.phi),
      {"loss_prefactor",
       Field{[](TrainConfig& c, std::string_view, std::string_view v) {
               c.model.loss.prefactor = parse_prefactor(v);
             },
             [](const TrainConfig& c) { return std::string(prefactor_name(c.model.loss.prefactor)); }}},
      DBLP_SIZE("max_len", c.model.max_len),
      DBLP_DOUBLE("learning_rate", c.learning_rate),
      DBLP_SIZE("batch_size", c.batch_size),
      DBLP_SIZE("max_epochs", c.max_epochs),
      DBLP_SIZE("patience", c.patience),
      {"seed", Field{[](TrainConfig& c, std::string_view k, std::string_view v) {
                       c.seed = parse_number<std::uint64_t>(k, v);
                     },
                     [](const TrainConfig& c) { return std::to_string(c.seed); }}},
      DBLP_DOUBLE("clip_norm", c.clip_norm),
      DBLP_SIZE("min_freq", c.min_freq),
  };
  return table;
}

#undef DBLP_SIZE
#undef DBLP_DOUBLE
#undef DBLP_BOOL

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, field] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_setting(TrainConfig& config, std::string_view key, std::string_view value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      try {
        field.set(config, key, value);
      } catch (const ConfigError& e) {
        const std::string what = e.what();
        if (what.find("'" + name + "'") != std::string::npos) throw;
        throw ConfigError("config key '" + name + "': " + what);
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

TrainConfig parse_config_text(std::string_view text) {
  TrainConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError("config key '" + std::string(key) + "' is set more than once");
    }
    apply_setting(config, key, value);
  }
  config.validate();
  config.model.encoder.validate();
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_config_text(const TrainConfig& config) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace dblp
