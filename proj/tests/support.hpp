#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dblp/data.hpp"
#include "dblp/rng.hpp"
#include "dblp/tape.hpp"

namespace dblp::testing {

/// Fills every parameter with uniform(−scale, scale) draws.
inline void randomize(ParameterStore& store, Rng& rng, double scale = 0.5) {
  for (Parameter& p : store) {
    for (double& v : p.tensor.values()) v = rng.uniform(-scale, scale);
  }
}

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dblp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Sixty short words: four class-specific pools of ten plus twenty shared.
inline std::vector<std::string> synthetic_words() {
  static const char* consonants = "bdfgklmnprstvz";
  static const char* vowels = "aeiou";
  std::vector<std::string> words;
  Rng rng(7);
  while (words.size() < 60) {
    std::string w{consonants[rng.below(14)], vowels[rng.below(5)], consonants[rng.below(14)]};
    bool fresh = true;
    for (const auto& x : words) fresh = fresh && x != w;
    if (fresh) words.push_back(w);
  }
  return words;
}

/// Separable 4-class corpus: each text mixes three or four words from its
/// class pool with shared filler words, split into clauses by punctuation.
inline Dataset synthetic_dataset(std::size_t per_class = 50, std::uint64_t seed = 11) {
  const auto words = synthetic_words();
  Dataset ds;
  ds.label_names = {"alpha", "beta", "gamma", "delta"};
  Rng rng(seed);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < 4; ++c) {
      const std::size_t length = 6 + rng.below(5);
      std::vector<std::string> tokens;
      for (std::size_t t = 0; t < length; ++t) {
        const bool own = t % 2 == 0 || rng.uniform() < 0.2;
        tokens.push_back(own ? words[c * 10 + rng.below(10)] : words[40 + rng.below(20)]);
      }
      std::string text;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        text += tokens[t];
        if (t + 1 < tokens.size()) text += (t % 3 == 2 && rng.uniform() < 0.7) ? ", " : " ";
      }
      text += ".";
      ds.examples.push_back({text, c});
    }
  }
  return ds;
}

}  // namespace dblp::testing
