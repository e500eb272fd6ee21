#pragma once

#include "mint/mint_engine.hpp"
#include "mint/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mint {

/// Flat "section.key" -> raw value map read from an INI-style text:
///   # comment
///   [section]
///   key = value
/// Keys before the first section header belong to the "run" section.
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Fully resolved settings of a CLI run.
struct RunConfig {
  // [model]
  std::size_t d_cls = 8;
  std::size_t d_irr = 32;
  std::size_t d_shift = 8;
  std::size_t d_noise = 16;
  double mu_sq = 4.0;
  double delta_sq = 9.0;
  double contamination = 0.3;

  // [sweep]
  std::vector<double> severities{0, 1, 2, 3, 4, 5};
  std::size_t mc_samples = 200000;
  std::vector<std::uint64_t> seeds{1, 2, 3};

  // [adapt]
  std::string mode = "synthetic";  // synthetic | dump
  double severity = 4.0;
  std::size_t n_batches = 500;
  std::vector<std::size_t> batch_sizes{20};
  std::size_t stream_batch = 20;  // the stream is drawn in batches of this size, then rechunked
  double learning_rate = 0.007;
  double k_prior = 10000.0;
  bool mean_acc = true;
  bool grad_acc = true;
  bool text_adjust = true;
  bool global_count_text_prior = false;
  std::string dump;

  // [run]
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = available parallelism
  std::string output = ".";

  /// Sets one "section.key" value; throws a usage error on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void apply(const std::map<std::string, std::string>& values);
  void validate() const;

  static RunConfig load(const std::filesystem::path& path);

  LatentParams latent_params(double s) const;
  MintConfig mint_config(std::size_t batch_size) const;
  /// Resolved settings in the same format `load` accepts.
  std::string to_text() const;
};

/// Resolves the worker count: explicit value, else MINT_THREADS, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

}  // namespace mint
