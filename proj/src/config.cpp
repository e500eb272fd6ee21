#include "mint/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace mint {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error("invalid value for " + key + ": '" + value + "'", ErrorKind::kUsage);
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += fmt(xs[i]);
  }
  return out;
}

std::string unquote(const std::string& value) {
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') return value.substr(1, value.size() - 2);
  return value;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> values;
  std::string section = "run";
  std::stringstream ss(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error("config line " + std::to_string(line_no) + ": unterminated section header", ErrorKind::kUsage);
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw Error("config line " + std::to_string(line_no) + ": empty section", ErrorKind::kUsage);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config line " + std::to_string(line_no) + ": expected key = value", ErrorKind::kUsage);
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error("config line " + std::to_string(line_no) + ": empty key", ErrorKind::kUsage);
    std::string value = trim(line.substr(eq + 1));
    if (!value.empty() && value.front() != '"') {
      const auto hash = value.find(" #");
      if (hash != std::string::npos) value = trim(value.substr(0, hash));
    }
    const std::string full = section + "." + key;
    if (values.count(full)) {
      throw Error("config line " + std::to_string(line_no) + ": duplicate key " + full, ErrorKind::kUsage);
    }
    values[full] = unquote(value);
  }
  return values;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  auto size = [&](std::size_t& field) { field = static_cast<std::size_t>(to_u64(key, value)); };
  if (key == "model.d_cls") size(d_cls);
  else if (key == "model.d_irr") size(d_irr);
  else if (key == "model.d_shift") size(d_shift);
  else if (key == "model.d_noise") size(d_noise);
  else if (key == "model.mu_sq") mu_sq = to_double(key, value);
  else if (key == "model.delta_sq") delta_sq = to_double(key, value);
  else if (key == "model.contamination") contamination = to_double(key, value);
  else if (key == "sweep.severities") {
    severities.clear();
    for (const auto& item : split_list(value)) severities.push_back(to_double(key, item));
  } else if (key == "sweep.mc_samples") size(mc_samples);
  else if (key == "sweep.seeds") {
    seeds.clear();
    for (const auto& item : split_list(value)) seeds.push_back(to_u64(key, item));
  } else if (key == "adapt.mode") mode = value;
  else if (key == "adapt.severity") severity = to_double(key, value);
  else if (key == "adapt.n_batches") size(n_batches);
  else if (key == "adapt.batch_sizes") {
    batch_sizes.clear();
    for (const auto& item : split_list(value)) batch_sizes.push_back(static_cast<std::size_t>(to_u64(key, item)));
  } else if (key == "adapt.stream_batch") size(stream_batch);
  else if (key == "adapt.learning_rate") learning_rate = to_double(key, value);
  else if (key == "adapt.k_prior") k_prior = to_double(key, value);
  else if (key == "adapt.mean_acc") mean_acc = to_bool(key, value);
  else if (key == "adapt.grad_acc") grad_acc = to_bool(key, value);
  else if (key == "adapt.text_adjust") text_adjust = to_bool(key, value);
  else if (key == "adapt.global_count_text_prior") global_count_text_prior = to_bool(key, value);
  else if (key == "adapt.dump") dump = value;
  else if (key == "run.seed") seed = to_u64(key, value);
  else if (key == "run.threads") threads = static_cast<unsigned>(to_u64(key, value));
  else if (key == "run.output") output = value;
  else throw Error("unknown config key " + key, ErrorKind::kUsage);
}

void RunConfig::apply(const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) set(key, value);
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(what, ErrorKind::kUsage); };
  if (d_cls < 1 || d_irr < 1 || d_shift < 1 || d_noise < 1) fail("all model dimensions must be >= 1");
  if (!(mu_sq > 0.0)) fail("model.mu_sq must be positive");
  if (!(delta_sq >= 0.0)) fail("model.delta_sq must be nonnegative");
  if (!(contamination >= 0.0)) fail("model.contamination must be nonnegative");
  if (severities.empty()) fail("sweep.severities must not be empty");
  for (double s : severities) {
    if (!(s >= 0.0)) fail("severities must be nonnegative");
  }
  if (mc_samples < 2 || mc_samples % 2 != 0) fail("sweep.mc_samples must be even and >= 2");
  if (seeds.empty()) fail("sweep.seeds must not be empty");
  if (mode != "synthetic" && mode != "dump") fail("adapt.mode must be synthetic or dump");
  if (mode == "dump" && dump.empty()) fail("adapt.dump is required in dump mode");
  if (!(severity >= 0.0)) fail("adapt.severity must be nonnegative");
  if (n_batches < 1) fail("adapt.n_batches must be >= 1");
  if (stream_batch < 1) fail("adapt.stream_batch must be >= 1");
  if (batch_sizes.empty()) fail("adapt.batch_sizes must not be empty");
  for (auto b : batch_sizes) {
    if (b < 1) fail("batch sizes must be >= 1");
  }
  mint_config(batch_sizes.front()).validate();
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open config " + path.string(), ErrorKind::kUsage);
  std::stringstream ss;
  ss << f.rdbuf();
  RunConfig cfg;
  try {
    cfg.apply(parse_config_text(ss.str()));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what(), e.kind());
  }
  return cfg;
}

LatentParams RunConfig::latent_params(double s) const {
  return LatentParams::uniform(d_cls, mu_sq, d_irr, d_shift, delta_sq, d_noise, s);
}

MintConfig RunConfig::mint_config(std::size_t batch_size) const {
  MintConfig cfg;
  cfg.learning_rate = learning_rate;
  cfg.k_prior = k_prior;
  cfg.batch_size = batch_size;
  cfg.use_mean_acc = mean_acc;
  cfg.use_grad_acc = grad_acc;
  cfg.use_text_adjust = text_adjust;
  cfg.global_count_text_prior = global_count_text_prior;
  return cfg;
}

std::string RunConfig::to_text() const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  std::ostringstream out;
  out << "[model]\n"
      << "d_cls = " << d_cls << "\n"
      << "d_irr = " << d_irr << "\n"
      << "d_shift = " << d_shift << "\n"
      << "d_noise = " << d_noise << "\n"
      << "mu_sq = " << fmt_double(mu_sq) << "\n"
      << "delta_sq = " << fmt_double(delta_sq) << "\n"
      << "contamination = " << fmt_double(contamination) << "\n\n"
      << "[sweep]\n"
      << "severities = " << join(severities, fmt_double) << "\n"
      << "mc_samples = " << mc_samples << "\n"
      << "seeds = " << join(seeds, [](std::uint64_t v) { return std::to_string(v); }) << "\n\n"
      << "[adapt]\n"
      << "mode = " << mode << "\n"
      << "severity = " << fmt_double(severity) << "\n"
      << "n_batches = " << n_batches << "\n"
      << "batch_sizes = " << join(batch_sizes, [](std::size_t v) { return std::to_string(v); }) << "\n"
      << "stream_batch = " << stream_batch << "\n"
      << "learning_rate = " << fmt_double(learning_rate) << "\n"
      << "k_prior = " << fmt_double(k_prior) << "\n"
      << "mean_acc = " << b(mean_acc) << "\n"
      << "grad_acc = " << b(grad_acc) << "\n"
      << "text_adjust = " << b(text_adjust) << "\n"
      << "global_count_text_prior = " << b(global_count_text_prior) << "\n"
      << "dump = \"" << dump << "\"\n\n"
      << "[run]\n"
      << "seed = " << seed << "\n"
      << "threads = " << threads << "\n"
      << "output = \"" << output << "\"\n";
  return out.str();
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MINT_THREADS")) {
    unsigned value = 0;
    const std::string s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || value == 0) {
      throw Error("MINT_THREADS must be a positive integer", ErrorKind::kUsage);
    }
    return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace mint
