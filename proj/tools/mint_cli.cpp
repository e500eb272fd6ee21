#include "mint/adaptation_run.hpp"
#include "mint/config.hpp"
#include "mint/dump_io.hpp"
#include "mint/embedding_metrics.hpp"
#include "mint/mint_engine.hpp"
#include "mint/rng.hpp"
#include "mint/synthetic_world.hpp"
#include "mint/theory_oracle.hpp"
#include "mint/verify.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mint;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerification = 3;

const std::vector<std::string> kMetricsHeader = {"severity", "corruption_tag", "gt_total", "gt_inter",
                                                 "gt_intra", "pl_total", "pl_inter", "pl_intra",
                                                 "accuracy", "seed"};

struct GlobalOptions {
  unsigned threads = 0;
};

struct DiagOptions {
  std::vector<std::string> inputs;
  std::string output;
  bool pseudo_text = false;
};

struct SweepOptions {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> mc_samples;
};

struct AdaptOptions {
  std::string config;
  std::string output;
  std::string dump;
  std::vector<std::size_t> batch_sizes;
  std::optional<std::uint64_t> seed;
  bool no_text_adjust = false;
  bool no_grad_acc = false;
  bool no_mean_acc = false;
  bool global_k = false;
};

struct SynthOptions {
  std::string config;
  std::string output;
  std::size_t samples = 2000;
  std::optional<std::uint64_t> seed;
  bool no_labels = false;
};

struct VerifyCliOptions {
  std::string level = "quick";
  std::string output;
  bool inject_gradient_bug = false;
  std::uint64_t seed = VerifyOptions{}.seed;
};

CsvField opt_field(const std::optional<double>& v) {
  return v ? CsvField{*v} : CsvField{};
}

/// "<name>__<tag>.mintdump" -> tag; otherwise the file stem.
std::string tag_of(const fs::path& path) {
  const std::string stem = path.stem().string();
  const auto sep = stem.rfind("__");
  return sep == std::string::npos ? stem : stem.substr(sep + 2);
}

/// "clean" -> 0, "s3" / "3" / "3.5" -> the number, anything else -> unknown.
std::optional<double> severity_of(const std::string& tag) {
  if (tag == "clean") return 0.0;
  std::string digits = tag;
  if (!digits.empty() && (digits[0] == 's' || digits[0] == 'S')) digits.erase(0, 1);
  double value = 0.0;
  const auto* end = digits.data() + digits.size();
  const auto [ptr, ec] = std::from_chars(digits.data(), end, value);
  if (digits.empty() || ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : RunConfig::load(path);
}

int run_diag(const DiagOptions& opt) {
  std::vector<CsvRow> rows;
  for (const auto& input : opt.inputs) {
    DumpContents dump = read_dump(input);
    for (const auto& w : dump.warnings) std::cerr << "warning: " << input << ": " << w << "\n";
    const EmbeddingSet& set = dump.embeddings;
    if (!set.labels && !opt.pseudo_text) throw Error(input + ": nothing to compute (no labels and no --pseudo-text)");
    if (opt.pseudo_text && !dump.text) throw Error(input + ": --pseudo-text needs text embeddings in the dump");

    const std::string tag = tag_of(input);
    CsvRow row(kMetricsHeader.size());
    row[0] = opt_field(severity_of(tag));
    row[1] = tag;
    if (set.labels) {
      const VarianceReport gt = compute_variance_report(set, *set.labels);
      row[2] = gt.total;
      row[3] = gt.inter;
      row[4] = gt.intra;
    }
    if (opt.pseudo_text) {
      const Prediction pred = predict(set.data, *dump.text);
      const VarianceReport pl = compute_variance_report(set, pred.labels);
      row[5] = pl.total;
      row[6] = pl.inter;
      row[7] = pl.intra;
      if (set.labels) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < pred.labels.size(); ++i) hits += pred.labels[i] == (*set.labels)[i] ? 1 : 0;
        row[8] = static_cast<double>(hits) / static_cast<double>(pred.labels.size());
      }
    }
    rows.push_back(std::move(row));
  }
  const fs::path out(opt.output);
  if (out.has_parent_path()) prepare_dir(out.parent_path());
  write_csv(out, kMetricsHeader, rows);

  std::ostringstream sidecar;
  sidecar << "[diag]\n";
  sidecar << "pseudo_text = " << (opt.pseudo_text ? "true" : "false") << "\n";
  for (std::size_t i = 0; i < opt.inputs.size(); ++i) sidecar << "input" << i << " = \"" << opt.inputs[i] << "\"\n";
  sidecar << "output = \"" << opt.output << "\"\n";
  write_text_file(out.string() + ".config", sidecar.str());
  std::cout << "wrote " << rows.size() << " row(s) to " << opt.output << "\n";
  return kExitOk;
}

int run_sweep(const SweepOptions& opt, const GlobalOptions& global) {
  RunConfig cfg = load_config(opt.config);
  if (!opt.output.empty()) cfg.output = opt.output;
  if (opt.seed) cfg.seeds = {*opt.seed};
  if (opt.mc_samples) cfg.mc_samples = *opt.mc_samples;
  if (global.threads) cfg.threads = global.threads;
  cfg.validate();
  const unsigned threads = resolve_threads(cfg.threads);

  const fs::path dir(cfg.output);
  prepare_dir(dir);
  write_text_file(dir / "resolved_config.ini", cfg.to_text());

  std::vector<CsvRow> sweep_rows, metric_rows;
  for (double s : cfg.severities) {
    const LatentParams p = cfg.latent_params(s);
    const GtLimits limits = gt_limits(p);
    const NormWeights ones = NormWeights::ones(p.layout());
    double inter_sum = 0.0, intra_sum = 0.0, worst_inter = 0.0, worst_intra = 0.0;
    for (auto seed : cfg.seeds) {
      const TextEmbeddings text = make_text_embeddings(p, cfg.contamination, seed);
      const McMeasurement mc = mc_measure(p, ones, cfg.mc_samples, seed, text_labeler(text), threads);
      inter_sum += mc.gt_report.inter;
      intra_sum += mc.gt_report.intra;
      worst_inter = std::max(worst_inter, std::abs(mc.gt_report.inter - limits.inter));
      worst_intra = std::max(worst_intra, std::abs(mc.gt_report.intra - limits.intra));
      metric_rows.push_back({s, std::string("synthetic"), mc.gt_report.total, mc.gt_report.inter,
                             mc.gt_report.intra, mc.pl_report.total, mc.pl_report.inter, mc.pl_report.intra,
                             mc.accuracy, static_cast<std::int64_t>(seed)});
    }
    const double k = static_cast<double>(cfg.seeds.size());
    sweep_rows.push_back({s, limits.inter, limits.intra, inter_sum / k, intra_sum / k, worst_inter,
                          worst_inter / limits.inter, worst_intra, worst_intra / limits.intra,
                          static_cast<std::int64_t>(cfg.mc_samples), static_cast<std::int64_t>(cfg.seeds.size())});
  }
  write_csv(dir / "sweep.csv",
            {"severity", "closed_inter", "closed_intra", "mc_inter_mean", "mc_intra_mean", "max_abs_gap_inter",
             "max_rel_gap_inter", "max_abs_gap_intra", "max_rel_gap_intra", "mc_samples", "n_seeds"},
            sweep_rows);
  write_csv(dir / "metrics.csv", kMetricsHeader, metric_rows);
  std::cout << "wrote " << sweep_rows.size() << " severity row(s) to " << (dir / "sweep.csv").string() << "\n";
  return kExitOk;
}

int run_adapt(const AdaptOptions& opt, const GlobalOptions& global) {
  RunConfig cfg = load_config(opt.config);
  if (!opt.output.empty()) cfg.output = opt.output;
  if (!opt.dump.empty()) {
    cfg.mode = "dump";
    cfg.dump = opt.dump;
  }
  if (!opt.batch_sizes.empty()) cfg.batch_sizes = opt.batch_sizes;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.no_text_adjust) cfg.text_adjust = false;
  if (opt.no_grad_acc) cfg.grad_acc = false;
  if (opt.no_mean_acc) cfg.mean_acc = false;
  if (opt.global_k) cfg.global_count_text_prior = true;
  if (global.threads) cfg.threads = global.threads;
  cfg.validate();

  const fs::path dir(cfg.output);
  prepare_dir(dir);
  write_text_file(dir / "resolved_config.ini", cfg.to_text());

  std::vector<LatentBatch> stream;
  TextEmbeddings text;
  NormWeights w0;
  if (cfg.mode == "dump") {
    DumpContents dump = read_dump(cfg.dump);
    for (const auto& w : dump.warnings) std::cerr << "warning: " << cfg.dump << ": " << w << "\n";
    if (!dump.text) throw Error(cfg.dump + ": dump mode requires text embeddings in the dump");
    LatentBatch all;
    all.latents = std::move(dump.embeddings.data);
    if (dump.embeddings.labels) all.gt_labels = *dump.embeddings.labels;
    all.tag = tag_of(cfg.dump);
    all.severity = severity_of(all.tag).value_or(0.0);
    stream.push_back(std::move(all));
    text = std::move(*dump.text);
    w0 = NormWeights::ones(SegmentLayout::single(text.dim()));
  } else {
    SyntheticScenario scenario;
    scenario.params = cfg.latent_params(cfg.severity);
    scenario.contamination = cfg.contamination;
    scenario.n_batches = cfg.n_batches;
    scenario.batch_size = cfg.stream_batch;
    scenario.seed = cfg.seed;
    ScenarioData data = build_scenario(scenario);
    stream = std::move(data.batches);
    text = std::move(data.text);
    w0 = std::move(data.w0);
  }

  std::vector<CsvRow> batch_rows, summary_rows;
  for (std::size_t batch_size : cfg.batch_sizes) {
    const AdaptationResult r = run_adaptation(rechunk(stream, batch_size), w0, text, cfg.mint_config(batch_size));
    for (const auto& b : r.batches) {
      batch_rows.push_back({static_cast<std::int64_t>(batch_size), static_cast<std::int64_t>(b.index),
                            static_cast<std::int64_t>(b.size), b.severity, b.tag, b.diagnostics.objective,
                            b.diagnostics.grad_norm, b.diagnostics.mean_grad_norm, b.diagnostics.agreement,
                            opt_field(b.zero_shot_accuracy), opt_field(b.adapted_accuracy)});
    }
    summary_rows.push_back({static_cast<std::int64_t>(batch_size), opt_field(r.zero_shot_accuracy),
                            opt_field(r.adapted_accuracy), r.mean_objective, r.pre_pl.inter, r.post_pl.inter,
                            r.pre_gt ? CsvField{r.pre_gt->inter} : CsvField{},
                            r.post_gt ? CsvField{r.post_gt->inter} : CsvField{},
                            static_cast<std::int64_t>(r.n_samples), static_cast<std::int64_t>(r.n_batches),
                            static_cast<std::int64_t>(cfg.seed)});
    std::printf("batch_size=%zu zero_shot=%s adapted=%s\n", batch_size,
                r.zero_shot_accuracy ? std::to_string(*r.zero_shot_accuracy).c_str() : "n/a",
                r.adapted_accuracy ? std::to_string(*r.adapted_accuracy).c_str() : "n/a");
  }
  write_csv(dir / "adapt_batches.csv",
            {"batch_size", "batch_index", "size", "severity", "tag", "objective", "grad_norm", "mean_grad_norm",
             "agreement", "zero_shot_accuracy", "adapted_accuracy"},
            batch_rows);
  write_csv(dir / "adapt_summary.csv",
            {"batch_size", "zero_shot_accuracy", "adapted_accuracy", "mean_objective", "pre_pl_inter",
             "post_pl_inter", "pre_gt_inter", "post_gt_inter", "n_samples", "n_batches", "seed"},
            summary_rows);
  return kExitOk;
}

/// Writes one dump per configured severity, named synthetic__clean.mintdump and
/// synthetic__s<severity>.mintdump, so that `diag` can read them back.
int run_synth(const SynthOptions& opt) {
  RunConfig cfg = load_config(opt.config);
  if (!opt.output.empty()) cfg.output = opt.output;
  if (opt.seed) cfg.seed = *opt.seed;
  cfg.validate();
  if (opt.samples == 0) throw Error("--samples must be positive", ErrorKind::kUsage);

  const fs::path dir(cfg.output);
  prepare_dir(dir);
  const RandomStream root(cfg.seed);
  for (std::size_t i = 0; i < cfg.severities.size(); ++i) {
    const double s = cfg.severities[i];
    const LatentParams p = cfg.latent_params(s);
    RandomStream child = root.split(i);
    const LatentBatch batch = sample_latents(p, opt.samples, child.next_u64());
    EmbeddingSet set = embed(batch, NormWeights::ones(p.layout()));
    if (opt.no_labels) set.labels.reset();
    const TextEmbeddings text = make_text_embeddings(p, cfg.contamination, child.next_u64());
    char tag[32];
    if (s == 0.0) {
      std::snprintf(tag, sizeof(tag), "clean");
    } else {
      std::snprintf(tag, sizeof(tag), "s%g", s);
    }
    const fs::path path = dir / ("synthetic__" + std::string(tag) + ".mintdump");
    write_dump(path, set, text);
    std::cout << "wrote " << path.string() << "\n";
  }
  return kExitOk;
}

int run_verify(const VerifyCliOptions& opt, const GlobalOptions& global) {
  VerifyOptions options;
  options.level = opt.level == "full" ? VerifyLevel::kFull : VerifyLevel::kQuick;
  options.seed = opt.seed;
  options.threads = resolve_threads(global.threads);
  if (opt.inject_gradient_bug) options.gradient = broken_gradient();

  const auto results = run_verification(options);
  bool all = true;
  std::vector<CsvRow> rows;
  std::printf("%-24s %-6s %9s  %s\n", "suite", "result", "seconds", "detail");
  for (const auto& r : results) {
    all = all && r.passed;
    std::printf("%-24s %-6s %9.3f  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.seconds, r.detail.c_str());
    rows.push_back({r.name, std::string(r.passed ? "pass" : "fail"), r.seconds, r.detail});
  }
  if (!opt.output.empty()) {
    const fs::path dir(opt.output);
    prepare_dir(dir);
    write_csv(dir / "verify.csv", {"suite", "result", "seconds", "detail"}, rows);
    std::ostringstream sidecar;
    sidecar << "[verify]\nlevel = " << opt.level << "\nseed = " << opt.seed << "\ninject_gradient_bug = "
            << (opt.inject_gradient_bug ? "true" : "false") << "\nthreads = " << options.threads << "\n";
    write_text_file(dir / "resolved_config.ini", sidecar.str());
  }
  return all ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mint test-time adaptation toolkit"};
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_option("--threads", global.threads, "Worker threads (default: MINT_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  DiagOptions diag;
  auto* diag_cmd = app.add_subcommand("diag", "Variance diagnostics over embedding dumps");
  diag_cmd->add_option("--input,-i", diag.inputs, "Dump file(s); tag taken from <name>__<tag>.mintdump")
      ->required()
      ->check(CLI::ExistingFile);
  diag_cmd->add_option("--output,-o", diag.output, "Metrics CSV path")->required();
  diag_cmd->add_flag("--pseudo-text", diag.pseudo_text, "Also compute PL metrics from the dump's text embeddings");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Closed-form vs Monte Carlo variance sweep over severities");
  sweep_cmd->add_option("--config,-c", sweep.config, "Config file")->check(CLI::ExistingFile);
  sweep_cmd->add_option("--output,-o", sweep.output, "Output directory");
  sweep_cmd->add_option("--seed", sweep.seed, "Run a single seed instead of the configured list");
  sweep_cmd->add_option("--mc-samples", sweep.mc_samples, "Monte Carlo samples per severity and seed");

  AdaptOptions adapt;
  auto* adapt_cmd = app.add_subcommand("adapt", "Run online adaptation on a synthetic stream or a dump");
  adapt_cmd->add_option("--config,-c", adapt.config, "Config file")->check(CLI::ExistingFile);
  adapt_cmd->add_option("--output,-o", adapt.output, "Output directory");
  adapt_cmd->add_option("--dump", adapt.dump, "Adapt over a dump instead of the synthetic stream")
      ->check(CLI::ExistingFile);
  adapt_cmd->add_option("--batch-size", adapt.batch_sizes, "Batch size(s), comma separated")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  adapt_cmd->add_option("--seed", adapt.seed, "Stream seed");
  adapt_cmd->add_flag("--no-text-adjust", adapt.no_text_adjust, "Disable the text embedding adjustment");
  adapt_cmd->add_flag("--no-grad-acc", adapt.no_grad_acc, "Step along the current batch gradient only");
  adapt_cmd->add_flag("--no-mean-acc", adapt.no_mean_acc, "Use batch-local means in the objective");
  adapt_cmd->add_flag("--global-k", adapt.global_k, "Use the global sample count in the text prior");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write synthetic embedding dumps, one per configured severity");
  synth_cmd->add_option("--config,-c", synth.config, "Config file")->check(CLI::ExistingFile);
  synth_cmd->add_option("--output,-o", synth.output, "Output directory");
  synth_cmd->add_option("--samples", synth.samples, "Samples per dump");
  synth_cmd->add_option("--seed", synth.seed, "Sampling seed");
  synth_cmd->add_flag("--no-labels", synth.no_labels, "Omit ground-truth labels from the dumps");

  VerifyCliOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run the numerical verification suites");
  verify_cmd->add_option("--level", verify.level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
  verify_cmd->add_option("--output,-o", verify.output, "Directory for verify.csv");
  verify_cmd->add_option("--seed", verify.seed, "Seed for the randomized suites");
  verify_cmd->add_flag("--inject-gradient-bug", verify.inject_gradient_bug)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*diag_cmd) return run_diag(diag);
    if (*sweep_cmd) return run_sweep(sweep, global);
    if (*adapt_cmd) return run_adapt(adapt, global);
    if (*synth_cmd) return run_synth(synth);
    if (*verify_cmd) return run_verify(verify, global);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::kUsage: return kExitUsage;
      case ErrorKind::kVerification: return kExitVerification;
      case ErrorKind::kData: return kExitData;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
