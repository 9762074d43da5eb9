// Command-line front end: reproducible supernet training, architecture
// search, screening, reporting and final training, all driven by a flat JSON
// config. Exit codes: 0 ok, 2 config error, 3 I/O error, 4 missing
// prerequisite artifact, 5 numeric failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bfnas/config.hpp"
#include "bfnas/micronet/train.hpp"
#include "bfnas/run_io.hpp"
#include "bfnas/search.hpp"
#include "bfnas/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct MissingArtifactError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericFailureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr const char* kOutRootEnv = "BFNAS_OUT_ROOT";

fs::path resolve_out(const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv(kOutRootEnv); root != nullptr && *root != '\0')
    return fs::path(root) / p;
  return p;
}

std::string iso_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Written before the work starts and finalized afterwards; holds everything
// needed to reproduce the command (modulo timestamps).
class Manifest {
 public:
  Manifest(fs::path dir, const std::string& command) : path_(dir / ("manifest_" + command + ".json")) {
    body_["command"] = command;
    body_["tool_version"] = bfnas::kToolVersion;
    body_["started_at"] = iso_now();
    body_["finished_at"] = nullptr;
    body_["status"] = "running";
    body_["outputs"] = json::array();
  }

  void set_config(const bfnas::RunConfig& cfg) {
    body_["config"] = bfnas::config_to_json(cfg);
    body_["master_seed"] = cfg.search.master_seed;
  }
  void set_inputs(const std::vector<std::string>& inputs) { body_["inputs"] = inputs; }
  void add_output(const fs::path& p) { body_["outputs"].push_back(p.string()); }

  void write() const {
    std::ofstream out(path_);
    if (!out) throw bfnas::IoError("cannot write manifest " + path_.string());
    out << body_.dump(2) << '\n';
  }

  void finish() {
    body_["finished_at"] = iso_now();
    body_["status"] = "ok";
    write();
  }

 private:
  fs::path path_;
  json body_;
};

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericFailureError(what + " is not finite");
}

std::unique_ptr<bfnas::Evaluator> make_evaluator(const bfnas::RunConfig& cfg,
                                                 std::unique_ptr<bfnas::micronet::Supernet>& net,
                                                 std::unique_ptr<bfnas::micronet::SynthDataset>& data) {
  if (cfg.evaluator == bfnas::EvaluatorKind::kSynthetic)
    return std::make_unique<bfnas::SyntheticEvaluator>(cfg.dataset_seed);
  if (cfg.checkpoint.empty())
    throw MissingArtifactError("micronet evaluator needs a 'checkpoint' path in the config");
  if (!fs::exists(cfg.checkpoint))
    throw MissingArtifactError("checkpoint not found: " + cfg.checkpoint);
  net = std::make_unique<bfnas::micronet::Supernet>(bfnas::micronet::load_supernet(cfg.checkpoint));
  data = std::make_unique<bfnas::micronet::SynthDataset>(cfg.make_dataset());
  // The low-fidelity subsample and the attack derive from the dataset seed,
  // so the evaluation environment is fixed across search seeds.
  return std::make_unique<bfnas::MicronetEvaluator>(*net, *data, cfg.search.low_fidelity_fraction,
                                                    cfg.attack_epsilon, cfg.dataset_seed);
}

struct CommonOpts {
  std::string config_path;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> mode;
  std::optional<std::string> surrogate;
  std::optional<std::string> evaluator;
};

bfnas::RunConfig load_with_overrides(const CommonOpts& opts) {
  bfnas::RunConfig cfg = bfnas::load_config_file(opts.config_path);
  if (opts.seed) cfg.search.master_seed = *opts.seed;
  if (opts.workers) cfg.search.workers = *opts.workers;
  if (opts.mode) cfg.search.mode = bfnas::detail::parse_mode(*opts.mode);
  if (opts.surrogate) cfg.search.surrogate = bfnas::detail::parse_surrogate(*opts.surrogate);
  if (opts.evaluator) cfg.evaluator = bfnas::detail::parse_evaluator(*opts.evaluator);
  cfg.validate();
  return cfg;
}

int cmd_train_supernet(const CommonOpts& opts) {
  bfnas::RunConfig cfg = load_with_overrides(opts);
  fs::path out = resolve_out(opts.out);
  fs::create_directories(out);
  Manifest manifest(out, "train_supernet");
  manifest.set_config(cfg);
  manifest.write();

  auto data = cfg.make_dataset();
  auto train_cfg = cfg.train_config(false);
  auto result = bfnas::micronet::adv_train_supernet(data, cfg.net_config(), train_cfg);
  for (const auto& e : result.log) require_finite(e.adv_loss, "training loss");

  fs::path ckpt = out / "supernet.ckpt";
  bfnas::micronet::save_supernet(result.net, ckpt.string());
  bfnas::write_train_log_csv(out / "train_log.csv", result.log);
  bfnas::write_config_json(out / "config.json", cfg);
  manifest.add_output(ckpt);
  manifest.add_output(out / "train_log.csv");
  manifest.finish();
  std::cout << "supernet checkpoint: " << ckpt.string() << '\n';
  return 0;
}

int cmd_search(const CommonOpts& opts) {
  bfnas::RunConfig cfg = load_with_overrides(opts);
  fs::path out = resolve_out(opts.out);
  fs::create_directories(out);
  Manifest manifest(out, "search");
  manifest.set_config(cfg);
  manifest.write();

  std::unique_ptr<bfnas::micronet::Supernet> net;
  std::unique_ptr<bfnas::micronet::SynthDataset> data;
  auto evaluator = make_evaluator(cfg, net, data);

  bfnas::write_config_json(out / "config.json", cfg);
  bfnas::SearchResult result = bfnas::run_search(cfg.search, *evaluator);
  for (const auto& h : result.history) require_finite(h.hv, "hypervolume");

  bfnas::write_archive_csv(out / "archive.csv", result.archive);
  bfnas::write_history_jsonl(out / "history.jsonl", result.history);
  bfnas::write_surrogate_csv(out / "surrogate_data.csv", result.training_set);
  manifest.add_output(out / "archive.csv");
  manifest.add_output(out / "history.jsonl");
  manifest.add_output(out / "surrogate_data.csv");
  manifest.finish();
  std::cout << "archive size " << result.archive.size() << ", high-fidelity evaluations "
            << result.high_fidelity_evals << ", surrogate fits " << result.surrogate_fits
            << (result.budget_exhausted ? " (wall-clock budget exhausted)" : "") << '\n';
  return 0;
}

bfnas::RunConfig load_run_config(const fs::path& run_dir) {
  fs::path cfg_path = run_dir / "config.json";
  if (!fs::exists(cfg_path))
    throw MissingArtifactError("run directory misses config.json: " + run_dir.string());
  bfnas::RunConfig cfg = bfnas::load_config_file(cfg_path.string());
  cfg.validate();
  return cfg;
}

int cmd_screen(const std::string& run, std::optional<int> workers) {
  fs::path run_dir = resolve_out(run);
  bfnas::RunConfig cfg = load_run_config(run_dir);
  if (workers) cfg.search.workers = *workers;
  fs::path archive_path = run_dir / "archive.csv";
  if (!fs::exists(archive_path))
    throw MissingArtifactError("archive not found: " + archive_path.string());
  auto archive = bfnas::read_archive_csv(archive_path);
  if (archive.empty()) throw MissingArtifactError("archive is empty: " + archive_path.string());

  Manifest manifest(run_dir, "screen");
  manifest.set_config(cfg);
  manifest.write();

  std::unique_ptr<bfnas::micronet::Supernet> net;
  std::unique_ptr<bfnas::micronet::SynthDataset> data;
  auto evaluator = make_evaluator(cfg, net, data);
  auto screened = bfnas::secondary_screening(archive, *evaluator, cfg.search.workers);
  bfnas::write_archive_csv(run_dir / "screened.csv", screened);
  manifest.add_output(run_dir / "screened.csv");
  manifest.finish();
  std::cout << "screened " << archive.size() << " -> " << screened.size() << " entries\n";
  return 0;
}

int cmd_report(const std::string& out_dir, const std::vector<std::string>& runs) {
  if (runs.empty()) throw MissingArtifactError("report needs at least one run directory");
  fs::path out = resolve_out(out_dir);
  fs::create_directories(out);
  Manifest manifest(out, "report");
  manifest.set_inputs(runs);
  manifest.write();

  std::ofstream report(out / "report.csv");
  if (!report) throw bfnas::IoError("cannot write report.csv");
  report << "run,mode,generation,archive_size,hv\n";
  std::ofstream front(out / "front.csv");
  if (!front) throw bfnas::IoError("cannot write front.csv");
  front << "mode,genome,f1h,f2h\n";

  for (const auto& run : runs) {
    fs::path run_dir = resolve_out(run);
    bfnas::RunConfig cfg = load_run_config(run_dir);
    std::string mode = bfnas::detail::mode_name(cfg.search.mode);
    fs::path history_path = run_dir / "history.jsonl";
    if (!fs::exists(history_path))
      throw MissingArtifactError("history not found: " + history_path.string());
    for (const auto& h : bfnas::read_history_jsonl(history_path))
      report << run_dir.filename().string() << ',' << mode << ',' << h.generation << ','
             << h.archive_size << ',' << bfnas::format_double(h.hv) << '\n';
    fs::path screened_path = run_dir / "screened.csv";
    if (!fs::exists(screened_path))
      throw MissingArtifactError("screened archive not found (run `screen` first): " +
                                 screened_path.string());
    for (const auto& e : bfnas::read_archive_csv(screened_path))
      front << mode << ',' << '"' << e.genome.to_string() << '"' << ','
            << bfnas::format_optional(e.record.f1h) << ','
            << bfnas::format_optional(e.record.f2h) << '\n';
  }
  if (!report || !front) throw bfnas::IoError("failed writing report outputs");
  manifest.add_output(out / "report.csv");
  manifest.add_output(out / "front.csv");
  manifest.finish();
  return 0;
}

int cmd_final_train(const std::string& run, int index, std::optional<std::uint64_t> seed,
                    const std::string& out_override) {
  fs::path run_dir = resolve_out(run);
  bfnas::RunConfig cfg = load_run_config(run_dir);
  if (seed) cfg.search.master_seed = *seed;
  fs::path screened_path = run_dir / "screened.csv";
  if (!fs::exists(screened_path))
    throw MissingArtifactError("screened archive not found (run `screen` first): " +
                               screened_path.string());
  auto screened = bfnas::read_archive_csv(screened_path);
  if (screened.empty()) throw MissingArtifactError("screened archive is empty");
  if (index < 0 || index >= static_cast<int>(screened.size()))
    throw MissingArtifactError("index " + std::to_string(index) + " out of range 0.." +
                               std::to_string(screened.size() - 1));

  fs::path out = out_override.empty() ? run_dir : resolve_out(out_override);
  fs::create_directories(out);
  Manifest manifest(out, "final_train");
  manifest.set_config(cfg);
  manifest.write();

  const bfnas::Genome genome = screened[static_cast<std::size_t>(index)].genome;
  auto data = cfg.make_dataset();
  auto result =
      bfnas::micronet::train_standalone(genome, data, cfg.net_config(), cfg.train_config(true));
  bfnas::micronet::SubnetView view(result.net, genome);
  std::uint64_t eval_seed = bfnas::mix_seed({cfg.search.master_seed, bfnas::seed_tag("final-eval")});
  double pgd20 = bfnas::micronet::evaluate(
                     view, data.val_images, data.val_labels,
                     bfnas::micronet::AttackSpec::pgd(20, cfg.attack_epsilon, cfg.attack_step),
                     1.0, eval_seed)
                     .adv_error;
  for (double v : {result.metrics.clean_err, result.metrics.fgsm_err, result.metrics.pgd7_err, pgd20})
    require_finite(v, "error rate");

  std::ofstream metrics(out / "metrics.csv");
  if (!metrics) throw bfnas::IoError("cannot write metrics.csv");
  metrics << "genome,clean_err,fgsm_err,pgd7_err,pgd20_err\n";
  metrics << '"' << genome.to_string() << '"' << ',' << bfnas::format_double(result.metrics.clean_err)
          << ',' << bfnas::format_double(result.metrics.fgsm_err) << ','
          << bfnas::format_double(result.metrics.pgd7_err) << ',' << bfnas::format_double(pgd20)
          << '\n';
  if (!metrics) throw bfnas::IoError("failed writing metrics.csv");
  bfnas::write_train_log_csv(out / "final_train_log.csv", result.log);
  manifest.add_output(out / "metrics.csv");
  manifest.add_output(out / "final_train_log.csv");
  manifest.finish();
  std::cout << "clean " << result.metrics.clean_err << " fgsm " << result.metrics.fgsm_err
            << " pgd7 " << result.metrics.pgd7_err << " pgd20 " << pgd20 << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bi-fidelity robust architecture search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bfnas::kToolVersion);

  CommonOpts train_opts, search_opts;
  std::string screen_run, final_run, report_out = "report", final_out;
  std::vector<std::string> report_runs;
  int final_index = 0;
  std::optional<int> screen_workers;
  std::optional<std::uint64_t> final_seed;

  auto add_common = [](CLI::App* cmd, CommonOpts& o, bool search_flags) {
    cmd->add_option("--config", o.config_path, "JSON config file")->required();
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "master seed override");
    cmd->add_option("--workers", o.workers, "parallel evaluator cap");
    if (search_flags) {
      cmd->add_option("--mode", o.mode, "search mode: SH, H, L or S");
      cmd->add_option("--surrogate", o.surrogate, "surrogate head: rbf or mlp");
      cmd->add_option("--evaluator", o.evaluator, "evaluator: synthetic or micronet");
    }
  };

  auto* train = app.add_subcommand("train-supernet", "adversarially train the shared supernet");
  add_common(train, train_opts, false);
  auto* search = app.add_subcommand("search", "run the architecture search");
  add_common(search, search_opts, true);
  auto* screen = app.add_subcommand("screen", "high-fidelity secondary screening of a run archive");
  screen->add_option("--run", screen_run, "run directory")->required();
  screen->add_option("--workers", screen_workers, "parallel evaluator cap");
  auto* report = app.add_subcommand("report", "merge runs into front/hypervolume tables");
  report->add_option("--out", report_out, "output directory");
  report->add_option("runs", report_runs, "run directories")->required();
  auto* final_train = app.add_subcommand("final-train", "train a screened genome from scratch");
  final_train->add_option("--run", final_run, "run directory")->required();
  final_train->add_option("--index", final_index, "row index into screened.csv")->required();
  final_train->add_option("--seed", final_seed, "training seed override");
  final_train->add_option("--out", final_out, "output directory (default: run directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help/--version exit 0, usage errors are config errors
  }

  try {
    if (train->parsed()) return cmd_train_supernet(train_opts);
    if (search->parsed()) return cmd_search(search_opts);
    if (screen->parsed()) return cmd_screen(screen_run, screen_workers);
    if (report->parsed()) return cmd_report(report_out, report_runs);
    if (final_train->parsed()) return cmd_final_train(final_run, final_index, final_seed, final_out);
  } catch (const bfnas::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return 4;
  } catch (const bfnas::micronet::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return 4;
  } catch (const NumericFailureError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
