#pragma once

// Command-line front end. Exit codes: 0 success, 1 invalid configuration,
// 2 usage error, 3 any other failure (I/O, corrupt files, divergence).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "escort/checkpoint.hpp"
#include "escort/config_io.hpp"
#include "escort/evaluate.hpp"
#include "escort/render.hpp"
#include "escort/trajectory.hpp"

namespace escort {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFailure = 3;

inline constexpr const char* kTrainLogName = "train_log.jsonl";
inline constexpr const char* kCheckpointName = "checkpoint.bin";
inline constexpr int kTrainLogVersion = 1;
inline constexpr int kEvalReportVersion = 1;

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::string train_log_line(const EpisodeLog& log) {
  nlohmann::json j = {{"episode", log.episode},
                      {"mean_return", log.mean_return},
                      {"cumulative_threat", log.cumulative_threat},
                      {"critic_loss", optional_json(log.critic_loss)},
                      {"actor_q", optional_json(log.actor_q)},
                      {"noise_scale", log.noise_scale},
                      {"updates", log.updates}};
  return j.dump() + "\n";
}

inline nlohmann::json report_json(const EvalReport& r, std::uint64_t digest) {
  return {{"format", "escort-eval-report"},
          {"version", kEvalReportVersion},
          {"controller", r.controller},
          {"seed", r.seed},
          {"config_digest", hex64(digest)},
          {"episodes", r.cumulative_threat.size()},
          {"episode_seeds", r.episode_seeds},
          {"cumulative_threat", r.cumulative_threat},
          {"mean_reward", r.mean_reward},
          {"band_fraction", r.band_fraction},
          {"threat_mean", r.threat_mean},
          {"threat_median", r.threat_median},
          {"threat_stddev", r.threat_stddev},
          {"reward_mean", r.reward_mean},
          {"band_fraction_mean", r.band_fraction_mean}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

struct TrainArgs {
  std::string config;
  std::string out;
  bool quiet = false;
};

inline int run_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = load_run_config(a.config);
  const std::filesystem::path dir = a.out.empty() ? std::filesystem::path(cfg.output_dir) : std::filesystem::path(a.out);
  std::filesystem::create_directories(dir);
  std::ofstream log(dir / kTrainLogName, std::ios::binary | std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + (dir / kTrainLogName).string());
  log << nlohmann::json{{"format", "escort-train-log"},
                        {"version", kTrainLogVersion},
                        {"config_digest", hex64(config_digest(cfg.scenario))},
                        {"seed", cfg.train.seed}}
             .dump()
      << "\n";

  const std::size_t every = std::max<std::size_t>(1, cfg.train.episodes / 20);
  TrainResult result = train(cfg.scenario, cfg.train, [&](const EpisodeLog& e) {
    log << train_log_line(e);
    if (!a.quiet && (e.episode + 1) % every == 0)
      out << "episode " << e.episode + 1 << "/" << cfg.train.episodes << "  threat " << e.cumulative_threat
          << "  return " << e.mean_return << "\n";
  });
  log.close();
  if (!log) throw std::runtime_error("cannot write " + (dir / kTrainLogName).string());
  save_checkpoint(result.bundle, config_digest(cfg.scenario), dir / kCheckpointName);
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
  out << "wrote " << (dir / kTrainLogName).string() << " and " << (dir / kCheckpointName).string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string config;
  std::string checkpoint;
  std::string baseline;
  std::string report;
  std::string trajectory;
  std::optional<std::size_t> episodes;
  std::optional<std::uint64_t> seed;
};

inline int run_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_run_config(a.config);
  const std::uint64_t digest = config_digest(cfg.scenario);
  ControllerFactory factory;
  std::string name;
  if (a.baseline.empty()) {
    if (a.checkpoint.empty()) {
      err << "eval: --checkpoint is required unless --baseline is given\n";
      return kExitUsage;
    }
    LearnerBundle bundle = load_checkpoint(a.checkpoint, digest);
    if (bundle.n_bodyguards != static_cast<std::size_t>(cfg.scenario.n_bodyguards) ||
        bundle.obs_dim != observation_size(cfg.scenario.n_agents(), cfg.scenario.n_landmarks, cfg.scenario.c_dim))
      throw CheckpointError(CheckpointError::Kind::digest, "checkpoint shapes do not fit the configured scenario");
    factory = policy_controller(std::move(bundle));
    name = "policy";
  } else if (a.baseline == "random") {
    factory = random_controller(cfg.scenario.c_dim);
    name = a.baseline;
  } else if (a.baseline == "stationary") {
    factory = stationary_controller(cfg.scenario.c_dim);
    name = a.baseline;
  } else {
    factory = scripted_ring_controller(cfg.scenario);
    name = a.baseline;
  }

  EpisodeTrace first;
  const std::size_t episodes = a.episodes.value_or(cfg.eval.episodes);
  if (episodes == 0) {
    err << "eval: --episodes must be at least 1\n";
    return kExitUsage;
  }
  EvalReport r = evaluate(cfg.scenario, factory, episodes, a.seed.value_or(cfg.eval.seed), name,
                          a.trajectory.empty() ? nullptr : &first);
  const std::filesystem::path report_path =
      a.report.empty() ? std::filesystem::path(cfg.output_dir) / ("eval_" + name + ".json") : std::filesystem::path(a.report);
  write_text(report_path, report_json(r, digest).dump(2) + "\n");
  if (!a.trajectory.empty()) write_trajectory(first, a.trajectory);
  out << name << ": mean cumulative threat " << r.threat_mean << " (median " << r.threat_median << ", sd "
      << r.threat_stddev << ") over " << episodes << " episodes; in-band fraction " << r.band_fraction_mean << "\n";
  out << "wrote " << report_path.string() << "\n";
  return kExitOk;
}

struct RenderArgs {
  std::string trajectory;
  std::string out_dir;
  std::string config;
  std::optional<std::size_t> stride;
};

inline int run_render(const RenderArgs& a, std::ostream& out) {
  RenderStyle style;
  if (!a.config.empty()) style = load_run_config(a.config).render;
  if (a.stride) style.frame_stride = static_cast<int>(std::min<std::size_t>(*a.stride, 1u << 30));
  validate(style);
  const EpisodeTrace trace = read_trajectory(a.trajectory);
  const std::size_t n = render_trace(trace, style, a.out_dir).size();
  out << "wrote " << n << " frames to " << a.out_dir << "\n";
  return kExitOk;
}

}  // namespace detail

/// Runs the `escort` command line. Diagnostics go to `err`, results to `out`.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Multi-agent escort training and evaluation", "escort"};
  app.require_subcommand(1);

  detail::TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train bodyguard policies from a run config");
  train_cmd->add_option("config", train_args.config, "Run config (JSON)")->required();
  train_cmd->add_option("--out", train_args.out, "Output directory (defaults to output_dir in the config)");
  train_cmd->add_flag("--quiet", train_args.quiet, "Suppress progress lines");

  detail::EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint or a baseline controller");
  eval_cmd->add_option("config", eval_args.config, "Run config (JSON)")->required();
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint written by train");
  eval_cmd->add_option("--baseline", eval_args.baseline, "Evaluate a baseline instead of the checkpoint")
      ->check(CLI::IsMember({"random", "stationary", "scripted-ring"}));
  eval_cmd->add_option("--episodes", eval_args.episodes, "Override eval.episodes");
  eval_cmd->add_option("--seed", eval_args.seed, "Override eval.seed");
  eval_cmd->add_option("--report", eval_args.report, "Report path (defaults to <output_dir>/eval_<controller>.json)");
  eval_cmd->add_option("--trajectory", eval_args.trajectory, "Also write the first episode as a trajectory file");

  detail::RenderArgs render_args;
  auto* render_cmd = app.add_subcommand("render", "Render a trajectory file to SVG frames");
  render_cmd->add_option("trajectory", render_args.trajectory, "Trajectory file (JSONL)")->required();
  render_cmd->add_option("--out", render_args.out_dir, "Frame directory")->required();
  render_cmd->add_option("--stride", render_args.stride, "Render every k-th step");
  render_cmd->add_option("--config", render_args.config, "Take the render section (palette, canvas) from a run config");

  std::string validate_path;
  bool dump_defaults = false;
  auto* config_cmd = app.add_subcommand("config", "Inspect run configs");
  config_cmd->require_subcommand(1);
  auto* validate_cmd = config_cmd->add_subcommand("validate", "Check a run config and print it with defaults filled in");
  validate_cmd->add_option("path", validate_path, "Run config (JSON)")->required();
  auto* defaults_cmd = config_cmd->add_subcommand("defaults", "Print the default run config");
  defaults_cmd->callback([&] { dump_defaults = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "escort: " << e.what() << "\n" << "Run with --help for usage.\n";
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return detail::run_train(train_args, out);
    if (eval_cmd->parsed()) return detail::run_eval(eval_args, out, err);
    if (render_cmd->parsed()) return detail::run_render(render_args, out);
    if (validate_cmd->parsed()) {
      const RunConfig cfg = load_run_config(validate_path);
      out << to_json(cfg).dump(2) << "\n";
      err << validate_path << ": ok (scenario digest " << hex64(config_digest(cfg.scenario)) << ")\n";
      return kExitOk;
    }
    if (dump_defaults) {
      out << to_json(RunConfig{}).dump(2) << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "escort: invalid config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "escort: " << e.what() << "\n";
    return kExitFailure;
  }
  err << "escort: no command\n";
  return kExitUsage;
}

}  // namespace escort
