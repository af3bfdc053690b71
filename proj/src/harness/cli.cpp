#include "hgrl/harness/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <boost/asio/signal_set.hpp>

#include "hgrl/common/atomic_file.hpp"
#include "hgrl/common/error.hpp"
#include "hgrl/drl/training.hpp"
#include "hgrl/expert/training.hpp"
#include "hgrl/harness/config.hpp"
#include "hgrl/harness/server.hpp"
#include "hgrl/nn/checkpoint.hpp"

namespace hgrl::harness {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::string source = "scripted";
  std::string checkpoint;
  std::string out;
  std::string dataset;
  std::string expert;
  std::string trajectory;
  std::string record;
  std::string log;
  std::optional<int> episode;
  std::optional<int> port;
  std::optional<double> realtime_factor;
  bool fusion_off = false;
};

RunConfig resolve_config(const Options& o) {
  if (!o.config.empty()) return load_config(o.config);
  RunConfig c;
  validate(c);
  return c;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw Error(what + " path is empty");
  if (!fs::exists(path)) throw Error(what + " not found: " + path);
}

int serve_until_signal(SessionConfig session, const ServerOptions& server_opt, std::ostream& out) {
  boost::asio::io_context ioc;
  SessionServer server(ioc, std::move(session), server_opt);
  server.start();
  boost::asio::signal_set signals(ioc, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int) { server.stop(); ioc.stop(); });
  out << "listening on ws://" << server_opt.address << ':' << server.port() << "/session" << std::endl;
  ioc.run();
  return 0;
}

ServerOptions server_options(const RunConfig& cfg, const Options& o) {
  ServerOptions s;
  s.port = static_cast<unsigned short>(o.port.value_or(cfg.serve.port));
  s.realtime_factor = o.realtime_factor.value_or(cfg.serve.realtime_factor);
  if (!(s.realtime_factor > 0.0)) throw Error("--realtime-factor must be positive");
  return s;
}

int cmd_collect(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const std::string path = o.out.empty() ? cfg.paths.dataset : o.out;
  const std::uint64_t seed = o.seed.value_or(cfg.scenario.seed);
  if (o.source == "human") {
    SessionConfig s;
    s.scenario = cfg.scenario;
    s.seed = seed;
    s.slots = cfg.network.slots;
    s.recording = true;
    s.dataset = path;
    s.scaling = cfg.scaling;
    out << "recording human demonstrations to " << path << std::endl;
    return serve_until_signal(std::move(s), server_options(cfg, o), out);
  }
  expert::CollectConfig cc;
  cc.scenario = cfg.scenario;
  cc.slots = cfg.network.slots;
  cc.scaling = cfg.scaling;
  const int episodes = o.episodes.value_or(cfg.collect_episodes);
  if (episodes <= 0) throw Error("--episodes must be positive");
  const expert::Dataset d = expert::collect_scripted(episodes, seed, cc);
  expert::save_dataset(path, d);
  out << "wrote " << d.records.size() << " demonstrations from " << episodes << " episodes to " << path << '\n';
  return 0;
}

int cmd_train_expert(const Options& o, std::ostream& out) {
  RunConfig cfg = resolve_config(o);
  const std::string dataset = o.dataset.empty() ? cfg.paths.dataset : o.dataset;
  const std::string path = o.out.empty() ? cfg.paths.expert : o.out;
  require_file(dataset, "dataset");
  if (o.seed) cfg.expert.seed = *o.seed;
  const expert::Dataset d = expert::load_dataset(dataset);
  if (d.header.slots != cfg.network.slots) throw Error("dataset slot count differs from network.slots");
  const auto split = expert::split_dataset(d.records);
  if (split.train.empty()) throw Error("dataset has no training episodes");
  const nn::Architecture arch = expert::expert_architecture(cfg.network);
  const auto params = expert::train_expert(split.train, arch, d.header.scaling, cfg.expert, [&](const expert::EpochStats& s) {
    if (s.epoch % 10 == 0 || s.epoch == cfg.expert.epochs) {
      out << "epoch " << s.epoch << " loss " << s.mean_loss << " batch accuracy " << s.batch_accuracy << std::endl;
    }
  });
  nn::Checkpoint c;
  c.params = params;
  c.scaling = d.header.scaling;
  c.seed = cfg.expert.seed;
  c.step = cfg.expert.epochs;
  nn::save_checkpoint(path, c);
  out << "train records " << split.train.size() << ", held-out records " << split.test.size() << '\n';
  if (!split.test.empty()) {
    out << "held-out accuracy " << expert::eval_expert_accuracy(params, split.test, d.header.scaling) << '\n';
  }
  out << "wrote " << path << '\n';
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig cfg = resolve_config(o);
  const std::string expert_path = o.expert.empty() ? cfg.paths.expert : o.expert;
  require_file(expert_path, "expert checkpoint");
  const nn::Checkpoint expert = nn::load_checkpoint(expert_path);
  if (expert.params.arch.fusion) throw Error("expert checkpoint has a fusion head: " + expert_path);

  drl::TrainSetup setup;
  setup.scenario = cfg.scenario;
  setup.arch = cfg.network;
  setup.arch.slots = expert.params.arch.slots;
  setup.scaling = expert.scaling;
  setup.drl = cfg.drl;
  if (o.episodes) setup.drl.episodes = *o.episodes;
  if (setup.drl.episodes <= 0) throw Error("--episodes must be positive");
  if (o.fusion_off) setup.drl.fusion = false;
  setup.seed = o.seed.value_or(cfg.scenario.seed);
  setup.expert = expert.params;
  const fs::path dir = o.out.empty() ? fs::path(cfg.paths.checkpoints) : fs::path(o.out);
  setup.checkpoint_dir = dir;
  setup.metrics_path = o.out.empty() ? fs::path(cfg.paths.metrics) : dir / "metrics.csv";

  const auto result = drl::train(setup, [&](const drl::EpisodeMetrics& m) {
    out << "episode " << m.episode << ' ' << drl::outcome_name(m.outcome) << " reward " << m.reward << " steps "
        << m.steps << " epsilon " << m.epsilon << std::endl;
  });
  const fs::path final_path = dir / "policy.json";
  nn::save_checkpoint(final_path, result.checkpoint);
  out << "trained " << result.steps << " steps, " << result.losses.size() << " updates; wrote " << final_path.string()
      << " and " << setup.metrics_path.string() << '\n';
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  require_file(o.checkpoint, "checkpoint");
  const nn::Checkpoint ckpt = nn::load_checkpoint(o.checkpoint);
  const int n = o.episodes.value_or(cfg.drl.test_episodes);
  const std::uint64_t seed = o.seed.value_or(cfg.eval_seed);
  const fs::path dir = o.out.empty() ? fs::path("eval") : fs::path(o.out);
  const nn::FusionMode mode = o.fusion_off ? nn::FusionMode::ForceGrl : nn::FusionMode::Learned;

  drl::EvalResult r;
  if (o.trajectory.empty()) {
    r = drl::evaluate(ckpt, cfg.scenario, n, seed, mode);
  } else {
    std::ostringstream log;
    sim::TrajectoryWriter writer(log);
    r = drl::evaluate(ckpt, cfg.scenario, n, seed, mode, &writer);
    write_file_atomic(o.trajectory, log.str());
  }
  write_file_atomic(dir / "eval_metrics.csv", [&](std::ostream& f) { drl::write_metrics_csv(f, r.episodes, false); });
  write_file_atomic(dir / "eval_summary.json", [&](std::ostream& f) { drl::write_summary_json(f, r.summary); });
  drl::write_summary_json(out, r.summary);
  return 0;
}

int cmd_serve(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  SessionConfig s;
  s.scenario = cfg.scenario;
  s.seed = o.seed.value_or(cfg.scenario.seed);
  s.slots = cfg.network.slots;
  s.scaling = cfg.scaling;
  s.dataset = o.record.empty() ? fs::path(cfg.paths.dataset) : fs::path(o.record);
  s.recording = !o.record.empty();
  s.replay_log = o.log;
  return serve_until_signal(std::move(s), server_options(cfg, o), out);
}

int cmd_replay(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  require_file(o.log, "trajectory log");
  if (o.port) {
    SessionConfig s;
    s.scenario = cfg.scenario;
    s.replay_log = o.log;
    ServerOptions opt = server_options(cfg, o);
    opt.autoplay_replay = o.episode.value_or(1);
    return serve_until_signal(std::move(s), opt, out);
  }
  std::ifstream in(o.log);
  const auto frames = replay_frames(sim::read_trajectory(in), cfg.scenario.dt, o.episode);
  if (frames.empty()) throw Error("no frames to replay in " + o.log);
  auto write = [&](std::ostream& f) {
    for (const auto& fr : frames) f << fr.dump() << '\n';
  };
  if (o.out.empty() || o.out == "-") {
    write(out);
  } else {
    write_file_atomic(o.out, write);
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heterogeneous graph RL for unsignalized left turns", "hgrl"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* c) {
    c->add_option("--config", o.config, "INI run configuration")->check(CLI::ExistingFile);
    c->add_option("--seed", o.seed, "base seed");
  };

  auto* collect = app.add_subcommand("collect", "record demonstrations");
  common(collect);
  collect->add_option("--source", o.source, "scripted or human")->check(CLI::IsMember({"scripted", "human"}));
  collect->add_option("--episodes", o.episodes, "number of scripted episodes");
  collect->add_option("--out", o.out, "dataset path");
  collect->add_option("--port", o.port, "websocket port for human collection");
  collect->add_option("--realtime-factor", o.realtime_factor, "simulation speed relative to wall time");

  auto* train_expert = app.add_subcommand("train-expert", "fit the expert model to demonstrations");
  common(train_expert);
  train_expert->add_option("--dataset", o.dataset, "demonstration dataset");
  train_expert->add_option("--out", o.out, "expert checkpoint path");

  auto* train = app.add_subcommand("train", "train the policy with double DQN");
  common(train);
  train->add_option("--expert", o.expert, "expert checkpoint");
  train->add_option("--episodes", o.episodes, "training episodes");
  train->add_option("--out", o.out, "output directory for checkpoints and metrics");
  train->add_flag("--fusion-off", o.fusion_off, "ignore the expert (fusion weight fixed at 1)");

  auto* eval = app.add_subcommand("eval", "greedy evaluation of a policy checkpoint");
  common(eval);
  eval->add_option("--checkpoint", o.checkpoint, "policy checkpoint")->required();
  eval->add_option("--episodes", o.episodes, "evaluation episodes");
  eval->add_option("--out", o.out, "output directory (default ./eval)");
  eval->add_option("--trajectory", o.trajectory, "write a trajectory log");
  eval->add_flag("--fusion-off", o.fusion_off, "act on the policy head alone");

  auto* serve = app.add_subcommand("serve", "live driving session over websocket");
  common(serve);
  serve->add_option("--port", o.port, "listening port");
  serve->add_option("--realtime-factor", o.realtime_factor, "simulation speed relative to wall time");
  serve->add_option("--record", o.record, "append driven episodes to this dataset");
  serve->add_option("--log", o.log, "trajectory log available to replay controls");

  auto* replay = app.add_subcommand("replay", "stream a trajectory log as session frames");
  common(replay);
  replay->add_option("--log", o.log, "trajectory log")->required();
  replay->add_option("--episode", o.episode, "only this episode");
  replay->add_option("--out", o.out, "write frames as JSON lines (default stdout)");
  replay->add_option("--port", o.port, "serve frames over websocket instead");
  replay->add_option("--realtime-factor", o.realtime_factor, "playback speed");

  std::vector<std::string> argv_store{"hgrl"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (collect->parsed()) return cmd_collect(o, out);
    if (train_expert->parsed()) return cmd_train_expert(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (serve->parsed()) return cmd_serve(o, out);
    if (replay->parsed()) return cmd_replay(o, out);
  } catch (const std::exception& e) {
    err << "hgrl: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace hgrl::harness
