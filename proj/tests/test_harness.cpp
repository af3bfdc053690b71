#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "hgrl/common/atomic_file.hpp"
#include "hgrl/common/error.hpp"
#include "hgrl/common/seeding.hpp"
#include "hgrl/drl/training.hpp"
#include "hgrl/expert/dataset.hpp"
#include "hgrl/expert/scripted_expert.hpp"
#include "hgrl/harness/cli.hpp"
#include "hgrl/harness/config.hpp"
#include "hgrl/harness/server.hpp"
#include "hgrl/harness/session.hpp"

using namespace hgrl;
using namespace hgrl::harness;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Scratch directory removed on scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("hgrl_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& f) const { return path / f; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Recorder {
  std::vector<json> messages;
  SessionController::Emit emit() {
    return [this](const json& j) { messages.push_back(j); };
  }
  std::vector<json> of_type(const std::string& type) const {
    std::vector<json> out;
    for (const auto& m : messages) {
      if (m.at("type") == type) out.push_back(m);
    }
    return out;
  }
};

const json& ego_of(const json& frame) {
  for (const auto& v : frame.at("vehicles")) {
    if (v.at("style") == "ego") return v;
  }
  throw std::runtime_error("no ego in frame");
}

int run(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

const char* kTinyConfig = R"([network]
embed_dim = 6
heads = 2
policy_hidden = 8
fusion_hidden = 5

[expert]
epochs = 2
max_batches_per_epoch = 5

[drl]
episodes = 2
random_steps = 100
explore_steps = 200
learning_starts = 100
update_interval = 10
target_sync_interval = 100
batch_size = 8
checkpoint_every = 1
)";

}  // namespace

TEST_CASE("config: defaults, round trip and unknown keys") {
  std::istringstream empty("");
  const RunConfig d = parse_config(empty);
  CHECK(d.drl.gamma == 0.99);
  CHECK(d.drl.replay_capacity == 1'000'000);
  CHECK(d.expert.batch_size == 32);

  std::istringstream text(
      "[scenario]\naggressive = 3\nseed = 18446744073709551615\n"
      "[network]\nembed_dim = 16\nego_skip = false\nscale_ttc = 12.5\n"
      "[drl]\ngamma = 0.95\nlearning_rate = 1e-3\nfusion = 0\n"
      "[paths]\ndataset = /tmp/some where.jsonl\n");
  const RunConfig c = parse_config(text);
  CHECK(c.scenario.aggressive == 3);
  CHECK(c.scenario.seed == 18446744073709551615ULL);
  CHECK(c.network.embed_dim == 16);
  CHECK_FALSE(c.network.ego_skip);
  CHECK(c.scaling.ttc == 12.5);
  CHECK(c.drl.gamma == 0.95);
  CHECK_FALSE(c.drl.fusion);
  CHECK(c.paths.dataset == "/tmp/some where.jsonl");

  std::ostringstream once;
  write_config(once, c);
  std::istringstream back(once.str());
  std::ostringstream twice;
  write_config(twice, parse_config(back));
  CHECK(once.str() == twice.str());

  std::istringstream unknown("[drl]\ngama = 0.9\n");
  try {
    parse_config(unknown);
    FAIL("unknown key accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("drl.gama") != std::string::npos);
  }
}

TEST_CASE("config: shipped defaults match the built-in ones and doubles round trip exactly") {
  std::ostringstream expected;
  write_config(expected, RunConfig{});
  std::ifstream shipped(std::filesystem::path(HGRL_SOURCE_DIR) / "configs" / "default.ini");
  REQUIRE(shipped);
  std::ostringstream text;
  text << shipped.rdbuf();
  CHECK(text.str() == expected.str());

  RunConfig c;
  c.drl.learning_rate = 0.1 + 0.2;
  c.scaling.ttc = 1.0 / 3.0;
  std::ostringstream out;
  write_config(out, c);
  std::istringstream in(out.str());
  const RunConfig back = parse_config(in);
  CHECK(back.drl.learning_rate == c.drl.learning_rate);
  CHECK(back.scaling.ttc == c.scaling.ttc);
}

TEST_CASE("config: validation rejects bad rates, discount and values") {
  auto rejects = [](const std::string& t) {
    std::istringstream in(t);
    CHECK_THROWS_AS(parse_config(in), Error);
  };
  rejects("[drl]\ngamma = 0\n");
  rejects("[drl]\ngamma = 1.5\n");
  rejects("[drl]\nlearning_rate = 0\n");
  rejects("[drl]\nlearning_rate = -1e-4\n");
  rejects("[expert]\nlearning_rate = 0\n");
  rejects("[drl]\nepsilon_final = 0.9\n");
  rejects("[drl]\nbatch_size = abc\n");
  rejects("[drl]\nepisodes = 3.5\n");
  rejects("[drl]\nfusion = maybe\n");
  rejects("[drl]\ninitial_beta = 1\n");
  rejects("[serve]\nrealtime_factor = 0\n");
  std::istringstream ok("[drl]\ngamma = 1\n");
  CHECK(parse_config(ok).drl.gamma == 1.0);
  CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), Error);
}

TEST_CASE("atomic writes leave the old file intact on failure") {
  TempDir dir("atomic");
  const fs::path target = dir / "metrics.csv";
  write_file_atomic(target, std::string_view("old contents\n"));
  CHECK_THROWS(write_file_atomic(target, [](std::ostream& o) {
    o << "partial";
    throw Error("interrupted");
  }));
  CHECK(slurp(target) == "old contents\n");
  write_file_atomic(target, [](std::ostream& o) { o << "new contents\n"; });
  CHECK(slurp(target) == "new contents\n");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++files;
  CHECK(files == 1);
}

TEST_CASE("session: connect frame and default cruise") {
  Recorder rec;
  SessionConfig cfg;
  cfg.seed = 5;
  SessionController s(cfg, rec.emit());
  s.connect();
  REQUIRE(rec.messages.size() == 1);
  CHECK(rec.messages[0]["type"] == "frame");
  CHECK(rec.messages[0]["step"] == 0);
  CHECK(rec.messages[0]["vehicles"].size() == 7);
  CHECK(rec.messages[0]["recording"] == false);

  // Paused sessions do not advance.
  s.tick();
  CHECK(rec.messages.size() == 1);

  sim::World oracle = sim::spawn_scenario(episode_seed(5, 0), cfg.scenario);
  s.handle_message(R"({"type":"control","command":"start"})");
  for (int i = 0; i < 40; ++i) {
    s.tick();
    oracle.step(sim::EgoAction::Cruise);
    const json& ego = ego_of(rec.messages.back());
    REQUIRE(ego["c_x"].get<double>() == oracle.ego().c_x);
    REQUIRE(ego["c_y"].get<double>() == oracle.ego().c_y);
  }
  CHECK(rec.of_type("frame").size() == 41);
  CHECK(s.world().ego().desired_speed == oracle.ego().desired_speed);
}

TEST_CASE("session: the last action before a tick wins") {
  Recorder rec;
  SessionController s({}, rec.emit());
  sim::World oracle = sim::spawn_scenario(episode_seed(1, 0), {});
  s.handle_message(R"({"type":"control","command":"start"})");
  s.handle_message(R"({"type":"action","code":1})");
  s.handle_message(R"({"type":"action","code":0})");
  s.handle_message(R"({"type":"action","code":0})");
  s.tick();
  oracle.step(sim::EgoAction::Accelerate);
  CHECK(s.world().ego().desired_speed == oracle.ego().desired_speed);
  // The pending action is consumed: the next step cruises.
  s.tick();
  oracle.step(sim::EgoAction::Cruise);
  CHECK(s.world().ego().desired_speed == oracle.ego().desired_speed);
  CHECK(s.world().ego().c_y == oracle.ego().c_y);
}

TEST_CASE("session: malformed messages produce errors and the session continues") {
  Recorder rec;
  SessionController s({}, rec.emit());
  for (const char* bad : {"not json", "[1,2]", R"({"code":1})", R"({"type":"action","code":7})",
                          R"({"type":"action","code":"up"})", R"({"type":"control"})",
                          R"({"type":"control","command":"fly"})", R"({"type":"teleport"})",
                          R"({"type":"control","command":"replay","id":1})",
                          R"({"type":"control","command":"record","enabled":true})"}) {
    rec.messages.clear();
    s.handle_message(bad);
    REQUIRE(rec.messages.size() == 1);
    CHECK(rec.messages[0]["type"] == "error");
    CHECK_FALSE(rec.messages[0]["text"].get<std::string>().empty());
  }
  s.handle_message(R"({"type":"control","command":"start"})");
  rec.messages.clear();
  s.tick();
  CHECK(rec.messages.at(0)["type"] == "frame");
  CHECK(rec.messages.at(0)["step"] == 1);
}

TEST_CASE("session: reset spawns the next seed in the stream") {
  Recorder rec;
  SessionConfig cfg;
  cfg.seed = 9;
  SessionController s(cfg, rec.emit());
  s.handle_message(R"({"type":"control","command":"start"})");
  for (int i = 0; i < 5; ++i) s.tick();
  s.handle_message(R"({"type":"control","command":"reset"})");
  CHECK_FALSE(s.running());
  CHECK(s.episode_index() == 1);
  const sim::World expected = sim::spawn_scenario(episode_seed(9, 1), cfg.scenario);
  CHECK(s.world().step_count() == 0);
  CHECK(s.world().ego().c_x == expected.ego().c_x);
  CHECK(s.world().ego().c_y == expected.ego().c_y);
  CHECK(rec.messages.back()["type"] == "frame");
  CHECK(rec.messages.back()["episode"] == 1);
}

TEST_CASE("session: recording stores one demonstration per step, disconnect discards") {
  TempDir dir("record");
  const fs::path dataset = dir / "human.jsonl";
  Recorder rec;
  SessionConfig cfg;
  cfg.seed = 3;
  cfg.recording = true;
  cfg.dataset = dataset;
  {
    SessionController s(cfg, rec.emit());
    s.handle_message(R"({"type":"control","command":"start"})");
    for (int i = 0; i < 10; ++i) s.tick();
    CHECK(s.pending_records() == 10);
    s.disconnect();
    CHECK(s.pending_records() == 0);
    CHECK_FALSE(fs::exists(dataset));
  }

  SessionController s(cfg, rec.emit());
  s.connect();
  s.handle_message(R"({"type":"control","command":"start"})");
  int guard = 0;
  while (rec.of_type("episode_end").empty() && guard++ < 400) {
    const sim::EgoAction a = expert::scripted_expert(s.world());
    s.handle_message(json{{"type", "action"}, {"code", static_cast<int>(a)}}.dump());
    s.tick();
  }
  const auto ends = rec.of_type("episode_end");
  REQUIRE(ends.size() == 1);
  const int steps = ends[0]["metrics"]["steps"];
  CHECK(ends[0]["recorded"] == steps);
  CHECK(ends[0]["result"] == "goal");
  const expert::Dataset d = expert::load_dataset(dataset);
  CHECK(d.header.source == "human");
  REQUIRE(d.records.size() == static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    CHECK(d.records[i].step == i);
    CHECK(d.records[i].episode_id == 0);
  }
  // Recorded actions reproduce the driven trajectory.
  sim::World replayed = sim::spawn_scenario(episode_seed(3, 0), cfg.scenario);
  for (const auto& r : d.records) {
    CHECK(graph::build_graph(replayed) == r.graph);
    replayed.step(r.action);
  }
  CHECK(replayed.finished());

  // A new session continues the episode numbering of the file.
  Recorder rec2;
  SessionController next(cfg, rec2.emit());
  next.handle_message(R"({"type":"control","command":"start"})");
  while (rec2.of_type("episode_end").empty()) next.tick();
  const expert::Dataset d2 = expert::load_dataset(dataset);
  std::set<int> ids;
  for (const auto& r : d2.records) ids.insert(r.episode_id);
  CHECK(ids == std::set<int>{0, 1});
}

TEST_CASE("session: record toggle applies to a fresh episode") {
  TempDir dir("toggle");
  Recorder rec;
  SessionConfig cfg;
  cfg.dataset = dir / "d.jsonl";
  SessionController s(cfg, rec.emit());
  s.handle_message(R"({"type":"control","command":"start"})");
  s.tick();
  s.handle_message(R"({"type":"control","command":"record","enabled":true})");
  CHECK(s.recording());
  CHECK_FALSE(s.running());
  CHECK(s.world().step_count() == 0);
  CHECK(rec.messages.back()["recording"] == true);
}

TEST_CASE("replay: one frame per logged step, bit-exact and read-only") {
  TempDir dir("replay");
  const fs::path log_path = dir / "traj.jsonl";
  const fs::path dataset = dir / "data.jsonl";
  expert::save_dataset(dataset, expert::collect_scripted(1, 2, {}));
  const std::string before = slurp(dataset);

  std::vector<std::pair<double, double>> truth;
  int steps = 0;
  {
    std::ofstream f(log_path);
    sim::TrajectoryWriter writer(f);
    sim::World w = sim::spawn_scenario(21, {});
    truth.emplace_back(w.ego().c_x, w.ego().c_y);
    const auto m = drl::run_episode(
        w, [](const sim::World& x) { return static_cast<int>(expert::scripted_expert(x)); }, 4, &writer,
        [&](const sim::World& x, int, const sim::StepOutcome&) { truth.emplace_back(x.ego().c_x, x.ego().c_y); });
    steps = m.steps;
  }
  std::ifstream in(log_path);
  const auto frames = replay_frames(sim::read_trajectory(in), 0.1);
  REQUIRE(frames.size() == static_cast<std::size_t>(steps + 1));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(frames[i]["step"] == static_cast<int>(i));
    CHECK(ego_of(frames[i])["c_x"].get<double>() == truth[i].first);
    CHECK(ego_of(frames[i])["c_y"].get<double>() == truth[i].second);
  }

  Recorder rec;
  SessionConfig cfg;
  cfg.replay_log = log_path;
  cfg.recording = true;
  cfg.dataset = dataset;
  SessionController s(cfg, rec.emit());
  s.handle_message(R"({"type":"control","command":"replay","id":99})");
  CHECK(rec.messages.back()["type"] == "error");
  rec.messages.clear();
  s.handle_message(R"({"type":"control","command":"replay","id":4})");
  CHECK(s.replaying());
  for (int i = 0; i < steps + 5; ++i) s.tick();
  const auto got = rec.of_type("frame");
  REQUIRE(got.size() == frames.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == frames[i]);
  const auto ends = rec.of_type("episode_end");
  REQUIRE(ends.size() == 1);
  CHECK(ends[0]["result"] == "replay");
  CHECK(slurp(dataset) == before);
  CHECK_FALSE(s.replaying());
}

TEST_CASE("websocket server: frames, actions, errors and single session") {
  namespace beast = boost::beast;
  namespace websocket = beast::websocket;
  using tcp = boost::asio::ip::tcp;

  boost::asio::io_context ioc;
  ServerOptions opt;
  opt.port = 0;
  opt.realtime_factor = 50.0;
  SessionServer server(ioc, SessionConfig{}, opt);
  server.start();
  std::thread loop([&] { ioc.run(); });
  const std::string port = std::to_string(server.port());

  boost::asio::io_context cio;
  tcp::resolver resolver(cio);
  auto open = [&](const std::string& target) {
    auto ws = std::make_unique<websocket::stream<tcp::socket>>(cio);
    boost::asio::connect(ws->next_layer(), resolver.resolve("127.0.0.1", port));
    ws->handshake("127.0.0.1", target);
    return ws;
  };
  auto receive = [](websocket::stream<tcp::socket>& ws) {
    beast::flat_buffer buf;
    ws.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  };

  CHECK_THROWS(open("/elsewhere"));

  auto client = open("/session");
  json first = receive(*client);
  CHECK(first["type"] == "frame");
  CHECK(first["step"] == 0);

  auto second = open("/session");
  json busy = receive(*second);
  CHECK(busy["type"] == "error");
  beast::flat_buffer scratch;
  CHECK_THROWS(second->read(scratch));

  client->write(boost::asio::buffer(std::string("{oops")));
  CHECK(receive(*client)["type"] == "error");

  client->write(boost::asio::buffer(std::string(R"({"type":"control","command":"start"})")));
  client->write(boost::asio::buffer(std::string(R"({"type":"action","code":0})")));
  int last_step = 0;
  for (int i = 0; i < 5; ++i) {
    const json f = receive(*client);
    REQUIRE(f["type"] == "frame");
    CHECK(f["step"].get<int>() == last_step + 1);
    last_step = f["step"];
  }
  client->close(websocket::close_code::normal);

  boost::asio::post(ioc, [&] { server.stop(); });
  loop.join();
}

TEST_CASE("cli: usage errors and missing inputs") {
  std::string out, err;
  CHECK(run({}, &out, &err) != 0);
  CHECK(run({"fly"}, &out, &err) != 0);
  CHECK(run({"eval"}, &out, &err) != 0);

  TempDir dir("cli_missing");
  const std::string missing = (dir / "nope" / "expert.json").string();
  CHECK(run({"train", "--expert", missing, "--out", (dir / "run").string()}, &out, &err) == 1);
  CHECK(err.find(missing) != std::string::npos);
  CHECK(err.rfind("hgrl: error:", 0) == 0);
  CHECK(std::count(err.begin(), err.end(), '\n') == 1);
  CHECK(run({"eval", "--checkpoint", missing}, &out, &err) == 1);
  CHECK(err.find(missing) != std::string::npos);
}

TEST_CASE("cli: collect, train-expert, train and deterministic eval") {
  TempDir dir("cli_pipeline");
  const std::string cfg = (dir / "tiny.ini").string();
  write_file_atomic(cfg, std::string_view(kTinyConfig));
  const std::string data = (dir / "demos.jsonl").string();
  std::string out, err;

  REQUIRE(run({"collect", "--config", cfg, "--source", "scripted", "--episodes", "10", "--out", data}, &out, &err) ==
          0);
  std::set<int> ids;
  for (const auto& r : expert::load_dataset(data).records) ids.insert(r.episode_id);
  CHECK(ids.size() == 10);

  const std::string expert_path = (dir / "expert.json").string();
  REQUIRE(run({"train-expert", "--config", cfg, "--dataset", data, "--out", expert_path}, &out, &err) == 0);
  CHECK(out.find("held-out accuracy") != std::string::npos);

  const std::string run_dir = (dir / "run").string();
  REQUIRE(run({"train", "--config", cfg, "--expert", expert_path, "--out", run_dir}, &out, &err) == 0);
  CHECK(fs::exists(dir / "run" / "metrics.csv"));
  CHECK(fs::exists(dir / "run" / "policy_ep001.json"));
  CHECK(fs::exists(dir / "run" / "policy_ep002.json"));
  const std::string policy = (dir / "run" / "policy.json").string();
  REQUIRE(fs::exists(policy));

  const std::string e1 = (dir / "eval1").string(), e2 = (dir / "eval2").string();
  const std::string traj = (dir / "traj.jsonl").string();
  REQUIRE(run({"eval", "--config", cfg, "--checkpoint", policy, "--episodes", "3", "--out", e1, "--trajectory", traj},
              &out, &err) == 0);
  REQUIRE(run({"eval", "--config", cfg, "--checkpoint", policy, "--episodes", "3", "--out", e2}, &out, &err) == 0);
  const std::string csv = slurp(dir / "eval1" / "eval_metrics.csv");
  CHECK(csv == slurp(dir / "eval2" / "eval_metrics.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(json::parse(slurp(dir / "eval1" / "eval_summary.json"))["episodes"] == 3);

  const std::string frames = (dir / "frames.jsonl").string();
  REQUIRE(run({"replay", "--config", cfg, "--log", traj, "--episode", "2", "--out", frames}, &out, &err) == 0);
  std::ifstream fin(frames);
  std::string line;
  int n = 0;
  while (std::getline(fin, line)) {
    CHECK(json::parse(line)["episode"] == 2);
    ++n;
  }
  CHECK(n > 0);
}
