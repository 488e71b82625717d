#include <filesystem>
#include <random>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "doctest.h"
#include "fixtures.hpp"
#include "trndp/protocol.hpp"

using namespace trndp;
using nlohmann::json;

namespace {

struct World {
  RoadNetwork net = fixtures::grid_graph(3, 4);
  DemandMatrix demand;
  EnvConfig cfg;
  World() {
    std::mt19937_64 rng(6);
    demand = fixtures::random_demand(rng, 12, 0.4, 25);
    cfg.route_count = 2;
    cfg.max_route_nodes = 4;
    cfg.init = InitScheme::Random;
    cfg.simulate_on_completion = false;
  }
};

NodeId first_valid(const json& obs) {
  const auto& mask = obs.at("mask");
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i].get<int>() == 1) return static_cast<NodeId>(i);
  return -1;
}

} // namespace

TEST_CASE("request round-trip") {
  Request r;
  r.cmd = Command::Step;
  r.action = 7;
  const auto back = parse_request(serialize_request(r));
  CHECK(back.cmd == Command::Step);
  CHECK(back.action == 7);
  Request reset;
  reset.seed = 12;
  reset.config = json{{"routes", 3}};
  const auto rb = parse_request(serialize_request(reset));
  CHECK(rb.cmd == Command::Reset);
  CHECK(rb.seed == 12u);
  CHECK(rb.config->at("routes") == 3);
}

TEST_CASE("malformed requests") {
  CHECK_THROWS_AS(parse_request("{not json"), ProtocolError);
  CHECK_THROWS_AS(parse_request("[]"), ProtocolError);
  CHECK_THROWS_AS(parse_request(R"({"cmd": "jump"})"), ProtocolError);
  CHECK_THROWS_AS(parse_request(R"({"cmd": "step"})"), ProtocolError);
  CHECK_THROWS_AS(parse_request(R"({"cmd": "step", "action": "3"})"), ProtocolError);
  CHECK_THROWS_AS(parse_request(R"({"cmd": "reset", "seed": -1})"), ProtocolError);
  CHECK_THROWS_AS(parse_request(R"({"cmd": "reset", "config": 4})"), ProtocolError);
}

TEST_CASE("observation and step messages round-trip") {
  World w;
  DesignEnv env(w.net, w.demand, w.cfg);
  const auto obs = env.reset(3);
  const auto j = observation_to_json(obs);
  CHECK(j.at("X").size() == 12);
  CHECK(j.at("X")[0].size() == kFeatureCount);
  CHECK(j.at("edges").size() == obs.edges.size());
  CHECK(j.at("Z")[0].size() == kEdgeFeatureCount);
  const auto back = observation_from_json(json::parse(j.dump()));
  CHECK(back.features == obs.features);
  CHECK(back.edges == obs.edges);
  CHECK(back.edge_features == obs.edge_features);
  CHECK(back.mask == obs.mask);

  const auto step = env.step(env.state().candidates().front());
  const auto sj = step_to_json(step);
  CHECK_FALSE(sj.at("info").contains("sigma"));
  const auto sb = step_from_json(json::parse(sj.dump()));
  CHECK(sb.reward == step.reward);
  CHECK(sb.info.psi == step.info.psi);
  CHECK(sb.info.omega == step.info.omega);
  CHECK(sb.route_done == step.route_done);

  auto bad = j;
  bad["mask"].erase(0);
  CHECK_THROWS_AS(observation_from_json(bad), ProtocolError);
}

TEST_CASE("config overrides") {
  const EnvConfig base;
  const auto cfg = apply_config_overrides(
      base, json{{"routes", 5}, {"max_route_nodes", 9}, {"init", "random"}, {"alpha", 0.3}, {"simulate", false},
                 {"horizon_steps", 800}, {"normalize_rewards", false}, {"hub", 2}, {"comfort_threshold", 0.8}});
  CHECK(cfg.route_count == 5);
  CHECK(cfg.max_route_nodes == 9);
  CHECK(cfg.init == InitScheme::Random);
  CHECK(cfg.sim.modal_split == 0.3);
  CHECK_FALSE(cfg.simulate_on_completion);
  CHECK(cfg.sim.horizon_steps == 800);
  CHECK_FALSE(cfg.reward.normalize);
  CHECK(cfg.hub == 2);
  CHECK(cfg.comfort_threshold == 0.8);
  CHECK_THROWS_AS(apply_config_overrides(base, json{{"learning_rate", 1}}), ProtocolError);
  CHECK_THROWS(apply_config_overrides(base, json{{"horizon_steps", 0}}));
}

TEST_CASE("session: scripted episode mirrors the environment") {
  World w;
  Session session(w.net, w.demand, w.cfg);
  DesignEnv env(w.net, w.demand, w.cfg);

  auto step_err = json::parse(session.handle(R"({"cmd": "step", "action": 0})"));
  CHECK(step_err.contains("error"));

  auto reply = json::parse(session.handle(R"({"cmd": "reset", "seed": 5})"));
  auto obs = env.reset(5);
  CHECK(reply.at("obs") == observation_to_json(obs));

  int steps = 0;
  while (env.active()) {
    const NodeId a = first_valid(reply.at("obs"));
    REQUIRE(a >= 0);
    reply = json::parse(session.handle(serialize_request({Command::Step, a, std::nullopt, std::nullopt})));
    const auto expected = step_to_json(env.step(a));
    CHECK(reply == json::parse(expected.dump()));
    ++steps;
  }
  CHECK(reply.at("episode_done") == true);
  CHECK(steps >= 2);
  auto over = json::parse(session.handle(R"({"cmd": "step", "action": 1})"));
  CHECK(over.contains("error"));
  CHECK(json::parse(session.handle(R"({"cmd": "close"})")).at("closed") == true);
  CHECK(session.closed());
}

TEST_CASE("session: invalid actions report the valid set and keep the state") {
  World w;
  auto cfg = w.cfg;
  cfg.init = InitScheme::TransitCenter;
  cfg.hub = 0;
  Session session(w.net, w.demand, cfg);
  session.handle(R"({"cmd": "reset"})");
  const auto err = json::parse(session.handle(R"({"cmd": "step", "action": 11})"));
  REQUIRE(err.contains("error"));
  CHECK(err.at("valid_actions") == json::array({1, 4}));
  const auto ok = json::parse(session.handle(R"({"cmd": "step", "action": 4})"));
  CHECK_FALSE(ok.contains("error"));
  CHECK(ok.at("info").at("route_nodes") == 2);
  const auto garbage = json::parse(session.handle("hello"));
  CHECK(garbage.contains("error"));
}

TEST_CASE("session: reset config rebuilds the environment") {
  World w;
  Session session(w.net, w.demand, w.cfg);
  session.handle(R"({"cmd": "reset", "config": {"routes": 1, "max_route_nodes": 2}})");
  const auto r = json::parse(session.handle(R"({"cmd": "reset", "seed": 0})"));
  const auto a = first_valid(r.at("obs"));
  const auto done = json::parse(session.handle(serialize_request({Command::Step, a, std::nullopt, std::nullopt})));
  CHECK(done.at("route_done") == true);
  CHECK(done.at("episode_done") == true);
  CHECK(json::parse(session.handle(R"({"cmd": "reset", "config": {"bogus": 1}})")).contains("error"));
}

TEST_CASE("transcript replay over a stream is deterministic") {
  World w;
  auto run = [&](const std::string& script) {
    std::istringstream in(script);
    std::ostringstream out;
    StreamTransport t(in, out);
    Session s(w.net, w.demand, w.cfg);
    const auto handled = serve_session(t, s);
    return std::make_pair(handled, out.str());
  };
  // Drive once to learn a valid action sequence, then replay it.
  Session probe(w.net, w.demand, w.cfg);
  std::string script = R"({"cmd": "reset", "seed": 9})" "\n";
  auto reply = json::parse(probe.handle(R"({"cmd": "reset", "seed": 9})"));
  while (!reply.value("episode_done", false)) {
    const auto line = serialize_request({Command::Step, first_valid(reply.at("obs")), std::nullopt, std::nullopt});
    script += line + "\n";
    reply = json::parse(probe.handle(line));
  }
  script += R"({"cmd": "close"})" "\n" R"({"cmd": "reset"})" "\n";
  const auto a = run(script);
  const auto b = run(script);
  CHECK(a.second == b.second);
  const auto lines = std::count(a.second.begin(), a.second.end(), '\n');
  CHECK(static_cast<std::size_t>(lines) == a.first);
  // Nothing is served after close.
  CHECK(a.second.find("\"closed\":true") != std::string::npos);
  CHECK(a.second.substr(a.second.size() - 16).find("closed") != std::string::npos);
}

TEST_CASE("unix socket transport") {
  World w;
  const auto path = (std::filesystem::temp_directory_path() / ("trndp_test_" + std::to_string(::getpid()) + ".sock")).string();
  std::thread server([&] { serve_unix_socket(path, w.net, w.demand, w.cfg, 1); });
  std::unique_ptr<SocketTransport> client;
  for (int attempt = 0; attempt < 200 && !client; ++attempt) {
    try {
      client = connect_unix_socket(path);
    } catch (const std::exception&) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  REQUIRE(client);
  client->write_line(R"({"cmd": "reset", "seed": 1})");
  std::string line;
  REQUIRE(client->read_line(line));
  const auto reply = json::parse(line);
  CHECK(reply.at("obs").at("X").size() == 12);
  client->write_line(serialize_request({Command::Step, first_valid(reply.at("obs")), std::nullopt, std::nullopt}));
  REQUIRE(client->read_line(line));
  CHECK(json::parse(line).contains("reward"));
  client->write_line(R"({"cmd": "close"})");
  REQUIRE(client->read_line(line));
  CHECK(json::parse(line).at("closed") == true);
  server.join();
  std::filesystem::remove(path);
}

TEST_CASE("scripted full-size episode ends exactly once") {
  World w;
  Session session(w.net, w.demand, w.cfg);
  auto reply = json::parse(session.handle(R"({"cmd": "reset", "seed": 2, "config": {"routes": 16, "max_route_nodes": 14}})"));
  CHECK(reply.at("obs").at("mask").size() == 12);
  // Always take the highest admissible node id.
  int done = 0, steps = 0;
  for (; steps < 300; ++steps) {
    const auto& mask = reply.at("obs").at("mask");
    NodeId a = -1;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i] == 1) a = static_cast<NodeId>(i);
    if (a < 0) break;
    reply = json::parse(session.handle(serialize_request({Command::Step, a, std::nullopt, std::nullopt})));
    REQUIRE_FALSE(reply.contains("error"));
    if (reply.at("episode_done") == true) {
      ++done;
      break;
    }
  }
  CHECK(done == 1);
  CHECK(steps + 1 <= 224);
  CHECK(json::parse(session.handle(R"({"cmd": "step", "action": 0})")).contains("error"));
}
