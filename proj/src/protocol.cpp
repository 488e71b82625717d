#include "trndp/protocol.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

namespace trndp {

using nlohmann::json;

const char* command_name(Command c) {
  switch (c) {
    case Command::Reset: return "reset";
    case Command::Step: return "step";
    case Command::Close: return "close";
  }
  return "?";
}

Request parse_request(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("request must be a JSON object");
  if (!j.contains("cmd") || !j["cmd"].is_string()) throw ProtocolError("request needs a string 'cmd'");
  Request r;
  const auto cmd = j["cmd"].get<std::string>();
  if (cmd == "reset")
    r.cmd = Command::Reset;
  else if (cmd == "step")
    r.cmd = Command::Step;
  else if (cmd == "close")
    r.cmd = Command::Close;
  else
    throw ProtocolError("unknown cmd '" + cmd + "'");
  if (j.contains("action") && !j["action"].is_null()) {
    if (!j["action"].is_number_integer()) throw ProtocolError("'action' must be an integer node id");
    r.action = j["action"].get<NodeId>();
  }
  if (j.contains("seed") && !j["seed"].is_null()) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      throw ProtocolError("'seed' must be a non-negative integer");
    r.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("config") && !j["config"].is_null()) {
    if (!j["config"].is_object()) throw ProtocolError("'config' must be an object");
    r.config = j["config"];
  }
  if (r.cmd == Command::Step && !r.action) throw ProtocolError("step needs an 'action'");
  return r;
}

std::string serialize_request(const Request& r) {
  json j{{"cmd", command_name(r.cmd)}};
  if (r.action) j["action"] = *r.action;
  if (r.seed) j["seed"] = *r.seed;
  if (r.config) j["config"] = *r.config;
  return j.dump();
}

json observation_to_json(const Observation& obs) {
  json x = json::array();
  for (std::size_t i = 0; i < obs.node_count; ++i) {
    json row = json::array();
    for (std::size_t c = 0; c < kFeatureCount; ++c) row.push_back(obs.feature(i, c));
    x.push_back(std::move(row));
  }
  json edges = json::array();
  for (const auto& [u, v] : obs.edges) edges.push_back({u, v});
  json z = json::array();
  for (std::size_t e = 0; e < obs.edges.size(); ++e)
    z.push_back({obs.edge_features[e * kEdgeFeatureCount], obs.edge_features[e * kEdgeFeatureCount + 1]});
  json mask = json::array();
  for (auto m : obs.mask) mask.push_back(static_cast<int>(m));
  return {{"X", std::move(x)}, {"edges", std::move(edges)}, {"Z", std::move(z)}, {"mask", std::move(mask)}};
}

Observation observation_from_json(const json& j) {
  Observation obs;
  const auto& x = j.at("X");
  obs.node_count = x.size();
  for (const auto& row : x) {
    if (row.size() != kFeatureCount) throw ProtocolError("feature rows must have 16 columns");
    for (const auto& v : row) obs.features.push_back(v.get<double>());
  }
  for (const auto& e : j.at("edges")) {
    if (e.size() != 2) throw ProtocolError("edges must be pairs");
    obs.edges.emplace_back(e[0].get<NodeId>(), e[1].get<NodeId>());
  }
  const auto& z = j.at("Z");
  if (z.size() != obs.edges.size()) throw ProtocolError("Z must have one row per edge");
  for (const auto& row : z) {
    if (row.size() != kEdgeFeatureCount) throw ProtocolError("Z rows must have 2 columns");
    for (const auto& v : row) obs.edge_features.push_back(v.get<double>());
  }
  const auto& mask = j.at("mask");
  if (mask.size() != obs.node_count) throw ProtocolError("mask length must equal the node count");
  for (const auto& m : mask) obs.mask.push_back(static_cast<std::uint8_t>(m.get<int>()));
  return obs;
}

json step_to_json(const StepResult& r) {
  json info{{"psi", r.info.psi},
            {"omega", r.info.omega},
            {"raw_reward", r.info.raw_reward},
            {"shortfall", r.info.shortfall},
            {"route_index", r.info.route_index},
            {"route_nodes", r.info.route_nodes}};
  if (r.info.sigma) info["sigma"] = *r.info.sigma;
  if (r.info.tau) info["tau"] = *r.info.tau;
  return {{"obs", observation_to_json(r.obs)},
          {"reward", r.reward},
          {"route_done", r.route_done},
          {"episode_done", r.episode_done},
          {"info", std::move(info)}};
}

StepResult step_from_json(const json& j) {
  StepResult r;
  r.obs = observation_from_json(j.at("obs"));
  r.reward = j.at("reward").get<double>();
  r.route_done = j.at("route_done").get<bool>();
  r.episode_done = j.at("episode_done").get<bool>();
  const auto& info = j.at("info");
  r.info.psi = info.at("psi").get<double>();
  r.info.omega = info.at("omega").get<double>();
  r.info.raw_reward = info.at("raw_reward").get<double>();
  r.info.shortfall = info.value("shortfall", 0.0);
  r.info.route_index = info.value("route_index", std::size_t{0});
  r.info.route_nodes = info.value("route_nodes", std::size_t{0});
  if (info.contains("sigma")) r.info.sigma = info["sigma"].get<double>();
  if (info.contains("tau")) r.info.tau = info["tau"].get<double>();
  return r;
}

json error_to_json(const std::string& message, const std::vector<NodeId>* valid_actions) {
  json j{{"error", message}};
  if (valid_actions) j["valid_actions"] = *valid_actions;
  return j;
}

EnvConfig apply_config_overrides(EnvConfig cfg, const json& o) {
  for (const auto& [key, value] : o.items()) {
    if (key == "routes")
      cfg.route_count = value.get<int>();
    else if (key == "max_route_nodes")
      cfg.max_route_nodes = value.get<int>();
    else if (key == "init")
      cfg.init = parse_init_scheme(value.get<std::string>());
    else if (key == "hub")
      cfg.hub = value.get<NodeId>();
    else if (key == "alpha")
      cfg.sim.modal_split = value.get<double>();
    else if (key == "simulate")
      cfg.simulate_on_completion = value.get<bool>();
    else if (key == "horizon_steps")
      cfg.sim.horizon_steps = value.get<int>();
    else if (key == "normalize_rewards")
      cfg.reward.normalize = value.get<bool>();
    else if (key == "comfort_threshold")
      cfg.comfort_threshold = value.get<double>();
    else
      throw ProtocolError("unknown config key '" + key + "'");
  }
  cfg.sim.validate();
  return cfg;
}

Session::Session(const RoadNetwork& net, const DemandMatrix& demand, EnvConfig base)
    : net_(net), demand_(demand), base_(std::move(base)) {}

std::string Session::handle(const std::string& line) {
  json response;
  try {
    response = dispatch(parse_request(line));
  } catch (const InvalidActionError& e) {
    response = error_to_json(e.what(), &e.valid_actions());
  } catch (const std::exception& e) {
    response = error_to_json(e.what());
  }
  return response.dump(-1, ' ', false, json::error_handler_t::replace);
}

json Session::dispatch(const Request& req) {
  switch (req.cmd) {
    case Command::Close:
      closed_ = true;
      return {{"closed", true}};
    case Command::Reset: {
      if (req.config || !env_) {
        auto cfg = req.config ? apply_config_overrides(base_, *req.config) : base_;
        env_ = std::make_unique<DesignEnv>(net_, demand_, cfg);
      }
      StepResult r;
      r.obs = env_->reset(req.seed.value_or(0));
      r.info.route_nodes = env_->state().current().size();
      return step_to_json(r);
    }
    case Command::Step:
      if (!env_) throw std::logic_error("step before reset");
      return step_to_json(env_->step(*req.action));
  }
  throw ProtocolError("unhandled command");
}

bool StreamTransport::read_line(std::string& line) {
  if (!std::getline(in_, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void StreamTransport::write_line(const std::string& line) {
  out_ << line << '\n';
  out_.flush();
}

SocketTransport::~SocketTransport() {
  if (fd_ >= 0) ::close(fd_);
}

bool SocketTransport::read_line(std::string& line) {
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    char chunk[65536];
    const auto got = ::read(fd_, chunk, sizeof chunk);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) {
      if (buffer_.empty()) return false;
      line = std::move(buffer_);
      buffer_.clear();
      return true;
    }
    buffer_.append(chunk, static_cast<std::size_t>(got));
  }
}

void SocketTransport::write_line(const std::string& line) {
  std::string data = line + '\n';
  std::size_t sent = 0;
  while (sent < data.size()) {
    const auto n = ::write(fd_, data.data() + sent, data.size() - sent);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw std::runtime_error(std::string("socket write failed: ") + std::strerror(errno));
    sent += static_cast<std::size_t>(n);
  }
}

std::size_t serve_session(Transport& transport, Session& session) {
  std::size_t handled = 0;
  std::string line;
  while (!session.closed() && transport.read_line(line)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    transport.write_line(session.handle(line));
    ++handled;
  }
  return handled;
}

namespace {

sockaddr_un socket_address(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof addr.sun_path) throw std::invalid_argument("socket path too long: " + path);
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  return addr;
}

} // namespace

void serve_unix_socket(const std::string& path, const RoadNetwork& net, const DemandMatrix& demand,
                       const EnvConfig& base, std::size_t max_connections) {
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  auto addr = socket_address(path);
  ::unlink(path.c_str());
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 4) < 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw std::runtime_error("cannot listen on " + path + ": " + err);
  }
  for (std::size_t served = 0; max_connections == 0 || served < max_connections; ++served) {
    const int client = ::accept(fd, nullptr, nullptr);
    if (client < 0) {
      if (errno == EINTR) continue;
      break;
    }
    SocketTransport transport(client);
    Session session(net, demand, base);
    serve_session(transport, session);
  }
  ::close(fd);
  ::unlink(path.c_str());
}

std::unique_ptr<SocketTransport> connect_unix_socket(const std::string& path) {
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  auto addr = socket_address(path);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw std::runtime_error("cannot connect to " + path + ": " + err);
  }
  return std::make_unique<SocketTransport>(fd);
}

} // namespace trndp
