#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "trndp/design_env.hpp"

namespace trndp {

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { Reset, Step, Close };

const char* command_name(Command c);

struct Request {
  Command cmd = Command::Reset;
  std::optional<NodeId> action;
  std::optional<std::uint64_t> seed;
  std::optional<nlohmann::json> config;
};

Request parse_request(const std::string& line);
std::string serialize_request(const Request& r);

nlohmann::json observation_to_json(const Observation& obs);
Observation observation_from_json(const nlohmann::json& j);

nlohmann::json step_to_json(const StepResult& r);
StepResult step_from_json(const nlohmann::json& j);

nlohmann::json error_to_json(const std::string& message, const std::vector<NodeId>* valid_actions = nullptr);

// Applies reset-time overrides: routes, max_route_nodes, init, hub, alpha,
// simulate, horizon_steps, normalize_rewards, comfort_threshold.
EnvConfig apply_config_overrides(EnvConfig base, const nlohmann::json& overrides);

// One environment per session; responses are one JSON line per request.
class Session {
 public:
  Session(const RoadNetwork& net, const DemandMatrix& demand, EnvConfig base);
  std::string handle(const std::string& line);
  bool closed() const { return closed_; }

 private:
  nlohmann::json dispatch(const Request& req);

  const RoadNetwork& net_;
  const DemandMatrix& demand_;
  EnvConfig base_;
  std::unique_ptr<DesignEnv> env_;
  bool closed_ = false;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // False at end of stream.
  virtual bool read_line(std::string& line) = 0;
  virtual void write_line(const std::string& line) = 0;
};

class StreamTransport : public Transport {
 public:
  StreamTransport(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
  bool read_line(std::string& line) override;
  void write_line(const std::string& line) override;

 private:
  std::istream& in_;
  std::ostream& out_;
};

// A connected Unix-domain stream socket.
class SocketTransport : public Transport {
 public:
  explicit SocketTransport(int fd) : fd_(fd) {}
  ~SocketTransport() override;
  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;
  bool read_line(std::string& line) override;
  void write_line(const std::string& line) override;

 private:
  int fd_;
  std::string buffer_;
};

// Runs requests until close or end of stream. Returns the number handled.
std::size_t serve_session(Transport& transport, Session& session);

// Listens on `path` and serves connections one after another, each with a
// fresh session. Returns after `max_connections` (0 = forever).
void serve_unix_socket(const std::string& path, const RoadNetwork& net, const DemandMatrix& demand,
                       const EnvConfig& base, std::size_t max_connections = 0);

// Client side of the socket transport, for drivers and tests.
std::unique_ptr<SocketTransport> connect_unix_socket(const std::string& path);

} // namespace trndp
