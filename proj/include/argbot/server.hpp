#pragma once

#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "argbot/config.hpp"
#include "argbot/domain.hpp"
#include "argbot/error.hpp"
#include "argbot/llm_gateway.hpp"
#include "argbot/orchestrator.hpp"

namespace argbot::store {
class SessionStore;
}

namespace argbot::server {

// Client frames:
//   {"type":"join","participant_id":"..."}      first frame on a connection
//   {"type":"post","text":"..."}
//   {"type":"survey","phase":"pre"|"post","answers":{...}}
struct ClientMessage {
  enum class Type { Join, Post, Survey };
  Type type = Type::Join;
  ParticipantId participant;
  std::string text;
  orchestrator::SurveyPhase phase = orchestrator::SurveyPhase::Pre;
  nlohmann::json answers;
};

// Throws ParseError for anything that is not one of the frames above.
ClientMessage parse_client_message(std::string_view frame);

// {"type":"error","code":..,"message":..}
nlohmann::json error_message(Errc code, std::string_view message);
// {"type":"status", ...fields}
nlohmann::json status_message(const nlohmann::json& fields);

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::size_t gateway_threads = 4;
  llm::GatewayPolicy policy;
};

// WebSocket front end for one experiment. Every runtime call happens on the
// single event-loop thread; gateway calls run on a worker pool and post their
// result back. SIGINT/SIGTERM stop the loop after flushing the store.
class Server {
 public:
  // Binds the listening socket; throws Io when the port is unavailable.
  Server(FileConfig config, ArgumentCatalog catalog, std::shared_ptr<llm::Gateway> gateway,
         store::SessionStore* store, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;
  // Blocks until stop() or a termination signal.
  void run();
  // Safe from any thread.
  void stop();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace argbot::server
