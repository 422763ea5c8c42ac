#include "argbot/server.hpp"

#include <chrono>
#include <csignal>
#include <deque>
#include <map>
#include <set>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "argbot/chat.hpp"
#include "argbot/runtime.hpp"
#include "argbot/store.hpp"

namespace argbot::server {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

ClientMessage parse_client_message(std::string_view frame) {
  auto j = nlohmann::json::parse(frame, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::ParseError, "frame is not a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw Error(Errc::ParseError, "frame has no type");
  const auto type = j["type"].get<std::string>();
  ClientMessage m;
  auto need_string = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw Error(Errc::ParseError, type + " frame needs a string '" + key + "'");
    }
    return j[key].get<std::string>();
  };
  if (type == "join") {
    m.type = ClientMessage::Type::Join;
    m.participant = need_string("participant_id");
    if (m.participant.empty()) throw Error(Errc::ParseError, "empty participant_id");
  } else if (type == "post") {
    m.type = ClientMessage::Type::Post;
    m.text = need_string("text");
  } else if (type == "survey") {
    m.type = ClientMessage::Type::Survey;
    try {
      m.phase = orchestrator::parse_survey_phase(need_string("phase"));
    } catch (const Error& e) {
      throw Error(Errc::ParseError, e.what());
    }
    if (!j.contains("answers") || !j["answers"].is_object()) throw Error(Errc::ParseError, "survey frame needs answers");
    m.answers = j["answers"];
  } else {
    throw Error(Errc::ParseError, "unknown frame type: " + type);
  }
  return m;
}

nlohmann::json error_message(Errc code, std::string_view message) {
  return {{"type", "error"}, {"code", to_string(code)}, {"message", message}};
}

nlohmann::json status_message(const nlohmann::json& fields) {
  nlohmann::json out = {{"type", "status"}};
  for (auto it = fields.begin(); it != fields.end(); ++it) out[it.key()] = it.value();
  return out;
}

namespace {

class AsioScheduler : public runtime::Scheduler {
 public:
  explicit AsioScheduler(asio::io_context& ioc) : ioc_(ioc), start_(std::chrono::steady_clock::now()) {}

  Seconds now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void schedule_at(Seconds when, std::function<void()> fn) override {
    auto timer = std::make_shared<asio::steady_timer>(ioc_);
    timer->expires_at(start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(when)));
    timer->async_wait([timer, fn = std::move(fn)](const beast::error_code& ec) {
      if (!ec) fn();
    });
  }

 private:
  asio::io_context& ioc_;
  std::chrono::steady_clock::time_point start_;
};

class Session;

}  // namespace

struct Server::Impl {
  Impl(FileConfig cfg, ArgumentCatalog cat, std::shared_ptr<llm::Gateway> gw, store::SessionStore* st,
       ServerOptions opts);

  void accept();
  void handle(const std::shared_ptr<Session>& session, std::string_view frame);
  void closed(const std::shared_ptr<Session>& session);
  void on_room_event(GroupId group, const chat::RoomEvent& e);
  void send_to(const ParticipantId& id, const nlohmann::json& message);
  void shutdown();
  nlohmann::json health() const;

  struct RoomView {
    std::vector<ParticipantId> members;
    DiscussionRoom timing;  // only discussion_start is used
    std::vector<std::string> wire_log;
  };

  ServerOptions options;
  asio::io_context ioc;
  asio::thread_pool pool;
  tcp::acceptor acceptor;
  asio::signal_set signals;
  AsioScheduler scheduler;
  store::SessionStore* store;
  std::unique_ptr<runtime::ExperimentRuntime> rt;
  std::map<ParticipantId, std::weak_ptr<Session>> bound;
  std::set<std::shared_ptr<Session>> sessions;
  std::map<GroupId, RoomView> rooms;
  bool stopping = false;
};

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void start() { read_request(); }

  void send(std::string frame) {
    if (closed_) return;
    outbox_.push_back(std::move(frame));
    if (outbox_.size() == 1 && upgraded_) write_next();
  }
  void close() {
    if (closed_ || !upgraded_) return;
    ws_.async_close(websocket::close_code::going_away, [self = shared_from_this()](const beast::error_code&) {});
  }

  ParticipantId participant;

 private:
  void read_request() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this()](const beast::error_code& ec, std::size_t) {
                       if (ec) return self->finish();
                       self->on_request();
                     });
  }

  void on_request() {
    if (!websocket::is_upgrade(request_)) {
      // Plain HTTP: a small health document.
      auto res = std::make_shared<http::response<http::string_body>>(http::status::ok, request_.version());
      res->set(http::field::content_type, "application/json");
      res->body() = server_.health().dump();
      res->prepare_payload();
      res->keep_alive(false);
      http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](const beast::error_code&, std::size_t) {
        beast::error_code ignored;
        self->ws_.next_layer().shutdown(tcp::socket::shutdown_both, ignored);
        self->finish();
      });
      return;
    }
    ws_.text(true);
    ws_.async_accept(request_, [self = shared_from_this()](const beast::error_code& ec) {
      if (ec) return self->finish();
      self->upgraded_ = true;
      if (!self->outbox_.empty()) self->write_next();
      self->read_frame();
    });
  }

  void read_frame() {
    ws_.async_read(buffer_, [self = shared_from_this()](const beast::error_code& ec, std::size_t) {
      if (ec) return self->finish();
      const std::string frame = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.handle(self, frame);
      self->read_frame();
    });
  }

  void write_next() {
    ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](const beast::error_code& ec, std::size_t) {
      if (ec) return self->finish();
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write_next();
    });
  }

  void finish() {
    if (closed_) return;
    closed_ = true;
    outbox_.clear();
    server_.closed(shared_from_this());
  }

  websocket::stream<tcp::socket> ws_;
  Server::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::deque<std::string> outbox_;
  bool upgraded_ = false;
  bool closed_ = false;
};

}  // namespace

Server::Impl::Impl(FileConfig cfg, ArgumentCatalog cat, std::shared_ptr<llm::Gateway> gw, store::SessionStore* st,
                   ServerOptions opts)
    : options(std::move(opts)),
      pool(std::max<std::size_t>(1, options.gateway_threads)),
      acceptor(ioc),
      signals(ioc, SIGINT, SIGTERM),
      scheduler(ioc),
      store(st) {
  beast::error_code ec;
  const tcp::endpoint endpoint(asio::ip::make_address(options.address, ec), options.port);
  if (ec) throw Error(Errc::InvalidArgument, "bad listen address: " + options.address);
  acceptor.open(endpoint.protocol(), ec);
  if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(endpoint, ec);
  if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(Errc::Io, "cannot listen on " + options.address + ":" + std::to_string(options.port) + ": " +
                              ec.message());
  }

  runtime::Executor executor = [this](runtime::CoverageWork work, runtime::CoverageDone done) {
    asio::post(pool, [this, work = std::move(work), done = std::move(done)]() mutable {
      auto result = work();
      asio::post(ioc, [done = std::move(done), result = std::move(result)]() mutable { done(std::move(result)); });
    });
  };
  runtime::Listener listener;
  listener.on_room_event = [this](GroupId g, const chat::RoomEvent& e) { on_room_event(g, e); };
  listener.on_status = [this](const ParticipantId& id, const nlohmann::json& s) { send_to(id, status_message(s)); };
  rt = std::make_unique<runtime::ExperimentRuntime>(cfg.experiment, std::move(cat), scheduler, std::move(gw),
                                                    std::move(executor), store, std::move(listener), options.policy);
}

void Server::Impl::accept() {
  acceptor.async_accept([this](const beast::error_code& ec, tcp::socket socket) {
    if (stopping) return;
    if (!ec) {
      auto s = std::make_shared<Session>(std::move(socket), *this);
      sessions.insert(s);
      s->start();
    }
    accept();
  });
}

void Server::Impl::send_to(const ParticipantId& id, const nlohmann::json& message) {
  auto it = bound.find(id);
  if (it == bound.end()) return;
  if (auto s = it->second.lock()) s->send(message.dump());
}

// Runs under the room lock: only bookkeeping and queued writes.
void Server::Impl::on_room_event(GroupId group, const chat::RoomEvent& e) {
  auto& view = rooms[group];
  if (e.kind == chat::EventKind::PhaseChange) {
    if (e.payload.contains("members")) view.members = e.payload["members"].get<std::vector<ParticipantId>>();
    if (e.payload.contains("discussion_start")) view.timing.discussion_start = e.payload["discussion_start"].get<double>();
  }
  auto frame = chat::wire_event(e, view.timing).dump();
  view.wire_log.push_back(frame);
  for (const auto& m : view.members) {
    auto it = bound.find(m);
    if (it == bound.end()) continue;
    if (auto s = it->second.lock()) s->send(frame);
  }
}

void Server::Impl::handle(const std::shared_ptr<Session>& session, std::string_view frame) {
  try {
    const auto msg = parse_client_message(frame);
    if (msg.type == ClientMessage::Type::Join) {
      if (!session->participant.empty()) throw Error(Errc::InvalidArgument, "connection already joined");
      session->participant = msg.participant;
      if (auto old = bound[msg.participant].lock(); old && old != session) {
        old->participant.clear();
        old->close();
      }
      bound[msg.participant] = session;
      // Reconnects get the full room log before anything new.
      if (auto g = rt->group_of(msg.participant)) {
        for (const auto& f : rooms[*g].wire_log) session->send(f);
      }
      rt->join(msg.participant);
      return;
    }
    if (session->participant.empty()) throw Error(Errc::UnknownParticipant, "send a join frame first");
    if (msg.type == ClientMessage::Type::Post) {
      rt->post(session->participant, msg.text);
    } else {
      rt->submit_survey(session->participant, msg.phase, msg.answers);
    }
  } catch (const Error& e) {
    session->send(error_message(e.code(), e.what()).dump());
  } catch (const std::exception& e) {
    spdlog::error("frame from {}: {}", session->participant, e.what());
    session->send(error_message(Errc::InvalidArgument, e.what()).dump());
  }
}

void Server::Impl::closed(const std::shared_ptr<Session>& session) {
  sessions.erase(session);
  if (stopping || session->participant.empty()) return;
  auto it = bound.find(session->participant);
  if (it != bound.end() && it->second.lock() == session) {
    bound.erase(it);
    try {
      rt->disconnect(session->participant);
    } catch (const Error& e) {
      spdlog::warn("disconnect {}: {}", session->participant, e.what());
    }
  }
}

nlohmann::json Server::Impl::health() const {
  return {{"status", "ok"}, {"rooms", rt->rooms_formed()}, {"open_rooms", rt->open_rooms()},
          {"waiting", rt->queue().size()}};
}

void Server::Impl::shutdown() {
  if (stopping) return;
  stopping = true;
  spdlog::info("shutting down: {} open rooms", rt->open_rooms());
  beast::error_code ignored;
  acceptor.close(ignored);
  signals.cancel(ignored);
  for (const auto& s : std::vector<std::shared_ptr<Session>>(sessions.begin(), sessions.end())) s->close();
  if (store) store->flush();
  ioc.stop();
}

Server::Server(FileConfig config, ArgumentCatalog catalog, std::shared_ptr<llm::Gateway> gateway,
               store::SessionStore* store, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(catalog), std::move(gateway), store,
                                   std::move(options))) {}

Server::~Server() {
  impl_->pool.stop();
  impl_->pool.join();
}

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  impl_->signals.async_wait([this](const beast::error_code& ec, int sig) {
    if (ec) return;
    spdlog::info("signal {}", sig);
    impl_->shutdown();
  });
  impl_->accept();
  spdlog::info("listening on {}:{}", impl_->options.address, port());
  impl_->ioc.run();
  impl_->pool.join();
  if (impl_->store) impl_->store->flush();
}

void Server::stop() {
  asio::post(impl_->ioc, [this] { impl_->shutdown(); });
}

}  // namespace argbot::server
