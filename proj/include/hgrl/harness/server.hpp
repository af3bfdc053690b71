#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core/flat_buffer.hpp>
#include <boost/beast/http/message.hpp>
#include <boost/beast/http/string_body.hpp>
#include <boost/beast/websocket/stream.hpp>

#include "hgrl/harness/session.hpp"

namespace hgrl::harness {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  double realtime_factor = 1.0;
  /// Streams this replay episode as soon as a client attaches.
  std::optional<int> autoplay_replay;
};

/// Websocket endpoint at /session wrapping one SessionController. Everything
/// runs on the io_context's thread, which serialises client messages and
/// simulation ticks. A second client is told the session is busy and closed.
class SessionServer {
 public:
  SessionServer(boost::asio::io_context& ioc, SessionConfig cfg, ServerOptions opt);

  /// Bound port, useful when 0 was requested.
  unsigned short port() const;
  void start();
  void stop();
  SessionController& controller() { return controller_; }

 private:
  using Socket = boost::asio::ip::tcp::socket;
  using WebSocket = boost::beast::websocket::stream<Socket>;
  struct Connection {
    explicit Connection(Socket s) : ws(std::move(s)) {}
    WebSocket ws;
    boost::beast::flat_buffer buffer;
    boost::beast::http::request<boost::beast::http::string_body> request;
    std::deque<std::string> outbox;
    bool writing = false;
    bool open = true;
  };

  void accept();
  void handshake(std::shared_ptr<Connection> c);
  void reject(std::shared_ptr<Connection> c, const std::string& reason);
  void read(std::shared_ptr<Connection> c);
  void send(const std::shared_ptr<Connection>& c, std::string text);
  void flush(std::shared_ptr<Connection> c);
  void drop(const std::shared_ptr<Connection>& c);
  void schedule_tick();

  boost::asio::io_context& ioc_;
  ServerOptions opt_;
  boost::asio::ip::tcp::acceptor acceptor_;
  boost::asio::steady_timer timer_;
  std::chrono::steady_clock::duration period_;
  SessionController controller_;
  std::shared_ptr<Connection> active_;
  bool stopped_ = false;
};

}  // namespace hgrl::harness
