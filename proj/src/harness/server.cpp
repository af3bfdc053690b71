#include "hgrl/harness/server.hpp"

#include <boost/asio/ip/address.hpp>
#include <boost/beast/core/buffers_to_string.hpp>
#include <boost/beast/http/read.hpp>
#include <boost/beast/http/write.hpp>
#include <boost/beast/websocket/rfc6455.hpp>

#include "hgrl/common/error.hpp"

namespace hgrl::harness {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

SessionServer::SessionServer(asio::io_context& ioc, SessionConfig cfg, ServerOptions opt)
    : ioc_(ioc),
      opt_(std::move(opt)),
      acceptor_(ioc),
      timer_(ioc),
      controller_(std::move(cfg), [this](const nlohmann::json& msg) {
        if (active_) send(active_, msg.dump());
      }) {
  if (!(opt_.realtime_factor > 0.0)) throw Error("realtime factor must be positive");
  const double seconds = controller_.world().config().dt / opt_.realtime_factor;
  period_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds));
  const tcp::endpoint ep(asio::ip::make_address(opt_.address), opt_.port);
  beast::error_code ec;
  acceptor_.open(ep.protocol(), ec);
  if (!ec) acceptor_.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acceptor_.bind(ep, ec);
  if (!ec) acceptor_.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error("cannot listen on " + opt_.address + ":" + std::to_string(opt_.port) + ": " + ec.message());
}

unsigned short SessionServer::port() const { return acceptor_.local_endpoint().port(); }

void SessionServer::start() {
  accept();
  timer_.expires_after(period_);
  schedule_tick();
}

void SessionServer::stop() {
  stopped_ = true;
  beast::error_code ec;
  acceptor_.close(ec);
  timer_.cancel();
  if (active_) {
    active_->open = false;
    active_->ws.next_layer().close(ec);
    active_.reset();
    controller_.disconnect();
  }
}

void SessionServer::accept() {
  acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (stopped_) return;
    if (!ec) {
      auto c = std::make_shared<Connection>(std::move(socket));
      http::async_read(c->ws.next_layer(), c->buffer, c->request, [this, c](beast::error_code rec, std::size_t) {
        if (rec || stopped_) return;
        if (!websocket::is_upgrade(c->request) || c->request.target() != "/session") {
          auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, c->request.version());
          res->set(http::field::content_type, "text/plain");
          res->body() = "websocket endpoint is /session\n";
          res->prepare_payload();
          http::async_write(c->ws.next_layer(), *res, [c, res](beast::error_code, std::size_t) {
            beast::error_code ignored;
            c->ws.next_layer().shutdown(tcp::socket::shutdown_both, ignored);
          });
          return;
        }
        handshake(c);
      });
    }
    accept();
  });
}

void SessionServer::handshake(std::shared_ptr<Connection> c) {
  c->ws.async_accept(c->request, [this, c](beast::error_code ec) {
    if (ec || stopped_) return;
    c->buffer.consume(c->buffer.size());
    if (active_) {
      reject(c, "another session is already active");
      return;
    }
    active_ = c;
    controller_.connect();
    if (opt_.autoplay_replay) {
      controller_.handle_message(
          nlohmann::json{{"type", "control"}, {"command", "replay"}, {"id", *opt_.autoplay_replay}}.dump());
    }
    read(c);
  });
}

void SessionServer::reject(std::shared_ptr<Connection> c, const std::string& reason) {
  auto text = std::make_shared<std::string>(error_message(reason).dump());
  c->ws.text(true);
  c->ws.async_write(asio::buffer(*text), [c, text](beast::error_code ec, std::size_t) {
    if (ec) return;
    c->ws.async_close(websocket::close_code::try_again_later, [c](beast::error_code) {});
  });
}

void SessionServer::read(std::shared_ptr<Connection> c) {
  c->ws.async_read(c->buffer, [this, c](beast::error_code ec, std::size_t) {
    if (ec) {
      drop(c);
      return;
    }
    const std::string text = beast::buffers_to_string(c->buffer.data());
    c->buffer.consume(c->buffer.size());
    if (active_ == c) controller_.handle_message(text);
    read(c);
  });
}

void SessionServer::send(const std::shared_ptr<Connection>& c, std::string text) {
  if (!c->open) return;
  c->outbox.push_back(std::move(text));
  if (!c->writing) flush(c);
}

void SessionServer::flush(std::shared_ptr<Connection> c) {
  if (c->outbox.empty() || !c->open) {
    c->writing = false;
    return;
  }
  c->writing = true;
  c->ws.text(true);
  c->ws.async_write(asio::buffer(c->outbox.front()), [this, c](beast::error_code ec, std::size_t) {
    if (ec) {
      drop(c);
      return;
    }
    c->outbox.pop_front();
    flush(c);
  });
}

void SessionServer::drop(const std::shared_ptr<Connection>& c) {
  c->open = false;
  if (active_ != c) return;
  active_.reset();
  controller_.disconnect();
}

void SessionServer::schedule_tick() {
  timer_.async_wait([this](beast::error_code ec) {
    if (ec || stopped_) return;
    if (active_) controller_.tick();
    timer_.expires_at(timer_.expiry() + period_);
    schedule_tick();
  });
}

}  // namespace hgrl::harness
