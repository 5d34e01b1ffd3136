#include "mrtele/bridge/server.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <sys/socket.h>

#include <atomic>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

namespace mrtele::bridge {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

constexpr auto kReplyTimeout = std::chrono::seconds(5);
constexpr auto kPollInterval = std::chrono::milliseconds(50);

std::string path_of(beast::string_view target) {
  const std::string t(target);
  const auto q = t.find('?');
  return q == std::string::npos ? t : t.substr(0, q);
}

}  // namespace

struct BridgeServer::Impl {
  StateSource& source;
  ServerOptions options;
  net::io_context ioc;
  std::unique_ptr<tcp::acceptor> acceptor;
  std::uint16_t bound_port = 0;
  std::atomic<bool> stopping{false};
  std::thread accept_thread;

  std::mutex mu;
  std::set<int> live_fds;
  std::vector<std::thread> workers;

  Impl(StateSource& s, ServerOptions o) : source(s), options(std::move(o)) {}

  void track(int fd) {
    std::lock_guard lock(mu);
    live_fds.insert(fd);
  }
  void untrack(int fd) {
    std::lock_guard lock(mu);
    live_fds.erase(fd);
  }

  void accept_loop() {
    while (!stopping.load()) {
      tcp::socket socket(ioc);
      beast::error_code ec;
      acceptor->accept(socket, ec);
      if (stopping.load()) break;
      if (ec) continue;
      std::lock_guard lock(mu);
      workers.emplace_back([this, s = std::move(socket)]() mutable { serve(std::move(s)); });
    }
  }

  void serve(tcp::socket socket) {
    const int fd = socket.native_handle();
    track(fd);
    try {
      beast::flat_buffer buffer;
      http::request<http::string_body> req;
      http::read(socket, buffer, req);
      const std::string path = path_of(req.target());
      if (websocket::is_upgrade(req)) {
        if (path == "/ws") {
          websocket::stream<tcp::socket> ws(std::move(socket));
          ws.accept(req);
          run_websocket(ws, fd);
        } else {
          respond(socket, req, http::status::not_found, R"({"error":"websocket endpoint is /ws"})");
        }
      } else if (path == "/healthz" && req.method() == http::verb::get) {
        respond(socket, req, http::status::ok, encode_health(source.health()));
      } else {
        respond(socket, req, http::status::not_found, R"({"error":"not found"})");
      }
    } catch (const std::exception&) {
      // Client went away mid-request; nothing to report back.
    }
    untrack(fd);
  }

  static void respond(tcp::socket& socket, const http::request<http::string_body>& req, http::status status,
                      std::string body) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::content_type, "application/json");
    res.keep_alive(false);
    res.body() = std::move(body);
    res.prepare_payload();
    beast::error_code ec;
    http::write(socket, res, ec);
    socket.shutdown(tcp::socket::shutdown_both, ec);
  }

  void run_websocket(websocket::stream<tcp::socket>& ws, int fd) {
    auto sub = source.subscribe();
    std::mutex write_mu;
    std::atomic<bool> open{true};
    ws.text(true);

    auto send = [&](const std::string& text) {
      std::lock_guard lock(write_mu);
      ws.write(net::buffer(text));
    };

    std::thread writer([&] {
      try {
        while (open.load() && !stopping.load()) {
          if (auto msg = sub->next(kPollInterval)) send(encode_state(*msg));
        }
      } catch (const std::exception&) {
        ::shutdown(fd, SHUT_RDWR);
      }
      open = false;
    });

    try {
      while (open.load()) {
        beast::flat_buffer in;
        ws.read(in);
        const std::string text = beast::buffers_to_string(in.data());
        Reply reply;
        try {
          auto fut = source.submit(parse_command(text));
          if (fut.wait_for(kReplyTimeout) == std::future_status::ready) {
            reply = fut.get();
          } else {
            reply = make_reject("", "simulation did not reach a tick boundary in time");
          }
        } catch (const ProtocolError& e) {
          reply = make_reject("", e.what());
        }
        send(encode_reply(reply));
      }
    } catch (const std::exception&) {
      // Read failure means the client closed or the server is stopping.
    }
    open = false;
    sub->close();
    writer.join();
    untrack(fd);
  }
};

BridgeServer::BridgeServer(StateSource& source, ServerOptions options)
    : impl_(std::make_unique<Impl>(source, std::move(options))) {}

BridgeServer::~BridgeServer() { stop(); }

void BridgeServer::start() {
  auto& im = *impl_;
  if (im.acceptor) return;
  const tcp::endpoint ep(net::ip::make_address(im.options.host), im.options.port);
  im.acceptor = std::make_unique<tcp::acceptor>(im.ioc);
  im.acceptor->open(ep.protocol());
  im.acceptor->set_option(net::socket_base::reuse_address(true));
  im.acceptor->bind(ep);
  im.acceptor->listen();
  im.bound_port = im.acceptor->local_endpoint().port();
  im.accept_thread = std::thread([&im] { im.accept_loop(); });
}

void BridgeServer::stop() {
  auto& im = *impl_;
  if (!im.acceptor || im.stopping.exchange(true)) return;
  // Wake the blocking accept with a throwaway connection.
  try {
    net::io_context ioc;
    tcp::socket poke(ioc);
    poke.connect(tcp::endpoint(net::ip::make_address(im.options.host), im.bound_port));
  } catch (const std::exception&) {
  }
  if (im.accept_thread.joinable()) im.accept_thread.join();
  beast::error_code ec;
  im.acceptor->close(ec);
  {
    std::lock_guard lock(im.mu);
    for (int fd : im.live_fds) ::shutdown(fd, SHUT_RDWR);
  }
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(im.mu);
    workers.swap(im.workers);
  }
  for (auto& t : workers) t.join();
}

std::uint16_t BridgeServer::port() const { return impl_->bound_port; }

}  // namespace mrtele::bridge
