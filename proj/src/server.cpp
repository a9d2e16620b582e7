#include "episim/server.hpp"

#include <sys/socket.h>

#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "episim/record_writer.hpp"

namespace episim {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

std::string_view mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

// Maps a request target into root, or nullopt when it escapes it.
std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root,
                                                    std::string_view target) {
  target = target.substr(0, target.find_first_of("?#"));
  if (target.empty() || target.front() != '/') return std::nullopt;
  std::string rel(target.substr(1));
  if (rel.empty() || rel.back() == '/') rel += "index.html";
  const auto p = std::filesystem::path(rel).lexically_normal();
  if (p.is_absolute() || p.empty() || *p.begin() == "..") return std::nullopt;
  return root / p;
}

}  // namespace

struct Server::Impl {
  ServerOptions opts;
  net::io_context ioc;
  std::optional<tcp::acceptor> acceptor;
  std::unique_ptr<RecordWriter> writer;
  std::thread accept_thread;

  std::mutex mu;
  std::condition_variable cv;
  std::map<std::uint64_t, std::shared_ptr<tcp::socket>> live;
  std::size_t active = 0;
  std::uint64_t next_id = 0;
  bool stopped = false;
  std::atomic<bool> stopping{false};
  std::uint16_t bound_port = 0;
  std::size_t written_at_stop = 0;

  void log(const std::string& msg) const {
    if (opts.log) opts.log(msg);
  }

  void accept_loop();
  void serve_connection(std::uint64_t id, std::shared_ptr<tcp::socket> sock);
  void serve_websocket(std::uint64_t id, tcp::socket& sock, const http::request<http::string_body>& req);
  void serve_http(tcp::socket& sock, const http::request<http::string_body>& req);
};

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->opts = std::move(options);
  if (!impl_->opts.record_dir) {
    if (const char* env = std::getenv(kRecordDirEnv); env && *env) impl_->opts.record_dir = env;
  }
}

Server::~Server() { stop(); }

void Server::start() {
  auto& im = *impl_;
  if (im.opts.record_dir) {
    im.writer = std::make_unique<RecordWriter>(
        *im.opts.record_dir, [&im](const std::string& e) { im.log("record write failed: " + e); });
  }
  const tcp::endpoint ep(net::ip::make_address(im.opts.address), im.opts.port);
  im.acceptor.emplace(im.ioc);
  im.acceptor->open(ep.protocol());
  im.acceptor->set_option(net::socket_base::reuse_address(true));
  im.acceptor->bind(ep);
  im.acceptor->listen();
  im.bound_port = im.acceptor->local_endpoint().port();
  im.accept_thread = std::thread([&im] { im.accept_loop(); });
}

void Server::Impl::accept_loop() {
  while (!stopping) {
    auto sock = std::make_shared<tcp::socket>(ioc);
    beast::error_code ec;
    acceptor->accept(*sock, ec);
    if (ec) {
      if (stopping) break;
      log("accept failed: " + ec.message());
      continue;
    }
    std::lock_guard lock(mu);
    if (stopping) break;
    const std::uint64_t id = next_id++;
    live[id] = sock;
    ++active;
    std::thread([this, id, sock] {
      serve_connection(id, sock);
      std::lock_guard done(mu);
      live.erase(id);
      --active;
      cv.notify_all();
    }).detach();
  }
}

void Server::Impl::serve_connection(std::uint64_t id, std::shared_ptr<tcp::socket> sock) {
  try {
    beast::flat_buffer buffer;
    http::request<http::string_body> req;
    http::read(*sock, buffer, req);
    if (websocket::is_upgrade(req)) {
      serve_websocket(id, *sock, req);
    } else {
      serve_http(*sock, req);
    }
  } catch (const std::exception& e) {
    if (!stopping) log("connection " + std::to_string(id) + ": " + e.what());
  }
  beast::error_code ec;
  sock->shutdown(tcp::socket::shutdown_both, ec);
  sock->close(ec);
}

void Server::Impl::serve_websocket(std::uint64_t id, tcp::socket& sock,
                                   const http::request<http::string_body>& req) {
  const std::string_view target(req.target().data(), req.target().size());
  if (target.substr(0, target.find('?')) != "/ws") {
    http::response<http::string_body> res{http::status::not_found, req.version()};
    res.set(http::field::content_type, "text/plain");
    res.body() = "websocket endpoint is /ws\n";
    res.prepare_payload();
    http::write(sock, res);
    return;
  }
  websocket::stream<tcp::socket&> ws(sock);
  ws.accept(req);

  ProtocolOptions popts = opts.protocol;
  if (popts.default_participant_id.empty()) popts.default_participant_id = "session" + std::to_string(id);
  SessionProtocol protocol(
      [this](const TrialRecord& rec) {
        if (writer) writer->submit(rec);
      },
      popts);
  try {
    beast::flat_buffer buffer;
    while (!protocol.ended()) {
      buffer.clear();
      ws.read(buffer);
      if (!ws.got_text()) {
        ws.text(true);
        ws.write(net::buffer(std::string(
            R"({"v":1,"type":"error","code":"bad_message","message":"frames must be text"})")));
        continue;
      }
      for (const auto& out : protocol.handle(beast::buffers_to_string(buffer.data()))) {
        ws.text(true);
        ws.write(net::buffer(out));
      }
    }
    ws.close(websocket::close_code::normal);
  } catch (const beast::system_error& e) {
    protocol.disconnect();
    if (e.code() != websocket::error::closed) throw;
  }
}

void Server::Impl::serve_http(tcp::socket& sock, const http::request<http::string_body>& req) {
  auto respond = [&](http::status status, std::string body, std::string_view type) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::content_type, std::string(type));
    res.keep_alive(false);
    if (req.method() != http::verb::head) res.body() = std::move(body);
    res.prepare_payload();
    http::write(sock, res);
  };
  if (req.method() != http::verb::get && req.method() != http::verb::head) {
    respond(http::status::method_not_allowed, "method not allowed\n", "text/plain");
    return;
  }
  if (!opts.static_dir) {
    respond(http::status::not_found, "no static directory configured\n", "text/plain");
    return;
  }
  const auto path = resolve_static(*opts.static_dir,
                                   std::string_view(req.target().data(), req.target().size()));
  std::ifstream in;
  if (path && std::filesystem::is_regular_file(*path)) in.open(*path, std::ios::binary);
  if (!in.is_open()) {
    respond(http::status::not_found, "not found\n", "text/plain");
    return;
  }
  std::ostringstream body;
  body << in.rdbuf();
  respond(http::status::ok, body.str(), mime_type(*path));
}

void Server::stop() {
  auto& im = *impl_;
  if (!im.acceptor) return;
  {
    std::lock_guard lock(im.mu);
    if (im.stopped) return;
    im.stopping = true;
  }
  ::shutdown(im.acceptor->native_handle(), SHUT_RDWR);
  if (im.accept_thread.joinable()) im.accept_thread.join();
  beast::error_code ec;
  im.acceptor->close(ec);
  std::unique_lock lock(im.mu);
  for (auto& [id, sock] : im.live) ::shutdown(sock->native_handle(), SHUT_RDWR);
  im.cv.wait(lock, [&im] { return im.active == 0; });
  lock.unlock();
  if (im.writer) {
    im.writer->flush();
    im.written_at_stop = im.writer->written();
    im.writer.reset();
  }
  lock.lock();
  im.stopped = true;
  im.cv.notify_all();
}

void Server::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [this] { return impl_->stopped; });
}

std::uint16_t Server::port() const { return impl_->bound_port; }

std::size_t Server::records_written() const {
  return impl_->writer ? impl_->writer->written() : impl_->written_at_stop;
}

void Server::flush_records() {
  if (impl_->writer) impl_->writer->flush();
}

}  // namespace episim
