#include <filesystem>
#include <fstream>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "doctest.h"
#include "episim/record_io.hpp"
#include "episim/server.hpp"
#include "session_script.hpp"

using namespace episim;
using script::json;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

std::filesystem::path fresh_dir(const char* name) {
  auto d = std::filesystem::temp_directory_path() / (std::string("episim_server_") + name);
  std::filesystem::remove_all(d);
  return d;
}

class Client {
 public:
  explicit Client(std::uint16_t port, const char* target = "/ws") : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", target);
  }
  json request(const std::string& frame) {
    send(frame);
    return receive();
  }
  void send(const std::string& frame) {
    ws_.text(true);
    ws_.write(net::buffer(frame));
  }
  json receive() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }
  void close() { ws_.close(websocket::close_code::normal); }
  void drop() { ws_.next_layer().close(); }

 private:
  net::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

http::response<http::string_body> http_get(std::uint16_t port, const std::string& target) {
  net::io_context ioc;
  tcp::socket sock(ioc);
  tcp::resolver resolver(ioc);
  net::connect(sock, resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::empty_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(sock, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(sock, buf, res);
  return res;
}

double target_for(double mass) {
  const double k = thickness_ratio(mass);
  return (48.38 + 1.0) * k;
}

}  // namespace

TEST_CASE("scripted client runs a full session over the socket") {
  const auto dir = fresh_dir("records");
  ServerOptions opts;
  opts.port = 0;
  opts.record_dir = dir;
  Server server(opts);
  server.start();
  REQUIRE(server.port() != 0);

  Client c(server.port());
  auto started = c.request(json{{"v", 1}, {"type", "start_session"}, {"participant_id", "ws1"}}.dump());
  REQUIRE(started["type"] == "session_started");
  const int n = started["n_trials"];
  REQUIRE(n == 15);
  for (int i = 0; i < n; ++i) {
    const auto ts = c.request(script::msg("start_trial"));
    REQUIRE(ts["type"] == "trial_started");
    for (const auto& f : script::insertion(target_for(ts["body_mass_kg"]), 50.0)) {
      REQUIRE(c.request(f)["type"] == "force");
    }
    const auto res = c.request(script::msg("commit"));
    REQUIRE(res["type"] == "trial_result");
    CHECK(res.contains("outcome") == (ts["kind"] == "familiarization"));
  }
  const auto summary = c.request(script::msg("end_session"));
  CHECK(summary["type"] == "session_summary");
  CHECK(summary["trials"].size() == 15);
  for (const auto& t : summary["trials"]) CHECK(t["outcome"] == "success");

  server.flush_records();
  CHECK(server.records_written() == 15);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    ++files;
    const auto rec = load_record(e.path());
    CHECK(rec.participant_id == "ws1");
    CHECK_FALSE(verify_replay(rec).has_value());
  }
  CHECK(files == 15);
  server.stop();
  std::filesystem::remove_all(dir);
}

TEST_CASE("connections are isolated and a dropped trial leaves no record") {
  const auto dir = fresh_dir("isolation");
  ServerOptions opts;
  opts.port = 0;
  opts.record_dir = dir;
  Server server(opts);
  server.start();

  Client a(server.port()), b(server.port());
  CHECK(a.request(script::msg("start_session"))["type"] == "session_started");
  CHECK(b.request(script::msg("start_session"))["type"] == "session_started");
  CHECK(a.request(script::msg("start_trial"))["trial_index"] == 0);
  CHECK(b.request("{{{")["code"] == "bad_message");
  CHECK(b.request(script::msg("start_trial"))["trial_index"] == 0);
  CHECK(a.request(script::position(0.0, 1.0, 121.0))["type"] == "force");
  a.drop();  // mid-trial disconnect
  for (const auto& f : script::insertion(50.0)) b.request(f);
  const auto res = b.request(script::msg("commit"));
  CHECK(res["type"] == "trial_result");
  b.close();

  server.flush_records();
  server.stop();
  CHECK(server.records_written() == 1);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("static files and unknown endpoints") {
  const auto root = fresh_dir("static");
  std::filesystem::create_directories(root / "www");
  std::ofstream(root / "www" / "index.html") << "<html>ui</html>";
  std::ofstream(root / "secret.txt") << "no";
  ServerOptions opts;
  opts.port = 0;
  opts.static_dir = root / "www";
  Server server(opts);
  server.start();

  const auto index = http_get(server.port(), "/");
  CHECK(index.result() == http::status::ok);
  CHECK(index.body() == "<html>ui</html>");
  CHECK(http_get(server.port(), "/missing.js").result() == http::status::not_found);
  CHECK(http_get(server.port(), "/../secret.txt").result() == http::status::not_found);
  CHECK_THROWS(Client(server.port(), "/other"));
  server.stop();
  std::filesystem::remove_all(root);
}

TEST_CASE("stop closes open connections") {
  ServerOptions opts;
  opts.port = 0;
  Server server(opts);
  server.start();
  Client c(server.port());
  c.request(script::msg("start_session"));
  server.stop();
  CHECK_THROWS(c.receive());
}
