#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "api/server.hpp"
#include "api_harness.hpp"
#include "doctest.h"

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using asio::ip::tcp;
using nlohmann::json;
using pb::test::mint;

namespace {

struct Reply {
  int status = 0;
  std::string content_type;
  std::string body;
};

Reply request(std::uint16_t port, http::verb verb, const std::string& target,
              const std::string& token, const std::string& body = {}) {
  asio::io_context io;
  tcp::resolver resolver(io);
  beast::tcp_stream stream(io);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  if (!token.empty()) req.set(http::field::authorization, "Bearer " + token);
  if (!body.empty()) {
    req.set(http::field::content_type, "application/json");
    req.body() = body;
  }
  req.prepare_payload();
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {static_cast<int>(res.result_int()), std::string(res[http::field::content_type]), res.body()};
}

}  // namespace

TEST_CASE("http server serves the service over HTTP/1.1") {
  pb::test::Harness h;
  pb::api::HttpServer server(*h.service, "127.0.0.1", 0, 2, 4096);
  server.start();
  std::uint16_t port = server.port();
  REQUIRE(port != 0);

  Reply r = request(port, http::verb::get, "/v1/courses", "");
  CHECK(r.status == 401);
  CHECK(json::parse(r.body)["error"]["code"] == "unauthenticated");

  std::string tess = mint("tess", {"teacher"});
  r = request(port, http::verb::post, "/v1/courses", tess,
              json{{"id", "logic"}, {"tutorials", {"conjunction"}}, {"roster", {"sam"}}}.dump());
  CHECK(r.status == 201);
  CHECK(r.content_type == "application/json");

  r = request(port, http::verb::get, "/v1/tutorials/conjunction?locale=de", mint("sam", {"student"}));
  CHECK(r.status == 200);
  CHECK(json::parse(r.body)["title"] == "Konjunktion");

  r = request(port, http::verb::post, "/v1/tokenize", tess, json{{"text", std::string(5000, 'a')}}.dump());
  CHECK(r.status == 413);

  r = request(port, http::verb::get, "/v1/export", tess);
  CHECK(r.status == 200);
  CHECK(r.content_type == "application/x-ndjson");
  server.stop();
}

TEST_CASE("websocket stream delivers check results to the user") {
  pb::test::Harness h;
  pb::api::HttpServer server(*h.service, "127.0.0.1", 0, 2);
  server.start();
  std::string tess = mint("tess", {"teacher"});
  h.make_course(tess, "logic", {"sam"});

  asio::io_context io;
  tcp::resolver resolver(io);

  // no credentials: the upgrade is refused with a plain 401
  {
    beast::tcp_stream stream(io);
    stream.connect(resolver.resolve("127.0.0.1", std::to_string(server.port())));
    http::request<http::empty_body> req{http::verb::get, "/v1/stream", 11};
    req.set(http::field::host, "127.0.0.1");
    req.set(http::field::connection, "Upgrade");
    req.set(http::field::upgrade, "websocket");
    req.set(http::field::sec_websocket_version, "13");
    req.set(http::field::sec_websocket_key, "dGhlIHNhbXBsZSBub25jZQ==");
    http::write(stream, req);
    beast::flat_buffer buffer;
    http::response<http::string_body> res;
    http::read(stream, buffer, res);
    CHECK(res.result_int() == 401);
  }

  websocket::stream<tcp::socket> ws(io);
  asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(server.port())));
  ws.handshake("127.0.0.1", "/v1/stream?access_token=" + mint("sam", {"student"}));
  json frame = {{"type", "check"},
                {"tutorial_id", "conjunction"},
                {"request_id", "w1"},
                {"blocks", pb::test::solution_blocks("conjunction.correct.json")}};
  ws.write(asio::buffer(frame.dump()));

  bool acked = false;
  json result;
  for (int i = 0; i < 5 && result.is_null(); ++i) {
    beast::flat_buffer buffer;
    ws.read(buffer);
    json msg = json::parse(beast::buffers_to_string(buffer.data()));
    if (msg["type"] == "notice" && msg["request_id"] == "w1") acked = true;
    if (msg["type"] == "check-result") result = msg;
  }
  CHECK(acked);
  REQUIRE(result.is_object());
  CHECK(result["request_id"] == "w1");
  CHECK(result["payload"]["status"] == "finished-ok");

  ws.write(asio::buffer(std::string("{\"type\":\"subscribe\"}")));
  beast::flat_buffer buffer;
  ws.read(buffer);
  CHECK(json::parse(beast::buffers_to_string(buffer.data()))["type"] == "error");
  ws.close(websocket::close_code::normal);
  server.stop();
}
