#include "api/server.hpp"

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <deque>
#include <thread>
#include <vector>

#include "common/error.hpp"

namespace pb::api {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr auto kReadTimeout = std::chrono::seconds(60);

std::string query_value(std::string_view target, std::string_view key) {
  std::size_t q = target.find('?');
  if (q == std::string_view::npos) return {};
  std::string_view query = target.substr(q + 1);
  while (!query.empty()) {
    std::size_t amp = query.find('&');
    std::string_view pair = query.substr(0, amp);
    query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
    std::size_t eq = pair.find('=');
    if (eq != std::string_view::npos && pair.substr(0, eq) == key) {
      return std::string(pair.substr(eq + 1));
    }
  }
  return {};
}

class StreamSession : public std::enable_shared_from_this<StreamSession> {
 public:
  StreamSession(tcp::socket&& socket, Service& service, Principal principal)
      : ws_(std::move(socket)), service_(service), principal_(std::move(principal)) {}

  ~StreamSession() {
    if (subscription_ != 0) service_.unsubscribe(subscription_);
  }

  void run(http::request<http::string_body> request) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request,
                     beast::bind_front_handler(&StreamSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<StreamSession> weak = weak_from_this();
    subscription_ = service_.subscribe(principal_, [weak](const std::string& message) {
      if (auto self = weak.lock()) {
        asio::post(self->ws_.get_executor(), [self, message] { self->queue(message); });
      }
    });
    read();
  }

  void read() {
    ws_.async_read(buffer_,
                   beast::bind_front_handler(&StreamSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      service_.unsubscribe(subscription_);
      subscription_ = 0;
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    queue(service_.handle_stream_message(principal_, text));
    read();
  }

  void queue(std::string message) {
    outbox_.push_back(std::move(message));
    if (outbox_.size() == 1) write();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()),
                    beast::bind_front_handler(&StreamSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    outbox_.pop_front();
    if (!outbox_.empty()) write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  Service& service_;
  Principal principal_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::uint64_t subscription_ = 0;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Service& service, std::size_t body_limit)
      : stream_(std::move(socket)), service_(service), body_limit_(body_limit) {}

  void run() {
    asio::dispatch(stream_.get_executor(),
                   beast::bind_front_handler(&HttpSession::read, shared_from_this()));
  }

 private:
  void read() {
    parser_.emplace();
    parser_->body_limit(body_limit_);
    stream_.expires_after(kReadTimeout);
    http::async_read(stream_, buffer_, *parser_,
                     beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (ec == http::error::body_limit) {
      HttpResponse r{413, R"({"error":{"code":"invalid-argument","message":"request body too large"}})"};
      send(r, 11, false);
      return;
    }
    if (ec) return;
    http::request<http::string_body> request = parser_->release();
    std::string_view target(request.target().data(), request.target().size());
    std::string authorization(request[http::field::authorization]);

    if (websocket::is_upgrade(request)) {
      std::string_view path = target.substr(0, target.find('?'));
      if (path != "/v1/stream") {
        send({404, R"({"error":{"code":"not-found","message":"no such endpoint"}})"},
             request.version(), false);
        return;
      }
      if (authorization.empty()) authorization = query_value(target, "access_token");
      try {
        if (authorization.empty()) throw Error(Errc::unauthenticated, "missing bearer token");
        Principal principal = service_.authenticate(authorization);
        stream_.expires_never();
        std::make_shared<StreamSession>(stream_.release_socket(), service_, std::move(principal))
            ->run(std::move(request));
      } catch (const Error& e) {
        nlohmann::json body = {{"error", {{"code", errc_name(e.code())}, {"message", e.what()}}}};
        send({e.code() == Errc::forbidden ? 403 : 401, body.dump()}, request.version(), false);
      }
      return;
    }

    HttpRequest in{std::string(request.method_string()), std::string(target), authorization,
                   std::move(request.body())};
    send(service_.handle(in), request.version(), request.keep_alive());
  }

  void send(const HttpResponse& r, unsigned version, bool keep_alive) {
    auto response = std::make_shared<http::response<http::string_body>>(
        static_cast<http::status>(r.status), version);
    response->set(http::field::server, "proofbuddy");
    if (r.status != 204) {
      response->set(http::field::content_type, r.content_type);
      response->body() = r.body;
    }
    response->keep_alive(keep_alive);
    response->prepare_payload();
    http::async_write(stream_, *response,
                      [self = shared_from_this(), response](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (!response->keep_alive()) {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                          return;
                        }
                        self->read();
                      });
  }

  beast::tcp_stream stream_;
  Service& service_;
  std::size_t body_limit_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
};

}  // namespace

struct HttpServer::Impl {
  Impl(Service& s, std::string h, std::uint16_t p, int t, std::size_t limit)
      : service(s), host(std::move(h)), port(p), threads(std::max(1, t)), body_limit(limit),
        acceptor(asio::make_strand(ioc)) {}

  void accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec == asio::error::operation_aborted) return;
      if (!ec) std::make_shared<HttpSession>(std::move(socket), service, body_limit)->run();
      accept();
    });
  }

  Service& service;
  std::string host;
  std::uint16_t port;
  int threads;
  std::size_t body_limit;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::vector<std::thread> workers;
  bool running = false;
};

HttpServer::HttpServer(Service& service, std::string host, std::uint16_t port, int threads,
                       std::size_t body_limit)
    : impl_(std::make_unique<Impl>(service, std::move(host), port, threads, body_limit)) {}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
  beast::error_code ec;
  auto address = asio::ip::make_address(impl_->host, ec);
  if (ec) throw Error(Errc::invalid_argument, "bad listen address '" + impl_->host + "'");
  tcp::endpoint endpoint(address, impl_->port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(Errc::io_error, "cannot listen on " + impl_->host + ":" +
                                    std::to_string(impl_->port) + ": " + ec.message());
  }
  impl_->port = impl_->acceptor.local_endpoint().port();
  impl_->accept();
  impl_->running = true;
  for (int i = 0; i < impl_->threads; ++i) {
    impl_->workers.emplace_back([this] { impl_->ioc.run(); });
  }
  spdlog::info("listening on {}:{}", impl_->host, impl_->port);
}

void HttpServer::stop() {
  if (!impl_ || !impl_->running) return;
  impl_->running = false;
  asio::post(impl_->acceptor.get_executor(), [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
  });
  impl_->ioc.stop();
  for (std::thread& t : impl_->workers) t.join();
  impl_->workers.clear();
}

std::uint16_t HttpServer::port() const { return impl_->port; }

}  // namespace pb::api
