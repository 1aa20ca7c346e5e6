/**
 *  Copyright (c) 2026 by Contributors
 * @file rpc.cc
 */
#include "hfg/rpc.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "hfg/error.h"
#include "hfg/log.h"

namespace hfg {

namespace detail {

struct ConnState {
  int fd = -1;
  std::uint64_t id = 0;
  std::mutex write_mu;
  std::atomic<bool> open{true};
  ~ConnState() {
    if (fd >= 0) ::close(fd);
  }
};

struct Flight {
  std::mutex mu;
  std::condition_variable cv;
  std::int64_t count = 0;
  void add(std::int64_t d) {
    std::lock_guard lk(mu);
    count += d;
    if (count == 0) cv.notify_all();
  }
};

}  // namespace detail

namespace {

std::string errno_text() { return std::strerror(errno); }

bool send_all(int fd, const std::byte* p, std::size_t n, int flags = 0) {
  while (n > 0) {
    const ssize_t w = ::send(fd, p, n, flags | MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

/// False on orderly EOF or error.
bool recv_all(int fd, std::byte* p, std::size_t n) {
  while (n > 0) {
    const ssize_t r = ::recv(fd, p, n, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

bool send_frame(int fd, std::uint64_t id, Verb verb, std::span<const std::byte> payload,
                bool is_error) {
  std::array<std::byte, kFrameHeaderBytes> hdr;
  Bytes tmp;
  tmp.reserve(kFrameHeaderBytes);
  ByteWriter w(tmp);
  w.put_raw(std::as_bytes(std::span(kFrameMagic)));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(payload.size()));
  w.put<std::uint64_t>(id);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(verb) | (is_error ? kErrorFlag : 0));
  std::memcpy(hdr.data(), tmp.data(), kFrameHeaderBytes);
  if (!send_all(fd, hdr.data(), hdr.size(), payload.empty() ? 0 : MSG_MORE)) return false;
  return send_all(fd, payload.data(), payload.size());
}

/// Reads one frame. Returns false on EOF; throws ProtocolError on bad input.
bool read_frame(int fd, Frame& out) {
  std::array<std::byte, kFrameHeaderBytes> hdr;
  if (!recv_all(fd, hdr.data(), hdr.size())) return false;
  out.header = decode_frame_header(std::span<const std::byte, kFrameHeaderBytes>(hdr));
  out.payload.resize(out.header.payload_length);
  if (!recv_all(fd, out.payload.data(), out.payload.size())) return false;
  return true;
}

Bytes error_payload(std::uint8_t kind, const std::string& message) {
  ByteWriter w;
  w.put<std::uint8_t>(kind);
  w.put_string(message);
  return w.take();
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
  if (rc != 0 || res == nullptr) {
    throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  return res;
}

}  // namespace

namespace detail {

struct ReplyState {
  std::shared_ptr<ConnState> conn;
  std::shared_ptr<Flight> flight;
  std::uint64_t id = 0;
  Verb verb = Verb::Shutdown;
  std::atomic<bool> done{false};

  bool claim() { return !done.exchange(true); }
  void send(std::span<const std::byte> payload, bool is_error) {
    if (conn->open.load()) {
      std::lock_guard lk(conn->write_mu);
      if (!send_frame(conn->fd, id, verb, payload, is_error)) {
        log::debug("reply to request " + std::to_string(id) + " lost: " + errno_text());
      }
    }
    flight->add(-1);
  }
  ~ReplyState() {
    if (claim()) {
      const Bytes p = error_payload(static_cast<std::uint8_t>(ErrorKind::Generic),
                                    "request dropped without a reply");
      send(p, true);
    }
  }
};

}  // namespace detail

ErrorKind classify(const std::exception& e) {
  if (dynamic_cast<const RangeError*>(&e)) return ErrorKind::Range;
  if (dynamic_cast<const OwnershipError*>(&e)) return ErrorKind::Ownership;
  if (dynamic_cast<const ProtocolError*>(&e)) return ErrorKind::Protocol;
  if (dynamic_cast<const CollectiveError*>(&e)) return ErrorKind::Collective;
  if (dynamic_cast<const ArgumentError*>(&e)) return ErrorKind::Argument;
  if (dynamic_cast<const StateError*>(&e)) return ErrorKind::State;
  return ErrorKind::Generic;
}

void rethrow_remote(ErrorKind kind, const std::string& message) {
  switch (kind) {
    case ErrorKind::Range: throw RangeError(message);
    case ErrorKind::Ownership: throw OwnershipError(message);
    case ErrorKind::Protocol: throw ProtocolError(message);
    case ErrorKind::Collective: throw CollectiveError(message);
    case ErrorKind::Argument: throw ArgumentError(message);
    case ErrorKind::State: throw StateError(message);
    case ErrorKind::Generic: break;
  }
  throw TransportError(message);
}

void Responder::reply(std::span<const std::byte> payload) const {
  if (state_ && state_->claim()) state_->send(payload, false);
}

void Responder::fail(const std::exception& e) const {
  fail_message(static_cast<std::uint8_t>(classify(e)), e.what());
}

void Responder::fail_message(std::uint8_t kind, const std::string& message) const {
  if (state_ && state_->claim()) state_->send(error_payload(kind, message), true);
}

RpcServer::RpcServer() : RpcServer(Options{}) {}

RpcServer::RpcServer(Options opts)
    : opts_(std::move(opts)), flight_(std::make_shared<detail::Flight>()) {}

RpcServer::~RpcServer() { stop(); }

void RpcServer::register_handler(Verb verb, Handler h) {
  if (running_) throw StateError("handlers must be registered before start()");
  handlers_[verb] = std::move(h);
}

void RpcServer::on_disconnect(std::function<void(std::uint64_t)> hook) {
  if (running_) throw StateError("hooks must be registered before start()");
  disconnect_hook_ = std::move(hook);
}

void RpcServer::start() {
  if (running_) throw StateError("server already started");
  addrinfo* ai = resolve(opts_.host, opts_.port, true);
  listen_fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(ai);
    throw TransportError("socket: " + errno_text());
  }
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(listen_fd_, ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(listen_fd_, 128) != 0) {
    const std::string why = errno_text();
    ::freeaddrinfo(ai);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw TransportError("cannot bind " + opts_.host + ":" + std::to_string(opts_.port) + ": " + why);
  }
  ::freeaddrinfo(ai);
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  running_ = true;
  for (std::size_t i = 0; i < std::max<std::size_t>(1, opts_.handler_threads); ++i) {
    handlers_pool_.emplace_back([this] { handler_loop(); });
  }
  acceptor_ = std::thread([this] { accept_loop(); });
  log::debug("rpc server listening on " + endpoint().str());
}

void RpcServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    set_nodelay(fd);
    auto conn = std::make_shared<detail::ConnState>();
    conn->fd = fd;
    std::lock_guard lk(conns_mu_);
    if (!running_) {
      ::shutdown(fd, SHUT_RDWR);
      break;
    }
    conn->id = next_conn_++;
    conns_.push_back(conn);
    readers_.emplace_back([this, conn] { reader_loop(conn); });
  }
}

void RpcServer::reader_loop(std::shared_ptr<detail::ConnState> conn) {
  Frame frame;
  while (running_) {
    try {
      if (!read_frame(conn->fd, frame)) break;
      if (frame.header.is_error) throw ProtocolError("error flag set on a request");
    } catch (const ProtocolError& e) {
      log::error("connection " + std::to_string(conn->id) + ": protocol error: " + e.what());
      break;
    }
    if (frame.header.verb == Verb::Shutdown) {
      drain_then_ack(conn, frame.header.request_id);
      continue;
    }
    auto state = std::make_shared<detail::ReplyState>();
    state->conn = conn;
    state->flight = flight_;
    state->id = frame.header.request_id;
    state->verb = frame.header.verb;
    flight_->add(1);
    Responder resp(std::move(state));
    if (draining_) {
      resp.fail_message(static_cast<std::uint8_t>(ErrorKind::State), "server is shutting down");
      continue;
    }
    Request req{frame.header.request_id, frame.header.verb, std::move(frame.payload), conn->id};
    {
      std::lock_guard lk(queue_mu_);
      queue_.emplace_back(std::move(req), std::move(resp));
    }
    queue_cv_.notify_one();
  }
  conn->open = false;
  ::shutdown(conn->fd, SHUT_RDWR);
  if (disconnect_hook_) disconnect_hook_(conn->id);
}

void RpcServer::handler_loop() {
  for (;;) {
    std::pair<Request, Responder> job;
    {
      std::unique_lock lk(queue_mu_);
      queue_cv_.wait(lk, [&] { return !queue_.empty() || queue_closed_; });
      if (queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.erase(queue_.begin());
    }
    dispatch(std::move(job.first), std::move(job.second));
  }
}

void RpcServer::dispatch(Request req, Responder resp) {
  served_.fetch_add(1);
  if (opts_.injected_latency.count() > 0) std::this_thread::sleep_for(opts_.injected_latency);
  auto it = handlers_.find(req.verb);
  if (it == handlers_.end()) {
    resp.fail_message(static_cast<std::uint8_t>(ErrorKind::Protocol),
                      std::string("no handler for ") + verb_name(req.verb));
    return;
  }
  try {
    it->second(std::move(req), resp);
  } catch (const std::exception& e) {
    resp.fail(e);
  }
}

void RpcServer::drain_then_ack(std::shared_ptr<detail::ConnState> conn, std::uint64_t request_id) {
  draining_ = true;
  {
    std::unique_lock lk(flight_->mu);
    if (!flight_->cv.wait_for(lk, opts_.drain_timeout, [&] { return flight_->count == 0; })) {
      log::warn("shutdown proceeding with " + std::to_string(flight_->count) +
                " requests still outstanding");
    }
  }
  {
    std::lock_guard lk(conn->write_mu);
    send_frame(conn->fd, request_id, Verb::Shutdown, {}, false);
  }
  {
    std::lock_guard lk(state_mu_);
    shutdown_requested_ = true;
  }
  state_cv_.notify_all();
}

void RpcServer::wait() {
  std::unique_lock lk(state_mu_);
  state_cv_.wait(lk, [&] { return shutdown_requested_.load() || !running_.load(); });
}

void RpcServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  std::vector<std::thread> readers;
  {
    std::lock_guard lk(conns_mu_);
    for (auto& c : conns_) ::shutdown(c->fd, SHUT_RDWR);
    readers.swap(readers_);
  }
  for (auto& t : readers) t.join();
  {
    std::lock_guard lk(queue_mu_);
    queue_closed_ = true;
  }
  queue_cv_.notify_all();
  for (auto& t : handlers_pool_) t.join();
  handlers_pool_.clear();
  {
    std::lock_guard lk(conns_mu_);
    conns_.clear();
  }
  {
    std::lock_guard lk(state_mu_);
  }
  state_cv_.notify_all();
}

RpcClient::RpcClient(std::vector<Endpoint> peers) : RpcClient(std::move(peers), Options{}) {}

RpcClient::RpcClient(std::vector<Endpoint> peers, Options opts)
    : peers_(std::move(peers)), opts_(opts), conns_(peers_.size()) {}

RpcClient::~RpcClient() { close(); }

std::string RpcClient::peer_name(std::uint32_t peer) const {
  return "peer " + std::to_string(peer) + " (" + peers_.at(peer).str() + ")";
}

std::shared_ptr<RpcClient::Connection> RpcClient::connection(std::uint32_t peer) {
  if (peer >= peers_.size()) throw ArgumentError("no such peer " + std::to_string(peer));
  std::lock_guard lk(conns_mu_);
  if (closed_) throw TransportError(peer_name(peer) + ": client closed");
  auto& slot = conns_[peer];
  if (slot && slot->alive) return slot;
  if (slot) retired_.push_back(std::move(slot));

  const Endpoint& ep = peers_[peer];
  addrinfo* ai = resolve(ep.host, ep.port, false);
  const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(ai);
    throw TransportError(peer_name(peer) + ": socket: " + errno_text());
  }
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
  ::freeaddrinfo(ai);
  if (rc != 0 && errno == EINPROGRESS) {
    pollfd pfd{fd, POLLOUT, 0};
    rc = ::poll(&pfd, 1, static_cast<int>(opts_.connect_timeout.count()));
    if (rc == 0) {
      ::close(fd);
      throw TransportError(peer_name(peer) + ": connect timed out");
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    errno = err;
    rc = err == 0 ? 0 : -1;
  }
  if (rc != 0) {
    const std::string why = errno_text();
    ::close(fd);
    throw TransportError(peer_name(peer) + ": connect failed: " + why);
  }
  ::fcntl(fd, F_SETFL, flags);
  set_nodelay(fd);
  auto c = std::make_shared<Connection>();
  c->peer = peer;
  c->fd = fd;
  c->reader = std::thread([this, c] { reader_loop(c); });
  slot = c;
  return c;
}

void RpcClient::call_async(std::uint32_t peer, Verb verb, std::span<const std::byte> payload,
                           Completion done) {
  std::shared_ptr<Connection> c;
  try {
    c = connection(peer);
  } catch (...) {
    done(std::current_exception(), {});
    return;
  }
  const std::uint64_t id = next_id_.fetch_add(1);
  {
    std::lock_guard lk(c->pending_mu);
    c->pending.emplace(id, Pending{std::move(done), std::chrono::steady_clock::now() + opts_.timeout});
  }
  bool ok;
  {
    std::lock_guard lk(c->write_mu);
    ok = c->alive && send_frame(c->fd, id, verb, payload, false);
  }
  if (ok) {
    bytes_sent_.fetch_add(kFrameHeaderBytes + payload.size());
    return;
  }
  c->alive = false;
  ::shutdown(c->fd, SHUT_RDWR);
  Completion cb;
  {
    std::lock_guard lk(c->pending_mu);
    auto it = c->pending.find(id);
    if (it == c->pending.end()) return;
    cb = std::move(it->second.done);
    c->pending.erase(it);
  }
  cb(std::make_exception_ptr(TransportError(peer_name(peer) + ": send failed")), {});
}

std::future<Bytes> RpcClient::call_async(std::uint32_t peer, Verb verb,
                                         std::span<const std::byte> payload) {
  auto promise = std::make_shared<std::promise<Bytes>>();
  auto fut = promise->get_future();
  call_async(peer, verb, payload, [promise](std::exception_ptr err, Bytes resp) {
    if (err) {
      promise->set_exception(err);
    } else {
      promise->set_value(std::move(resp));
    }
  });
  return fut;
}

Bytes RpcClient::call(std::uint32_t peer, Verb verb, std::span<const std::byte> payload) {
  return call_async(peer, verb, payload).get();
}

void RpcClient::reader_loop(std::shared_ptr<Connection> c) {
  using Clock = std::chrono::steady_clock;
  std::string why = "connection lost";
  auto sweep = [&] {
    const auto now = Clock::now();
    std::vector<Completion> expired;
    {
      std::lock_guard lk(c->pending_mu);
      for (auto it = c->pending.begin(); it != c->pending.end();) {
        if (it->second.deadline <= now) {
          expired.push_back(std::move(it->second.done));
          it = c->pending.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (auto& cb : expired) {
      cb(std::make_exception_ptr(TransportError(
             peer_name(c->peer) + ": request timed out after " +
             std::to_string(opts_.timeout.count()) + " ms")),
         {});
    }
  };
  auto last_sweep = Clock::now();
  Frame frame;
  while (c->alive) {
    pollfd pfd{c->fd, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, 20);
    if (Clock::now() - last_sweep > std::chrono::milliseconds(20)) {
      sweep();
      last_sweep = Clock::now();
    }
    if (rc == 0) continue;
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    try {
      if (!read_frame(c->fd, frame)) break;
    } catch (const ProtocolError& e) {
      why = std::string("protocol error: ") + e.what();
      log::error(peer_name(c->peer) + ": " + why);
      break;
    }
    bytes_received_.fetch_add(kFrameHeaderBytes + frame.payload.size());
    Completion cb;
    {
      std::lock_guard lk(c->pending_mu);
      auto it = c->pending.find(frame.header.request_id);
      if (it != c->pending.end()) {
        cb = std::move(it->second.done);
        c->pending.erase(it);
      }
    }
    if (!cb) {
      // Either timed out already or never issued on this connection.
      log::debug(peer_name(c->peer) + ": response for unknown request " +
                 std::to_string(frame.header.request_id));
      continue;
    }
    if (frame.header.is_error) {
      std::exception_ptr err;
      try {
        ByteReader r(frame.payload);
        const auto kind = static_cast<ErrorKind>(r.get<std::uint8_t>());
        const std::string msg = r.get_string();
        rethrow_remote(kind, peer_name(c->peer) + ": " + msg);
      } catch (...) {
        err = std::current_exception();
      }
      cb(err, {});
    } else {
      cb(nullptr, std::move(frame.payload));
    }
  }
  c->alive = false;
  ::shutdown(c->fd, SHUT_RDWR);
  fail_all(*c, why);
}

void RpcClient::fail_all(Connection& c, const std::string& why) {
  std::map<std::uint64_t, Pending> pending;
  {
    std::lock_guard lk(c.pending_mu);
    pending.swap(c.pending);
  }
  for (auto& [id, p] : pending) {
    p.done(std::make_exception_ptr(TransportError(peer_name(c.peer) + ": " + why)), {});
  }
}

void RpcClient::close() {
  std::vector<std::shared_ptr<Connection>> all;
  {
    std::lock_guard lk(conns_mu_);
    if (closed_.exchange(true)) return;
    for (auto& c : conns_) {
      if (c) all.push_back(std::move(c));
    }
    for (auto& c : retired_) all.push_back(std::move(c));
    retired_.clear();
  }
  for (auto& c : all) {
    c->alive = false;
    ::shutdown(c->fd, SHUT_RDWR);
  }
  for (auto& c : all) {
    if (!c->reader.joinable()) continue;
    if (c->reader.get_id() == std::this_thread::get_id()) {
      c->reader.detach();
      continue;
    }
    c->reader.join();
    ::close(c->fd);
  }
}

}  // namespace hfg
