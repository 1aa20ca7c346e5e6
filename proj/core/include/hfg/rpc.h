/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/rpc.h
 * @brief Framed request/response transport over stream sockets.
 *
 * A server runs one accept thread, one reader thread per connection and a
 * fixed pool of handler threads. Handlers receive a Responder that may be
 * completed later from any thread, so a handler never has to block waiting
 * for other peers.
 *
 * A client keeps one connection per peer, reused for every verb. Calls
 * return immediately; responses are matched by request ID and may complete
 * in any order.
 *
 * Error payloads are a u8 error kind followed by a length-prefixed message;
 * the client rethrows them as the matching hfg exception type.
 */
#ifndef HFG_RPC_H_
#define HFG_RPC_H_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hfg/bytes.h"
#include "hfg/wire.h"

namespace hfg {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string str() const { return host + ":" + std::to_string(port); }
};

struct Request {
  std::uint64_t id = 0;
  Verb verb = Verb::Shutdown;
  Bytes payload;
  /// Server-assigned connection number, stable for the connection lifetime.
  std::uint64_t connection = 0;
};

namespace detail {
struct ConnState;
struct ReplyState;
struct Flight;
}  // namespace detail

/// Completes one request exactly once. Copies share the same completion;
/// dropping every copy without replying answers with an error.
class Responder {
 public:
  Responder() = default;
  void reply(std::span<const std::byte> payload) const;
  void fail(const std::exception& e) const;
  void fail_message(std::uint8_t kind, const std::string& message) const;
  explicit operator bool() const { return state_ != nullptr; }

 private:
  friend class RpcServer;
  explicit Responder(std::shared_ptr<detail::ReplyState> s) : state_(std::move(s)) {}
  std::shared_ptr<detail::ReplyState> state_;
};

using Handler = std::function<void(Request, Responder)>;

class RpcServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    /// 0 picks a free port.
    std::uint16_t port = 0;
    std::size_t handler_threads = 16;
    /// SHUTDOWN waits at most this long for outstanding requests.
    std::chrono::milliseconds drain_timeout{10000};
    /// Added before every handler runs; used to emulate network latency.
    std::chrono::microseconds injected_latency{0};
  };

  RpcServer();
  explicit RpcServer(Options opts);
  ~RpcServer();
  RpcServer(const RpcServer&) = delete;
  RpcServer& operator=(const RpcServer&) = delete;

  /// Must be called before start().
  void register_handler(Verb verb, Handler h);
  void on_disconnect(std::function<void(std::uint64_t connection)> hook);

  /// Binds and starts serving. Throws TransportError on bind failure.
  void start();
  std::uint16_t port() const { return port_; }
  Endpoint endpoint() const { return {opts_.host, port_}; }

  /// Blocks until a SHUTDOWN request has been served or stop() is called.
  void wait();
  bool shutdown_requested() const { return shutdown_requested_.load(); }
  /// Closes the listener and every connection, then joins all threads.
  void stop();

  std::uint64_t requests_served() const { return served_.load(); }

 private:
  void accept_loop();
  void reader_loop(std::shared_ptr<detail::ConnState> conn);
  void dispatch(Request req, Responder resp);
  void drain_then_ack(std::shared_ptr<detail::ConnState> conn, std::uint64_t request_id);
  void handler_loop();

  Options opts_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::map<Verb, Handler> handlers_;
  std::function<void(std::uint64_t)> disconnect_hook_;

  std::thread acceptor_;
  std::mutex conns_mu_;
  std::vector<std::shared_ptr<detail::ConnState>> conns_;
  std::vector<std::thread> readers_;
  std::uint64_t next_conn_ = 1;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::vector<std::pair<Request, Responder>> queue_;
  bool queue_closed_ = false;
  std::vector<std::thread> handlers_pool_;

  std::shared_ptr<detail::Flight> flight_;
  std::mutex state_mu_;
  std::condition_variable state_cv_;
  std::atomic<bool> running_{false};
  std::atomic<bool> draining_{false};
  std::atomic<bool> shutdown_requested_{false};
  std::atomic<std::uint64_t> served_{0};
  std::once_flag stop_once_;
};

/// Completion callback: either an exception or a response payload.
using Completion = std::function<void(std::exception_ptr, Bytes)>;

class RpcClient {
 public:
  struct Options {
    std::chrono::milliseconds timeout{30000};
    std::chrono::milliseconds connect_timeout{5000};
  };

  explicit RpcClient(std::vector<Endpoint> peers);
  RpcClient(std::vector<Endpoint> peers, Options opts);
  ~RpcClient();
  RpcClient(const RpcClient&) = delete;
  RpcClient& operator=(const RpcClient&) = delete;

  std::size_t num_peers() const { return peers_.size(); }
  const Endpoint& peer(std::uint32_t rank) const { return peers_.at(rank); }

  /// Sends and returns immediately. Failures (including connect failures and
  /// timeouts) surface through the future as TransportError naming the peer.
  std::future<Bytes> call_async(std::uint32_t peer, Verb verb, std::span<const std::byte> payload);
  /// Callback flavour; `done` runs on the connection's reader thread.
  void call_async(std::uint32_t peer, Verb verb, std::span<const std::byte> payload, Completion done);
  Bytes call(std::uint32_t peer, Verb verb, std::span<const std::byte> payload);
  /// Opens the connection to `peer` now. Throws TransportError.
  void connect(std::uint32_t peer) { connection(peer); }

  /// Fails every outstanding call and closes all connections.
  void close();

  std::uint64_t bytes_sent() const { return bytes_sent_.load(); }
  std::uint64_t bytes_received() const { return bytes_received_.load(); }

 private:
  struct Pending {
    Completion done;
    std::chrono::steady_clock::time_point deadline;
  };
  struct Connection {
    std::uint32_t peer = 0;
    int fd = -1;
    std::mutex write_mu;
    std::mutex pending_mu;
    std::map<std::uint64_t, Pending> pending;
    std::atomic<bool> alive{true};
    std::thread reader;
  };

  std::shared_ptr<Connection> connection(std::uint32_t peer);
  void reader_loop(std::shared_ptr<Connection> c);
  void fail_all(Connection& c, const std::string& why);
  std::string peer_name(std::uint32_t peer) const;

  std::vector<Endpoint> peers_;
  Options opts_;
  std::mutex conns_mu_;
  std::vector<std::shared_ptr<Connection>> conns_;
  std::vector<std::shared_ptr<Connection>> retired_;
  std::atomic<std::uint64_t> next_id_{1};
  std::atomic<bool> closed_{false};
  std::atomic<std::uint64_t> bytes_sent_{0};
  std::atomic<std::uint64_t> bytes_received_{0};
};

/// Error kinds carried in error responses.
enum class ErrorKind : std::uint8_t {
  Generic = 0,
  Range = 1,
  Ownership = 2,
  Protocol = 3,
  Collective = 4,
  Argument = 5,
  State = 6,
};

ErrorKind classify(const std::exception& e);
[[noreturn]] void rethrow_remote(ErrorKind kind, const std::string& message);

}  // namespace hfg

#endif  // HFG_RPC_H_
