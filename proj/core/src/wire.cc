/**
 *  Copyright (c) 2026 by Contributors
 * @file wire.cc
 */
#include "hfg/wire.h"

#include <cstring>

#include "hfg/error.h"

namespace hfg {

const char* verb_name(Verb v) {
  switch (v) {
    case Verb::SampleNeighbors: return "SAMPLE_NEIGHBORS";
    case Verb::PullData: return "PULL_DATA";
    case Verb::PushData: return "PUSH_DATA";
    case Verb::Barrier: return "BARRIER";
    case Verb::Allreduce: return "ALLREDUCE";
    case Verb::Shutdown: return "SHUTDOWN";
  }
  return "UNKNOWN";
}

bool is_known_verb(std::uint8_t raw) {
  return raw >= static_cast<std::uint8_t>(Verb::SampleNeighbors) &&
         raw <= static_cast<std::uint8_t>(Verb::Shutdown);
}

Bytes encode_frame(std::uint64_t request_id, Verb verb, std::span<const std::byte> payload,
                   bool is_error) {
  if (payload.size() > kMaxFramePayload) throw ProtocolError("frame payload exceeds limit");
  Bytes out;
  out.reserve(kFrameHeaderBytes + payload.size());
  ByteWriter w(out);
  w.put_raw(std::as_bytes(std::span(kFrameMagic)));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(payload.size()));
  w.put<std::uint64_t>(request_id);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(verb) | (is_error ? kErrorFlag : 0));
  w.put_raw(payload);
  return out;
}

FrameHeader decode_frame_header(std::span<const std::byte, kFrameHeaderBytes> raw) {
  if (std::memcmp(raw.data(), kFrameMagic, 4) != 0) throw ProtocolError("bad frame magic");
  ByteReader r(std::span<const std::byte>(raw).subspan(4));
  FrameHeader h;
  h.payload_length = r.get<std::uint32_t>();
  h.request_id = r.get<std::uint64_t>();
  const auto verb = r.get<std::uint8_t>();
  h.is_error = (verb & kErrorFlag) != 0;
  const std::uint8_t base = verb & static_cast<std::uint8_t>(~kErrorFlag);
  if (!is_known_verb(base)) throw ProtocolError("unknown verb " + std::to_string(verb));
  h.verb = static_cast<Verb>(base);
  if (h.payload_length > kMaxFramePayload) throw ProtocolError("frame payload exceeds limit");
  return h;
}

Frame decode_frame(std::span<const std::byte> raw) {
  if (raw.size() < kFrameHeaderBytes) throw ProtocolError("frame shorter than header");
  Frame f;
  f.header = decode_frame_header(raw.first<kFrameHeaderBytes>());
  if (raw.size() - kFrameHeaderBytes != f.header.payload_length) {
    throw ProtocolError("frame length field disagrees with frame size");
  }
  auto body = raw.subspan(kFrameHeaderBytes);
  f.payload.assign(body.begin(), body.end());
  return f;
}

Bytes encode(const SampleRequest& m) {
  ByteWriter w;
  w.put<std::uint8_t>(m.layer);
  w.put<std::uint32_t>(m.fanout);
  w.put_array(std::span<const std::uint64_t>(m.seeds));
  w.put<std::uint64_t>(m.rng_key[0]);
  w.put<std::uint64_t>(m.rng_key[1]);
  return w.take();
}

Bytes encode(const SampleResponse& m) {
  ByteWriter w;
  w.put_array(std::span<const std::uint32_t>(m.counts));
  std::uint64_t total = 0;
  for (auto c : m.counts) total += c;
  if (total != m.edges.size()) throw ProtocolError("per-seed counts do not sum to edge count");
  for (const auto& e : m.edges) {
    w.put<std::uint64_t>(e.src);
    w.put<std::uint64_t>(e.dst);
    w.put<std::uint64_t>(e.edge);
  }
  return w.take();
}

Bytes encode(const PullRequest& m) {
  ByteWriter w;
  w.put_string(m.space);
  w.put_array(std::span<const std::uint64_t>(m.ids));
  return w.take();
}

Bytes encode(const PullResponse& m) {
  if (static_cast<std::size_t>(m.width) * m.rows != m.data.size()) {
    throw ProtocolError("pull response shape disagrees with data length");
  }
  ByteWriter w;
  w.put<std::uint32_t>(m.width);
  w.put<std::uint32_t>(m.rows);
  w.put_span(std::span<const float>(m.data));
  return w.take();
}

Bytes encode(const PushRequest& m) {
  if (static_cast<std::size_t>(m.width) * m.ids.size() != m.data.size()) {
    throw ProtocolError("push request shape disagrees with data length");
  }
  ByteWriter w;
  w.put_string(m.space);
  w.put<std::uint32_t>(m.width);
  w.put_array(std::span<const std::uint64_t>(m.ids));
  w.put_span(std::span<const float>(m.data));
  return w.take();
}

Bytes encode(const CollectiveRequest& m) {
  ByteWriter w;
  w.put<std::uint32_t>(m.group);
  w.put<std::uint32_t>(m.rank);
  w.put<std::uint32_t>(m.size);
  w.put<std::uint64_t>(m.round);
  w.put_array(std::span<const float>(m.data));
  return w.take();
}

Bytes encode(const CollectiveResponse& m) {
  ByteWriter w;
  w.put_array(std::span<const float>(m.data));
  return w.take();
}

template <>
SampleRequest decode<SampleRequest>(std::span<const std::byte> p) {
  ByteReader r(p);
  SampleRequest m;
  m.layer = r.get<std::uint8_t>();
  m.fanout = r.get<std::uint32_t>();
  m.seeds = r.get_array<std::uint64_t>();
  m.rng_key[0] = r.get<std::uint64_t>();
  m.rng_key[1] = r.get<std::uint64_t>();
  r.expect_done();
  return m;
}

template <>
SampleResponse decode<SampleResponse>(std::span<const std::byte> p) {
  ByteReader r(p);
  SampleResponse m;
  m.counts = r.get_array<std::uint32_t>();
  std::uint64_t total = 0;
  for (auto c : m.counts) total += c;
  if (total > r.remaining() / 24) throw ProtocolError("edge count exceeds payload");
  m.edges.resize(total);
  for (auto& e : m.edges) {
    e.src = r.get<std::uint64_t>();
    e.dst = r.get<std::uint64_t>();
    e.edge = r.get<std::uint64_t>();
  }
  r.expect_done();
  return m;
}

template <>
PullRequest decode<PullRequest>(std::span<const std::byte> p) {
  ByteReader r(p);
  PullRequest m;
  m.space = r.get_string();
  m.ids = r.get_array<std::uint64_t>();
  r.expect_done();
  return m;
}

template <>
PullResponse decode<PullResponse>(std::span<const std::byte> p) {
  ByteReader r(p);
  PullResponse m;
  m.width = r.get<std::uint32_t>();
  m.rows = r.get<std::uint32_t>();
  m.data = r.get_vector<float>(static_cast<std::size_t>(m.width) * m.rows);
  r.expect_done();
  return m;
}

template <>
PushRequest decode<PushRequest>(std::span<const std::byte> p) {
  ByteReader r(p);
  PushRequest m;
  m.space = r.get_string();
  m.width = r.get<std::uint32_t>();
  m.ids = r.get_array<std::uint64_t>();
  m.data = r.get_vector<float>(static_cast<std::size_t>(m.width) * m.ids.size());
  r.expect_done();
  return m;
}

template <>
CollectiveRequest decode<CollectiveRequest>(std::span<const std::byte> p) {
  ByteReader r(p);
  CollectiveRequest m;
  m.group = r.get<std::uint32_t>();
  m.rank = r.get<std::uint32_t>();
  m.size = r.get<std::uint32_t>();
  m.round = r.get<std::uint64_t>();
  m.data = r.get_array<float>();
  r.expect_done();
  return m;
}

template <>
CollectiveResponse decode<CollectiveResponse>(std::span<const std::byte> p) {
  ByteReader r(p);
  CollectiveResponse m;
  m.data = r.get_array<float>();
  r.expect_done();
  return m;
}

}  // namespace hfg
