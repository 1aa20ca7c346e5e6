/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/wire.h
 * @brief Frame format and per-verb payload codecs.
 *
 * Every message on a connection is a frame:
 *
 *   offset  size  field
 *   0       4     magic "HFN1"
 *   4       4     u32 payload length
 *   8       8     u64 request ID
 *   16      1     u8 verb
 *   17      n     payload
 *
 * All scalars are little-endian. Arrays are a u32 element count followed by
 * the elements. A response carries the request's ID and verb; a failed
 * request is answered with the verb's high bit set (kErrorFlag) and a UTF-8
 * message as payload.
 */
#ifndef HFG_WIRE_H_
#define HFG_WIRE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hfg/bytes.h"
#include "hfg/graph.h"

namespace hfg {

enum class Verb : std::uint8_t {
  SampleNeighbors = 1,
  PullData = 2,
  PushData = 3,
  Barrier = 4,
  Allreduce = 5,
  Shutdown = 6,
};

inline constexpr std::uint8_t kErrorFlag = 0x80;
inline constexpr char kFrameMagic[4] = {'H', 'F', 'N', '1'};
inline constexpr std::size_t kFrameHeaderBytes = 17;
/// Frames larger than this are rejected as protocol errors.
inline constexpr std::uint32_t kMaxFramePayload = 256u << 20;
/// Remote pulls are split so each response stays under this size.
inline constexpr std::size_t kMaxRpcBytes = 64u << 20;

const char* verb_name(Verb v);
bool is_known_verb(std::uint8_t raw);

struct FrameHeader {
  std::uint32_t payload_length = 0;
  std::uint64_t request_id = 0;
  Verb verb = Verb::Shutdown;
  bool is_error = false;
};

struct Frame {
  FrameHeader header;
  Bytes payload;
};

Bytes encode_frame(std::uint64_t request_id, Verb verb, std::span<const std::byte> payload,
                   bool is_error = false);
/// Validates magic, verb, and length bound. Throws ProtocolError.
FrameHeader decode_frame_header(std::span<const std::byte, kFrameHeaderBytes> raw);
/// Decodes one complete frame occupying all of `raw`.
Frame decode_frame(std::span<const std::byte> raw);

inline constexpr std::uint32_t kFanoutFull = 0xFFFFFFFFu;

struct SampledEdge {
  VertexId src = 0;
  VertexId dst = 0;
  EdgeId edge = 0;
  friend bool operator==(const SampledEdge&, const SampledEdge&) = default;
};

struct SampleRequest {
  std::uint8_t layer = 0;
  std::uint32_t fanout = 0;
  std::vector<VertexId> seeds;
  std::array<std::uint64_t, 2> rng_key{};
  friend bool operator==(const SampleRequest&, const SampleRequest&) = default;
};

/// Edges grouped per seed, in request seed order.
struct SampleResponse {
  std::vector<std::uint32_t> counts;
  std::vector<SampledEdge> edges;
  friend bool operator==(const SampleResponse&, const SampleResponse&) = default;
};

struct PullRequest {
  std::string space;
  std::vector<std::uint64_t> ids;
  friend bool operator==(const PullRequest&, const PullRequest&) = default;
};

struct PullResponse {
  std::uint32_t width = 0;
  std::uint32_t rows = 0;
  std::vector<float> data;
  friend bool operator==(const PullResponse&, const PullResponse&) = default;
};

struct PushRequest {
  std::string space;
  std::uint32_t width = 0;
  std::vector<std::uint64_t> ids;
  std::vector<float> data;
  friend bool operator==(const PushRequest&, const PushRequest&) = default;
};

/// BARRIER and ALLREDUCE; `data` is empty for a barrier.
struct CollectiveRequest {
  std::uint32_t group = 0;
  std::uint32_t rank = 0;
  std::uint32_t size = 1;
  std::uint64_t round = 0;
  std::vector<float> data;
  friend bool operator==(const CollectiveRequest&, const CollectiveRequest&) = default;
};

struct CollectiveResponse {
  std::vector<float> data;
  friend bool operator==(const CollectiveResponse&, const CollectiveResponse&) = default;
};

Bytes encode(const SampleRequest& m);
Bytes encode(const SampleResponse& m);
Bytes encode(const PullRequest& m);
Bytes encode(const PullResponse& m);
Bytes encode(const PushRequest& m);
Bytes encode(const CollectiveRequest& m);
Bytes encode(const CollectiveResponse& m);

template <typename T>
T decode(std::span<const std::byte> payload);

template <> SampleRequest decode<SampleRequest>(std::span<const std::byte>);
template <> SampleResponse decode<SampleResponse>(std::span<const std::byte>);
template <> PullRequest decode<PullRequest>(std::span<const std::byte>);
template <> PullResponse decode<PullResponse>(std::span<const std::byte>);
template <> PushRequest decode<PushRequest>(std::span<const std::byte>);
template <> CollectiveRequest decode<CollectiveRequest>(std::span<const std::byte>);
template <> CollectiveResponse decode<CollectiveResponse>(std::span<const std::byte>);

}  // namespace hfg

#endif  // HFG_WIRE_H_
