#include <gtest/gtest.h>

#include <bit>
#include <cstring>

#include "hfg/error.h"
#include "hfg/rng.h"
#include "hfg/wire.h"

namespace hfg {
namespace {

std::uint64_t read_le(const Bytes& b, std::size_t off, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v |= std::uint64_t(std::to_integer<std::uint8_t>(b[off + i])) << (8 * i);
  return v;
}

TEST(Frame, HeaderLayoutIsBitExact) {
  const Bytes payload{std::byte{0xAB}, std::byte{0xCD}, std::byte{0xEF}};
  const Bytes f = encode_frame(0x0102030405060708ULL, Verb::PullData, payload);
  ASSERT_EQ(f.size(), kFrameHeaderBytes + 3);
  EXPECT_EQ(std::memcmp(f.data(), "HFN1", 4), 0);
  EXPECT_EQ(read_le(f, 4, 4), 3u);
  EXPECT_EQ(read_le(f, 8, 8), 0x0102030405060708ULL);
  EXPECT_EQ(std::to_integer<int>(f[16]), 2);
  EXPECT_EQ(f[17], std::byte{0xAB});
  const Bytes e = encode_frame(1, Verb::PullData, payload, true);
  EXPECT_EQ(std::to_integer<int>(e[16]), 2 | kErrorFlag);
}

TEST(Frame, RoundTripsOneBytePayload) {
  const Bytes payload{std::byte{7}};
  const Frame f = decode_frame(encode_frame(9, Verb::Barrier, payload));
  EXPECT_EQ(f.header.request_id, 9u);
  EXPECT_EQ(f.header.verb, Verb::Barrier);
  EXPECT_FALSE(f.header.is_error);
  EXPECT_EQ(f.payload, payload);
}

TEST(Frame, RejectsBadMagicUnknownVerbAndLengthMismatch) {
  Bytes f = encode_frame(1, Verb::Shutdown, {});
  Bytes bad = f;
  bad[0] = std::byte{'X'};
  EXPECT_THROW(decode_frame(bad), ProtocolError);
  bad = f;
  bad[16] = std::byte{42};
  EXPECT_THROW(decode_frame(bad), ProtocolError);
  bad = f;
  bad.push_back(std::byte{0});
  EXPECT_THROW(decode_frame(bad), ProtocolError);
  bad = f;
  bad.resize(10);
  EXPECT_THROW(decode_frame(bad), ProtocolError);
  bad = f;
  const std::uint32_t huge = kMaxFramePayload + 1;
  std::memcpy(bad.data() + 4, &huge, 4);
  EXPECT_THROW(decode_frame_header(std::span<const std::byte, kFrameHeaderBytes>(bad.data(), kFrameHeaderBytes)),
               ProtocolError);
}

TEST(Frame, VerbNames) {
  EXPECT_STREQ(verb_name(Verb::SampleNeighbors), "SAMPLE_NEIGHBORS");
  EXPECT_STREQ(verb_name(Verb::Allreduce), "ALLREDUCE");
  EXPECT_TRUE(is_known_verb(6));
  EXPECT_FALSE(is_known_verb(0));
  EXPECT_FALSE(is_known_verb(7));
}

TEST(Payload, RandomMessagesRoundTrip) {
  StreamRng rng({21});
  for (int i = 0; i < 500; ++i) {
    SampleRequest sr{static_cast<std::uint8_t>(rng.uniform(4)), static_cast<std::uint32_t>(rng.next()), {}, {rng.next(), rng.next()}};
    for (std::uint64_t j = rng.uniform(20); j > 0; --j) sr.seeds.push_back(rng.next());
    EXPECT_EQ(decode<SampleRequest>(encode(sr)), sr);

    SampleResponse resp;
    for (std::uint64_t s = rng.uniform(10); s > 0; --s) {
      const auto c = static_cast<std::uint32_t>(rng.uniform(4));
      resp.counts.push_back(c);
      for (std::uint32_t e = 0; e < c; ++e) resp.edges.push_back({rng.next(), rng.next(), rng.next()});
    }
    EXPECT_EQ(decode<SampleResponse>(encode(resp)), resp);

    PullRequest pr{"space" + std::to_string(i), {}};
    for (std::uint64_t j = rng.uniform(20); j > 0; --j) pr.ids.push_back(rng.next());
    EXPECT_EQ(decode<PullRequest>(encode(pr)), pr);

    PullResponse pl{3, static_cast<std::uint32_t>(rng.uniform(5)), {}};
    for (std::uint32_t j = 0; j < pl.width * pl.rows; ++j) pl.data.push_back(float(rng.uniform_real()));
    EXPECT_EQ(decode<PullResponse>(encode(pl)), pl);

    PushRequest ps{"x", 2, {rng.next()}, {1.5f, -2.0f}};
    EXPECT_EQ(decode<PushRequest>(encode(ps)), ps);

    CollectiveRequest cr{1, 2, 4, rng.next(), {float(rng.uniform_real())}};
    EXPECT_EQ(decode<CollectiveRequest>(encode(cr)), cr);
    CollectiveResponse cs{{0.25f, 0.5f}};
    EXPECT_EQ(decode<CollectiveResponse>(encode(cs)), cs);
  }
}

TEST(Payload, NanBitsSurvive) {
  const float nan = std::bit_cast<float>(0x7FC01234u);
  const CollectiveResponse r{{nan, -0.0f}};
  const auto back = decode<CollectiveResponse>(encode(r));
  EXPECT_EQ(std::bit_cast<std::uint32_t>(back.data[0]), 0x7FC01234u);
  EXPECT_EQ(std::bit_cast<std::uint32_t>(back.data[1]), 0x80000000u);
}

TEST(Payload, TruncatedOrInconsistentPayloadsAreProtocolErrors) {
  Bytes b = encode(PullRequest{"feat", {1, 2, 3}});
  b.pop_back();
  EXPECT_THROW(decode<PullRequest>(b), ProtocolError);
  Bytes extra = encode(PullRequest{"feat", {1}});
  extra.push_back(std::byte{0});
  EXPECT_THROW(decode<PullRequest>(extra), ProtocolError);
  SampleResponse bad;
  bad.counts = {2};
  bad.edges = {{1, 2, 3}};
  EXPECT_THROW(decode<SampleResponse>(encode(bad)), ProtocolError);
  PullResponse shape{4, 2, {1.0f}};
  EXPECT_THROW(decode<PullResponse>(encode(shape)), ProtocolError);
}

}  // namespace
}  // namespace hfg
