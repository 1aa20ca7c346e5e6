/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/bytes.h
 * @brief Little-endian byte buffers used by the wire protocol and the binary
 *        file formats.
 */
#ifndef HFG_BYTES_H_
#define HFG_BYTES_H_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "hfg/error.h"

namespace hfg {

using Bytes = std::vector<std::byte>;

namespace detail {

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
    return v;
  } else {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }
}

}  // namespace detail

class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(Bytes& out) : out_(&out) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    v = detail::byteswap_if_big(v);
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    buf().insert(buf().end(), p, p + sizeof(T));
  }

  /// Raw array of scalars without a length prefix.
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_span(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const std::byte*>(values.data());
      buf().insert(buf().end(), p, p + values.size_bytes());
    } else {
      for (T v : values) put(v);
    }
  }

  /// u32 element count followed by the elements.
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_array(std::span<const T> values) {
    put<std::uint32_t>(checked_u32(values.size()));
    put_span(values);
  }

  void put_string(std::string_view s) {
    put<std::uint32_t>(checked_u32(s.size()));
    const auto* p = reinterpret_cast<const std::byte*>(s.data());
    buf().insert(buf().end(), p, p + s.size());
  }

  void put_raw(std::span<const std::byte> raw) { buf().insert(buf().end(), raw.begin(), raw.end()); }

  Bytes take() { return std::move(owned_); }
  std::size_t size() const { return out_ ? out_->size() : owned_.size(); }

 private:
  static std::uint32_t checked_u32(std::size_t n) {
    if (n > 0xFFFFFFFFu) throw ArgumentError("array too long for u32 length prefix");
    return static_cast<std::uint32_t>(n);
  }
  Bytes& buf() { return out_ ? *out_ : owned_; }

  Bytes owned_;
  Bytes* out_ = nullptr;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> data) : data_(data) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return detail::byteswap_if_big(v);
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void get_span(std::span<T> out) {
    need(out.size_bytes());
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
    if constexpr (std::endian::native != std::endian::little) {
      for (auto& v : out) v = detail::byteswap_if_big(v);
    }
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  std::vector<T> get_vector(std::size_t count) {
    if (count > remaining() / sizeof(T)) throw ProtocolError("array length exceeds buffer");
    std::vector<T> out(count);
    get_span(std::span<T>(out));
    return out;
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  std::vector<T> get_array() {
    return get_vector<T>(get<std::uint32_t>());
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::span<const std::byte> get_raw(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

  /// Throws ProtocolError if unread bytes remain.
  void expect_done() const {
    if (!done()) throw ProtocolError("trailing bytes after payload");
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw ProtocolError("payload truncated");
  }

  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

}  // namespace hfg

#endif  // HFG_BYTES_H_
