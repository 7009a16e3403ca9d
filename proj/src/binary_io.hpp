// SPDX-License-Identifier: Apache-2.0

// Little-endian byte buffers for the index file.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "rwlsh/error.hpp"

namespace rwlsh::detail {

class ByteWriter {
 public:
  template <typename T>
    requires std::is_integral_v<T>
  void put(T value) {
    using U = std::make_unsigned_t<T>;
    auto bits = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buffer_.push_back(static_cast<char>(bits & 0xFFU));
      if constexpr (sizeof(T) > 1) bits = static_cast<U>(bits >> 8);
    }
  }

  void put_f64(double value) { put(std::bit_cast<std::uint64_t>(value)); }

  template <typename T>
  void put_array(const std::vector<T>& values) {
    put(static_cast<std::uint64_t>(values.size()));
    if constexpr (std::is_same_v<T, double>) {
      for (double v : values) put_f64(v);
    } else {
      for (T v : values) put(v);
    }
  }

  void put_bytes(std::string_view bytes) { buffer_.append(bytes); }

  const std::string& buffer() const noexcept { return buffer_; }
  std::string& buffer() noexcept { return buffer_; }

 private:
  std::string buffer_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  template <typename T>
    requires std::is_integral_v<T>
  T get() {
    need(sizeof(T));
    using U = std::make_unsigned_t<T>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits = static_cast<U>(bits | (static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i)));
    }
    pos_ += sizeof(T);
    return static_cast<T>(bits);
  }

  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  template <typename T>
  std::vector<T> get_array(std::size_t max_count) {
    const auto count = get<std::uint64_t>();
    if (count > max_count || count * sizeof(T) > data_.size() - pos_) {
      fail(ErrorCategory::kCorruption, "index file: array length out of bounds");
    }
    std::vector<T> out(static_cast<std::size_t>(count));
    if constexpr (std::is_same_v<T, double>) {
      for (auto& v : out) v = get_f64();
    } else {
      for (auto& v : out) v = get<T>();
    }
    return out;
  }

  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool at_end() const noexcept { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      fail(ErrorCategory::kCorruption, "index file is truncated");
    }
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace rwlsh::detail
