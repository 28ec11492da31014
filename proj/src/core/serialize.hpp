#pragma once

#include "core/types.hpp"

#include <cstdint>
#include <cstring>
#include <vector>

namespace qhs::detail {

// Little-endian byte packing for the checkpoint blob. Scalars are copied
// bit-exactly, so a round trip reproduces every double unchanged.
class ByteWriter {
 public:
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void i32(std::int32_t v) { raw(&v, sizeof v); }
  void i64(std::int64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }

  void vector(const Vector& v) {
    i64(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }

  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() { return take<std::uint8_t>(); }
  std::uint32_t u32() { return take<std::uint32_t>(); }
  std::int32_t i32() { return take<std::int32_t>(); }
  std::int64_t i64() { return take<std::int64_t>(); }
  double f64() { return take<double>(); }

  Vector vector() {
    std::int64_t n = i64();
    require(n >= 0 && static_cast<std::size_t>(n) <= remaining() / sizeof(double),
            ErrorCode::BadCheckpoint, "corrupt checkpoint: bad vector length");
    Vector v(n);
    for (std::int64_t i = 0; i < n; ++i) v[i] = f64();
    return v;
  }

  std::size_t remaining() const { return size_ - at_; }
  bool done() const { return at_ == size_; }

 private:
  template <typename T>
  T take() {
    require(remaining() >= sizeof(T), ErrorCode::BadCheckpoint,
            "corrupt checkpoint: truncated data");
    T v;
    std::memcpy(&v, data_ + at_, sizeof(T));
    at_ += sizeof(T);
    return v;
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t at_ = 0;
};

}  // namespace qhs::detail
