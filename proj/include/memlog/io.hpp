#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memlog/error.hpp"

namespace memlog {

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Test hook: makes a write fail once a byte budget is exhausted. The bytes
// that fit in the budget are still written, so the file ends torn.
class IoFaults {
 public:
  void fail_after(std::uint64_t bytes) { budget_ = bytes; }
  void clear() { budget_.reset(); }
  bool armed() const { return budget_.has_value(); }
  // Returns how many of `n` bytes may be written.
  std::uint64_t admit(std::uint64_t n);

 private:
  std::optional<std::uint64_t> budget_;
};

// Little-endian fixed-width encoder.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v)); }
  void str(std::string_view s);
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  std::vector<std::uint8_t>& buffer() { return buf_; }
  const std::vector<std::uint8_t>& buffer() const { return buf_; }

 private:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

// Little-endian decoder over a byte span. Throws MalformedLogError on
// overrun.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  std::string str();

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::uint64_t get(std::size_t n);
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// Append-only file. Honors IoFaults: a failing write leaves a torn tail and
// throws IoError.
class FileSink {
 public:
  FileSink() = default;
  FileSink(const std::filesystem::path& path, bool truncate, IoFaults* faults = nullptr);

  void write(std::span<const std::uint8_t> bytes);
  void flush();
  void close();
  bool is_open() const { return out_.is_open(); }
  std::uint64_t size() const { return size_; }

 private:
  std::ofstream out_;
  IoFaults* faults_ = nullptr;
  std::uint64_t size_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace memlog
