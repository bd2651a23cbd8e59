#include "memlog/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <iterator>

namespace memlog {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  c = ::crc32(c, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(c);
}

std::uint64_t IoFaults::admit(std::uint64_t n) {
  if (!budget_) return n;
  const std::uint64_t ok = std::min(n, *budget_);
  *budget_ -= ok;
  return ok;
}

void ByteWriter::str(std::string_view s) {
  u16(static_cast<std::uint16_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

std::string ByteReader::str() {
  const std::size_t n = u16();
  if (remaining() < n) throw MalformedLogError("string overruns buffer");
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::uint64_t ByteReader::get(std::size_t n) {
  if (remaining() < n) throw MalformedLogError("read past end of buffer");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += n;
  return v;
}

FileSink::FileSink(const std::filesystem::path& path, bool truncate, IoFaults* faults)
    : faults_(faults) {
  auto mode = std::ios::binary | std::ios::out | (truncate ? std::ios::trunc : std::ios::app);
  out_.open(path, mode);
  if (!out_) throw IoError("cannot open " + path.string());
  if (!truncate && std::filesystem::exists(path)) size_ = std::filesystem::file_size(path);
}

void FileSink::write(std::span<const std::uint8_t> bytes) {
  const std::uint64_t ok = faults_ ? faults_->admit(bytes.size()) : bytes.size();
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(ok));
  size_ += ok;
  if (ok < bytes.size()) {
    out_.flush();
    throw IoError("injected write failure");
  }
  if (!out_) throw IoError("write failed");
}

void FileSink::flush() {
  out_.flush();
  if (!out_) throw IoError("flush failed");
}

void FileSink::close() {
  if (out_.is_open()) out_.close();
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace memlog
