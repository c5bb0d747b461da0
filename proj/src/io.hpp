#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "util.hpp"

namespace flsim {

// Little-endian primitives for the binary container formats (FLDS1 datasets,
// FLRL1 policy checkpoints, FLCK1 model checkpoints). Encoded bytewise so the
// files are identical across hosts.

class BinWriter {
 public:
  explicit BinWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
  }

  void magic(const char* m) { out_.write(m, 6); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void f64(double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    __builtin_memcpy(&bits, &v, 8);
    put(bits, 8);
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("write to '" + path_ + "' failed");
  }

 private:
  void put(std::uint64_t v, int bytes) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf, bytes);
  }

  std::string path_;
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path + "' for reading");
  }

  void expect_magic(const char* m) {
    char buf[6];
    in_.read(buf, 6);
    if (!in_ || std::string(buf, 6) != std::string(m, 6)) {
      std::string want(m, 5);  // strip trailing newline for the message
      throw FormatError(path_ + ": bad magic at offset 0, expected \"" + want + "\"");
    }
    offset_ = 6;
  }

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(get(4)); }
  double f64() {
    const std::uint64_t bits = get(8);
    double v;
    __builtin_memcpy(&v, &bits, 8);
    return v;
  }

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t get(int bytes) {
    char buf[8];
    in_.read(buf, bytes);
    if (!in_) {
      throw FormatError(path_ + ": truncated at offset " + std::to_string(offset_));
    }
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    }
    offset_ += bytes;
    return v;
  }

  std::string path_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

}  // namespace flsim
