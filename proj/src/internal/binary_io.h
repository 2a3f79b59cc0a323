/*
 * Copyright 2026 The Fedguard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDGUARD_SRC_INTERNAL_BINARY_IO_H_
#define FEDGUARD_SRC_INTERNAL_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "fedguard/error.h"

namespace fedguard::internal {

// Little-endian primitive codec shared by the ADFP and ADWT containers.
class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  void U8(std::uint8_t v) { Put(&v, 1); }
  void U16(std::uint16_t v) { Unsigned(v, 2); }
  void U32(std::uint32_t v) { Unsigned(v, 4); }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }
  void Bytes(const std::string& s) { Put(s.data(), s.size()); }

 private:
  void Unsigned(std::uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    Put(buf, n);
  }
  void Put(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }

  std::ostream& out_;
};

class LeReader {
 public:
  LeReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  std::uint8_t U8() { return static_cast<std::uint8_t>(Unsigned(1)); }
  std::uint16_t U16() { return static_cast<std::uint16_t>(Unsigned(2)); }
  std::uint32_t U32() { return static_cast<std::uint32_t>(Unsigned(4)); }
  float F32() { return std::bit_cast<float>(U32()); }
  std::string Bytes(std::size_t n) {
    std::string s(n, '\0');
    Get(s.data(), n);
    return s;
  }
  bool AtEnd() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::uint64_t Unsigned(int n) {
    unsigned char buf[8];
    Get(buf, static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  void Get(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error("malformed_header", what_ + ": unexpected end of file");
    }
  }

  std::istream& in_;
  std::string what_;
};

}  // namespace fedguard::internal

#endif  // FEDGUARD_SRC_INTERNAL_BINARY_IO_H_
