// Copyright 2026 The latte Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian primitives shared by the dump and checkpoint formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "latte/core.hpp"

namespace latte::binary {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> bytes{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                  static_cast<char>((v >> 16) & 0xFF),
                                  static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes.data(), 4);
}

inline void write_f32(std::ostream& out, float f) { write_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline void write_bytes(std::ostream& out, const std::string& s) {
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw FormatError(detail::concat("truncated stream while reading ", what));
  }
}

inline std::uint32_t read_u32(std::istream& in, const char* what) {
  std::array<unsigned char, 4> b{};
  read_exact(in, reinterpret_cast<char*>(b.data()), 4, what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline float read_f32(std::istream& in, const char* what) {
  return std::bit_cast<float>(read_u32(in, what));
}

inline std::string read_string(std::istream& in, std::size_t n, const char* what) {
  std::string s(n, '\0');
  if (n > 0) read_exact(in, s.data(), n, what);
  return s;
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw FormatError(detail::concat(what, " exceeds 32-bit range"));
  return static_cast<std::uint32_t>(v);
}

}  // namespace latte::binary
