// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/binary_io.hpp"

#include <array>
#include <bit>
#include <istream>
#include <ostream>

#include "prosfda/error.hpp"

namespace prosfda::io {
namespace {

template <typename U>
void put_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  os.write(buf.data(), buf.size());
}

template <typename U>
U get_le(std::istream& is, std::string_view what) {
  std::array<unsigned char, sizeof(U)> buf{};
  is.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (is.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw DataError("truncated " + std::string(what));
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

void expect_magic(std::istream& is, std::string_view magic, std::string_view what) {
  std::string got(magic.size(), '\0');
  is.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (is.gcount() != static_cast<std::streamsize>(got.size()) || got != magic) {
    throw DataError(std::string(what) + ": bad magic, expected '" + std::string(magic) + "'");
  }
}

void write_u64(std::ostream& os, std::uint64_t v) { put_le(os, v); }
void write_i32(std::ostream& os, std::int32_t v) { put_le(os, static_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }

void write_f64s(std::ostream& os, std::span<const double> v) {
  for (double x : v) write_f64(os, x);
}

void write_i32s(std::ostream& os, std::span<const std::int32_t> v) {
  for (std::int32_t x : v) write_i32(os, x);
}

std::uint64_t read_u64(std::istream& is, std::string_view what) {
  return get_le<std::uint64_t>(is, what);
}

std::int32_t read_i32(std::istream& is, std::string_view what) {
  return static_cast<std::int32_t>(get_le<std::uint32_t>(is, what));
}

double read_f64(std::istream& is, std::string_view what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(is, what));
}

void read_f64s(std::istream& is, std::span<double> out, std::string_view what) {
  for (double& x : out) x = read_f64(is, what);
}

void read_i32s(std::istream& is, std::span<std::int32_t> out, std::string_view what) {
  for (std::int32_t& x : out) x = read_i32(is, what);
}

std::uint64_t read_count(std::istream& is, std::uint64_t limit, std::string_view what) {
  const std::uint64_t v = read_u64(is, what);
  if (v > limit) {
    throw DataError(std::string(what) + ": implausible value " + std::to_string(v));
  }
  return v;
}

}  // namespace prosfda::io
