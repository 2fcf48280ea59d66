// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prosfda::io {

// Little-endian primitives shared by every binary container in the library.
// Readers throw DataError on short reads, naming `what` in the message.

void write_magic(std::ostream& os, std::string_view magic);
void expect_magic(std::istream& is, std::string_view magic, std::string_view what);

void write_u64(std::ostream& os, std::uint64_t v);
void write_i32(std::ostream& os, std::int32_t v);
void write_f64(std::ostream& os, double v);
void write_f64s(std::ostream& os, std::span<const double> v);
void write_i32s(std::ostream& os, std::span<const std::int32_t> v);

std::uint64_t read_u64(std::istream& is, std::string_view what);
std::int32_t read_i32(std::istream& is, std::string_view what);
double read_f64(std::istream& is, std::string_view what);
void read_f64s(std::istream& is, std::span<double> out, std::string_view what);
void read_i32s(std::istream& is, std::span<std::int32_t> out, std::string_view what);

/// Reads a u64 count and rejects values above `limit`.
std::uint64_t read_count(std::istream& is, std::uint64_t limit, std::string_view what);

}  // namespace prosfda::io
