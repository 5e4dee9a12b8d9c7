// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace driftbench {

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Hex SHA-256 of a file's contents.
std::string sha256_file(const std::string& path);

/// FNV-1a over the raw bytes of a double array; cheap in-memory fingerprint.
std::uint64_t fnv1a(std::span<const double> values, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace driftbench
