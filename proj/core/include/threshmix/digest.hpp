#pragma once

#include <span>
#include <string>
#include <string_view>

namespace threshmix {

std::string sha256_hex(std::string_view bytes);

/// Digest of a data vector in canonical text form (one %.17g per line), so
/// the hash is stable across CSV formatting differences (headers, CRLF).
std::string sha256_hex(std::span<const double> values);

}  // namespace threshmix
