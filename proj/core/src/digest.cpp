#include "threshmix/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <stdexcept>

namespace threshmix {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    char buf[3];
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex.append(buf, 2);
  }
  return hex;
}

std::string sha256_hex(std::span<const double> values) {
  std::string canonical;
  canonical.reserve(values.size() * 24);
  char buf[40];
  for (double v : values) {
    const int n = std::snprintf(buf, sizeof buf, "%.17g\n", v);
    canonical.append(buf, static_cast<std::size_t>(n));
  }
  return sha256_hex(canonical);
}

}  // namespace threshmix
