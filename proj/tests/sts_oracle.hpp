// SPDX-License-Identifier: Apache-2.0
// Reference keystream built on OpenSSL's AES-128-ECB, independent of core's cipher.
#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

namespace oracle {

inline std::array<std::uint8_t, 16> aes_block(const std::array<std::uint8_t, 16>& key,
                                              const std::array<std::uint8_t, 16>& in) {
  std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(),
                                                                      EVP_CIPHER_CTX_free);
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, key.data(), nullptr) != 1)
    throw std::runtime_error("EVP init failed");
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
  std::array<std::uint8_t, 16> out{};
  int len = 0;
  if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, in.data(), 16) != 1 || len != 16)
    throw std::runtime_error("EVP update failed");
  return out;
}

// upper96 || BE32(counter + i), MSB-first bits.
inline std::vector<std::uint8_t> sts_bits(const std::array<std::uint8_t, 16>& key,
                                          const std::array<std::uint8_t, 12>& upper96,
                                          std::uint32_t counter, int length_bits) {
  std::vector<std::uint8_t> bits;
  for (int b = 0; b < length_bits / 128; ++b) {
    std::array<std::uint8_t, 16> pt{};
    for (int i = 0; i < 12; ++i) pt[i] = upper96[i];
    const std::uint32_t c = counter + static_cast<std::uint32_t>(b);
    pt[12] = c >> 24;
    pt[13] = (c >> 16) & 0xFF;
    pt[14] = (c >> 8) & 0xFF;
    pt[15] = c & 0xFF;
    for (auto byte : aes_block(key, pt))
      for (int k = 7; k >= 0; --k) bits.push_back((byte >> k) & 1);
  }
  return bits;
}

}  // namespace oracle
