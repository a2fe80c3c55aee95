// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace ghostpeak {

/// Plain AES-128 block encryption (FIPS-197). Table based, not constant time.
class Aes128 {
 public:
  using Block = std::array<std::uint8_t, 16>;

  explicit Aes128(const Block& key);
  Block encrypt(const Block& in) const;

 private:
  std::array<std::array<std::uint8_t, 16>, 11> round_keys_{};
};

}  // namespace ghostpeak
