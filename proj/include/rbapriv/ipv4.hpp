// Copyright 2026 The rbapriv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "rbapriv/errors.hpp"

namespace rbapriv {

/// An IPv4 address held as a host-order 32-bit integer.
class Ipv4 {
 public:
  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t bits) : bits_(bits) {}
  constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : bits_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) |
              (std::uint32_t{c} << 8) | std::uint32_t{d}) {}

  /// Strict dotted-quad parser: four decimal octets, no leading zeros, no
  /// surrounding whitespace. Returns nullopt on anything else.
  static constexpr std::optional<Ipv4> try_parse(std::string_view text) {
    std::uint32_t bits = 0;
    std::size_t pos = 0;
    for (int octet = 0; octet < 4; ++octet) {
      if (octet > 0) {
        if (pos >= text.size() || text[pos] != '.') return std::nullopt;
        ++pos;
      }
      const std::size_t start = pos;
      std::uint32_t value = 0;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9' && pos - start < 3) {
        value = value * 10 + static_cast<std::uint32_t>(text[pos] - '0');
        ++pos;
      }
      const std::size_t len = pos - start;
      if (len == 0 || value > 255) return std::nullopt;
      if (len > 1 && text[start] == '0') return std::nullopt;
      bits = (bits << 8) | value;
    }
    if (pos != text.size()) return std::nullopt;
    return Ipv4(bits);
  }

  static Ipv4 parse(std::string_view text) {
    if (auto ip = try_parse(text)) return *ip;
    if (text.find(':') != std::string_view::npos) {
      throw ParseError("IPv6 addresses are not supported: '" + std::string(text) + "'");
    }
    throw ParseError("not a dotted-quad IPv4 address: '" + std::string(text) + "'");
  }

  constexpr std::uint32_t to_uint() const noexcept { return bits_; }

  constexpr std::array<std::uint8_t, 4> octets() const noexcept {
    return {static_cast<std::uint8_t>(bits_ >> 24), static_cast<std::uint8_t>(bits_ >> 16),
            static_cast<std::uint8_t>(bits_ >> 8), static_cast<std::uint8_t>(bits_)};
  }

  std::string to_string() const {
    const auto o = octets();
    std::string out = std::to_string(o[0]);
    for (std::size_t i = 1; i < 4; ++i) out += '.' + std::to_string(o[i]);
    return out;
  }

  constexpr auto operator<=>(const Ipv4&) const = default;

 private:
  std::uint32_t bits_ = 0;
};

/// Network mask keeping the leading `prefix_len` bits.
constexpr std::uint32_t prefix_mask(int prefix_len) noexcept {
  return prefix_len <= 0 ? 0u : (prefix_len >= 32 ? ~0u : ~0u << (32 - prefix_len));
}

/// Zeroes the trailing `bits` bits of the address; `bits` must lie in [0, 32].
constexpr Ipv4 truncate_ip(Ipv4 ip, int bits) {
  if (bits < 0 || bits > 32) {
    throw ArgumentError("truncation bits must lie in [0, 32], got " + std::to_string(bits));
  }
  return Ipv4(ip.to_uint() & prefix_mask(32 - bits));
}

/// An IPv4 network `address/prefix_len`. The address is normalised to the
/// network address on construction.
class Cidr {
 public:
  constexpr Cidr() = default;
  constexpr Cidr(Ipv4 address, int prefix_len)
      : network_(address.to_uint() & prefix_mask(prefix_len)), prefix_len_(prefix_len) {
    if (prefix_len < 0 || prefix_len > 32) throw ArgumentError("CIDR prefix length out of range");
  }

  /// Accepts "a.b.c.d/n" and, as a /32, a bare "a.b.c.d".
  static Cidr parse(std::string_view text) {
    const auto slash = text.find('/');
    const Ipv4 address = Ipv4::parse(text.substr(0, slash));
    if (slash == std::string_view::npos) return Cidr(address, 32);
    const std::string_view len_text = text.substr(slash + 1);
    int len = -1;
    const auto [ptr, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
    if (ec != std::errc{} || ptr != len_text.data() + len_text.size() || len < 0 || len > 32) {
      throw ParseError("invalid CIDR prefix length in '" + std::string(text) + "'");
    }
    return Cidr(address, len);
  }

  constexpr Ipv4 network() const noexcept { return network_; }
  constexpr int prefix_len() const noexcept { return prefix_len_; }
  constexpr std::uint64_t size() const noexcept { return std::uint64_t{1} << (32 - prefix_len_); }
  constexpr Ipv4 first() const noexcept { return network_; }
  constexpr Ipv4 last() const noexcept {
    return Ipv4(network_.to_uint() | ~prefix_mask(prefix_len_));
  }
  constexpr bool contains(Ipv4 ip) const noexcept {
    return (ip.to_uint() & prefix_mask(prefix_len_)) == network_.to_uint();
  }
  /// The address at `offset` from the network address; offset < size().
  constexpr Ipv4 at(std::uint64_t offset) const noexcept {
    return Ipv4(network_.to_uint() + static_cast<std::uint32_t>(offset));
  }

  std::string to_string() const { return network_.to_string() + "/" + std::to_string(prefix_len_); }

  constexpr auto operator<=>(const Cidr&) const = default;

 private:
  Ipv4 network_;
  int prefix_len_ = 32;
};

}  // namespace rbapriv
