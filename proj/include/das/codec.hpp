// SPDX-License-Identifier: Apache-2.0
// Wire format of the 8-channel polled ADC device.
//
// Poll request (3 bytes):   'P' CR LF
// Data frame   (39 bytes):  '$' SS DDDD x8 CC CR LF
//   SS   sequence number, two uppercase hex digits
//   DDDD zero-padded decimal ADC count per channel, AN0 first
//   CC   (sum of bytes 1..34) mod 256, two uppercase hex digits
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace das {

inline constexpr int kChannelCount = 8;
inline constexpr int kMaxCounts = 1023;

inline constexpr std::size_t kFrameSize = 39;
inline constexpr std::size_t kSeqOffset = 1;
inline constexpr std::size_t kCountsOffset = 3;
inline constexpr std::size_t kCountDigits = 4;
inline constexpr std::size_t kChecksumOffset = 35;
inline constexpr std::size_t kTrailerOffset = 37;
inline constexpr char kFrameSync = '$';

using Counts = std::uint16_t;

struct RawFrame {
  std::uint8_t seq = 0;
  std::array<Counts, kChannelCount> counts{};

  friend bool operator==(const RawFrame&, const RawFrame&) = default;
};

/// True when every count is within the 10-bit range.
bool is_valid(const RawFrame& frame) noexcept;

class InvalidFrame : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws InvalidFrame if any count exceeds 1023.
std::string encode_frame(const RawFrame& frame);

/// Checksum over an arbitrary byte range: sum of byte values mod 256.
std::uint8_t frame_checksum(std::string_view body) noexcept;

enum class DecodeErrorKind {
  kWrongLength,
  kBadSync,
  kBadSeqHex,
  kBadCountDigit,
  kCountOutOfRange,
  kBadChecksumHex,
  kBadTrailer,
  kChecksumMismatch,
};

std::string_view to_string(DecodeErrorKind kind) noexcept;

struct DecodeError {
  DecodeErrorKind kind;
  std::size_t offset;  // first offending byte (for length errors: the received length)

  friend bool operator==(const DecodeError&, const DecodeError&) = default;
};

std::string describe(const DecodeError& error);

using DecodeResult = std::variant<RawFrame, DecodeError>;

/// Total over arbitrary input; never throws.
DecodeResult decode_frame(std::string_view bytes) noexcept;

std::string encode_poll();
bool is_poll(std::string_view bytes) noexcept;

}  // namespace das
