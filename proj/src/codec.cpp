// SPDX-License-Identifier: Apache-2.0
#include "das/codec.hpp"

#include <algorithm>

namespace das {
namespace {

constexpr char kHexDigits[] = "0123456789ABCDEF";

void put_hex(std::string& out, std::uint8_t value) {
  out.push_back(kHexDigits[value >> 4]);
  out.push_back(kHexDigits[value & 0x0F]);
}

// Uppercase only; the device never emits lowercase.
int hex_value(char c) noexcept {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

bool is_valid(const RawFrame& frame) noexcept {
  return std::all_of(frame.counts.begin(), frame.counts.end(),
                     [](Counts c) { return c <= kMaxCounts; });
}

std::uint8_t frame_checksum(std::string_view body) noexcept {
  unsigned sum = 0;
  for (char c : body) sum += static_cast<unsigned char>(c);
  return static_cast<std::uint8_t>(sum & 0xFFu);
}

std::string encode_frame(const RawFrame& frame) {
  if (!is_valid(frame)) {
    throw InvalidFrame("frame count exceeds 10-bit range");
  }
  std::string out;
  out.reserve(kFrameSize);
  out.push_back(kFrameSync);
  put_hex(out, frame.seq);
  for (Counts c : frame.counts) {
    out.push_back(static_cast<char>('0' + c / 1000));
    out.push_back(static_cast<char>('0' + c / 100 % 10));
    out.push_back(static_cast<char>('0' + c / 10 % 10));
    out.push_back(static_cast<char>('0' + c % 10));
  }
  put_hex(out, frame_checksum(std::string_view(out).substr(kSeqOffset)));
  out.append("\r\n");
  return out;
}

DecodeResult decode_frame(std::string_view bytes) noexcept {
  if (bytes.size() != kFrameSize) {
    return DecodeError{DecodeErrorKind::kWrongLength, bytes.size()};
  }
  if (bytes[0] != kFrameSync) {
    return DecodeError{DecodeErrorKind::kBadSync, 0};
  }

  RawFrame frame;
  const int seq_hi = hex_value(bytes[kSeqOffset]);
  const int seq_lo = hex_value(bytes[kSeqOffset + 1]);
  if (seq_hi < 0) return DecodeError{DecodeErrorKind::kBadSeqHex, kSeqOffset};
  if (seq_lo < 0) return DecodeError{DecodeErrorKind::kBadSeqHex, kSeqOffset + 1};
  frame.seq = static_cast<std::uint8_t>(seq_hi * 16 + seq_lo);

  for (int ch = 0; ch < kChannelCount; ++ch) {
    const std::size_t field = kCountsOffset + static_cast<std::size_t>(ch) * kCountDigits;
    int value = 0;
    for (std::size_t i = 0; i < kCountDigits; ++i) {
      const char c = bytes[field + i];
      if (c < '0' || c > '9') {
        return DecodeError{DecodeErrorKind::kBadCountDigit, field + i};
      }
      value = value * 10 + (c - '0');
    }
    if (value > kMaxCounts) {
      return DecodeError{DecodeErrorKind::kCountOutOfRange, field};
    }
    frame.counts[static_cast<std::size_t>(ch)] = static_cast<Counts>(value);
  }

  const int sum_hi = hex_value(bytes[kChecksumOffset]);
  const int sum_lo = hex_value(bytes[kChecksumOffset + 1]);
  if (sum_hi < 0) return DecodeError{DecodeErrorKind::kBadChecksumHex, kChecksumOffset};
  if (sum_lo < 0) return DecodeError{DecodeErrorKind::kBadChecksumHex, kChecksumOffset + 1};

  if (bytes[kTrailerOffset] != '\r') return DecodeError{DecodeErrorKind::kBadTrailer, kTrailerOffset};
  if (bytes[kTrailerOffset + 1] != '\n') {
    return DecodeError{DecodeErrorKind::kBadTrailer, kTrailerOffset + 1};
  }

  const auto expected = frame_checksum(bytes.substr(kSeqOffset, kChecksumOffset - kSeqOffset));
  if (expected != sum_hi * 16 + sum_lo) {
    return DecodeError{DecodeErrorKind::kChecksumMismatch, kChecksumOffset};
  }
  return frame;
}

std::string_view to_string(DecodeErrorKind kind) noexcept {
  switch (kind) {
    case DecodeErrorKind::kWrongLength: return "wrong-length";
    case DecodeErrorKind::kBadSync: return "bad-sync";
    case DecodeErrorKind::kBadSeqHex: return "bad-seq-hex";
    case DecodeErrorKind::kBadCountDigit: return "bad-count-digit";
    case DecodeErrorKind::kCountOutOfRange: return "count-out-of-range";
    case DecodeErrorKind::kBadChecksumHex: return "bad-checksum-hex";
    case DecodeErrorKind::kBadTrailer: return "bad-trailer";
    case DecodeErrorKind::kChecksumMismatch: return "checksum-mismatch";
  }
  return "unknown";
}

std::string describe(const DecodeError& error) {
  std::string out(to_string(error.kind));
  out += error.kind == DecodeErrorKind::kWrongLength ? " (length " : " at offset ";
  out += std::to_string(error.offset);
  if (error.kind == DecodeErrorKind::kWrongLength) out += ")";
  return out;
}

std::string encode_poll() { return "P\r\n"; }

bool is_poll(std::string_view bytes) noexcept { return bytes == "P\r\n"; }

}  // namespace das
