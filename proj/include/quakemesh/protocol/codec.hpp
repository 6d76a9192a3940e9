// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quakemesh/expected.hpp"
#include "quakemesh/protocol/messages.hpp"

namespace quakemesh::protocol {

inline constexpr std::size_t kMaxBodyBytes = 1u << 20;
inline constexpr std::size_t kFrameHeaderBytes = 4;
inline constexpr int kSignificantDigits = 9;

enum class CodecError {
  PayloadTooLarge,
  TruncatedFrame,
  MalformedBody,
  UnknownKind,
  LengthMismatch,
};

std::string_view to_string(CodecError e) noexcept;

using Bytes = std::vector<std::uint8_t>;

/// Rounds to the decimal precision carried on the wire.
double quantize(double v) noexcept;

/// Canonical body text: {"kind","sender","seq","payload"} in that order, no
/// whitespace, decimals at most kSignificantDigits significant digits.
std::string encode_body(const Envelope& e);

/// Big-endian u32 body length followed by the body.
Expected<Bytes, CodecError> encode(const Envelope& e);

Expected<Envelope, CodecError> decode_body(std::string_view body);
Expected<Envelope, CodecError> decode(std::span<const std::uint8_t> frame);

/// Incremental frame splitter for byte streams. A frame with a bad body is
/// reported and skipped; an oversized length prefix poisons the stream.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Next complete frame, if any. Returns nullopt when more bytes are needed.
  std::optional<Expected<Envelope, CodecError>> next();
  bool poisoned() const noexcept { return poisoned_; }
  std::size_t buffered() const noexcept { return buf_.size() - pos_; }

 private:
  Bytes buf_;
  std::size_t pos_ = 0;
  bool poisoned_ = false;
};

}  // namespace quakemesh::protocol
