#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uesentry/catalog.hpp"
#include "uesentry/result.hpp"

namespace uesentry {

// Protection flags on the SCP/1 wire: bit0 = integrity protected,
// bit1 = ciphered. Ciphered without integrity is invalid.
enum class Protection : std::uint8_t {
  None = 0x00,
  IntegrityOnly = 0x01,
  IntegrityAndCiphering = 0x03,
};

inline bool integrity_protected(Protection p) {
  return (static_cast<std::uint8_t>(p) & 0x01) != 0;
}

inline std::string to_string(Protection p) {
  switch (p) {
    case Protection::None: return "None";
    case Protection::IntegrityOnly: return "IntegrityOnly";
    case Protection::IntegrityAndCiphering: return "IntegrityAndCiphering";
  }
  return "None";
}

inline std::optional<Protection> protection_from_string(std::string_view s) {
  if (s == "None") return Protection::None;
  if (s == "IntegrityOnly") return Protection::IntegrityOnly;
  if (s == "IntegrityAndCiphering") return Protection::IntegrityAndCiphering;
  return std::nullopt;
}

struct InformationElement {
  std::uint8_t tag = 0;
  Bytes value;

  bool operator==(const InformationElement&) const = default;
};

/// One simplified NAS/RRC control-plane message (SCP/1).
struct CpMessage {
  Layer layer = Layer::Nas;
  std::uint8_t msg_type = 0;
  Protection protection = Protection::None;
  std::vector<InformationElement> ies;

  bool operator==(const CpMessage&) const = default;

  const InformationElement* find_ie(std::uint8_t tag) const {
    for (const auto& ie : ies)
      if (ie.tag == tag) return &ie;
    return nullptr;
  }
  bool has_ie(std::uint8_t tag) const { return find_ie(tag) != nullptr; }

  std::string type_name() const {
    const auto* m = catalog::find_message(layer, msg_type);
    return m ? std::string(m->name) : "unknown";
  }
};

namespace wire {

inline void put_u16be(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

inline void put_u32be(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

inline std::uint16_t get_u16be(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

inline std::uint32_t get_u32be(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

}  // namespace wire

/// Encodes to `[layer:1][msg_type:1][protection:1][ie_block_len:2 BE][ie_block]`
/// where each IE is `[tag:1][len:2 BE][value]`.
inline Result<Bytes, CodecError> encode_message(const CpMessage& msg) {
  const auto* info = catalog::find_message(msg.layer, msg.msg_type);
  if (!info)
    return CodecError{"message type 0x" + std::to_string(msg.msg_type) + " not in catalog for layer " +
                      to_string(msg.layer)};
  const auto p = static_cast<std::uint8_t>(msg.protection);
  if ((p & ~0x03u) != 0) return CodecError{"unknown protection bits"};
  if ((p & 0x02) && !(p & 0x01)) return CodecError{"ciphered requires integrity"};

  Bytes ie_block;
  for (const auto& ie : msg.ies) {
    if (!catalog::find_ie(ie.tag)) return CodecError{"IE tag not in catalog"};
    if (ie.value.size() > 0xFFFF) return CodecError{"IE value exceeds 65535 bytes"};
    ie_block.push_back(ie.tag);
    wire::put_u16be(ie_block, static_cast<std::uint16_t>(ie.value.size()));
    ie_block.insert(ie_block.end(), ie.value.begin(), ie.value.end());
    if (ie_block.size() > 0xFFFF) return CodecError{"IE block exceeds 65535 bytes"};
  }

  Bytes out;
  out.reserve(5 + ie_block.size());
  out.push_back(static_cast<std::uint8_t>(msg.layer));
  out.push_back(msg.msg_type);
  out.push_back(p);
  wire::put_u16be(out, static_cast<std::uint16_t>(ie_block.size()));
  out.insert(out.end(), ie_block.begin(), ie_block.end());
  return out;
}

/// Inverse of encode_message on valid encodings. Rejects trailing bytes,
/// truncation, unknown codes and inconsistent lengths; never reads past the
/// buffer.
inline Result<CpMessage, CodecError> decode_message(std::span<const std::uint8_t> buf) {
  if (buf.size() < 5) return CodecError{"truncated header"};
  CpMessage msg;
  const std::uint8_t layer_byte = buf[0];
  if (layer_byte != 0x01 && layer_byte != 0x02) return CodecError{"unknown layer"};
  msg.layer = static_cast<Layer>(layer_byte);
  msg.msg_type = buf[1];
  if (!catalog::find_message(msg.layer, msg.msg_type)) return CodecError{"unknown message type"};
  const std::uint8_t p = buf[2];
  if ((p & ~0x03u) != 0) return CodecError{"unknown protection bits"};
  if ((p & 0x02) && !(p & 0x01)) return CodecError{"ciphered requires integrity"};
  msg.protection = static_cast<Protection>(p);

  const std::size_t ie_len = wire::get_u16be(buf.data() + 3);
  if (buf.size() < 5 + ie_len) return CodecError{"truncated IE block"};
  if (buf.size() > 5 + ie_len) return CodecError{"trailing bytes"};

  std::size_t pos = 5;
  const std::size_t end = 5 + ie_len;
  while (pos < end) {
    if (end - pos < 3) return CodecError{"truncated IE header"};
    InformationElement ie;
    ie.tag = buf[pos];
    if (!catalog::find_ie(ie.tag)) return CodecError{"unknown IE tag"};
    const std::size_t vlen = wire::get_u16be(buf.data() + pos + 1);
    pos += 3;
    if (end - pos < vlen) return CodecError{"truncated IE value"};
    ie.value.assign(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                    buf.begin() + static_cast<std::ptrdiff_t>(pos + vlen));
    pos += vlen;
    msg.ies.push_back(std::move(ie));
  }
  return msg;
}

inline constexpr std::size_t kMaxFramePayload = 1u << 24;

/// Frames a payload as `[len:4 BE][payload]` for the SCP/1 byte stream.
inline Result<Bytes, CodecError> frame_write(std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxFramePayload) return CodecError{"frame payload exceeds 2^24 bytes"};
  Bytes out;
  out.reserve(4 + payload.size());
  wire::put_u32be(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

enum class FrameStatus { NeedMore, Ready, ProtocolError };

/// Incremental parser for length-prefixed frames. Feed arbitrary chunks
/// (down to one byte at a time) and poll for complete payloads. A declared
/// length above 2^24 is a protocol error: the connection must be dropped.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> chunk) { buf_.insert(buf_.end(), chunk.begin(), chunk.end()); }

  FrameStatus poll(Bytes& out) {
    if (failed_) return FrameStatus::ProtocolError;
    if (buf_.size() < 4) return FrameStatus::NeedMore;
    const std::uint32_t len = wire::get_u32be(buf_.data());
    if (len > kMaxFramePayload) {
      failed_ = true;
      return FrameStatus::ProtocolError;
    }
    if (buf_.size() < 4u + len) return FrameStatus::NeedMore;
    out.assign(buf_.begin() + 4, buf_.begin() + 4 + len);
    buf_.erase(buf_.begin(), buf_.begin() + 4 + len);
    return FrameStatus::Ready;
  }

 private:
  Bytes buf_;
  bool failed_ = false;
};

}  // namespace uesentry
