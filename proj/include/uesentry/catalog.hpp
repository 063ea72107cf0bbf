#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "uesentry/result.hpp"

namespace uesentry {

enum class Layer : std::uint8_t { Nas = 0x01, Rrc = 0x02 };

inline std::string to_string(Layer layer) { return layer == Layer::Nas ? "NAS" : "RRC"; }

inline std::optional<Layer> layer_from_string(std::string_view s) {
  if (s == "NAS") return Layer::Nas;
  if (s == "RRC") return Layer::Rrc;
  return std::nullopt;
}

enum class Direction { Uplink, Downlink };

struct MessageInfo {
  Layer layer;
  std::uint8_t code;
  std::string_view name;
  Direction dir;
};

struct IeInfo {
  std::uint8_t tag;
  std::string_view name;
};

namespace catalog {

// SCP/1 message catalog. Codes are unique per layer; the (layer, name) pair
// is unique globally. SecurityModeCommand/SecurityModeComplete exist in both
// layers, so bare-name lookups for those must be layer-disambiguated.
inline constexpr std::array<MessageInfo, 23> kMessages = {{
    {Layer::Nas, 0x41, "RegistrationRequest", Direction::Uplink},
    {Layer::Nas, 0x42, "RegistrationAccept", Direction::Downlink},
    {Layer::Nas, 0x44, "AuthenticationRequest", Direction::Downlink},
    {Layer::Nas, 0x45, "AuthenticationResponse", Direction::Uplink},
    {Layer::Nas, 0x4D, "SecurityModeCommand", Direction::Downlink},
    {Layer::Nas, 0x4E, "SecurityModeComplete", Direction::Uplink},
    {Layer::Nas, 0x55, "IdentityRequest", Direction::Downlink},
    {Layer::Nas, 0x56, "IdentityResponse", Direction::Uplink},
    {Layer::Nas, 0x5A, "DeregistrationRequest", Direction::Downlink},
    {Layer::Nas, 0x5B, "ConfigurationUpdateCommand", Direction::Downlink},
    {Layer::Nas, 0x5C, "ServiceReject", Direction::Downlink},
    {Layer::Nas, 0x5D, "DeregistrationAccept", Direction::Uplink},
    {Layer::Rrc, 0x01, "RRCSetupRequest", Direction::Uplink},
    {Layer::Rrc, 0x02, "RRCSetup", Direction::Downlink},
    {Layer::Rrc, 0x03, "RRCSetupComplete", Direction::Uplink},
    {Layer::Rrc, 0x06, "SecurityModeCommand", Direction::Downlink},
    {Layer::Rrc, 0x07, "SecurityModeComplete", Direction::Uplink},
    {Layer::Rrc, 0x08, "SecurityModeFailure", Direction::Uplink},
    {Layer::Rrc, 0x0A, "UECapabilityEnquiry", Direction::Downlink},
    {Layer::Rrc, 0x0B, "UECapabilityInformation", Direction::Uplink},
    {Layer::Rrc, 0x0C, "RRCRelease", Direction::Downlink},
    {Layer::Rrc, 0x0D, "RRCReconfiguration", Direction::Downlink},
    {Layer::Rrc, 0x10, "CounterCheck", Direction::Downlink},
}};

inline constexpr std::array<IeInfo, 7> kIes = {{
    {0x10, "MobileIdentitySuci"},
    {0x11, "MobileIdentityImsi"},
    {0x12, "Cause"},
    {0x13, "SecurityAlgorithms"},
    {0x14, "UeCapabilities"},
    {0x15, "IdentityType"},
    {0x16, "ReleaseCause"},
}};

inline const MessageInfo* find_message(Layer layer, std::uint8_t code) {
  for (const auto& m : kMessages)
    if (m.layer == layer && m.code == code) return &m;
  return nullptr;
}

inline const MessageInfo* find_message(Layer layer, std::string_view name) {
  for (const auto& m : kMessages)
    if (m.layer == layer && m.name == name) return &m;
  return nullptr;
}

/// Resolves a DSL message-type name. Accepts "NAS."/"RRC." qualified names;
/// bare names that exist in exactly one layer resolve there, ambiguous bare
/// names resolve in `preferred` layer.
inline Result<MessageInfo, ValidationError> resolve_message(std::string_view name, Layer preferred) {
  std::string_view bare = name;
  std::optional<Layer> forced;
  if (name.rfind("NAS.", 0) == 0) {
    forced = Layer::Nas;
    bare = name.substr(4);
  } else if (name.rfind("RRC.", 0) == 0) {
    forced = Layer::Rrc;
    bare = name.substr(4);
  }
  if (forced) {
    if (const auto* m = find_message(*forced, bare)) return *m;
    return ValidationError{"unknown message type '" + std::string(name) + "'"};
  }
  const auto* nas = find_message(Layer::Nas, bare);
  const auto* rrc = find_message(Layer::Rrc, bare);
  if (nas && rrc) return preferred == Layer::Nas ? *nas : *rrc;
  if (nas) return *nas;
  if (rrc) return *rrc;
  return ValidationError{"unknown message type '" + std::string(name) + "'"};
}

inline const IeInfo* find_ie(std::uint8_t tag) {
  for (const auto& ie : kIes)
    if (ie.tag == tag) return &ie;
  return nullptr;
}

inline const IeInfo* find_ie(std::string_view name) {
  for (const auto& ie : kIes)
    if (ie.name == name) return &ie;
  return nullptr;
}

}  // namespace catalog
}  // namespace uesentry
