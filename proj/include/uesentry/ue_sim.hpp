#pragma once

#include <atomic>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>

#include "uesentry/codec.hpp"
#include "uesentry/model.hpp"
#include "uesentry/net.hpp"

namespace uesentry {

enum class UeVulnerability { CapsBeforeSecurity, PlaintextIdentityDisclosure, AcceptUnprotectedDetach };

inline std::string to_string(UeVulnerability v) {
  switch (v) {
    case UeVulnerability::CapsBeforeSecurity: return "CapsBeforeSecurity";
    case UeVulnerability::PlaintextIdentityDisclosure: return "PlaintextIdentityDisclosure";
    case UeVulnerability::AcceptUnprotectedDetach: return "AcceptUnprotectedDetach";
  }
  return "CapsBeforeSecurity";
}

/// A device-under-test personality: the empty vulnerability set is the
/// 3GPP-behaviorally-compliant profile; each vulnerable profile flips exactly
/// its seeded rows of the transition table.
struct UeProfile {
  std::string name;
  std::set<UeVulnerability> vulnerabilities;

  bool has(UeVulnerability v) const { return vulnerabilities.count(v) != 0; }

  static UeProfile compliant() { return {"compliant", {}}; }
  static UeProfile caps_before_security() {
    return {"caps-before-security", {UeVulnerability::CapsBeforeSecurity}};
  }
  static UeProfile plaintext_identity() {
    return {"plaintext-identity", {UeVulnerability::PlaintextIdentityDisclosure}};
  }
  static UeProfile accept_unprotected_detach() {
    return {"accept-unprotected-detach", {UeVulnerability::AcceptUnprotectedDetach}};
  }

  static std::optional<UeProfile> by_name(const std::string& name) {
    for (const auto& p : {compliant(), caps_before_security(), plaintext_identity(),
                          accept_unprotected_detach()})
      if (p.name == name) return p;
    return std::nullopt;
  }
};

enum class UePhase { Idle, RrcConnected, Registering, Authenticated, SecurityActivated, Registered, Detached };

inline std::string to_string(UePhase p) {
  switch (p) {
    case UePhase::Idle: return "Idle";
    case UePhase::RrcConnected: return "RrcConnected";
    case UePhase::Registering: return "Registering";
    case UePhase::Authenticated: return "Authenticated";
    case UePhase::SecurityActivated: return "SecurityActivated";
    case UePhase::Registered: return "Registered";
    case UePhase::Detached: return "Detached";
  }
  return "Idle";
}

/// Concealed identifier for the fixture UE: a fixed digit substitution, so it
/// is deterministic, never contains the permanent identity, and is clearly
/// not cryptographic concealment.
inline std::string conceal_identity(const std::string& imsi) {
  std::string scrambled;
  scrambled.reserve(imsi.size());
  for (char c : imsi)
    scrambled.push_back(c >= '0' && c <= '9' ? static_cast<char>('0' + (c - '0' + 5) % 10) : c);
  return "suci-0-" + scrambled;
}

struct UeState {
  UePhase phase = UePhase::Idle;
  bool security_active = false;  // true only in SecurityActivated and Registered
  std::string identity;          // permanent id (IMSI-class)
  Bytes capabilities;

  static UeState initial() {
    UeState s;
    s.identity = "001010123456789";
    const std::string caps = "NR:n1,n78;NEA:0,1,2;NIA:1,2";
    s.capabilities.assign(caps.begin(), caps.end());
    return s;
  }
};

struct UeStepResult {
  UeState state;
  std::optional<CpMessage> response;
};

namespace detail {

inline CpMessage make_uplink(Layer layer, std::string_view name, Protection prot,
                             std::vector<InformationElement> ies = {}) {
  const auto* info = catalog::find_message(layer, name);
  CpMessage msg;
  msg.layer = layer;
  msg.msg_type = info ? info->code : 0;
  msg.protection = prot;
  msg.ies = std::move(ies);
  return msg;
}

inline InformationElement ie_of(std::string_view name, const Bytes& value) {
  const auto* info = catalog::find_ie(name);
  return {static_cast<std::uint8_t>(info ? info->tag : 0), value};
}

inline InformationElement ie_of(std::string_view name, const std::string& value) {
  return ie_of(name, Bytes(value.begin(), value.end()));
}

}  // namespace detail

/// Pure transition function of the simulated UE. Total over catalog-valid
/// input: anything not explicitly handled leaves the state unchanged with no
/// response (a UE must not crash on garbage).
inline UeStepResult ue_step(const UeProfile& profile, const UeState& state, const CpMessage& incoming) {
  using detail::ie_of;
  using detail::make_uplink;

  const bool sec = state.security_active;
  const bool integrity = integrity_protected(incoming.protection);
  const bool unprotected = incoming.protection == Protection::None;
  // RRC connection exists, security not yet activated.
  const bool connected_presec = state.phase == UePhase::RrcConnected ||
                                state.phase == UePhase::Registering ||
                                state.phase == UePhase::Authenticated;
  // Uplink responses are protected once a security context exists.
  const auto resp_prot = [&](bool sec_after) {
    return (sec || sec_after) ? Protection::IntegrityAndCiphering : Protection::None;
  };

  UeStepResult out{state, std::nullopt};

  const auto* info = catalog::find_message(incoming.layer, incoming.msg_type);
  if (!info || info->dir != Direction::Downlink) return out;
  if (state.phase == UePhase::Detached) return out;
  const std::string_view type = info->name;

  if (incoming.layer == Layer::Rrc && type == "RRCSetup") {
    if (state.phase == UePhase::Idle && unprotected) {
      out.state.phase = UePhase::RrcConnected;
      out.response = make_uplink(Layer::Rrc, "RRCSetupComplete", Protection::None);
    }
    return out;
  }
  if (state.phase == UePhase::Idle) return out;

  if (incoming.layer == Layer::Rrc && type == "UECapabilityEnquiry") {
    if (sec && integrity) {
      out.response = make_uplink(Layer::Rrc, "UECapabilityInformation", resp_prot(false),
                                 {ie_of("UeCapabilities", state.capabilities)});
    } else if (!sec && unprotected && connected_presec &&
               profile.has(UeVulnerability::CapsBeforeSecurity)) {
      // Seeded vulnerability: capability disclosure before security activation.
      out.response = make_uplink(Layer::Rrc, "UECapabilityInformation", Protection::None,
                                 {ie_of("UeCapabilities", state.capabilities)});
    }
    return out;
  }

  if (incoming.layer == Layer::Nas && type == "IdentityRequest") {
    const auto* idt_ie = incoming.find_ie(catalog::find_ie("IdentityType")->tag);
    const std::string idt = idt_ie ? std::string(idt_ie->value.begin(), idt_ie->value.end()) : "SUCI";
    const bool wants_imsi = idt == "IMSI";
    if (sec && integrity) {
      out.response = make_uplink(
          Layer::Nas, "IdentityResponse", resp_prot(false),
          {wants_imsi ? ie_of("MobileIdentityImsi", state.identity)
                      : ie_of("MobileIdentitySuci", conceal_identity(state.identity))});
    } else if (!sec && unprotected && connected_presec) {
      if (!wants_imsi) {
        // Concealed identifiers are permitted before security activation.
        if (state.phase == UePhase::RrcConnected) out.state.phase = UePhase::Registering;
        out.response = make_uplink(Layer::Nas, "IdentityResponse", Protection::None,
                                   {ie_of("MobileIdentitySuci", conceal_identity(state.identity))});
      } else if (profile.has(UeVulnerability::PlaintextIdentityDisclosure)) {
        // Seeded vulnerability: permanent identity over an unprotected request.
        out.response = make_uplink(Layer::Nas, "IdentityResponse", Protection::None,
                                   {ie_of("MobileIdentityImsi", state.identity)});
      }
    }
    return out;
  }

  if (incoming.layer == Layer::Nas && type == "AuthenticationRequest") {
    if (sec && integrity) {
      out.response = make_uplink(Layer::Nas, "AuthenticationResponse", resp_prot(false));
    } else if (!sec && unprotected && connected_presec) {
      out.state.phase = UePhase::Authenticated;
      out.response = make_uplink(Layer::Nas, "AuthenticationResponse", Protection::None);
    }
    return out;
  }

  if (incoming.layer == Layer::Nas && type == "SecurityModeCommand") {
    if (!sec && integrity && state.phase == UePhase::Authenticated) {
      out.state.phase = UePhase::SecurityActivated;
      out.state.security_active = true;
      out.response = make_uplink(Layer::Nas, "SecurityModeComplete", resp_prot(true));
    } else if (sec && integrity) {
      out.response = make_uplink(Layer::Nas, "SecurityModeComplete", resp_prot(false));
    }
    return out;
  }

  if (incoming.layer == Layer::Rrc && type == "SecurityModeCommand") {
    if (!sec && connected_presec) {
      // No AS keys yet: integrity cannot be verified, report failure.
      out.response = make_uplink(Layer::Rrc, "SecurityModeFailure", Protection::None);
    } else if (sec && integrity) {
      out.response = make_uplink(Layer::Rrc, "SecurityModeComplete", resp_prot(false));
    }
    return out;
  }

  if (incoming.layer == Layer::Nas && type == "DeregistrationRequest") {
    if (sec && integrity) {
      out.state.phase = UePhase::Detached;
      out.state.security_active = false;
      out.response = make_uplink(Layer::Nas, "DeregistrationAccept", Protection::IntegrityAndCiphering);
    } else if (unprotected && profile.has(UeVulnerability::AcceptUnprotectedDetach)) {
      // Seeded vulnerability: detach without integrity protection.
      const auto prot = resp_prot(false);
      out.state.phase = UePhase::Detached;
      out.state.security_active = false;
      out.response = make_uplink(Layer::Nas, "DeregistrationAccept", prot);
    }
    return out;
  }

  if (incoming.layer == Layer::Nas && type == "RegistrationAccept") {
    if (sec && integrity && state.phase == UePhase::SecurityActivated)
      out.state.phase = UePhase::Registered;
    return out;
  }

  if (incoming.layer == Layer::Rrc && type == "RRCRelease") {
    if (sec && integrity) {
      out.state.phase = UePhase::Idle;
      out.state.security_active = false;
    }
    return out;
  }

  // ServiceReject, ConfigurationUpdateCommand, RRCReconfiguration,
  // CounterCheck: accepted silently when protected post-security, ignored
  // otherwise; either way no observable output or phase change.
  return out;
}

/// Serves one UE over SCP/1: one connection at a time, fresh state per
/// connection, RRCSetupRequest emitted on accept, one ue_step per decoded
/// frame. Garbage drops the connection; the next one starts fresh.
class UeEndpoint {
 public:
  explicit UeEndpoint(UeProfile profile) : profile_(std::move(profile)) {}
  ~UeEndpoint() { stop(); }

  Result<Unit, NetError> start(std::uint16_t port) {
    auto listener = TcpListener::bind(port);
    if (!listener) return listener.error();
    listener_ = std::move(listener.value());
    stop_.store(false);
    thread_ = std::thread([this] { serve(); });
    return Unit{};
  }

  std::uint16_t port() const { return listener_.port(); }

  void stop() {
    stop_.store(true);
    listener_.close();
    if (thread_.joinable()) thread_.join();
  }

 private:
  void serve() {
    while (!stop_.load()) {
      auto conn = listener_.accept(stop_);
      if (!conn) break;
      session(*conn);
    }
  }

  bool send_message(TcpConn& conn, const CpMessage& msg) {
    auto encoded = encode_message(msg);
    if (!encoded) return false;
    auto framed = frame_write(encoded.value());
    if (!framed) return false;
    return conn.write_all(framed.value()).ok();
  }

  void session(TcpConn& conn) {
    UeState state = UeState::initial();
    if (!send_message(conn, detail::make_uplink(Layer::Rrc, "RRCSetupRequest", Protection::None)))
      return;

    FrameReader reader;
    std::uint8_t buf[4096];
    while (!stop_.load()) {
      Bytes payload;
      const auto status = reader.poll(payload);
      if (status == FrameStatus::ProtocolError) return;
      if (status == FrameStatus::Ready) {
        auto msg = decode_message(payload);
        if (!msg) return;  // garbage frame: drop the connection
        auto result = ue_step(profile_, state, msg.value());
        state = result.state;
        if (result.response && !send_message(conn, *result.response)) return;
        continue;
      }
      const auto deadline = SteadyClock::now() + std::chrono::milliseconds(200);
      auto n = conn.read_some(buf, sizeof(buf), deadline);
      if (!n) {
        if (n.error().message.find("timed out") != std::string::npos) continue;
        return;
      }
      if (n.value() == 0) return;  // peer closed
      reader.feed({buf, n.value()});
    }
  }

  UeProfile profile_;
  TcpListener listener_;
  std::thread thread_;
  std::atomic<bool> stop_{false};
};

}  // namespace uesentry
