#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "uesentry/model.hpp"
#include "uesentry/net.hpp"

namespace uesentry {

/// Configurable TLS endpoint fixture. Implements only what the prober
/// exercises: record layer, ClientHello -> ServerHello/Alert, heartbeat.
/// Handshakes are never completed.
struct TlsFixtureConfig {
  std::set<TlsVersion> accepted_versions;
  std::vector<std::uint16_t> accepted_ciphers;  // selection = first client-offered cipher in here
  bool heartbeat_enabled = true;
  bool heartbeat_overread = false;
  Bytes certificate_blob;

  static Result<TlsFixtureConfig, ValidationError> from_json(const std::string& json_text) {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) return ValidationError{"malformed JSON"};
    TlsFixtureConfig cfg;
    if (!doc.contains("accepted_versions") || !doc["accepted_versions"].is_array())
      return ValidationError{"accepted_versions required"};
    for (const auto& v : doc["accepted_versions"]) {
      auto ver = tls_version_from_string(v.get<std::string>());
      if (!ver) return ValidationError{"unknown version name '" + v.get<std::string>() + "'"};
      cfg.accepted_versions.insert(*ver);
    }
    if (!doc.contains("accepted_ciphers") || !doc["accepted_ciphers"].is_array())
      return ValidationError{"accepted_ciphers required"};
    for (const auto& c : doc["accepted_ciphers"]) {
      const std::string s = c.get<std::string>();
      if (s.rfind("0x", 0) != 0) return ValidationError{"accepted_ciphers entries must be 0xNNNN"};
      cfg.accepted_ciphers.push_back(static_cast<std::uint16_t>(std::stoul(s.substr(2), nullptr, 16)));
    }
    if (cfg.accepted_ciphers.empty()) return ValidationError{"accepted_ciphers must be non-empty"};
    if (doc.contains("heartbeat_enabled")) cfg.heartbeat_enabled = doc["heartbeat_enabled"].get<bool>();
    if (doc.contains("heartbeat_overread")) cfg.heartbeat_overread = doc["heartbeat_overread"].get<bool>();
    if (doc.contains("certificate_blob")) {
      const std::string blob = doc["certificate_blob"].get<std::string>();
      cfg.certificate_blob.assign(blob.begin(), blob.end());
    }
    return cfg;
  }
};

// The fixture keeps its own record parser/builder, separate from the
// scanner's: the two sides must agree on the wire, not in code.
namespace tls_fixture_detail {

constexpr std::uint8_t kContentHandshake = 0x16;
constexpr std::uint8_t kContentAlert = 0x15;
constexpr std::uint8_t kContentHeartbeat = 0x18;

inline std::uint16_t version_code(TlsVersion v) {
  switch (v) {
    case TlsVersion::Tls10: return 0x0301;
    case TlsVersion::Tls11: return 0x0302;
    case TlsVersion::Tls12: return 0x0303;
    case TlsVersion::Tls13: return 0x0304;
  }
  return 0x0301;
}

inline std::optional<TlsVersion> version_of_code(std::uint16_t code) {
  switch (code) {
    case 0x0301: return TlsVersion::Tls10;
    case 0x0302: return TlsVersion::Tls11;
    case 0x0303: return TlsVersion::Tls12;
    case 0x0304: return TlsVersion::Tls13;
  }
  return std::nullopt;
}

struct ParsedHello {
  std::uint16_t legacy_version = 0;
  std::vector<std::uint16_t> ciphers;
  std::vector<std::uint16_t> supported_versions;  // empty when extension absent
  bool heartbeat = false;
};

class Cursor {
 public:
  Cursor(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  bool take_u8(std::uint8_t& v) {
    if (n_ < 1) return false;
    v = p_[0];
    p_ += 1;
    n_ -= 1;
    return true;
  }
  bool take_u16(std::uint16_t& v) {
    if (n_ < 2) return false;
    v = static_cast<std::uint16_t>((p_[0] << 8) | p_[1]);
    p_ += 2;
    n_ -= 2;
    return true;
  }
  bool take_u24(std::uint32_t& v) {
    if (n_ < 3) return false;
    v = (static_cast<std::uint32_t>(p_[0]) << 16) | (p_[1] << 8) | p_[2];
    p_ += 3;
    n_ -= 3;
    return true;
  }
  bool skip(std::size_t k) {
    if (n_ < k) return false;
    p_ += k;
    n_ -= k;
    return true;
  }
  const std::uint8_t* data() const { return p_; }
  std::size_t left() const { return n_; }

 private:
  const std::uint8_t* p_;
  std::size_t n_;
};

inline std::optional<ParsedHello> parse_client_hello(std::span<const std::uint8_t> record) {
  Cursor c(record.data(), record.size());
  std::uint8_t content = 0, hs_type = 0, u8 = 0;
  std::uint16_t rec_ver = 0, rec_len = 0, u16 = 0;
  std::uint32_t hs_len = 0;
  if (!c.take_u8(content) || content != kContentHandshake) return std::nullopt;
  if (!c.take_u16(rec_ver) || !c.take_u16(rec_len)) return std::nullopt;
  if (c.left() != rec_len) return std::nullopt;
  if (!c.take_u8(hs_type) || hs_type != 0x01) return std::nullopt;
  if (!c.take_u24(hs_len) || c.left() != hs_len) return std::nullopt;

  ParsedHello hello;
  if (!c.take_u16(hello.legacy_version)) return std::nullopt;
  if (!c.skip(32)) return std::nullopt;  // random
  if (!c.take_u8(u8) || !c.skip(u8)) return std::nullopt;  // session id
  if (!c.take_u16(u16) || u16 % 2 != 0) return std::nullopt;
  for (int i = 0; i < u16 / 2; ++i) {
    std::uint16_t cipher = 0;
    if (!c.take_u16(cipher)) return std::nullopt;
    hello.ciphers.push_back(cipher);
  }
  if (!c.take_u8(u8) || !c.skip(u8)) return std::nullopt;  // compression
  if (c.left() == 0) return hello;                         // extensions absent

  std::uint16_t ext_total = 0;
  if (!c.take_u16(ext_total) || c.left() != ext_total) return std::nullopt;
  while (c.left() > 0) {
    std::uint16_t ext_type = 0, ext_len = 0;
    if (!c.take_u16(ext_type) || !c.take_u16(ext_len) || c.left() < ext_len) return std::nullopt;
    if (ext_type == 0x002B) {  // supported_versions
      Cursor e(c.data(), ext_len);
      std::uint8_t list_len = 0;
      if (!e.take_u8(list_len) || list_len % 2 != 0 || e.left() < list_len) return std::nullopt;
      for (int i = 0; i < list_len / 2; ++i) {
        std::uint16_t v = 0;
        e.take_u16(v);
        hello.supported_versions.push_back(v);
      }
    } else if (ext_type == 0x000F) {
      hello.heartbeat = true;
    }
    c.skip(ext_len);
  }
  return hello;
}

inline Bytes make_record(std::uint8_t content, std::uint16_t version, const Bytes& body) {
  Bytes out;
  out.push_back(content);
  out.push_back(static_cast<std::uint8_t>(version >> 8));
  out.push_back(static_cast<std::uint8_t>(version & 0xFF));
  out.push_back(static_cast<std::uint8_t>(body.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(body.size() & 0xFF));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

inline Bytes make_alert(std::uint8_t level, std::uint8_t code) {
  return make_record(kContentAlert, 0x0303, Bytes{level, code});
}

inline Bytes make_server_hello(TlsVersion negotiated, std::uint16_t cipher, bool echo_heartbeat) {
  const bool tls13 = negotiated == TlsVersion::Tls13;
  const std::uint16_t legacy = tls13 ? 0x0303 : version_code(negotiated);

  Bytes ext;
  auto push_ext = [&ext](std::uint16_t type, const Bytes& data) {
    ext.push_back(static_cast<std::uint8_t>(type >> 8));
    ext.push_back(static_cast<std::uint8_t>(type & 0xFF));
    ext.push_back(static_cast<std::uint8_t>(data.size() >> 8));
    ext.push_back(static_cast<std::uint8_t>(data.size() & 0xFF));
    ext.insert(ext.end(), data.begin(), data.end());
  };
  if (tls13) push_ext(0x002B, Bytes{0x03, 0x04});
  if (echo_heartbeat) push_ext(0x000F, Bytes{0x01});

  Bytes body;
  body.push_back(static_cast<std::uint8_t>(legacy >> 8));
  body.push_back(static_cast<std::uint8_t>(legacy & 0xFF));
  for (int i = 0; i < 32; ++i) body.push_back(static_cast<std::uint8_t>(0xA0 + (i % 16)));
  body.push_back(0x00);  // empty session id
  body.push_back(static_cast<std::uint8_t>(cipher >> 8));
  body.push_back(static_cast<std::uint8_t>(cipher & 0xFF));
  body.push_back(0x00);  // null compression
  body.push_back(static_cast<std::uint8_t>(ext.size() >> 8));
  body.push_back(static_cast<std::uint8_t>(ext.size() & 0xFF));
  body.insert(body.end(), ext.begin(), ext.end());

  Bytes hs;
  hs.push_back(0x02);  // server_hello
  hs.push_back(static_cast<std::uint8_t>(body.size() >> 16));
  hs.push_back(static_cast<std::uint8_t>((body.size() >> 8) & 0xFF));
  hs.push_back(static_cast<std::uint8_t>(body.size() & 0xFF));
  hs.insert(hs.end(), body.begin(), body.end());
  return make_record(kContentHandshake, legacy, hs);
}

}  // namespace tls_fixture_detail

/// Computes the fixture's response to one client record. Stateless: each
/// record is answered on its own.
inline Bytes tls_fixture_respond(const TlsFixtureConfig& cfg, std::span<const std::uint8_t> record) {
  namespace d = tls_fixture_detail;
  if (record.empty()) return d::make_alert(2, 50);  // decode_error

  if (record[0] == d::kContentHeartbeat) {
    if (!cfg.heartbeat_enabled) return d::make_alert(2, 10);  // unexpected_message
    d::Cursor c(record.data(), record.size());
    std::uint8_t content = 0, hb_type = 0;
    std::uint16_t ver = 0, rec_len = 0, declared = 0;
    if (!c.take_u8(content) || !c.take_u16(ver) || !c.take_u16(rec_len) || c.left() != rec_len ||
        !c.take_u8(hb_type) || hb_type != 0x01 || !c.take_u16(declared))
      return d::make_alert(2, 50);
    const std::size_t avail = c.left();  // payload + >=16 bytes of padding
    if (!cfg.heartbeat_overread && (avail < 16 || declared > avail - 16))
      return {};  // length check holds: discard silently
    // With the seeded overread the declared length is trusted, echoing
    // whatever lies past the actual payload (zero-filled here).
    const std::size_t echo_len = declared;
    Bytes body;
    body.push_back(0x02);  // heartbeat_response
    body.push_back(static_cast<std::uint8_t>(echo_len >> 8));
    body.push_back(static_cast<std::uint8_t>(echo_len & 0xFF));
    for (std::size_t i = 0; i < echo_len; ++i)
      body.push_back(i < avail ? c.data()[i] : 0x00);
    for (int i = 0; i < 16; ++i) body.push_back(0x00);  // padding
    return d::make_record(d::kContentHeartbeat, ver, body);
  }

  auto hello = d::parse_client_hello(record);
  if (!hello) return d::make_alert(2, 50);  // decode_error

  // Offered version: supported_versions entries in client order when the
  // extension is present, else the legacy version field.
  std::optional<TlsVersion> negotiated;
  if (!hello->supported_versions.empty()) {
    for (auto code : hello->supported_versions) {
      auto v = d::version_of_code(code);
      if (v && cfg.accepted_versions.count(*v)) {
        negotiated = *v;
        break;
      }
    }
  } else {
    auto v = d::version_of_code(hello->legacy_version);
    if (v && cfg.accepted_versions.count(*v)) negotiated = *v;
  }
  if (!negotiated) return d::make_alert(2, 70);  // protocol_version

  for (auto offered : hello->ciphers) {
    for (auto accepted : cfg.accepted_ciphers) {
      if (offered == accepted)
        return d::make_server_hello(*negotiated, offered, hello->heartbeat && cfg.heartbeat_enabled);
    }
  }
  return d::make_alert(2, 40);  // handshake_failure
}

/// Serves the fixture over TCP, one connection at a time, one response per
/// received record.
class TlsFixtureServer {
 public:
  explicit TlsFixtureServer(TlsFixtureConfig cfg) : cfg_(std::move(cfg)) {}
  ~TlsFixtureServer() { stop(); }

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

  void session(TcpConn& conn) {
    Bytes buf;
    std::uint8_t chunk[4096];
    while (!stop_.load()) {
      // A complete record is 5 header bytes plus the declared length.
      if (buf.size() >= 5) {
        const std::size_t rec_len = 5u + ((buf[3] << 8) | buf[4]);
        if (buf.size() >= rec_len) {
          const Bytes record(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(rec_len));
          buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(rec_len));
          if (!conn.write_all(tls_fixture_respond(cfg_, record))) return;
          continue;
        }
      }
      const auto deadline = SteadyClock::now() + std::chrono::milliseconds(200);
      auto n = conn.read_some(chunk, sizeof(chunk), deadline);
      if (!n) {
        if (n.error().message.find("timed out") != std::string::npos) continue;
        return;
      }
      if (n.value() == 0) return;
      buf.insert(buf.end(), chunk, chunk + n.value());
    }
  }

  TlsFixtureConfig cfg_;
  TcpListener listener_;
  std::thread thread_;
  std::atomic<bool> stop_{false};
};

}  // namespace uesentry
