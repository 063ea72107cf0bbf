#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "uesentry/model.hpp"
#include "uesentry/net.hpp"

namespace uesentry {

enum class CipherClass { Modern, Legacy, Deprecated, Export };

inline std::string to_string(CipherClass c) {
  switch (c) {
    case CipherClass::Modern: return "modern";
    case CipherClass::Legacy: return "legacy";
    case CipherClass::Deprecated: return "deprecated";
    case CipherClass::Export: return "export";
  }
  return "modern";
}

inline std::optional<CipherClass> cipher_class_from_string(std::string_view s) {
  if (s == "modern") return CipherClass::Modern;
  if (s == "legacy") return CipherClass::Legacy;
  if (s == "deprecated") return CipherClass::Deprecated;
  if (s == "export") return CipherClass::Export;
  return std::nullopt;
}

struct CipherInfo {
  std::uint16_t id;
  std::string name;
  CipherClass cls;
};

inline bool is_tls13_suite(std::uint16_t id) { return (id & 0xFF00) == 0x1300; }

/// Export-grade DHE suites; acceptance of any is the LOGJAM indicator.
inline const std::set<std::uint16_t>& export_dhe_suites() {
  static const std::set<std::uint16_t> ids = {0x0011, 0x0014, 0x0019};
  return ids;
}

/// Candidate cipher-suite table driving both enumeration and grading.
class CipherTable {
 public:
  explicit CipherTable(std::vector<CipherInfo> entries) : entries_(std::move(entries)) {}

  static const CipherTable& builtin() {
    static const CipherTable table(builtin_entries());
    return table;
  }

  static Result<CipherTable, ValidationError> from_json(const std::string& json_text) {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) return ValidationError{"malformed JSON"};
    if (!doc.is_array()) return ValidationError{"cipher table must be a JSON array"};
    std::vector<CipherInfo> entries;
    for (const auto& e : doc) {
      if (!e.is_object() || !e.contains("id") || !e.contains("name") || !e.contains("class"))
        return ValidationError{"cipher entries require id, name, class"};
      const std::string id_s = e["id"].get<std::string>();
      if (id_s.rfind("0x", 0) != 0) return ValidationError{"cipher id must be 0xNNNN"};
      CipherInfo info;
      info.id = static_cast<std::uint16_t>(std::stoul(id_s.substr(2), nullptr, 16));
      info.name = e["name"].get<std::string>();
      auto cls = cipher_class_from_string(e["class"].get<std::string>());
      if (!cls) return ValidationError{"unknown cipher class '" + e["class"].get<std::string>() + "'"};
      info.cls = *cls;
      entries.push_back(std::move(info));
    }
    if (entries.empty()) return ValidationError{"cipher table must be non-empty"};
    return CipherTable(std::move(entries));
  }

  const std::vector<CipherInfo>& entries() const { return entries_; }

  const CipherInfo* find(std::uint16_t id) const {
    for (const auto& e : entries_)
      if (e.id == id) return &e;
    return nullptr;
  }

  std::vector<std::uint16_t> candidates_for(TlsVersion version) const {
    std::vector<std::uint16_t> out;
    for (const auto& e : entries_)
      if (is_tls13_suite(e.id) == (version == TlsVersion::Tls13)) out.push_back(e.id);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries_) {
      char id_s[8];
      std::snprintf(id_s, sizeof(id_s), "0x%04X", e.id);
      arr.push_back({{"id", id_s}, {"name", e.name}, {"class", to_string(e.cls)}});
    }
    return arr;
  }

 private:
  static std::vector<CipherInfo> builtin_entries() {
    return {
        {0x1301, "TLS_AES_128_GCM_SHA256", CipherClass::Modern},
        {0x1302, "TLS_AES_256_GCM_SHA384", CipherClass::Modern},
        {0x1303, "TLS_CHACHA20_POLY1305_SHA256", CipherClass::Modern},
        {0xC02B, "TLS_ECDHE_ECDSA_WITH_AES_128_GCM_SHA256", CipherClass::Modern},
        {0xC02C, "TLS_ECDHE_ECDSA_WITH_AES_256_GCM_SHA384", CipherClass::Modern},
        {0xC02F, "TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256", CipherClass::Modern},
        {0xC030, "TLS_ECDHE_RSA_WITH_AES_256_GCM_SHA384", CipherClass::Modern},
        {0xCCA8, "TLS_ECDHE_RSA_WITH_CHACHA20_POLY1305_SHA256", CipherClass::Modern},
        {0xCCA9, "TLS_ECDHE_ECDSA_WITH_CHACHA20_POLY1305_SHA256", CipherClass::Modern},
        {0x009E, "TLS_DHE_RSA_WITH_AES_128_GCM_SHA256", CipherClass::Modern},
        {0x009F, "TLS_DHE_RSA_WITH_AES_256_GCM_SHA384", CipherClass::Modern},
        {0x002F, "TLS_RSA_WITH_AES_128_CBC_SHA", CipherClass::Legacy},
        {0x0035, "TLS_RSA_WITH_AES_256_CBC_SHA", CipherClass::Legacy},
        {0x003C, "TLS_RSA_WITH_AES_128_CBC_SHA256", CipherClass::Legacy},
        {0x003D, "TLS_RSA_WITH_AES_256_CBC_SHA256", CipherClass::Legacy},
        {0x0067, "TLS_DHE_RSA_WITH_AES_128_CBC_SHA256", CipherClass::Legacy},
        {0x006B, "TLS_DHE_RSA_WITH_AES_256_CBC_SHA256", CipherClass::Legacy},
        {0x009C, "TLS_RSA_WITH_AES_128_GCM_SHA256", CipherClass::Legacy},
        {0x009D, "TLS_RSA_WITH_AES_256_GCM_SHA384", CipherClass::Legacy},
        {0xC013, "TLS_ECDHE_RSA_WITH_AES_128_CBC_SHA", CipherClass::Legacy},
        {0xC014, "TLS_ECDHE_RSA_WITH_AES_256_CBC_SHA", CipherClass::Legacy},
        {0xC027, "TLS_ECDHE_RSA_WITH_AES_128_CBC_SHA256", CipherClass::Legacy},
        {0xC028, "TLS_ECDHE_RSA_WITH_AES_256_CBC_SHA384", CipherClass::Legacy},
        {0x0004, "TLS_RSA_WITH_RC4_128_MD5", CipherClass::Deprecated},
        {0x0005, "TLS_RSA_WITH_RC4_128_SHA", CipherClass::Deprecated},
        {0xC011, "TLS_ECDHE_RSA_WITH_RC4_128_SHA", CipherClass::Deprecated},
        {0x000A, "TLS_RSA_WITH_3DES_EDE_CBC_SHA", CipherClass::Deprecated},
        {0x0016, "TLS_DHE_RSA_WITH_3DES_EDE_CBC_SHA", CipherClass::Deprecated},
        {0x0009, "TLS_RSA_WITH_DES_CBC_SHA", CipherClass::Deprecated},
        {0x0015, "TLS_DHE_RSA_WITH_DES_CBC_SHA", CipherClass::Deprecated},
        {0x0001, "TLS_RSA_WITH_NULL_MD5", CipherClass::Deprecated},
        {0x0002, "TLS_RSA_WITH_NULL_SHA", CipherClass::Deprecated},
        {0x003B, "TLS_RSA_WITH_NULL_SHA256", CipherClass::Deprecated},
        {0x0003, "TLS_RSA_EXPORT_WITH_RC4_40_MD5", CipherClass::Export},
        {0x0006, "TLS_RSA_EXPORT_WITH_RC2_CBC_40_MD5", CipherClass::Export},
        {0x0008, "TLS_RSA_EXPORT_WITH_DES40_CBC_SHA", CipherClass::Export},
        {0x0011, "TLS_DHE_DSS_EXPORT_WITH_DES40_CBC_SHA", CipherClass::Export},
        {0x0014, "TLS_DHE_RSA_EXPORT_WITH_DES40_CBC_SHA", CipherClass::Export},
        {0x0019, "TLS_DH_anon_EXPORT_WITH_DES40_CBC_SHA", CipherClass::Export},
        {0x0062, "TLS_RSA_EXPORT1024_WITH_DES_CBC_SHA", CipherClass::Export},
        {0x0064, "TLS_RSA_EXPORT1024_WITH_RC4_56_SHA", CipherClass::Export},
    };
  }

  std::vector<CipherInfo> entries_;
};

struct ProbeSpec {
  TlsVersion offered_version = TlsVersion::Tls12;
  std::vector<std::uint16_t> offered_ciphers;
  bool include_heartbeat = false;
};

inline Result<Unit, ValidationError> validate_probe_spec(const ProbeSpec& spec) {
  if (spec.offered_ciphers.empty()) return ValidationError{"offered_ciphers must be non-empty"};
  if (spec.offered_ciphers.size() > 512) return ValidationError{"offered_ciphers exceeds 512 entries"};
  return Unit{};
}

enum class ProbeOutcome { Accepted, Rejected, Unparseable, Timeout, ConnectError };

inline std::string to_string(ProbeOutcome o) {
  switch (o) {
    case ProbeOutcome::Accepted: return "Accepted";
    case ProbeOutcome::Rejected: return "Rejected";
    case ProbeOutcome::Unparseable: return "Unparseable";
    case ProbeOutcome::Timeout: return "Timeout";
    case ProbeOutcome::ConnectError: return "ConnectError";
  }
  return "Unparseable";
}

struct TlsProbeResult {
  ProbeSpec spec;
  ProbeOutcome outcome = ProbeOutcome::Unparseable;
  std::uint16_t selected_cipher = 0;                     // Accepted only
  TlsVersion negotiated_version = TlsVersion::Tls12;     // Accepted only
  bool heartbeat_acked = false;                          // Accepted only
  std::uint8_t alert_code = 0;                           // Rejected only
};

enum class TriState { Yes, No, NotTested };

inline std::string to_string(TriState t) {
  switch (t) {
    case TriState::Yes: return "Yes";
    case TriState::No: return "No";
    case TriState::NotTested: return "NotTested";
  }
  return "NotTested";
}

struct EndpointPosture {
  std::set<TlsVersion> accepted_versions;
  std::map<TlsVersion, std::vector<std::uint16_t>> accepted_ciphers_by_version;  // sorted ascending
  TriState heartbeat_overread = TriState::NotTested;
  bool export_dhe_accepted = false;
};

namespace tls_scanner_detail {

inline std::uint16_t legacy_version_code(TlsVersion v) {
  switch (v) {
    case TlsVersion::Tls10: return 0x0301;
    case TlsVersion::Tls11: return 0x0302;
    case TlsVersion::Tls12: return 0x0303;
    case TlsVersion::Tls13: return 0x0303;  // 1.3 offers use the supported_versions extension
  }
  return 0x0301;
}

inline void put16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

}  // namespace tls_scanner_detail

/// Builds one TLS record carrying a ClientHello for the probe: legacy record
/// version per the offered version, 32 random bytes, empty session id, the
/// offered cipher list, null compression, supported_versions for TLS1.3
/// offers, heartbeat extension when requested.
inline Bytes build_client_hello(const ProbeSpec& spec) {
  namespace d = tls_scanner_detail;
  const std::uint16_t legacy = d::legacy_version_code(spec.offered_version);

  Bytes ext;
  if (spec.offered_version == TlsVersion::Tls13) {
    d::put16(ext, 0x002B);
    d::put16(ext, 3);
    ext.push_back(2);
    d::put16(ext, 0x0304);
  }
  if (spec.include_heartbeat) {
    d::put16(ext, 0x000F);
    d::put16(ext, 1);
    ext.push_back(0x01);  // peer_allowed_to_send
  }

  Bytes body;
  d::put16(body, legacy);
  for (int i = 0; i < 32; ++i) body.push_back(static_cast<std::uint8_t>(0x5A ^ (i * 7)));
  body.push_back(0x00);  // empty session id
  d::put16(body, static_cast<std::uint16_t>(spec.offered_ciphers.size() * 2));
  for (auto c : spec.offered_ciphers) d::put16(body, c);
  body.push_back(0x01);  // one compression method:
  body.push_back(0x00);  // null
  d::put16(body, static_cast<std::uint16_t>(ext.size()));
  body.insert(body.end(), ext.begin(), ext.end());

  Bytes hs;
  hs.push_back(0x01);  // client_hello
  hs.push_back(static_cast<std::uint8_t>(body.size() >> 16));
  hs.push_back(static_cast<std::uint8_t>((body.size() >> 8) & 0xFF));
  hs.push_back(static_cast<std::uint8_t>(body.size() & 0xFF));
  hs.insert(hs.end(), body.begin(), body.end());

  Bytes record;
  record.push_back(0x16);  // handshake
  d::put16(record, legacy);
  d::put16(record, static_cast<std::uint16_t>(hs.size()));
  record.insert(record.end(), hs.begin(), hs.end());
  return record;
}

struct ServerReply {
  enum class Kind { ServerHello, Alert, Unparseable };
  Kind kind = Kind::Unparseable;
  TlsVersion version = TlsVersion::Tls12;  // ServerHello: negotiated version
  std::uint16_t cipher = 0;                // ServerHello: selected cipher
  bool heartbeat_acked = false;            // ServerHello: heartbeat extension echoed
  std::uint8_t alert_level = 0;
  std::uint8_t alert_code = 0;
};

/// Total parser for the server's reply record: recognizes ServerHello
/// (honoring a supported_versions extension) and Alert; anything else is
/// Unparseable. Never reads past the buffer and never throws.
inline ServerReply parse_server_response(std::span<const std::uint8_t> buf) {
  ServerReply reply;
  auto u16 = [&buf](std::size_t off) -> std::uint32_t {
    return static_cast<std::uint32_t>(buf[off]) << 8 | buf[off + 1];
  };
  if (buf.size() < 5) return reply;
  const std::uint8_t content = buf[0];
  const std::size_t rec_len = u16(3);
  if (buf.size() < 5 + rec_len) return reply;

  if (content == 0x15) {  // alert
    if (rec_len < 2) return reply;
    reply.kind = ServerReply::Kind::Alert;
    reply.alert_level = buf[5];
    reply.alert_code = buf[6];
    return reply;
  }
  if (content != 0x16) return reply;

  std::size_t pos = 5;
  const std::size_t end = 5 + rec_len;
  if (end - pos < 4 || buf[pos] != 0x02) return reply;  // server_hello
  const std::size_t hs_len = (static_cast<std::size_t>(buf[pos + 1]) << 16) |
                             (static_cast<std::size_t>(buf[pos + 2]) << 8) | buf[pos + 3];
  pos += 4;
  if (end - pos < hs_len || hs_len < 2 + 32 + 1) return reply;
  const std::size_t hs_end = pos + hs_len;

  const std::uint32_t legacy = u16(pos);
  pos += 2 + 32;  // version + random
  const std::uint8_t sid_len = buf[pos];
  pos += 1;
  if (hs_end - pos < sid_len + 3u) return reply;
  pos += sid_len;
  const std::uint16_t cipher = static_cast<std::uint16_t>(u16(pos));
  pos += 2;
  pos += 1;  // compression

  std::optional<std::uint16_t> sv_code;
  bool heartbeat = false;
  if (hs_end - pos >= 2) {
    const std::size_t ext_total = u16(pos);
    pos += 2;
    if (hs_end - pos < ext_total) return reply;
    const std::size_t ext_end = pos + ext_total;
    while (pos + 4 <= ext_end) {
      const std::uint16_t ext_type = static_cast<std::uint16_t>(u16(pos));
      const std::size_t ext_len = u16(pos + 2);
      pos += 4;
      if (ext_end - pos < ext_len) return reply;
      if (ext_type == 0x002B && ext_len == 2) sv_code = static_cast<std::uint16_t>(u16(pos));
      if (ext_type == 0x000F) heartbeat = true;
      pos += ext_len;
    }
  }

  const std::uint32_t ver_code = sv_code ? *sv_code : legacy;
  TlsVersion version;
  switch (ver_code) {
    case 0x0301: version = TlsVersion::Tls10; break;
    case 0x0302: version = TlsVersion::Tls11; break;
    case 0x0303: version = TlsVersion::Tls12; break;
    case 0x0304: version = TlsVersion::Tls13; break;
    default: return reply;
  }
  reply.kind = ServerReply::Kind::ServerHello;
  reply.version = version;
  reply.cipher = cipher;
  reply.heartbeat_acked = heartbeat;
  return reply;
}

struct ScannerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  int timeout_ms = 2000;   // per probe; Timeout is treated as rejection (fail-closed)
  int parallelism = 4;     // bounded parallelism across independent probes
};

struct ScanError {
  std::string message;
};

namespace tls_scanner_detail {

inline Result<Bytes, NetError> read_one_record(TcpConn& conn, TimePoint deadline) {
  Bytes buf;
  std::uint8_t chunk[4096];
  while (true) {
    if (buf.size() >= 5) {
      const std::size_t want = 5u + ((buf[3] << 8) | buf[4]);
      if (buf.size() >= want) {
        buf.resize(want);
        return buf;
      }
    }
    auto n = conn.read_some(chunk, sizeof(chunk), deadline);
    if (!n) return n.error();
    if (n.value() == 0) {
      if (buf.empty()) return NetError{"connection closed"};
      return buf;  // partial record; the parser will classify it
    }
    buf.insert(buf.end(), chunk, chunk + n.value());
  }
}

}  // namespace tls_scanner_detail

/// One probe: connect, send the hello, classify the first reply record.
/// A ServerHello selecting a cipher that was never offered is Unparseable.
inline TlsProbeResult run_probe(const ScannerConfig& cfg, const ProbeSpec& spec) {
  TlsProbeResult result;
  result.spec = spec;
  if (!validate_probe_spec(spec)) {
    result.outcome = ProbeOutcome::Unparseable;
    return result;
  }
  auto conn = TcpConn::connect(cfg.host, cfg.port, cfg.timeout_ms);
  if (!conn) {
    result.outcome = ProbeOutcome::ConnectError;
    return result;
  }
  if (!conn.value().write_all(build_client_hello(spec))) {
    result.outcome = ProbeOutcome::ConnectError;
    return result;
  }
  const auto deadline = SteadyClock::now() + std::chrono::milliseconds(cfg.timeout_ms);
  auto record = tls_scanner_detail::read_one_record(conn.value(), deadline);
  if (!record) {
    result.outcome = record.error().message.find("timed out") != std::string::npos
                         ? ProbeOutcome::Timeout
                         : ProbeOutcome::ConnectError;
    return result;
  }
  const ServerReply reply = parse_server_response(record.value());
  switch (reply.kind) {
    case ServerReply::Kind::Alert:
      result.outcome = ProbeOutcome::Rejected;
      result.alert_code = reply.alert_code;
      return result;
    case ServerReply::Kind::ServerHello: {
      const bool offered = std::find(spec.offered_ciphers.begin(), spec.offered_ciphers.end(),
                                     reply.cipher) != spec.offered_ciphers.end();
      if (!offered) {
        result.outcome = ProbeOutcome::Unparseable;  // invariant: selected must be offered
        return result;
      }
      result.outcome = ProbeOutcome::Accepted;
      result.selected_cipher = reply.cipher;
      result.negotiated_version = reply.version;
      result.heartbeat_acked = reply.heartbeat_acked;
      return result;
    }
    case ServerReply::Kind::Unparseable:
      result.outcome = ProbeOutcome::Unparseable;
      return result;
  }
  return result;
}

using ProbeLog = std::vector<TlsProbeResult>;

/// One probe per TLS version with a version-appropriate broad cipher list; a
/// version counts as accepted only when the server negotiates exactly it.
inline Result<std::set<TlsVersion>, ScanError> enumerate_versions(const ScannerConfig& cfg,
                                                                  const CipherTable& table,
                                                                  ProbeLog* log = nullptr) {
  std::mutex mu;
  std::set<TlsVersion> accepted;
  std::size_t connect_errors = 0;

  std::vector<std::future<void>> tasks;
  for (const auto version : kAllTlsVersions) {
    tasks.push_back(std::async(std::launch::async, [&, version] {
      ProbeSpec spec;
      spec.offered_version = version;
      spec.offered_ciphers = table.candidates_for(version);
      if (spec.offered_ciphers.empty()) return;
      const auto result = run_probe(cfg, spec);
      std::lock_guard<std::mutex> lock(mu);
      if (log) log->push_back(result);
      if (result.outcome == ProbeOutcome::ConnectError) ++connect_errors;
      if (result.outcome == ProbeOutcome::Accepted && result.negotiated_version == version)
        accepted.insert(version);
    }));
  }
  for (auto& t : tasks) t.get();

  if (connect_errors == kAllTlsVersions.size()) return ScanError{"endpoint unreachable"};
  return accepted;
}

/// Iterative elimination: offer all candidates, remove each accepted cipher
/// and re-offer, stop on the first non-accepted probe (or when the candidate
/// list is exhausted). Result sorted ascending by id.
inline Result<std::vector<std::uint16_t>, ScanError> enumerate_ciphers(const ScannerConfig& cfg,
                                                                       TlsVersion version,
                                                                       const CipherTable& table,
                                                                       ProbeLog* log = nullptr) {
  std::vector<std::uint16_t> remaining = table.candidates_for(version);
  std::vector<std::uint16_t> accepted;
  int iterations = 0;
  while (!remaining.empty()) {
    if (++iterations > 512)
      return ScanError{"protocol anomaly: server keeps accepting beyond the offered set"};
    ProbeSpec spec;
    spec.offered_version = version;
    spec.offered_ciphers = remaining;
    const auto result = run_probe(cfg, spec);
    if (log) log->push_back(result);
    if (result.outcome != ProbeOutcome::Accepted) break;
    if (result.negotiated_version != version) break;  // fail-closed: wrong version negotiated
    accepted.push_back(result.selected_cipher);
    remaining.erase(std::remove(remaining.begin(), remaining.end(), result.selected_cipher),
                    remaining.end());
  }
  std::sort(accepted.begin(), accepted.end());
  return accepted;
}

/// Sends a heartbeat request declaring 64 payload bytes while carrying one.
/// Yes iff the response echoes more than the byte actually sent.
inline TriState probe_heartbeat_overread(const ScannerConfig& cfg, TlsVersion version,
                                         const CipherTable& table, ProbeLog* log = nullptr) {
  namespace d = tls_scanner_detail;
  ProbeSpec spec;
  spec.offered_version = version;
  spec.offered_ciphers = table.candidates_for(version);
  spec.include_heartbeat = true;
  if (spec.offered_ciphers.empty()) return TriState::NotTested;

  auto conn = TcpConn::connect(cfg.host, cfg.port, cfg.timeout_ms);
  if (!conn) return TriState::NotTested;
  if (!conn.value().write_all(build_client_hello(spec))) return TriState::NotTested;
  auto deadline = SteadyClock::now() + std::chrono::milliseconds(cfg.timeout_ms);
  auto record = d::read_one_record(conn.value(), deadline);
  if (!record) return TriState::NotTested;
  const ServerReply reply = parse_server_response(record.value());
  if (log) {
    TlsProbeResult r;
    r.spec = spec;
    r.outcome = reply.kind == ServerReply::Kind::ServerHello ? ProbeOutcome::Accepted
                                                             : ProbeOutcome::Rejected;
    r.heartbeat_acked = reply.heartbeat_acked;
    log->push_back(r);
  }
  if (reply.kind != ServerReply::Kind::ServerHello || !reply.heartbeat_acked)
    return TriState::NotTested;  // endpoint did not accept the heartbeat extension

  // heartbeat_request, payload_length=64, 1 actual payload byte, 16 padding.
  Bytes body{0x01, 0x00, 0x40, 0x42};
  for (int i = 0; i < 16; ++i) body.push_back(0x00);
  Bytes hb;
  hb.push_back(0x18);
  d::put16(hb, d::legacy_version_code(version));
  d::put16(hb, static_cast<std::uint16_t>(body.size()));
  hb.insert(hb.end(), body.begin(), body.end());
  if (!conn.value().write_all(hb)) return TriState::NotTested;

  deadline = SteadyClock::now() + std::chrono::milliseconds(cfg.timeout_ms);
  auto response = d::read_one_record(conn.value(), deadline);
  if (!response) {
    if (response.error().message.find("timed out") != std::string::npos) return TriState::No;
    return TriState::NotTested;
  }
  const Bytes& rec = response.value();
  if (rec.size() < 5 || rec[0] != 0x18) return TriState::No;  // alert or anything else
  if (rec.size() < 8 || rec[5] != 0x02) return TriState::No;
  const std::size_t echoed = (static_cast<std::size_t>(rec[6]) << 8) | rec[7];
  return echoed > 1 ? TriState::Yes : TriState::No;
}

struct ScanResult {
  EndpointPosture posture;
  ProbeLog probe_log;
  std::optional<std::string> error;  // "endpoint unreachable"
};

/// Full enumeration: versions, per-version cipher sets (parallel across
/// versions, bounded by cfg.parallelism), heartbeat overread, export-DHE
/// indicator.
inline ScanResult scan_endpoint(const ScannerConfig& cfg, const CipherTable& table) {
  ScanResult scan;
  auto versions = enumerate_versions(cfg, table, &scan.probe_log);
  if (!versions) {
    scan.error = versions.error().message;
    return scan;
  }
  scan.posture.accepted_versions = versions.value();

  const std::vector<TlsVersion> todo(versions.value().begin(), versions.value().end());
  const int parallelism = std::max(1, cfg.parallelism);
  std::mutex mu;
  std::size_t next = 0;
  std::vector<std::future<void>> workers;
  const int worker_count = std::min<int>(parallelism, static_cast<int>(todo.size()));
  for (int w = 0; w < worker_count; ++w) {
    workers.push_back(std::async(std::launch::async, [&] {
      while (true) {
        TlsVersion version;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= todo.size()) return;
          version = todo[next++];
        }
        ProbeLog local_log;
        auto ciphers = enumerate_ciphers(cfg, version, table, &local_log);
        std::lock_guard<std::mutex> lock(mu);
        scan.probe_log.insert(scan.probe_log.end(), local_log.begin(), local_log.end());
        if (ciphers) scan.posture.accepted_ciphers_by_version[version] = ciphers.value();
      }
    }));
  }
  for (auto& w : workers) w.get();

  if (!scan.posture.accepted_versions.empty()) {
    const TlsVersion hb_version = *scan.posture.accepted_versions.rbegin();
    scan.posture.heartbeat_overread = probe_heartbeat_overread(cfg, hb_version, table, &scan.probe_log);
  }

  for (const auto& [version, ciphers] : scan.posture.accepted_ciphers_by_version) {
    for (auto id : ciphers)
      if (export_dhe_suites().count(id)) scan.posture.export_dhe_accepted = true;
  }
  return scan;
}

}  // namespace uesentry
