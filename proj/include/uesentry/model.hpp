#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "uesentry/codec.hpp"
#include "uesentry/result.hpp"

namespace uesentry {

enum class UeSecurityState { PreSecurity, PostSecurity, Registered };

inline std::string to_string(UeSecurityState s) {
  switch (s) {
    case UeSecurityState::PreSecurity: return "PreSecurity";
    case UeSecurityState::PostSecurity: return "PostSecurity";
    case UeSecurityState::Registered: return "Registered";
  }
  return "PreSecurity";
}

inline std::optional<UeSecurityState> security_state_from_string(std::string_view s) {
  if (s == "PreSecurity") return UeSecurityState::PreSecurity;
  if (s == "PostSecurity") return UeSecurityState::PostSecurity;
  if (s == "Registered") return UeSecurityState::Registered;
  return std::nullopt;
}

enum class ExpectedRule { MustIgnore, MustReject, MustNotDisclose, MustAccept };

inline std::string to_string(ExpectedRule r) {
  switch (r) {
    case ExpectedRule::MustIgnore: return "MustIgnore";
    case ExpectedRule::MustReject: return "MustReject";
    case ExpectedRule::MustNotDisclose: return "MustNotDisclose";
    case ExpectedRule::MustAccept: return "MustAccept";
  }
  return "MustIgnore";
}

inline std::optional<ExpectedRule> rule_from_string(std::string_view s) {
  if (s == "MustIgnore") return ExpectedRule::MustIgnore;
  if (s == "MustReject") return ExpectedRule::MustReject;
  if (s == "MustNotDisclose") return ExpectedRule::MustNotDisclose;
  if (s == "MustAccept") return ExpectedRule::MustAccept;
  return std::nullopt;
}

enum class Outcome { Compliant, NonCompliant, Inconclusive, Error };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Compliant: return "Compliant";
    case Outcome::NonCompliant: return "NonCompliant";
    case Outcome::Inconclusive: return "Inconclusive";
    case Outcome::Error: return "Error";
  }
  return "Error";
}

inline std::optional<Outcome> outcome_from_string(std::string_view s) {
  if (s == "Compliant") return Outcome::Compliant;
  if (s == "NonCompliant") return Outcome::NonCompliant;
  if (s == "Inconclusive") return Outcome::Inconclusive;
  if (s == "Error") return Outcome::Error;
  return std::nullopt;
}

enum class Severity { Info = 0, Low = 1, Medium = 2, High = 3, Critical = 4 };

inline std::string to_string(Severity s) {
  switch (s) {
    case Severity::Info: return "Info";
    case Severity::Low: return "Low";
    case Severity::Medium: return "Medium";
    case Severity::High: return "High";
    case Severity::Critical: return "Critical";
  }
  return "Info";
}

inline std::optional<Severity> severity_from_string(std::string_view s) {
  if (s == "Info") return Severity::Info;
  if (s == "Low") return Severity::Low;
  if (s == "Medium") return Severity::Medium;
  if (s == "High") return Severity::High;
  if (s == "Critical") return Severity::Critical;
  return std::nullopt;
}

enum class FindingSource { Tls, Cp };

inline std::string to_string(FindingSource s) { return s == FindingSource::Tls ? "TLS" : "CP"; }

enum class TlsVersion { Tls10, Tls11, Tls12, Tls13 };

inline std::string to_string(TlsVersion v) {
  switch (v) {
    case TlsVersion::Tls10: return "TLS1.0";
    case TlsVersion::Tls11: return "TLS1.1";
    case TlsVersion::Tls12: return "TLS1.2";
    case TlsVersion::Tls13: return "TLS1.3";
  }
  return "TLS1.0";
}

inline std::optional<TlsVersion> tls_version_from_string(std::string_view s) {
  if (s == "TLS1.0") return TlsVersion::Tls10;
  if (s == "TLS1.1") return TlsVersion::Tls11;
  if (s == "TLS1.2") return TlsVersion::Tls12;
  if (s == "TLS1.3") return TlsVersion::Tls13;
  return std::nullopt;
}

inline constexpr std::array<TlsVersion, 4> kAllTlsVersions = {TlsVersion::Tls10, TlsVersion::Tls11,
                                                              TlsVersion::Tls12, TlsVersion::Tls13};

struct TriggerSpec {
  std::string message_type;  // uplink type, resolvable in the catalog
  UeSecurityState state = UeSecurityState::PreSecurity;
};

struct InjectSpec {
  std::string message_type;  // downlink type
  Protection protection = Protection::None;
  std::map<std::string, Bytes> ies;  // IE name -> value bytes
};

struct ExpectedBehavior {
  ExpectedRule rule = ExpectedRule::MustIgnore;
  std::optional<std::string> response_type;  // required for MustReject/MustAccept
  std::optional<std::string> forbidden_ie;   // required for MustNotDisclose
  int timeout_ms = 1000;                     // [100, 60000]
};

/// One JSON-defined control-plane test case.
struct TestCase {
  std::string id;
  Layer layer = Layer::Nas;
  std::string title;
  std::string spec_ref;
  TriggerSpec trigger;
  InjectSpec inject;
  ExpectedBehavior expected;
};

struct Suite {
  std::string name;
  std::vector<TestCase> cases;  // sorted by id
  std::vector<std::string> warnings;

  std::size_t nas_count() const {
    std::size_t n = 0;
    for (const auto& c : cases) n += c.layer == Layer::Nas ? 1 : 0;
    return n;
  }
  std::size_t rrc_count() const { return cases.size() - nas_count(); }
};

enum class TraceDirection { Sent, Received };

inline std::string to_string(TraceDirection d) { return d == TraceDirection::Sent ? "Sent" : "Received"; }

struct TraceEvent {
  TraceDirection direction = TraceDirection::Sent;
  std::int64_t timestamp_ms = 0;  // monotonic, from session start; non-decreasing
  CpMessage message;
};

struct Verdict {
  std::string test_id;
  Outcome outcome = Outcome::Error;
  std::vector<TraceEvent> evidence;
  std::string explanation;
};

struct Finding {
  FindingSource source = FindingSource::Tls;
  std::string code;  // e.g. "tls.deprecated-cipher", from the severity registry
  Severity severity = Severity::Info;
  std::string subject;  // cipher name, version, or test id
  std::string evidence;
  std::string recommendation;
};

struct PolicyDoc {
  std::string name;
  std::set<TlsVersion> allowed_versions;
  std::set<std::uint16_t> allowed_ciphers;
  std::map<std::string, Severity> severity_overrides;
};

/// Finding codes and their default severities. Every code the evaluator can
/// emit has an entry here; policies may only override codes from this set.
inline const std::map<std::string, Severity>& default_severity_registry() {
  static const std::map<std::string, Severity> registry = {
      {"tls.version-disallowed", Severity::High},
      {"tls.deprecated-cipher", Severity::High},
      {"tls.legacy-cipher", Severity::Medium},
      {"tls.export-cipher", Severity::Critical},
      {"tls.heartbeat-overread", Severity::Critical},
      {"tls.cipher-not-in-policy", Severity::Medium},
      {"tls.unknown-cipher", Severity::Medium},
      {"tls.scanner-error", Severity::Info},
      {"cp.noncompliant", Severity::High},
  };
  return registry;
}

/// Bytes <-> DSL string value. Printable ASCII round-trips as-is; anything
/// else uses a "hex:" prefix. Strings starting with "hex:" always hex-encode.
inline std::string bytes_to_dsl_string(const Bytes& b) {
  bool printable = true;
  for (auto c : b)
    if (c < 0x20 || c > 0x7E) {
      printable = false;
      break;
    }
  std::string plain(b.begin(), b.end());
  if (printable && plain.rfind("hex:", 0) != 0) return plain;
  static const char* digits = "0123456789abcdef";
  std::string out = "hex:";
  for (auto c : b) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0x0F]);
  }
  return out;
}

inline Result<Bytes, ValidationError> dsl_string_to_bytes(const std::string& s) {
  if (s.rfind("hex:", 0) != 0) return Bytes(s.begin(), s.end());
  const std::string hex = s.substr(4);
  if (hex.size() % 2 != 0) return ValidationError{"hex value has odd length"};
  Bytes out;
  out.reserve(hex.size() / 2);
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]), lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return ValidationError{"invalid hex digit in value"};
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

}  // namespace uesentry
