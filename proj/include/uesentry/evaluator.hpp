#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uesentry/engine.hpp"
#include "uesentry/model.hpp"
#include "uesentry/tls_scanner.hpp"

namespace uesentry {

/// Finding-code -> severity mapping; shipped defaults come from the shared
/// registry, policies may override per code.
class SeverityRegistry {
 public:
  SeverityRegistry() : map_(default_severity_registry()) {}
  explicit SeverityRegistry(std::map<std::string, Severity> map) : map_(std::move(map)) {}

  static Result<SeverityRegistry, ValidationError> from_json(const std::string& json_text) {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) return ValidationError{"malformed JSON"};
    if (!doc.is_object()) return ValidationError{"severity registry must be a JSON object"};
    std::map<std::string, Severity> map;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      auto sev = severity_from_string(it.value().get<std::string>());
      if (!sev) return ValidationError{"unknown severity '" + it.value().get<std::string>() + "'"};
      map[it.key()] = *sev;
    }
    return SeverityRegistry(std::move(map));
  }

  Severity severity_for(const std::string& code, const PolicyDoc* policy = nullptr) const {
    if (policy) {
      auto it = policy->severity_overrides.find(code);
      if (it != policy->severity_overrides.end()) return it->second;
    }
    auto it = map_.find(code);
    if (it != map_.end()) return it->second;
    return Severity::Medium;  // fail-closed for unknown codes
  }

  const std::map<std::string, Severity>& entries() const { return map_; }

 private:
  std::map<std::string, Severity> map_;
};

namespace detail {

inline std::string describe_responses(const std::vector<TraceEvent>& responses) {
  std::string out;
  for (const auto& ev : responses) {
    if (!out.empty()) out += ", ";
    out += to_string(ev.message.layer) + "." + ev.message.type_name();
  }
  return out;
}

}  // namespace detail

/// Rule-based classification of one observation against its test case.
inline Verdict evaluate_cp(const Observation& obs, const TestCase& tc) {
  if (obs.test_id != tc.id)
    throw std::invalid_argument("evaluate_cp: observation for '" + obs.test_id +
                                "' does not match case '" + tc.id + "'");
  Verdict verdict;
  verdict.test_id = tc.id;

  if (obs.transport_error) {
    verdict.outcome = Outcome::Error;
    verdict.explanation = "transport failure: " + *obs.transport_error;
    return verdict;
  }
  if (!obs.trigger_reached) {
    verdict.outcome = Outcome::Inconclusive;
    verdict.explanation = "trigger condition not reached: no " + tc.trigger.message_type +
                          " observed in state " + to_string(tc.trigger.state);
    return verdict;
  }

  verdict.evidence = obs.responses;
  const auto& responses = obs.responses;

  const auto count_of_type = [&](const std::string& name) {
    const auto resolved = catalog::resolve_message(name, tc.layer);
    std::size_t n = 0;
    for (const auto& ev : responses)
      if (ev.message.layer == resolved.value().layer && ev.message.msg_type == resolved.value().code)
        ++n;
    return n;
  };

  switch (tc.expected.rule) {
    case ExpectedRule::MustIgnore:
      if (responses.empty()) {
        verdict.outcome = Outcome::Compliant;
        verdict.explanation = "DUT stayed silent for " + std::to_string(obs.window_ms) + " ms as required";
      } else {
        verdict.outcome = Outcome::NonCompliant;
        verdict.explanation =
            "responded when silence required: " + detail::describe_responses(responses);
      }
      break;

    case ExpectedRule::MustReject: {
      const std::size_t matching = count_of_type(*tc.expected.response_type);
      if (matching == 1 && responses.size() == 1) {
        verdict.outcome = Outcome::Compliant;
        verdict.explanation = "DUT rejected with exactly one " + *tc.expected.response_type;
      } else if (responses.empty()) {
        verdict.outcome = Outcome::NonCompliant;
        verdict.explanation = "silent when response required: expected " + *tc.expected.response_type;
      } else {
        verdict.outcome = Outcome::NonCompliant;
        verdict.explanation = "expected exactly one " + *tc.expected.response_type + ", observed: " +
                              detail::describe_responses(responses);
      }
      break;
    }

    case ExpectedRule::MustNotDisclose: {
      const auto* ie = catalog::find_ie(*tc.expected.forbidden_ie);
      bool disclosed = false;
      for (const auto& ev : responses)
        if (ie && ev.message.has_ie(ie->tag)) disclosed = true;
      if (disclosed) {
        verdict.outcome = Outcome::NonCompliant;
        verdict.explanation = "response disclosed forbidden IE " + *tc.expected.forbidden_ie + ": " +
                              detail::describe_responses(responses);
      } else {
        verdict.outcome = Outcome::Compliant;
        verdict.explanation = responses.empty()
                                  ? "DUT stayed silent; nothing disclosed"
                                  : "responses carry no " + *tc.expected.forbidden_ie;
      }
      break;
    }

    case ExpectedRule::MustAccept: {
      if (count_of_type(*tc.expected.response_type) >= 1) {
        verdict.outcome = Outcome::Compliant;
        verdict.explanation = "DUT accepted with " + *tc.expected.response_type;
      } else if (responses.empty()) {
        verdict.outcome = Outcome::NonCompliant;
        verdict.explanation = "silent when response required: expected " + *tc.expected.response_type;
      } else {
        verdict.outcome = Outcome::NonCompliant;
        verdict.explanation = "no " + *tc.expected.response_type + " response, observed: " +
                              detail::describe_responses(responses);
      }
      break;
    }
  }
  return verdict;
}

namespace detail {

inline std::string cipher_hex(std::uint16_t id) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "0x%04X", id);
  return buf;
}

inline std::string versions_accepting(const EndpointPosture& posture, std::uint16_t id) {
  std::string out;
  for (const auto& [version, ciphers] : posture.accepted_ciphers_by_version)
    if (std::find(ciphers.begin(), ciphers.end(), id) != ciphers.end()) {
      if (!out.empty()) out += ", ";
      out += to_string(version);
    }
  return out;
}

}  // namespace detail

/// Grades a scanned posture against the policy: disallowed versions, one
/// highest-severity finding per accepted cipher, heartbeat overread.
/// Sorted by (severity desc, code, subject).
inline std::vector<Finding> evaluate_tls(const EndpointPosture& posture, const PolicyDoc& policy,
                                         const CipherTable& table,
                                         const SeverityRegistry& registry = SeverityRegistry()) {
  std::vector<Finding> findings;

  for (const auto version : posture.accepted_versions) {
    if (policy.allowed_versions.count(version)) continue;
    Finding f;
    f.source = FindingSource::Tls;
    f.code = "tls.version-disallowed";
    f.severity = registry.severity_for(f.code, &policy);
    f.subject = to_string(version);
    f.evidence = "endpoint negotiated " + to_string(version) +
                 ", which policy '" + policy.name + "' does not allow";
    f.recommendation = "disable " + to_string(version) + " on the endpoint";
    findings.push_back(std::move(f));
  }

  // Cipher findings are deduplicated across versions: one finding per cipher,
  // the highest effective severity wins.
  std::set<std::uint16_t> seen;
  for (const auto& [version, ciphers] : posture.accepted_ciphers_by_version) {
    for (const auto id : ciphers) {
      if (!seen.insert(id).second) continue;
      const CipherInfo* info = table.find(id);
      const std::string versions = detail::versions_accepting(posture, id);

      if (!info) {
        Finding f;
        f.source = FindingSource::Tls;
        f.code = "tls.unknown-cipher";
        f.severity = registry.severity_for(f.code, &policy);
        f.subject = detail::cipher_hex(id);
        f.evidence = "accepted cipher " + detail::cipher_hex(id) + " (" + versions +
                     ") is not in the candidate table";
        f.recommendation = "identify and disable the unknown suite";
        findings.push_back(std::move(f));
        continue;
      }

      std::vector<Finding> candidates;
      const auto add = [&](const std::string& code, const std::string& why) {
        Finding f;
        f.source = FindingSource::Tls;
        f.code = code;
        f.severity = registry.severity_for(code, &policy);
        f.subject = info->name;
        f.evidence = info->name + " (" + detail::cipher_hex(id) + ") accepted on " + versions + "; " + why;
        f.recommendation = "remove " + info->name + " from the endpoint configuration";
        candidates.push_back(std::move(f));
      };
      switch (info->cls) {
        case CipherClass::Export: add("tls.export-cipher", "export-grade strength"); break;
        case CipherClass::Deprecated: add("tls.deprecated-cipher", "deprecated algorithm"); break;
        case CipherClass::Legacy: add("tls.legacy-cipher", "legacy construction"); break;
        case CipherClass::Modern: break;
      }
      if (!policy.allowed_ciphers.count(id))
        add("tls.cipher-not-in-policy", "not in policy '" + policy.name + "' allow-list");
      if (candidates.empty()) continue;
      // max_element returns the first maximum, so on a severity tie the
      // class-based finding (added first) wins.
      auto best = std::max_element(
          candidates.begin(), candidates.end(),
          [](const Finding& a, const Finding& b) { return a.severity < b.severity; });
      findings.push_back(*best);
    }
  }

  if (posture.heartbeat_overread == TriState::Yes) {
    Finding f;
    f.source = FindingSource::Tls;
    f.code = "tls.heartbeat-overread";
    f.severity = registry.severity_for(f.code, &policy);
    f.subject = "heartbeat";
    f.evidence = "heartbeat response echoed more payload than was sent (declared-length overread)";
    f.recommendation = "patch the TLS stack or disable the heartbeat extension";
    findings.push_back(std::move(f));
  }

  std::sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
    if (a.severity != b.severity) return a.severity > b.severity;
    if (a.code != b.code) return a.code < b.code;
    return a.subject < b.subject;
  });
  return findings;
}

}  // namespace uesentry
