#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uesentry/catalog.hpp"
#include "uesentry/model.hpp"
#include "uesentry/result.hpp"

namespace uesentry {

namespace detail {

inline Result<const nlohmann::json*, ValidationError> require_field(const nlohmann::json& obj,
                                                                    const std::string& path,
                                                                    const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return ValidationError{path + "." + key + " required"};
  return &*it;
}

inline Result<std::string, ValidationError> require_string(const nlohmann::json& obj,
                                                           const std::string& path, const char* key) {
  auto f = require_field(obj, path, key);
  if (!f) return f.error();
  if (!f.value()->is_string()) return ValidationError{path + "." + key + " must be a string"};
  return f.value()->get<std::string>();
}

inline bool is_kebab_case(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')) return false;
  return s.front() != '-' && s.back() != '-';
}

}  // namespace detail

/// Parses and fully validates one JSON test case. Errors name the offending
/// field and constraint.
inline Result<TestCase, ValidationError> parse_test_case(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) return ValidationError{"malformed JSON"};
  if (!doc.is_object()) return ValidationError{"test case must be a JSON object"};

  TestCase tc;

  auto id = detail::require_string(doc, "case", "id");
  if (!id) return id.error();
  tc.id = id.value();
  if (!detail::is_kebab_case(tc.id)) return ValidationError{"id must be non-empty kebab-case"};

  auto layer_s = detail::require_string(doc, "case", "layer");
  if (!layer_s) return layer_s.error();
  auto layer = layer_from_string(layer_s.value());
  if (!layer) return ValidationError{"layer must be NAS or RRC"};
  tc.layer = *layer;

  auto title = detail::require_string(doc, "case", "title");
  if (!title) return title.error();
  tc.title = title.value();

  auto spec_ref = detail::require_string(doc, "case", "spec_ref");
  if (!spec_ref) return spec_ref.error();
  tc.spec_ref = spec_ref.value();

  // trigger
  auto trig = detail::require_field(doc, "case", "trigger");
  if (!trig) return trig.error();
  if (!trig.value()->is_object()) return ValidationError{"trigger must be an object"};
  {
    const auto& t = *trig.value();
    auto mt = detail::require_string(t, "trigger", "message_type");
    if (!mt) return mt.error();
    tc.trigger.message_type = mt.value();
    auto st = detail::require_string(t, "trigger", "state");
    if (!st) return st.error();
    auto state = security_state_from_string(st.value());
    if (!state) return ValidationError{"trigger.state must be a valid UeSecurityState name"};
    tc.trigger.state = *state;
    auto resolved = catalog::resolve_message(tc.trigger.message_type, tc.layer);
    if (!resolved) return ValidationError{"trigger.message_type: " + resolved.error().message};
    if (resolved.value().dir != Direction::Uplink)
      return ValidationError{"trigger.message_type must be an uplink type"};
  }

  // inject
  auto inj = detail::require_field(doc, "case", "inject");
  if (!inj) return inj.error();
  if (!inj.value()->is_object()) return ValidationError{"inject must be an object"};
  {
    const auto& i = *inj.value();
    auto mt = detail::require_string(i, "inject", "message_type");
    if (!mt) return mt.error();
    tc.inject.message_type = mt.value();
    auto resolved = catalog::resolve_message(tc.inject.message_type, tc.layer);
    if (!resolved) return ValidationError{"inject.message_type: " + resolved.error().message};
    if (resolved.value().dir != Direction::Downlink)
      return ValidationError{"inject.message_type must be a downlink type"};
    auto prot = detail::require_string(i, "inject", "protection");
    if (!prot) return prot.error();
    auto p = protection_from_string(prot.value());
    if (!p) return ValidationError{"inject.protection must be None, IntegrityOnly or IntegrityAndCiphering"};
    tc.inject.protection = *p;
    auto ies = detail::require_field(i, "inject", "ies");
    if (!ies) return ies.error();
    if (!ies.value()->is_object()) return ValidationError{"inject.ies must be an object"};
    for (auto it = ies.value()->begin(); it != ies.value()->end(); ++it) {
      if (!catalog::find_ie(it.key())) return ValidationError{"inject.ies: unknown IE '" + it.key() + "'"};
      if (!it.value().is_string()) return ValidationError{"inject.ies." + it.key() + " must be a string"};
      auto bytes = dsl_string_to_bytes(it.value().get<std::string>());
      if (!bytes) return ValidationError{"inject.ies." + it.key() + ": " + bytes.error().message};
      tc.inject.ies[it.key()] = bytes.value();
    }
  }

  // expected
  auto exp = detail::require_field(doc, "case", "expected");
  if (!exp) return exp.error();
  if (!exp.value()->is_object()) return ValidationError{"expected must be an object"};
  {
    const auto& e = *exp.value();
    auto rule_s = detail::require_string(e, "expected", "rule");
    if (!rule_s) return rule_s.error();
    auto rule = rule_from_string(rule_s.value());
    if (!rule)
      return ValidationError{"expected.rule must be MustIgnore, MustReject, MustNotDisclose or MustAccept"};
    tc.expected.rule = *rule;

    if (e.contains("response_type")) {
      if (!e["response_type"].is_string()) return ValidationError{"expected.response_type must be a string"};
      tc.expected.response_type = e["response_type"].get<std::string>();
      auto resolved = catalog::resolve_message(*tc.expected.response_type, tc.layer);
      if (!resolved) return ValidationError{"expected.response_type: " + resolved.error().message};
      if (resolved.value().dir != Direction::Uplink)
        return ValidationError{"expected.response_type must be an uplink type"};
    }
    if (e.contains("forbidden_ie")) {
      if (!e["forbidden_ie"].is_string()) return ValidationError{"expected.forbidden_ie must be a string"};
      tc.expected.forbidden_ie = e["forbidden_ie"].get<std::string>();
      if (!catalog::find_ie(*tc.expected.forbidden_ie))
        return ValidationError{"expected.forbidden_ie: unknown IE '" + *tc.expected.forbidden_ie + "'"};
    }

    const bool needs_response =
        tc.expected.rule == ExpectedRule::MustReject || tc.expected.rule == ExpectedRule::MustAccept;
    if (needs_response && !tc.expected.response_type)
      return ValidationError{"expected.response_type required"};
    if (!needs_response && tc.expected.response_type)
      return ValidationError{"expected.response_type only valid for MustReject/MustAccept"};
    if (tc.expected.rule == ExpectedRule::MustNotDisclose && !tc.expected.forbidden_ie)
      return ValidationError{"expected.forbidden_ie required"};
    if (tc.expected.rule != ExpectedRule::MustNotDisclose && tc.expected.forbidden_ie)
      return ValidationError{"expected.forbidden_ie only valid for MustNotDisclose"};

    auto to = detail::require_field(e, "expected", "timeout_ms");
    if (!to) return to.error();
    if (!to.value()->is_number_integer()) return ValidationError{"expected.timeout_ms must be an integer"};
    tc.expected.timeout_ms = to.value()->get<int>();
    if (tc.expected.timeout_ms < 100 || tc.expected.timeout_ms > 60000)
      return ValidationError{"timeout_ms out of range"};
  }

  return tc;
}

/// Serializes a TestCase back to its DSL JSON form (round-trip companion of
/// parse_test_case).
inline std::string test_case_to_json(const TestCase& tc) {
  nlohmann::json doc;
  doc["id"] = tc.id;
  doc["layer"] = to_string(tc.layer);
  doc["title"] = tc.title;
  doc["spec_ref"] = tc.spec_ref;
  doc["trigger"] = {{"message_type", tc.trigger.message_type}, {"state", to_string(tc.trigger.state)}};
  nlohmann::json ies = nlohmann::json::object();
  for (const auto& [name, value] : tc.inject.ies) ies[name] = bytes_to_dsl_string(value);
  doc["inject"] = {{"message_type", tc.inject.message_type},
                   {"protection", to_string(tc.inject.protection)},
                   {"ies", ies}};
  nlohmann::json exp;
  exp["rule"] = to_string(tc.expected.rule);
  if (tc.expected.response_type) exp["response_type"] = *tc.expected.response_type;
  if (tc.expected.forbidden_ie) exp["forbidden_ie"] = *tc.expected.forbidden_ie;
  exp["timeout_ms"] = tc.expected.timeout_ms;
  doc["expected"] = exp;
  return doc.dump(2) + "\n";
}

/// Loads all `*.json` test cases from a directory. The whole suite is
/// rejected on any invalid file or duplicate id; an empty directory is a
/// valid suite with a warning.
inline Result<Suite, ValidationError> load_suite(const std::string& directory_path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(directory_path, ec)) return ValidationError{"suite directory not found: " + directory_path};

  Suite suite;
  suite.name = fs::path(directory_path).filename().string();
  if (suite.name.empty()) suite.name = fs::path(directory_path).parent_path().filename().string();

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory_path, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  if (ec) return ValidationError{"cannot read suite directory: " + ec.message()};
  std::sort(files.begin(), files.end());

  std::map<std::string, std::string> id_to_file;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) return ValidationError{"unreadable file: " + file.string()};
    std::stringstream ss;
    ss << in.rdbuf();
    auto tc = parse_test_case(ss.str());
    if (!tc) return ValidationError{file.string() + ": " + tc.error().message};
    auto [it, inserted] = id_to_file.emplace(tc.value().id, file.string());
    if (!inserted)
      return ValidationError{"duplicate id '" + tc.value().id + "' in " + it->second + " and " + file.string()};
    suite.cases.push_back(std::move(tc.value()));
  }

  std::sort(suite.cases.begin(), suite.cases.end(),
            [](const TestCase& a, const TestCase& b) { return a.id < b.id; });
  if (suite.cases.empty()) suite.warnings.push_back("suite directory contains no test cases");
  return suite;
}

/// Validates a BSI-style TLS policy document.
inline Result<PolicyDoc, ValidationError> validate_policy(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) return ValidationError{"malformed JSON"};
  if (!doc.is_object()) return ValidationError{"policy must be a JSON object"};

  PolicyDoc policy;
  auto name = detail::require_string(doc, "policy", "name");
  if (!name) return name.error();
  policy.name = name.value();

  auto versions = detail::require_field(doc, "policy", "allowed_versions");
  if (!versions) return versions.error();
  if (!versions.value()->is_array()) return ValidationError{"allowed_versions must be an array"};
  for (const auto& v : *versions.value()) {
    if (!v.is_string()) return ValidationError{"allowed_versions entries must be strings"};
    auto ver = tls_version_from_string(v.get<std::string>());
    if (!ver) return ValidationError{"allowed_versions: unknown version name '" + v.get<std::string>() + "'"};
    policy.allowed_versions.insert(*ver);
  }

  auto ciphers = detail::require_field(doc, "policy", "allowed_ciphers");
  if (!ciphers) return ciphers.error();
  if (!ciphers.value()->is_array()) return ValidationError{"allowed_ciphers must be an array"};
  for (const auto& c : *ciphers.value()) {
    if (!c.is_string()) return ValidationError{"allowed_ciphers entries must be strings"};
    const std::string s = c.get<std::string>();
    if (s.rfind("0x", 0) != 0 || s.size() != 6) return ValidationError{"allowed_ciphers entries must be 0xNNNN"};
    std::uint16_t id = 0;
    for (std::size_t i = 2; i < 6; ++i) {
      const char ch = s[i];
      int nib;
      if (ch >= '0' && ch <= '9')
        nib = ch - '0';
      else if (ch >= 'a' && ch <= 'f')
        nib = ch - 'a' + 10;
      else if (ch >= 'A' && ch <= 'F')
        nib = ch - 'A' + 10;
      else
        return ValidationError{"allowed_ciphers: invalid hex in '" + s + "'"};
      id = static_cast<std::uint16_t>((id << 4) | nib);
    }
    policy.allowed_ciphers.insert(id);
  }
  if (policy.allowed_ciphers.empty()) return ValidationError{"allowed_ciphers must be non-empty"};

  if (doc.contains("severity_overrides")) {
    if (!doc["severity_overrides"].is_object())
      return ValidationError{"severity_overrides must be an object"};
    for (auto it = doc["severity_overrides"].begin(); it != doc["severity_overrides"].end(); ++it) {
      if (!default_severity_registry().count(it.key()))
        return ValidationError{"severity_overrides: unknown finding code '" + it.key() + "'"};
      if (!it.value().is_string())
        return ValidationError{"severity_overrides." + it.key() + " must be a string"};
      auto sev = severity_from_string(it.value().get<std::string>());
      if (!sev)
        return ValidationError{"severity_overrides." + it.key() + ": unknown severity '" +
                               it.value().get<std::string>() + "'"};
      policy.severity_overrides[it.key()] = *sev;
    }
  }
  return policy;
}

}  // namespace uesentry
