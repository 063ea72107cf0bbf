#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uesentry/catalog.hpp"
#include "uesentry/model.hpp"

namespace uesentry {

/// One scripted downlink. `expect` names the uplink that confirms the step
/// so the engine can pace the handshake instead of sleeping.
struct ScriptStep {
  Layer layer = Layer::Rrc;
  std::string message_type;
  Protection protection = Protection::None;
  std::map<std::string, Bytes> ies;
  std::optional<std::string> expect;
};

using SessionScripts = std::map<UeSecurityState, std::vector<ScriptStep>>;

/// Canned downlink sequences that drive a compliant UE into each trigger
/// state, mirroring the NAS registration / RRC setup procedures.
inline SessionScripts default_session_scripts() {
  SessionScripts scripts;

  std::vector<ScriptStep> pre;
  pre.push_back({Layer::Rrc, "RRCSetup", Protection::None, {}, "RRCSetupComplete"});
  pre.push_back({Layer::Nas, "IdentityRequest", Protection::None,
                 {{"IdentityType", Bytes{'S', 'U', 'C', 'I'}}}, "IdentityResponse"});
  pre.push_back({Layer::Nas, "AuthenticationRequest", Protection::None, {}, "AuthenticationResponse"});
  scripts[UeSecurityState::PreSecurity] = pre;

  std::vector<ScriptStep> post = pre;
  post.push_back({Layer::Nas, "SecurityModeCommand", Protection::IntegrityAndCiphering,
                  {{"SecurityAlgorithms", Bytes{'N', 'E', 'A', '2', '/', 'N', 'I', 'A', '2'}}},
                  "NAS.SecurityModeComplete"});
  post.push_back({Layer::Rrc, "SecurityModeCommand", Protection::IntegrityAndCiphering,
                  {{"SecurityAlgorithms", Bytes{'N', 'E', 'A', '2', '/', 'N', 'I', 'A', '2'}}},
                  "RRC.SecurityModeComplete"});
  scripts[UeSecurityState::PostSecurity] = post;

  std::vector<ScriptStep> reg = post;
  reg.push_back({Layer::Nas, "RegistrationAccept", Protection::IntegrityAndCiphering, {}, std::nullopt});
  reg.push_back({Layer::Nas, "IdentityRequest", Protection::IntegrityAndCiphering,
                 {{"IdentityType", Bytes{'S', 'U', 'C', 'I'}}}, "IdentityResponse"});
  reg.push_back({Layer::Rrc, "UECapabilityEnquiry", Protection::IntegrityAndCiphering, {},
                 "UECapabilityInformation"});
  scripts[UeSecurityState::Registered] = reg;

  return scripts;
}

inline nlohmann::json session_scripts_to_json(const SessionScripts& scripts) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [state, steps] : scripts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& step : steps) {
      nlohmann::json s;
      s["layer"] = to_string(step.layer);
      s["message_type"] = step.message_type;
      s["protection"] = to_string(step.protection);
      nlohmann::json ies = nlohmann::json::object();
      for (const auto& [name, value] : step.ies) ies[name] = bytes_to_dsl_string(value);
      s["ies"] = ies;
      if (step.expect) s["expect"] = *step.expect;
      arr.push_back(s);
    }
    doc[to_string(state)] = arr;
  }
  return doc;
}

inline Result<SessionScripts, ValidationError> parse_session_scripts(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) return ValidationError{"malformed JSON"};
  if (!doc.is_object()) return ValidationError{"session scripts must be a JSON object"};

  SessionScripts scripts;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    auto state = security_state_from_string(it.key());
    if (!state) return ValidationError{"unknown trigger state '" + it.key() + "'"};
    if (!it.value().is_array()) return ValidationError{it.key() + " must be an array of steps"};
    std::vector<ScriptStep> steps;
    for (const auto& s : it.value()) {
      ScriptStep step;
      if (!s.is_object() || !s.contains("layer") || !s.contains("message_type") ||
          !s.contains("protection") || !s.contains("ies"))
        return ValidationError{it.key() + ": step requires layer, message_type, protection, ies"};
      auto layer = layer_from_string(s["layer"].get<std::string>());
      if (!layer) return ValidationError{it.key() + ": bad layer"};
      step.layer = *layer;
      step.message_type = s["message_type"].get<std::string>();
      auto resolved = catalog::resolve_message(step.message_type, step.layer);
      if (!resolved || resolved.value().dir != Direction::Downlink)
        return ValidationError{it.key() + ": '" + step.message_type + "' is not a downlink type"};
      auto prot = protection_from_string(s["protection"].get<std::string>());
      if (!prot) return ValidationError{it.key() + ": bad protection"};
      step.protection = *prot;
      for (auto ie = s["ies"].begin(); ie != s["ies"].end(); ++ie) {
        if (!catalog::find_ie(ie.key())) return ValidationError{it.key() + ": unknown IE '" + ie.key() + "'"};
        auto bytes = dsl_string_to_bytes(ie.value().get<std::string>());
        if (!bytes) return ValidationError{it.key() + ": " + bytes.error().message};
        step.ies[ie.key()] = bytes.value();
      }
      if (s.contains("expect")) {
        step.expect = s["expect"].get<std::string>();
        auto exp_resolved = catalog::resolve_message(*step.expect, step.layer);
        if (!exp_resolved || exp_resolved.value().dir != Direction::Uplink)
          return ValidationError{it.key() + ": expect '" + *step.expect + "' is not an uplink type"};
      }
      steps.push_back(std::move(step));
    }
    scripts[*state] = std::move(steps);
  }
  return scripts;
}

}  // namespace uesentry
