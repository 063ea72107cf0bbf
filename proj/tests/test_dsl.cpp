#include <catch2/catch.hpp>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "uesentry/dsl.hpp"
#include "uesentry/session.hpp"

using namespace uesentry;

namespace {

const char* kIdentityCase = R"({
  "id": "nas-idreq-imsi-plain-presec",
  "layer": "NAS",
  "title": "Unprotected IdentityRequest for the permanent identity",
  "spec_ref": "TS 24.501 cl. 5.4.3",
  "trigger": {"message_type": "RRCSetupComplete", "state": "PreSecurity"},
  "inject": {"message_type": "IdentityRequest", "protection": "None", "ies": {"IdentityType": "IMSI"}},
  "expected": {"rule": "MustNotDisclose", "forbidden_ie": "MobileIdentityImsi", "timeout_ms": 400}
})";

std::string with_replacement(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("parse_test_case accepts a valid identity-request case", "[dsl]") {
  auto tc = parse_test_case(kIdentityCase);
  REQUIRE(tc.ok());
  CHECK(tc.value().layer == Layer::Nas);
  CHECK(tc.value().expected.rule == ExpectedRule::MustNotDisclose);
  CHECK(tc.value().trigger.state == UeSecurityState::PreSecurity);
  CHECK(tc.value().expected.forbidden_ie == "MobileIdentityImsi");
  CHECK(tc.value().inject.ies.at("IdentityType") == Bytes{'I', 'M', 'S', 'I'});
}

TEST_CASE("parse_test_case rejects rule/field mismatches", "[dsl]") {
  SECTION("MustReject without response_type") {
    const auto text = with_replacement(
        kIdentityCase, R"("rule": "MustNotDisclose", "forbidden_ie": "MobileIdentityImsi")",
        R"("rule": "MustReject")");
    auto tc = parse_test_case(text);
    REQUIRE_FALSE(tc.ok());
    CHECK(tc.error().message.find("expected.response_type required") != std::string::npos);
  }

  SECTION("MustNotDisclose without forbidden_ie") {
    const auto text =
        with_replacement(kIdentityCase, R"(, "forbidden_ie": "MobileIdentityImsi")", "");
    auto tc = parse_test_case(text);
    REQUIRE_FALSE(tc.ok());
    CHECK(tc.error().message.find("forbidden_ie required") != std::string::npos);
  }

  SECTION("timeout_ms out of range") {
    for (const char* bad : {"0", "99", "60001"}) {
      const auto text = with_replacement(kIdentityCase, "400", bad);
      auto tc = parse_test_case(text);
      REQUIRE_FALSE(tc.ok());
      CHECK(tc.error().message.find("timeout_ms out of range") != std::string::npos);
    }
  }
}

TEST_CASE("parse_test_case rejects malformed and unknown input", "[dsl]") {
  CHECK_FALSE(parse_test_case("{ not json").ok());
  CHECK_FALSE(parse_test_case("[1,2,3]").ok());

  SECTION("unknown message types and IEs") {
    auto bad_trigger = with_replacement(kIdentityCase, "RRCSetupComplete", "NoSuchMessage");
    CHECK_FALSE(parse_test_case(bad_trigger).ok());
    auto bad_ie = with_replacement(kIdentityCase, "\"IdentityType\"", "\"NoSuchIe\"");
    CHECK_FALSE(parse_test_case(bad_ie).ok());
  }

  SECTION("direction constraints") {
    // Trigger must be an uplink type.
    auto downlink_trigger = with_replacement(kIdentityCase, "RRCSetupComplete", "RRCSetup");
    CHECK_FALSE(parse_test_case(downlink_trigger).ok());
    // Inject must be a downlink type.
    auto uplink_inject =
        with_replacement(kIdentityCase, "\"message_type\": \"IdentityRequest\"",
                         "\"message_type\": \"IdentityResponse\"");
    CHECK_FALSE(parse_test_case(uplink_inject).ok());
  }

  SECTION("id must be kebab-case") {
    auto bad_id = with_replacement(kIdentityCase, "nas-idreq-imsi-plain-presec", "Bad_Id");
    CHECK_FALSE(parse_test_case(bad_id).ok());
  }
}

TEST_CASE("test case roundtrips through its JSON form", "[dsl][property]") {
  const auto suite = load_suite(test_helpers::data_path("suites/cp-baseline"));
  REQUIRE(suite.ok());
  for (const auto& tc : suite.value().cases) {
    auto reparsed = parse_test_case(test_case_to_json(tc));
    REQUIRE(reparsed.ok());
    CHECK(reparsed.value().id == tc.id);
    CHECK(reparsed.value().layer == tc.layer);
    CHECK(reparsed.value().trigger.message_type == tc.trigger.message_type);
    CHECK(reparsed.value().trigger.state == tc.trigger.state);
    CHECK(reparsed.value().inject.message_type == tc.inject.message_type);
    CHECK(reparsed.value().inject.protection == tc.inject.protection);
    CHECK(reparsed.value().inject.ies == tc.inject.ies);
    CHECK(reparsed.value().expected.rule == tc.expected.rule);
    CHECK(reparsed.value().expected.response_type == tc.expected.response_type);
    CHECK(reparsed.value().expected.forbidden_ie == tc.expected.forbidden_ie);
    CHECK(reparsed.value().expected.timeout_ms == tc.expected.timeout_ms);
  }
}

TEST_CASE("load_suite loads the shipped catalog", "[dsl]") {
  auto suite = load_suite(test_helpers::data_path("suites/cp-baseline"));
  REQUIRE(suite.ok());
  CHECK(suite.value().nas_count() == 24);
  CHECK(suite.value().rrc_count() == 10);
  CHECK(suite.value().warnings.empty());
  CHECK(std::is_sorted(suite.value().cases.begin(), suite.value().cases.end(),
                       [](const TestCase& a, const TestCase& b) { return a.id < b.id; }));
}

TEST_CASE("load_suite edge cases", "[dsl]") {
  SECTION("empty directory is a valid suite with a warning") {
    test_helpers::TempDir dir("empty-suite");
    auto suite = load_suite(dir.str());
    REQUIRE(suite.ok());
    CHECK(suite.value().cases.empty());
    REQUIRE_FALSE(suite.value().warnings.empty());
  }

  SECTION("duplicate ids reject the whole suite, naming both files") {
    test_helpers::TempDir dir("dup-suite");
    auto duplicate = std::string(kIdentityCase);
    duplicate = duplicate.replace(duplicate.find("nas-idreq-imsi-plain-presec"),
                                  std::string("nas-idreq-imsi-plain-presec").size(),
                                  "nas-idreq-plain");
    test_helpers::write_file(dir.str() + "/a.json", duplicate);
    test_helpers::write_file(dir.str() + "/b.json", duplicate);
    auto suite = load_suite(dir.str());
    REQUIRE_FALSE(suite.ok());
    CHECK(suite.error().message.find("nas-idreq-plain") != std::string::npos);
    CHECK(suite.error().message.find("a.json") != std::string::npos);
    CHECK(suite.error().message.find("b.json") != std::string::npos);
  }

  SECTION("one invalid file rejects the whole suite") {
    test_helpers::TempDir dir("bad-suite");
    test_helpers::write_file(dir.str() + "/good.json", kIdentityCase);
    test_helpers::write_file(dir.str() + "/bad.json", "{");
    CHECK_FALSE(load_suite(dir.str()).ok());
  }

  SECTION("missing directory") { CHECK_FALSE(load_suite("/nonexistent/suite/dir").ok()); }
}

TEST_CASE("load_suite is order-independent", "[dsl][property]") {
  const auto canonical = load_suite(test_helpers::data_path("suites/cp-baseline"));
  REQUIRE(canonical.ok());

  // Same files under shuffled names: the loaded suite must be identical.
  test_helpers::TempDir dir("shuffled-suite");
  std::vector<std::string> contents;
  for (const auto& tc : canonical.value().cases) contents.push_back(test_case_to_json(tc));
  std::mt19937_64 rng(0x5EED);
  std::shuffle(contents.begin(), contents.end(), rng);
  for (std::size_t i = 0; i < contents.size(); ++i)
    test_helpers::write_file(dir.str() + "/case-" + std::to_string(rng() % 100000) + "-" +
                                 std::to_string(i) + ".json",
                             contents[i]);

  auto shuffled = load_suite(dir.str());
  REQUIRE(shuffled.ok());
  REQUIRE(shuffled.value().cases.size() == canonical.value().cases.size());
  for (std::size_t i = 0; i < shuffled.value().cases.size(); ++i)
    CHECK(shuffled.value().cases[i].id == canonical.value().cases[i].id);
}

TEST_CASE("validate_policy", "[dsl]") {
  SECTION("shipped bsi-baseline validates") {
    auto policy = validate_policy(test_helpers::read_file(test_helpers::data_path("policies/bsi-baseline.json")));
    REQUIRE(policy.ok());
    CHECK(policy.value().allowed_versions ==
          std::set<TlsVersion>{TlsVersion::Tls12, TlsVersion::Tls13});
    CHECK(policy.value().allowed_ciphers.count(0x1301) == 1);
    CHECK(policy.value().allowed_ciphers.count(0x0005) == 0);
  }

  SECTION("unknown version name is rejected") {
    auto policy = validate_policy(
        R"({"name":"x","allowed_versions":["SSL3.0"],"allowed_ciphers":["0x1301"]})");
    REQUIRE_FALSE(policy.ok());
    CHECK(policy.error().message.find("SSL3.0") != std::string::npos);
  }

  SECTION("empty allowed_ciphers is rejected") {
    CHECK_FALSE(validate_policy(R"({"name":"x","allowed_versions":["TLS1.2"],"allowed_ciphers":[]})").ok());
  }

  SECTION("severity overrides: unknown code or severity rejected") {
    CHECK_FALSE(validate_policy(R"({"name":"x","allowed_versions":["TLS1.2"],
      "allowed_ciphers":["0x1301"],"severity_overrides":{"no.such-code":"High"}})").ok());
    CHECK_FALSE(validate_policy(R"({"name":"x","allowed_versions":["TLS1.2"],
      "allowed_ciphers":["0x1301"],"severity_overrides":{"tls.legacy-cipher":"Apocalyptic"}})").ok());
    auto ok = validate_policy(R"({"name":"x","allowed_versions":["TLS1.2"],
      "allowed_ciphers":["0x1301"],"severity_overrides":{"tls.legacy-cipher":"High"}})");
    REQUIRE(ok.ok());
    CHECK(ok.value().severity_overrides.at("tls.legacy-cipher") == Severity::High);
  }
}

TEST_CASE("shipped data files stay in sync with built-ins", "[dsl][data]") {
  SECTION("severity registry") {
    nlohmann::json file =
        nlohmann::json::parse(test_helpers::read_file(test_helpers::data_path("severity-registry.json")));
    const auto& builtin = default_severity_registry();
    REQUIRE(file.size() == builtin.size());
    for (const auto& [code, severity] : builtin) {
      REQUIRE(file.contains(code));
      CHECK(file[code].get<std::string>() == to_string(severity));
    }
  }

  SECTION("session scripts") {
    auto parsed =
        parse_session_scripts(test_helpers::read_file(test_helpers::data_path("session-scripts.json")));
    REQUIRE(parsed.ok());
    CHECK(session_scripts_to_json(parsed.value()) ==
          session_scripts_to_json(default_session_scripts()));
  }
}

TEST_CASE("parse_session_scripts rejects invalid scripts", "[dsl]") {
  CHECK_FALSE(parse_session_scripts("{ nope").ok());
  CHECK_FALSE(parse_session_scripts(R"({"NoSuchState": []})").ok());
  // Uplink types cannot be scripted as downlinks.
  CHECK_FALSE(parse_session_scripts(
                  R"({"PreSecurity": [{"layer":"RRC","message_type":"RRCSetupComplete",
                      "protection":"None","ies":{}}]})")
                  .ok());
  // expect must name an uplink.
  CHECK_FALSE(parse_session_scripts(
                  R"({"PreSecurity": [{"layer":"RRC","message_type":"RRCSetup",
                      "protection":"None","ies":{},"expect":"RRCSetup"}]})")
                  .ok());
}
