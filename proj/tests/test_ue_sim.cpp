#include <catch2/catch.hpp>

#include <set>
#include <tuple>
#include <vector>

#include "ue_oracle.hpp"
#include "uesentry/ue_sim.hpp"

using namespace uesentry;

namespace {

const std::vector<UePhase> kPhases = {
    UePhase::Idle,         UePhase::RrcConnected,      UePhase::Registering, UePhase::Authenticated,
    UePhase::SecurityActivated, UePhase::Registered,   UePhase::Detached};

const std::vector<Protection> kProtections = {Protection::None, Protection::IntegrityOnly,
                                              Protection::IntegrityAndCiphering};

UeState state_in_phase(UePhase phase) {
  UeState s = UeState::initial();
  s.phase = phase;
  s.security_active = ue_oracle::security_on(phase);
  return s;
}

CpMessage build_incoming(const MessageInfo& info, Protection prot,
                         const std::optional<std::string>& identity_type) {
  CpMessage msg;
  msg.layer = info.layer;
  msg.msg_type = info.code;
  msg.protection = prot;
  if (identity_type)
    msg.ies.push_back({catalog::find_ie("IdentityType")->tag,
                       Bytes(identity_type->begin(), identity_type->end())});
  return msg;
}

/// Enumerates every (phase, message, protection, identity-type) row and the
/// oracle's expectation for it, invoking `fn(row_description)`.
template <typename Fn>
void for_all_rows(Fn&& fn) {
  for (const auto phase : kPhases) {
    for (const auto& info : catalog::kMessages) {
      for (const auto prot : kProtections) {
        std::vector<std::optional<std::string>> identity_variants = {std::nullopt};
        if (info.layer == Layer::Nas && info.name == "IdentityRequest")
          identity_variants = {std::nullopt, std::string("SUCI"), std::string("IMSI")};
        for (const auto& idt : identity_variants) fn(phase, info, prot, idt);
      }
    }
  }
}

void check_against_oracle(const UeProfile& profile) {
  const UeState initial = UeState::initial();
  for_all_rows([&](UePhase phase, const MessageInfo& info, Protection prot,
                   const std::optional<std::string>& idt) {
    const UeState before = state_in_phase(phase);
    const CpMessage incoming = build_incoming(info, prot, idt);
    const auto got = ue_step(profile, before, incoming);
    const auto want = ue_oracle::expected_step(
        profile, phase, {info.layer, std::string(info.name), prot, idt});

    INFO("profile=" << profile.name << " phase=" << to_string(phase) << " msg="
                    << to_string(info.layer) << "." << info.name << " prot=" << to_string(prot)
                    << " idtype=" << (idt ? *idt : "(none)"));
    CHECK(got.state.phase == want.next_phase);
    CHECK(got.state.security_active == want.next_security);
    CHECK(got.state.security_active ==
          (got.state.phase == UePhase::SecurityActivated || got.state.phase == UePhase::Registered));
    CHECK(got.state.identity == initial.identity);
    CHECK(got.state.capabilities == initial.capabilities);

    REQUIRE(got.response.has_value() == want.response.has_value());
    if (got.response) {
      CHECK(got.response->type_name() == *want.response);
      CHECK(got.response->protection == want.response_protection);
      const auto* resolved = catalog::find_message(got.response->layer, got.response->msg_type);
      REQUIRE(resolved != nullptr);
      CHECK(resolved->dir == Direction::Uplink);
      REQUIRE(got.response->ies.size() == want.response_ies.size());
      for (const auto& ie_name : want.response_ies) {
        const auto* ie_info = catalog::find_ie(ie_name);
        REQUIRE(ie_info != nullptr);
        INFO("expected IE " << ie_name);
        CHECK(got.response->has_ie(ie_info->tag));
      }
      // Identity handling: the permanent identity appears verbatim under the
      // IMSI IE and never inside the concealed identifier.
      if (const auto* imsi = got.response->find_ie(catalog::find_ie("MobileIdentityImsi")->tag))
        CHECK(std::string(imsi->value.begin(), imsi->value.end()) == initial.identity);
      if (const auto* suci = got.response->find_ie(catalog::find_ie("MobileIdentitySuci")->tag)) {
        const std::string value(suci->value.begin(), suci->value.end());
        CHECK(value.find(initial.identity) == std::string::npos);
        CHECK_FALSE(value.empty());
      }
      if (const auto* caps = got.response->find_ie(catalog::find_ie("UeCapabilities")->tag))
        CHECK(caps->value == initial.capabilities);
    }
  });
}

}  // namespace

TEST_CASE("ue_step matches the expected-transition table for every profile", "[ue_sim][oracle]") {
  for (const auto& profile :
       {UeProfile::compliant(), UeProfile::caps_before_security(), UeProfile::plaintext_identity(),
        UeProfile::accept_unprotected_detach()}) {
    check_against_oracle(profile);
  }
}

TEST_CASE("spec examples for ue_step", "[ue_sim]") {
  const auto enquiry =
      build_incoming(*catalog::find_message(Layer::Rrc, "UECapabilityEnquiry"), Protection::None, {});

  SECTION("compliant UE stays silent on pre-security capability enquiry") {
    const auto before = state_in_phase(UePhase::RrcConnected);
    const auto result = ue_step(UeProfile::compliant(), before, enquiry);
    CHECK(result.state.phase == before.phase);
    CHECK_FALSE(result.response.has_value());
  }

  SECTION("CapsBeforeSecurity answers the same enquiry") {
    const auto before = state_in_phase(UePhase::RrcConnected);
    const auto result = ue_step(UeProfile::caps_before_security(), before, enquiry);
    CHECK(result.state.phase == before.phase);
    REQUIRE(result.response.has_value());
    CHECK(result.response->type_name() == "UECapabilityInformation");
    CHECK(result.response->has_ie(catalog::find_ie("UeCapabilities")->tag));
  }

  SECTION("compliant Registered UE ignores an unprotected DeregistrationRequest") {
    const auto before = state_in_phase(UePhase::Registered);
    const auto detach = build_incoming(*catalog::find_message(Layer::Nas, "DeregistrationRequest"),
                                       Protection::None, {});
    const auto result = ue_step(UeProfile::compliant(), before, detach);
    CHECK(result.state.phase == UePhase::Registered);
    CHECK_FALSE(result.response.has_value());
  }
}

TEST_CASE("compliant profile never leaks IMSI or capabilities pre-security", "[ue_sim][invariant]") {
  const auto imsi_tag = catalog::find_ie("MobileIdentityImsi")->tag;
  const auto caps_tag = catalog::find_ie("UeCapabilities")->tag;
  for_all_rows([&](UePhase phase, const MessageInfo& info, Protection prot,
                   const std::optional<std::string>& idt) {
    const UeState before = state_in_phase(phase);
    if (before.security_active) return;
    const auto result = ue_step(UeProfile::compliant(), before, build_incoming(info, prot, idt));
    if (!result.response) return;
    INFO("phase=" << to_string(phase) << " msg=" << info.name << " prot=" << to_string(prot));
    CHECK_FALSE(result.response->has_ie(imsi_tag));
    CHECK_FALSE(result.response->has_ie(caps_tag));
  });
}

TEST_CASE("each vulnerable profile differs from compliant in exactly its seeded rows",
          "[ue_sim][invariant]") {
  struct Row {
    UePhase phase;
    Layer layer;
    std::string type;
    Protection prot;
    std::optional<std::string> idt;
  };

  const auto diff_rows = [](const UeProfile& profile) {
    std::vector<Row> rows;
    for_all_rows([&](UePhase phase, const MessageInfo& info, Protection prot,
                     const std::optional<std::string>& idt) {
      const UeState before = state_in_phase(phase);
      const CpMessage incoming = build_incoming(info, prot, idt);
      const auto a = ue_step(UeProfile::compliant(), before, incoming);
      const auto b = ue_step(profile, before, incoming);
      const bool same = a.state.phase == b.state.phase &&
                        a.state.security_active == b.state.security_active &&
                        a.response == b.response;
      if (!same) rows.push_back({phase, info.layer, std::string(info.name), prot, idt});
    });
    return rows;
  };

  const auto presec_connected = [](UePhase p) {
    return p == UePhase::RrcConnected || p == UePhase::Registering || p == UePhase::Authenticated;
  };

  SECTION("CapsBeforeSecurity") {
    for (const auto& row : diff_rows(UeProfile::caps_before_security())) {
      CHECK(row.type == "UECapabilityEnquiry");
      CHECK(row.prot == Protection::None);
      CHECK(presec_connected(row.phase));
    }
    CHECK(diff_rows(UeProfile::caps_before_security()).size() == 3);  // 3 pre-security phases
  }

  SECTION("PlaintextIdentityDisclosure") {
    for (const auto& row : diff_rows(UeProfile::plaintext_identity())) {
      CHECK(row.type == "IdentityRequest");
      CHECK(row.prot == Protection::None);
      CHECK(row.idt == std::optional<std::string>("IMSI"));
      CHECK(presec_connected(row.phase));
    }
    CHECK(diff_rows(UeProfile::plaintext_identity()).size() == 3);
  }

  SECTION("AcceptUnprotectedDetach") {
    const auto rows = diff_rows(UeProfile::accept_unprotected_detach());
    for (const auto& row : rows) {
      CHECK(row.type == "DeregistrationRequest");
      CHECK(row.prot == Protection::None);
      CHECK((presec_connected(row.phase) || row.phase == UePhase::SecurityActivated ||
             row.phase == UePhase::Registered));
    }
    CHECK(rows.size() == 5);  // every connected phase
  }
}

TEST_CASE("ue_step is deterministic and total", "[ue_sim][invariant]") {
  for_all_rows([&](UePhase phase, const MessageInfo& info, Protection prot,
                   const std::optional<std::string>& idt) {
    const UeState before = state_in_phase(phase);
    const CpMessage incoming = build_incoming(info, prot, idt);
    const auto a = ue_step(UeProfile::compliant(), before, incoming);
    const auto b = ue_step(UeProfile::compliant(), before, incoming);
    CHECK(a.state.phase == b.state.phase);
    CHECK(a.response == b.response);
  });
}

TEST_CASE("conceal_identity is deterministic and never embeds the input", "[ue_sim]") {
  const std::string imsi = "001010123456789";
  CHECK(conceal_identity(imsi) == conceal_identity(imsi));
  CHECK(conceal_identity(imsi).find(imsi) == std::string::npos);
}
