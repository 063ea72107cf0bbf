#include <catch2/catch.hpp>

#include <csignal>
#include <sys/types.h>
#include <thread>

#include "helpers.hpp"
#include "uesentry/report.hpp"
#include "uesentry/tls_fixture.hpp"
#include "uesentry/ue_sim.hpp"

using namespace uesentry;
using test_helpers::cli_bin;
using test_helpers::data_path;
using test_helpers::read_file;
using test_helpers::run_command;
using test_helpers::TempDir;

namespace {

/// Two-case suite for fast CLI runs.
void write_small_suite(const std::string& dir) {
  for (const char* id : {"nas-auth-plain-presec", "rrc-cap-enquiry-pre-security"})
    test_helpers::write_file(dir + "/" + id + ".json",
                             read_file(data_path("suites/cp-baseline/" + std::string(id) + ".json")));
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

TlsFixtureConfig config_from_file(const std::string& name) {
  auto cfg = TlsFixtureConfig::from_json(read_file(data_path("fixtures/" + name)));
  REQUIRE(cfg.ok());
  return cfg.value();
}

}  // namespace

TEST_CASE("run-cp: exit codes and report content", "[cli]") {
  TempDir suite_dir("cli-suite");
  write_small_suite(suite_dir.str());
  TempDir out_dir("cli-out");
  const std::string out_file = out_dir.str() + "/report.json";

  SECTION("compliant fixture passes with exit 0") {
    UeEndpoint dut(UeProfile::compliant());
    REQUIRE(dut.start(0).ok());
    const auto result = run_command(cli_bin() + " run-cp --suite " + quoted(suite_dir.str()) +
                                    " --dut 127.0.0.1:" + std::to_string(dut.port()) + " --out " +
                                    quoted(out_file) + " --timestamp 2026-01-01T00:00:00Z");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("SUMMARY: status=PASS") != std::string::npos);

    auto report = parse_report(read_file(out_file));
    REQUIRE(report.ok());
    CHECK(report.value().cp_verdicts.size() == 2);
    CHECK(report.value().summary.outcome_counts.at(Outcome::Compliant) == 2);
    CHECK(report.value().metadata.timestamp == "2026-01-01T00:00:00Z");
  }

  SECTION("CapsBeforeSecurity fixture fails with exit 1 naming the RRC case") {
    UeEndpoint dut(UeProfile::caps_before_security());
    REQUIRE(dut.start(0).ok());
    const auto result = run_command(cli_bin() + " run-cp --suite " + quoted(suite_dir.str()) +
                                    " --dut 127.0.0.1:" + std::to_string(dut.port()) + " --out " +
                                    quoted(out_file));
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("rrc-cap-enquiry-pre-security") != std::string::npos);

    auto report = parse_report(read_file(out_file));
    REQUIRE(report.ok());
    bool named = false;
    for (const auto& v : report.value().cp_verdicts)
      if (v.test_id == "rrc-cap-enquiry-pre-security" && v.outcome == Outcome::NonCompliant)
        named = true;
    CHECK(named);
  }

  SECTION("unreachable DUT degrades to exit 2") {
    std::uint16_t dead_port;
    {
      auto listener = TcpListener::bind(0);
      REQUIRE(listener.ok());
      dead_port = listener.value().port();
    }
    const auto result = run_command(cli_bin() + " run-cp --suite " + quoted(suite_dir.str()) +
                                    " --dut 127.0.0.1:" + std::to_string(dead_port));
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("status=ERROR") != std::string::npos);
  }

  SECTION("invalid suite directory is a usage error, exit 3") {
    const auto result =
        run_command(cli_bin() + " run-cp --suite /nonexistent/nowhere --dut 127.0.0.1:1");
    CHECK(result.exit_code == 3);
  }

  SECTION("--trace-dir writes one observation per test") {
    UeEndpoint dut(UeProfile::compliant());
    REQUIRE(dut.start(0).ok());
    TempDir trace_dir("cli-trace");
    const auto result = run_command(cli_bin() + " run-cp --suite " + quoted(suite_dir.str()) +
                                    " --dut 127.0.0.1:" + std::to_string(dut.port()) +
                                    " --trace-dir " + quoted(trace_dir.str()));
    CHECK(result.exit_code == 0);
    for (const char* id : {"nas-auth-plain-presec", "rrc-cap-enquiry-pre-security"}) {
      const auto dump = read_file(trace_dir.str() + "/" + id + ".json");
      REQUIRE_FALSE(dump.empty());
      const auto doc = nlohmann::json::parse(dump);
      CHECK(doc["test_id"] == id);
      CHECK(doc["trigger_reached"] == true);
    }
  }
}

TEST_CASE("run-tls: exit codes and findings", "[cli]") {
  TempDir out_dir("cli-tls-out");
  const std::string out_file = out_dir.str() + "/report.json";
  const std::string policy = data_path("policies/bsi-baseline.json");

  SECTION("hardened fixture: zero findings, exit 0") {
    TlsFixtureServer server(config_from_file("tls-hardened.json"));
    REQUIRE(server.start(0).ok());
    const auto result = run_command(cli_bin() + " run-tls --endpoint 127.0.0.1:" +
                                    std::to_string(server.port()) + " --policy " + quoted(policy) +
                                    " --out " + quoted(out_file));
    CHECK(result.exit_code == 0);
    auto report = parse_report(read_file(out_file));
    REQUIRE(report.ok());
    CHECK(report.value().tls_findings.empty());
  }

  SECTION("RC4 fixture: High deprecated-cipher finding, exit 1") {
    TlsFixtureServer server(config_from_file("tls-rc4.json"));
    REQUIRE(server.start(0).ok());
    const auto result = run_command(cli_bin() + " run-tls --endpoint 127.0.0.1:" +
                                    std::to_string(server.port()) + " --policy " + quoted(policy) +
                                    " --out " + quoted(out_file));
    CHECK(result.exit_code == 1);
    CHECK(read_file(out_file).find("tls.deprecated-cipher") != std::string::npos);
  }

  SECTION("missing policy file: exit 3") {
    const auto result =
        run_command(cli_bin() + " run-tls --endpoint 127.0.0.1:1 --policy /nonexistent/policy.json");
    CHECK(result.exit_code == 3);
  }

  SECTION("unreachable endpoint: scanner-error, exit 2") {
    std::uint16_t dead_port;
    {
      auto listener = TcpListener::bind(0);
      REQUIRE(listener.ok());
      dead_port = listener.value().port();
    }
    const auto result = run_command(cli_bin() + " run-tls --endpoint 127.0.0.1:" +
                                    std::to_string(dead_port) + " --policy " + quoted(policy) +
                                    " --out " + quoted(out_file));
    CHECK(result.exit_code == 2);
    CHECK(read_file(out_file).find("tls.scanner-error") != std::string::npos);
  }
}

TEST_CASE("report render", "[cli]") {
  TempDir dir("cli-render");
  const std::string out_file = dir.str() + "/report.json";

  // Produce a small real report first.
  TlsFixtureServer server(config_from_file("tls-rc4.json"));
  REQUIRE(server.start(0).ok());
  const auto produced = run_command(cli_bin() + " run-tls --endpoint 127.0.0.1:" +
                                    std::to_string(server.port()) + " --policy " +
                                    quoted(data_path("policies/bsi-baseline.json")) + " --out " +
                                    quoted(out_file));
  REQUIRE(produced.exit_code == 1);

  SECTION("text rendering carries the finding") {
    const auto result = run_command(cli_bin() + " report render --in " + quoted(out_file));
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("tls.deprecated-cipher") != std::string::npos);
  }

  SECTION("json rendering re-emits canonical bytes") {
    const auto result =
        run_command(cli_bin() + " report render --in " + quoted(out_file) + " --format json");
    CHECK(result.exit_code == 0);
    CHECK(result.output == read_file(out_file));
  }

  SECTION("corrupt report file: exit 3") {
    test_helpers::write_file(dir.str() + "/corrupt.json", "{ nope");
    const auto result =
        run_command(cli_bin() + " report render --in " + quoted(dir.str() + "/corrupt.json"));
    CHECK(result.exit_code == 3);
  }
}

TEST_CASE("fixtures serve: dual fixture process", "[cli]") {
  TempDir dir("cli-serve");
  const std::string log_file = dir.str() + "/serve.log";
  const std::string pid_file = dir.str() + "/serve.pid";

  // Launch in the background, capture stdout, remember the pid.
  const std::string cmd = cli_bin() + " fixtures serve --ue compliant --tls " +
                          quoted(data_path("fixtures/tls-rc4.json")) + " --port 0 > " +
                          quoted(log_file) + " 2>/dev/null & echo $! > " + quoted(pid_file);
  REQUIRE(std::system(cmd.c_str()) == 0);

  // Wait for both listening lines.
  std::string log;
  for (int i = 0; i < 100; ++i) {
    log = read_file(log_file);
    if (log.find("UE fixture") != std::string::npos &&
        log.find("TLS fixture") != std::string::npos)
      break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  const auto parse_port = [&](const std::string& marker) -> int {
    const auto pos = log.find(marker);
    REQUIRE(pos != std::string::npos);
    const auto colon = log.find("127.0.0.1:", pos);
    REQUIRE(colon != std::string::npos);
    return std::stoi(log.substr(colon + 10));
  };
  const int ue_port = parse_port("UE fixture");
  const int tls_port = parse_port("TLS fixture");
  CHECK(ue_port > 0);
  CHECK(tls_port > 0);

  // Both fixtures answer: a one-case CP run and a TLS scan.
  TempDir suite_dir("cli-serve-suite");
  test_helpers::write_file(
      suite_dir.str() + "/rrc-cap-enquiry-pre-security.json",
      read_file(data_path("suites/cp-baseline/rrc-cap-enquiry-pre-security.json")));
  const auto cp = run_command(cli_bin() + " run-cp --suite " + quoted(suite_dir.str()) +
                              " --dut 127.0.0.1:" + std::to_string(ue_port));
  CHECK(cp.exit_code == 0);
  const auto tls = run_command(cli_bin() + " run-tls --endpoint 127.0.0.1:" +
                               std::to_string(tls_port) + " --policy " +
                               quoted(data_path("policies/bsi-baseline.json")));
  CHECK(tls.exit_code == 1);  // RC4 finding

  const auto pid = std::stoi(read_file(pid_file));
  ::kill(pid, SIGTERM);
  for (int i = 0; i < 40 && ::kill(pid, 0) == 0; ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  CHECK(::kill(pid, 0) != 0);  // process exited on SIGTERM
}
