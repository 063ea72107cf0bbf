// uesentry: operator entry point for CP conformance campaigns, TLS scans,
// fixture serving and report rendering.
//
// Exit codes: 0 = PASS, 1 = FAIL, 2 = ERROR (degraded run), 3 = usage/config
// error. Nothing else.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "uesentry/dsl.hpp"
#include "uesentry/engine.hpp"
#include "uesentry/evaluator.hpp"
#include "uesentry/report.hpp"
#include "uesentry/session.hpp"
#include "uesentry/tls_fixture.hpp"
#include "uesentry/tls_scanner.hpp"
#include "uesentry/ue_sim.hpp"

namespace {

constexpr int kExitUsage = 3;

std::atomic<bool> g_shutdown{false};

void handle_signal(int) { g_shutdown.store(true); }

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

std::optional<Endpoint> parse_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon + 1 >= s.size()) return std::nullopt;
  Endpoint ep;
  ep.host = s.substr(0, colon);
  if (ep.host == "localhost") ep.host = "127.0.0.1";
  try {
    const int port = std::stoi(s.substr(colon + 1));
    if (port < 0 || port > 65535) return std::nullopt;
    ep.port = static_cast<std::uint16_t>(port);
  } catch (...) {
    return std::nullopt;
  }
  return ep;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return false;
  out << content;
  return static_cast<bool>(out);
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  try {
    return std::stoi(v);
  } catch (...) {
    return fallback;
  }
}

uesentry::EngineConfig engine_config(const Endpoint& dut) {
  uesentry::EngineConfig cfg;
  cfg.host = dut.host;
  cfg.port = dut.port;
  const int timeout = env_int("UESENTRY_TIMEOUT_MS", 2000);
  cfg.connect_timeout_ms = timeout;
  cfg.step_timeout_ms = timeout;
  return cfg;
}

uesentry::ScannerConfig scanner_config(const Endpoint& ep) {
  uesentry::ScannerConfig cfg;
  cfg.host = ep.host;
  cfg.port = ep.port;
  cfg.timeout_ms = env_int("UESENTRY_TIMEOUT_MS", 2000);
  cfg.parallelism = env_int("UESENTRY_TLS_PARALLELISM", 4);
  return cfg;
}

struct CpRun {
  std::vector<uesentry::Verdict> verdicts;
  std::string suite_name;
};

std::optional<CpRun> run_cp_campaign(const std::string& suite_dir, const Endpoint& dut,
                                     const std::string& trace_dir) {
  auto suite = uesentry::load_suite(suite_dir);
  if (!suite) {
    std::cerr << "error: " << suite.error().message << "\n";
    return std::nullopt;
  }
  for (const auto& w : suite.value().warnings) std::cerr << "warning: " << w << "\n";

  if (!trace_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(trace_dir, ec);
    if (ec) {
      std::cerr << "error: cannot create trace dir: " << ec.message() << "\n";
      return std::nullopt;
    }
  }

  const auto scripts = uesentry::default_session_scripts();
  const auto cfg = engine_config(dut);
  const auto observations =
      uesentry::run_suite(suite.value(), cfg, scripts, [](const uesentry::ProgressEvent& ev) {
        std::cerr << "[" << ev.index << "/" << ev.total << "] " << ev.test_id << "\n";
      });

  CpRun run;
  run.suite_name = suite.value().name;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (!trace_dir.empty()) {
      const auto path = std::filesystem::path(trace_dir) / (observations[i].test_id + ".json");
      write_file(path.string(), uesentry::observation_to_json(observations[i]).dump(2) + "\n");
    }
    run.verdicts.push_back(uesentry::evaluate_cp(observations[i], suite.value().cases[i]));
  }
  return run;
}

struct TlsRunInputs {
  std::string policy_file;
  std::string cipher_file;  // empty = builtin table
};

std::optional<std::vector<uesentry::Finding>> run_tls_scan(const TlsRunInputs& inputs,
                                                           const Endpoint& endpoint) {
  const auto policy_text = read_file(inputs.policy_file);
  if (!policy_text) {
    std::cerr << "error: cannot read policy file " << inputs.policy_file << "\n";
    return std::nullopt;
  }
  auto policy = uesentry::validate_policy(*policy_text);
  if (!policy) {
    std::cerr << "error: invalid policy: " << policy.error().message << "\n";
    return std::nullopt;
  }

  uesentry::CipherTable table = uesentry::CipherTable::builtin();
  if (!inputs.cipher_file.empty()) {
    const auto text = read_file(inputs.cipher_file);
    if (!text) {
      std::cerr << "error: cannot read cipher table " << inputs.cipher_file << "\n";
      return std::nullopt;
    }
    auto parsed = uesentry::CipherTable::from_json(*text);
    if (!parsed) {
      std::cerr << "error: invalid cipher table: " << parsed.error().message << "\n";
      return std::nullopt;
    }
    table = std::move(parsed.value());
  }

  const auto scan = uesentry::scan_endpoint(scanner_config(endpoint), table);
  if (scan.error) {
    uesentry::Finding f;
    f.source = uesentry::FindingSource::Tls;
    f.code = "tls.scanner-error";
    f.severity = uesentry::SeverityRegistry().severity_for(f.code, &policy.value());
    f.subject = endpoint.host + ":" + std::to_string(endpoint.port);
    f.evidence = *scan.error;
    f.recommendation = "verify the endpoint is reachable and rerun the scan";
    std::cerr << "error: TLS scan failed: " << *scan.error << "\n";
    return std::vector<uesentry::Finding>{f};
  }
  return uesentry::evaluate_tls(scan.posture, policy.value(), table);
}

int emit_report(uesentry::Report report, const std::string& out_file) {
  const std::string json = uesentry::render_json(report);
  if (!out_file.empty() && !write_file(out_file, json)) {
    std::cerr << "error: cannot write " << out_file << "\n";
    return kExitUsage;
  }
  std::cout << uesentry::render_text(report);
  return uesentry::exit_code(report.summary.status);
}

int cmd_run_cp(const std::string& suite_dir, const std::string& dut, const std::string& trace_dir,
               const std::string& out_file, std::string timestamp) {
  const auto endpoint = parse_endpoint(dut);
  if (!endpoint) {
    std::cerr << "error: --dut must be host:port\n";
    return kExitUsage;
  }
  auto run = run_cp_campaign(suite_dir, *endpoint, trace_dir);
  if (!run) return kExitUsage;
  uesentry::ReportMetadata metadata;
  metadata.timestamp = timestamp.empty() ? now_iso8601() : std::move(timestamp);
  metadata.dut_label = dut;
  metadata.suite_name = run->suite_name;
  return emit_report(uesentry::consolidate(std::move(run->verdicts), {}, std::move(metadata)),
                     out_file);
}

int cmd_run_tls(const std::string& endpoint_s, const TlsRunInputs& inputs,
                const std::string& out_file, std::string timestamp) {
  const auto endpoint = parse_endpoint(endpoint_s);
  if (!endpoint) {
    std::cerr << "error: --endpoint must be host:port\n";
    return kExitUsage;
  }
  auto findings = run_tls_scan(inputs, *endpoint);
  if (!findings) return kExitUsage;
  uesentry::ReportMetadata metadata;
  metadata.timestamp = timestamp.empty() ? now_iso8601() : std::move(timestamp);
  metadata.dut_label = endpoint_s;
  metadata.suite_name = "(tls-only)";
  return emit_report(uesentry::consolidate({}, std::move(*findings), std::move(metadata)), out_file);
}

int cmd_run_all(const std::string& suite_dir, const std::string& dut, const std::string& tls_endpoint,
                const TlsRunInputs& inputs, const std::string& trace_dir, const std::string& out_file,
                std::string timestamp) {
  const auto dut_ep = parse_endpoint(dut);
  const auto tls_ep = parse_endpoint(tls_endpoint);
  if (!dut_ep || !tls_ep) {
    std::cerr << "error: --dut and --tls-endpoint must be host:port\n";
    return kExitUsage;
  }
  // The CP campaign completes before the TLS scan starts.
  auto cp = run_cp_campaign(suite_dir, *dut_ep, trace_dir);
  if (!cp) return kExitUsage;
  auto findings = run_tls_scan(inputs, *tls_ep);
  if (!findings) return kExitUsage;

  uesentry::ReportMetadata metadata;
  metadata.timestamp = timestamp.empty() ? now_iso8601() : std::move(timestamp);
  metadata.dut_label = dut;
  metadata.suite_name = cp->suite_name;
  return emit_report(
      uesentry::consolidate(std::move(cp->verdicts), std::move(*findings), std::move(metadata)),
      out_file);
}

int cmd_fixtures_serve(const std::string& ue_profile, const std::string& tls_config_file, int port) {
  if (ue_profile.empty() && tls_config_file.empty()) {
    std::cerr << "error: nothing to serve; pass --ue and/or --tls\n";
    return kExitUsage;
  }

  std::optional<uesentry::UeEndpoint> ue;
  std::optional<uesentry::TlsFixtureServer> tls;

  if (!ue_profile.empty()) {
    auto profile = uesentry::UeProfile::by_name(ue_profile);
    if (!profile) {
      std::cerr << "error: unknown UE profile '" << ue_profile
                << "' (compliant, caps-before-security, plaintext-identity, "
                   "accept-unprotected-detach)\n";
      return kExitUsage;
    }
    ue.emplace(*profile);
    auto rc = ue->start(static_cast<std::uint16_t>(port));
    if (!rc) {
      std::cerr << "error: UE fixture: " << rc.error().message << "\n";
      return kExitUsage;
    }
    std::cout << "UE fixture '" << profile->name << "' listening on 127.0.0.1:" << ue->port()
              << std::endl;
  }

  if (!tls_config_file.empty()) {
    const auto text = read_file(tls_config_file);
    if (!text) {
      std::cerr << "error: cannot read TLS fixture config " << tls_config_file << "\n";
      return kExitUsage;
    }
    auto cfg = uesentry::TlsFixtureConfig::from_json(*text);
    if (!cfg) {
      std::cerr << "error: invalid TLS fixture config: " << cfg.error().message << "\n";
      return kExitUsage;
    }
    // With both fixtures in one process the TLS side binds --port + 1
    // (port 0 stays 0: both pick ephemeral ports).
    const int tls_port = ue && port != 0 ? port + 1 : port;
    if (tls_port > 65535) {
      std::cerr << "error: TLS fixture port out of range\n";
      return kExitUsage;
    }
    tls.emplace(std::move(cfg.value()));
    auto rc = tls->start(static_cast<std::uint16_t>(tls_port));
    if (!rc) {
      std::cerr << "error: TLS fixture: " << rc.error().message << "\n";
      return kExitUsage;
    }
    std::cout << "TLS fixture listening on 127.0.0.1:" << tls->port() << std::endl;
  }

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_shutdown.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  std::cout << "shutting down" << std::endl;
  return 0;
}

int cmd_report_render(const std::string& in_file, const std::string& format) {
  const auto text = read_file(in_file);
  if (!text) {
    std::cerr << "error: cannot read " << in_file << "\n";
    return kExitUsage;
  }
  auto report = uesentry::parse_report(*text);
  if (!report) {
    std::cerr << "error: invalid report: " << report.error().message << "\n";
    return kExitUsage;
  }
  if (format == "json")
    std::cout << uesentry::render_json(report.value());
  else
    std::cout << uesentry::render_text(report.value());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uesentry: automated security testing for (simulated) industrial 5G UEs"};
  app.require_subcommand(1);

  // run-cp
  std::string cp_suite, cp_dut, cp_trace_dir, cp_out, cp_timestamp;
  auto* run_cp = app.add_subcommand("run-cp", "Run the control-plane conformance campaign");
  run_cp->add_option("--suite", cp_suite, "Test-case directory")->required();
  run_cp->add_option("--dut", cp_dut, "DUT address host:port")->required();
  run_cp->add_option("--trace-dir", cp_trace_dir, "Write one observation JSON per test");
  run_cp->add_option("--out", cp_out, "Write the report JSON here");
  run_cp->add_option("--timestamp", cp_timestamp, "Pin the report timestamp (for reproducible runs)");

  // run-tls
  std::string tls_endpoint_s, tls_policy, tls_ciphers, tls_out, tls_timestamp;
  auto* run_tls = app.add_subcommand("run-tls", "Scan a TLS endpoint and grade it against a policy");
  run_tls->add_option("--endpoint", tls_endpoint_s, "TLS endpoint host:port")->required();
  run_tls->add_option("--policy", tls_policy, "Policy JSON file")->required();
  run_tls->add_option("--ciphers", tls_ciphers, "Candidate cipher table JSON (default: built-in)");
  run_tls->add_option("--out", tls_out, "Write the report JSON here");
  run_tls->add_option("--timestamp", tls_timestamp, "Pin the report timestamp");

  // run-all
  std::string all_suite, all_dut, all_tls_endpoint, all_policy, all_ciphers, all_trace_dir, all_out,
      all_timestamp;
  auto* run_all = app.add_subcommand("run-all", "CP campaign plus TLS scan, one unified report");
  run_all->add_option("--suite", all_suite, "Test-case directory")->required();
  run_all->add_option("--dut", all_dut, "DUT address host:port")->required();
  run_all->add_option("--tls-endpoint", all_tls_endpoint, "TLS endpoint host:port")->required();
  run_all->add_option("--policy", all_policy, "Policy JSON file")->required();
  run_all->add_option("--ciphers", all_ciphers, "Candidate cipher table JSON (default: built-in)");
  run_all->add_option("--trace-dir", all_trace_dir, "Write one observation JSON per test");
  run_all->add_option("--out", all_out, "Write the report JSON here")->required();
  run_all->add_option("--timestamp", all_timestamp, "Pin the report timestamp");

  // fixtures serve
  auto* fixtures = app.add_subcommand("fixtures", "Desk-scale DUT fixtures");
  std::string fx_ue, fx_tls;
  int fx_port = 0;
  auto* serve = fixtures->add_subcommand("serve", "Serve UE and/or TLS fixtures until SIGINT");
  serve->add_option("--ue", fx_ue, "UE profile name");
  serve->add_option("--tls", fx_tls, "TLS fixture config JSON");
  serve->add_option("--port", fx_port, "Listen port (0 = ephemeral; TLS uses port+1 when both run)");

  // report render
  auto* report = app.add_subcommand("report", "Report utilities");
  std::string rr_in, rr_format = "text";
  auto* render = report->add_subcommand("render", "Render a report JSON file");
  render->add_option("--in", rr_in, "Report JSON file")->required();
  render->add_option("--format", rr_format, "text or json")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run_cp->parsed()) return cmd_run_cp(cp_suite, cp_dut, cp_trace_dir, cp_out, cp_timestamp);
    if (run_tls->parsed())
      return cmd_run_tls(tls_endpoint_s, {tls_policy, tls_ciphers}, tls_out, tls_timestamp);
    if (run_all->parsed())
      return cmd_run_all(all_suite, all_dut, all_tls_endpoint, {all_policy, all_ciphers},
                         all_trace_dir, all_out, all_timestamp);
    if (fixtures->parsed()) {
      if (serve->parsed()) return cmd_fixtures_serve(fx_ue, fx_tls, fx_port);
      std::cerr << "error: fixtures requires the 'serve' subcommand\n";
      return kExitUsage;
    }
    if (report->parsed()) {
      if (render->parsed()) return cmd_report_render(rr_in, rr_format);
      std::cerr << "error: report requires the 'render' subcommand\n";
      return kExitUsage;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
