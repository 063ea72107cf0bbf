#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uesentry/engine.hpp"
#include "uesentry/model.hpp"

namespace uesentry {

inline constexpr const char* kToolVersion = "0.1.0";

enum class ReportStatus { Pass, Fail, Error };

inline std::string to_string(ReportStatus s) {
  switch (s) {
    case ReportStatus::Pass: return "PASS";
    case ReportStatus::Fail: return "FAIL";
    case ReportStatus::Error: return "ERROR";
  }
  return "ERROR";
}

inline int exit_code(ReportStatus s) {
  switch (s) {
    case ReportStatus::Pass: return 0;
    case ReportStatus::Fail: return 1;
    case ReportStatus::Error: return 2;
  }
  return 2;
}

struct ReportMetadata {
  std::string timestamp;  // ISO-8601 UTC; pinnable for reproducible runs
  std::string dut_label;
  std::string suite_name;
  std::string tool_version = kToolVersion;
};

struct ReportSummary {
  std::map<Outcome, std::size_t> outcome_counts;
  std::map<Severity, std::size_t> severity_counts;
  ReportStatus status = ReportStatus::Pass;
  Severity fail_threshold = Severity::Medium;
  std::vector<std::string> warnings;
};

struct Report {
  ReportMetadata metadata;
  std::vector<Verdict> cp_verdicts;    // sorted by test id
  std::vector<Finding> tls_findings;   // sorted by (severity desc, code, subject)
  ReportSummary summary;
};

/// Merges verdicts and findings into one report with summary statistics.
/// FAIL on any NonCompliant verdict or any finding at/above the threshold;
/// ERROR when every CP verdict is a transport error or the scanner failed.
inline Report consolidate(std::vector<Verdict> verdicts, std::vector<Finding> findings,
                          ReportMetadata metadata, Severity fail_threshold = Severity::Medium) {
  Report report;
  report.metadata = std::move(metadata);
  report.cp_verdicts = std::move(verdicts);
  report.tls_findings = std::move(findings);

  std::sort(report.cp_verdicts.begin(), report.cp_verdicts.end(),
            [](const Verdict& a, const Verdict& b) { return a.test_id < b.test_id; });
  std::sort(report.tls_findings.begin(), report.tls_findings.end(),
            [](const Finding& a, const Finding& b) {
              if (a.severity != b.severity) return a.severity > b.severity;
              if (a.code != b.code) return a.code < b.code;
              return a.subject < b.subject;
            });

  auto& summary = report.summary;
  summary.fail_threshold = fail_threshold;
  for (const auto o : {Outcome::Compliant, Outcome::NonCompliant, Outcome::Inconclusive, Outcome::Error})
    summary.outcome_counts[o] = 0;
  for (const auto s :
       {Severity::Info, Severity::Low, Severity::Medium, Severity::High, Severity::Critical})
    summary.severity_counts[s] = 0;
  for (const auto& v : report.cp_verdicts) summary.outcome_counts[v.outcome]++;
  for (const auto& f : report.tls_findings) summary.severity_counts[f.severity]++;

  const bool all_cp_error = !report.cp_verdicts.empty() &&
                            summary.outcome_counts[Outcome::Error] == report.cp_verdicts.size();
  bool scanner_error = false;
  bool graded_fail = summary.outcome_counts[Outcome::NonCompliant] > 0;
  for (const auto& f : report.tls_findings) {
    if (f.code == "tls.scanner-error") scanner_error = true;
    else if (f.severity >= fail_threshold) graded_fail = true;
  }

  if (all_cp_error || scanner_error)
    summary.status = ReportStatus::Error;
  else if (graded_fail)
    summary.status = ReportStatus::Fail;
  else
    summary.status = ReportStatus::Pass;

  if (report.cp_verdicts.empty() && report.tls_findings.empty())
    summary.warnings.push_back("empty campaign");
  return report;
}

namespace detail {

inline nlohmann::json verdict_to_json(const Verdict& v) {
  nlohmann::json evidence = nlohmann::json::array();
  // Evidence is rendered without timestamps so identical campaigns produce
  // byte-identical reports; timing lives in the --trace-dir dumps.
  for (const auto& ev : v.evidence) evidence.push_back(trace_event_to_json(ev, false));
  return {{"test_id", v.test_id},
          {"outcome", to_string(v.outcome)},
          {"evidence", evidence},
          {"explanation", v.explanation}};
}

inline nlohmann::json finding_to_json(const Finding& f) {
  return {{"source", to_string(f.source)}, {"code", f.code},
          {"severity", to_string(f.severity)}, {"subject", f.subject},
          {"evidence", f.evidence}, {"recommendation", f.recommendation}};
}

}  // namespace detail

/// Canonical JSON: nlohmann objects keep keys sorted, no floats are emitted,
/// output is newline-terminated — identical reports render byte-identically.
inline std::string render_json(const Report& report) {
  nlohmann::json doc;
  doc["metadata"] = {{"timestamp", report.metadata.timestamp},
                     {"dut_label", report.metadata.dut_label},
                     {"suite_name", report.metadata.suite_name},
                     {"tool_version", report.metadata.tool_version}};
  doc["cp_verdicts"] = nlohmann::json::array();
  for (const auto& v : report.cp_verdicts) doc["cp_verdicts"].push_back(detail::verdict_to_json(v));
  doc["tls_findings"] = nlohmann::json::array();
  for (const auto& f : report.tls_findings) doc["tls_findings"].push_back(detail::finding_to_json(f));

  nlohmann::json outcome_counts;
  for (const auto& [outcome, n] : report.summary.outcome_counts) outcome_counts[to_string(outcome)] = n;
  nlohmann::json severity_counts;
  for (const auto& [severity, n] : report.summary.severity_counts)
    severity_counts[to_string(severity)] = n;
  doc["summary"] = {{"outcome_counts", outcome_counts},
                    {"severity_counts", severity_counts},
                    {"status", to_string(report.summary.status)},
                    {"fail_threshold", to_string(report.summary.fail_threshold)},
                    {"warnings", report.summary.warnings}};
  return doc.dump(2) + "\n";
}

/// Reconstructs a Report from its canonical JSON (for `report render` and
/// fixed-point checks).
inline Result<Report, ValidationError> parse_report(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) return ValidationError{"malformed JSON"};
  if (!doc.is_object() || !doc.contains("metadata") || !doc.contains("cp_verdicts") ||
      !doc.contains("tls_findings") || !doc.contains("summary"))
    return ValidationError{"report requires metadata, cp_verdicts, tls_findings, summary"};

  Report report;
  try {
    const auto& md = doc["metadata"];
    report.metadata.timestamp = md.at("timestamp").get<std::string>();
    report.metadata.dut_label = md.at("dut_label").get<std::string>();
    report.metadata.suite_name = md.at("suite_name").get<std::string>();
    report.metadata.tool_version = md.at("tool_version").get<std::string>();

    std::vector<Verdict> verdicts;
    for (const auto& vj : doc["cp_verdicts"]) {
      Verdict v;
      v.test_id = vj.at("test_id").get<std::string>();
      auto outcome = outcome_from_string(vj.at("outcome").get<std::string>());
      if (!outcome) return ValidationError{"unknown outcome in report"};
      v.outcome = *outcome;
      v.explanation = vj.at("explanation").get<std::string>();
      for (const auto& ej : vj.at("evidence")) {
        TraceEvent ev;
        ev.direction = ej.at("direction").get<std::string>() == "Sent" ? TraceDirection::Sent
                                                                       : TraceDirection::Received;
        const auto& mj = ej.at("message");
        auto layer = layer_from_string(mj.at("layer").get<std::string>());
        if (!layer) return ValidationError{"unknown layer in report evidence"};
        const auto* info = catalog::find_message(*layer, mj.at("type").get<std::string>());
        if (!info) return ValidationError{"unknown message type in report evidence"};
        ev.message.layer = *layer;
        ev.message.msg_type = info->code;
        auto prot = protection_from_string(mj.at("protection").get<std::string>());
        if (!prot) return ValidationError{"unknown protection in report evidence"};
        ev.message.protection = *prot;
        for (auto it = mj.at("ies").begin(); it != mj.at("ies").end(); ++it) {
          const auto* ie = catalog::find_ie(it.key());
          if (!ie) return ValidationError{"unknown IE in report evidence"};
          auto bytes = dsl_string_to_bytes(it.value().get<std::string>());
          if (!bytes) return bytes.error();
          ev.message.ies.push_back({ie->tag, bytes.value()});
        }
        v.evidence.push_back(std::move(ev));
      }
      verdicts.push_back(std::move(v));
    }

    std::vector<Finding> findings;
    for (const auto& fj : doc["tls_findings"]) {
      Finding f;
      f.source = fj.at("source").get<std::string>() == "CP" ? FindingSource::Cp : FindingSource::Tls;
      f.code = fj.at("code").get<std::string>();
      auto sev = severity_from_string(fj.at("severity").get<std::string>());
      if (!sev) return ValidationError{"unknown severity in report"};
      f.severity = *sev;
      f.subject = fj.at("subject").get<std::string>();
      f.evidence = fj.at("evidence").get<std::string>();
      f.recommendation = fj.at("recommendation").get<std::string>();
      findings.push_back(std::move(f));
    }

    auto threshold = severity_from_string(doc["summary"].at("fail_threshold").get<std::string>());
    if (!threshold) return ValidationError{"unknown fail_threshold in report"};
    ReportMetadata metadata = report.metadata;
    report = consolidate(std::move(verdicts), std::move(findings), std::move(metadata), *threshold);
  } catch (const nlohmann::json::exception& e) {
    return ValidationError{std::string("report field error: ") + e.what()};
  }
  return report;
}

/// Human-readable rendering: header block, CP verdicts grouped by outcome,
/// TLS findings grouped by severity (highest first), summary line.
inline std::string render_text(const Report& report) {
  std::ostringstream out;
  const std::string rule(66, '=');
  out << rule << "\n UESENTRY SECURITY TEST REPORT\n" << rule << "\n";
  out << " DUT:        " << report.metadata.dut_label << "\n";
  out << " Suite:      " << report.metadata.suite_name << "\n";
  out << " Timestamp:  " << report.metadata.timestamp << "\n";
  out << " Tool:       uesentry " << report.metadata.tool_version << "\n";
  for (const auto& w : report.summary.warnings) out << " Warning:    " << w << "\n";
  out << "\n";

  out << " CONTROL PLANE (" << report.cp_verdicts.size() << " test cases)\n";
  out << " " << std::string(65, '-') << "\n";
  for (const auto outcome :
       {Outcome::NonCompliant, Outcome::Error, Outcome::Inconclusive, Outcome::Compliant}) {
    const auto n = report.summary.outcome_counts.count(outcome)
                       ? report.summary.outcome_counts.at(outcome)
                       : 0;
    if (n == 0) continue;
    out << " [" << to_string(outcome) << "] (" << n << ")\n";
    for (const auto& v : report.cp_verdicts) {
      if (v.outcome != outcome) continue;
      out << "   " << v.test_id << ": " << v.explanation << "\n";
    }
  }
  if (report.cp_verdicts.empty()) out << "   (no control-plane results)\n";
  out << "\n";

  out << " TLS FINDINGS (" << report.tls_findings.size() << ")\n";
  out << " " << std::string(65, '-') << "\n";
  for (const auto severity :
       {Severity::Critical, Severity::High, Severity::Medium, Severity::Low, Severity::Info}) {
    bool any = false;
    for (const auto& f : report.tls_findings) any = any || f.severity == severity;
    if (!any) continue;
    std::string label = to_string(severity);
    std::transform(label.begin(), label.end(), label.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    out << " [" << label << "]\n";
    for (const auto& f : report.tls_findings) {
      if (f.severity != severity) continue;
      out << "   " << f.code << " (" << f.subject << ")\n";
      out << "     evidence:       " << f.evidence << "\n";
      out << "     recommendation: " << f.recommendation << "\n";
    }
  }
  if (report.tls_findings.empty()) out << "   (no findings)\n";
  out << "\n";

  const auto& oc = report.summary.outcome_counts;
  const auto& sc = report.summary.severity_counts;
  const auto count = [](const auto& map, auto key) {
    auto it = map.find(key);
    return it != map.end() ? it->second : std::size_t{0};
  };
  out << " SUMMARY: status=" << to_string(report.summary.status)
      << " compliant=" << count(oc, Outcome::Compliant)
      << " noncompliant=" << count(oc, Outcome::NonCompliant)
      << " inconclusive=" << count(oc, Outcome::Inconclusive)
      << " error=" << count(oc, Outcome::Error)
      << " critical=" << count(sc, Severity::Critical) << " high=" << count(sc, Severity::High)
      << " medium=" << count(sc, Severity::Medium) << " low=" << count(sc, Severity::Low)
      << " info=" << count(sc, Severity::Info) << "\n";
  return out.str();
}

}  // namespace uesentry
