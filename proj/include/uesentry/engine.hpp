#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uesentry/codec.hpp"
#include "uesentry/model.hpp"
#include "uesentry/net.hpp"
#include "uesentry/session.hpp"

namespace uesentry {

/// Raw capture of one test execution, prior to evaluation.
struct Observation {
  std::string test_id;
  bool trigger_reached = false;
  std::vector<TraceEvent> responses;  // received inside the post-injection window
  int window_ms = 0;
  std::optional<std::string> transport_error;
  std::vector<TraceEvent> trace;  // full session dialogue
};

struct EngineConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  int connect_timeout_ms = 2000;
  int step_timeout_ms = 2000;  // per scripted step, waiting for its expect uplink
};

struct ProgressEvent {
  std::size_t index = 0;  // 1-based
  std::size_t total = 0;
  std::string test_id;
};

namespace detail {

class TestSession {
 public:
  TestSession(const TestCase& tc, const EngineConfig& cfg, const SessionScripts& scripts)
      : tc_(tc), cfg_(cfg), scripts_(scripts), start_(SteadyClock::now()) {}

  Observation run() {
    Observation obs;
    obs.test_id = tc_.id;
    obs.window_ms = tc_.expected.timeout_ms;

    auto conn = TcpConn::connect(cfg_.host, cfg_.port, cfg_.connect_timeout_ms);
    if (!conn) {
      obs.transport_error = conn.error().message;
      return obs;
    }
    conn_ = std::move(conn.value());

    auto trigger_info = catalog::resolve_message(tc_.trigger.message_type, tc_.layer);
    trigger_ = trigger_info.value();  // cases are validated at parse time

    // The UE opens every session with RRCSetupRequest; wait for it so the
    // connection start is deterministic before the script runs.
    if (!pump_until(SteadyClock::now() + std::chrono::milliseconds(cfg_.step_timeout_ms),
                    [this] { return !trace_.empty() || triggered_; })) {
      obs.transport_error = transport_error_;
      obs.trace = trace_;
      return obs;
    }

    const auto script_it = scripts_.find(tc_.trigger.state);
    const std::vector<ScriptStep> empty;
    const auto& script = script_it != scripts_.end() ? script_it->second : empty;

    for (const auto& step : script) {
      if (triggered_ || transport_error_) break;
      const std::size_t sent_at = trace_.size();
      if (!send_step(step)) break;
      if (step.expect) {
        // Only uplinks received after this step count as its confirmation;
        // earlier occurrences of the same type (e.g. the pre-security
        // IdentityResponse) must not satisfy a later step.
        const auto resolved = catalog::resolve_message(*step.expect, step.layer);
        const auto deadline = SteadyClock::now() + std::chrono::milliseconds(cfg_.step_timeout_ms);
        const MessageInfo want = resolved.value();
        pump_until(deadline, [&] {
          return triggered_ || saw_uplink_since(sent_at, want.layer, want.code);
        });
      } else {
        drain_pending();
      }
    }
    // Script exhausted: give in-flight uplinks a short grace period.
    if (!triggered_ && !transport_error_)
      pump_until(SteadyClock::now() + std::chrono::milliseconds(250), [this] { return triggered_; });

    if (transport_error_) {
      obs.transport_error = transport_error_;
      obs.trace = trace_;
      return obs;
    }
    if (!triggered_) {
      obs.trace = trace_;
      return obs;  // trigger_reached stays false -> Inconclusive downstream
    }
    obs.trigger_reached = true;

    // Inject. The response window starts at send completion; anything
    // received between trigger and injection stays in the trace only.
    auto inject_info = catalog::resolve_message(tc_.inject.message_type, tc_.layer);
    CpMessage inject;
    inject.layer = inject_info.value().layer;
    inject.msg_type = inject_info.value().code;
    inject.protection = tc_.inject.protection;
    for (const auto& [name, value] : tc_.inject.ies)
      inject.ies.push_back({catalog::find_ie(name)->tag, value});
    if (!send_message(inject)) {
      obs.transport_error = transport_error_;
      obs.trace = trace_;
      return obs;
    }
    const auto window_start = SteadyClock::now();
    const std::size_t responses_from = trace_.size();
    pump_until(window_start + std::chrono::milliseconds(tc_.expected.timeout_ms), [] { return false; });

    obs.trace = trace_;
    if (transport_error_) obs.transport_error = transport_error_;
    for (std::size_t i = responses_from; i < trace_.size(); ++i)
      if (trace_[i].direction == TraceDirection::Received) obs.responses.push_back(trace_[i]);
    return obs;
  }

 private:
  std::int64_t elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - start_).count();
  }

  bool saw_uplink_since(std::size_t from, Layer layer, std::uint8_t code) const {
    for (std::size_t i = from; i < trace_.size(); ++i)
      if (trace_[i].direction == TraceDirection::Received && trace_[i].message.layer == layer &&
          trace_[i].message.msg_type == code)
        return true;
    return false;
  }

  bool send_step(const ScriptStep& step) {
    const auto resolved = catalog::resolve_message(step.message_type, step.layer);
    CpMessage msg;
    msg.layer = resolved.value().layer;
    msg.msg_type = resolved.value().code;
    msg.protection = step.protection;
    for (const auto& [name, value] : step.ies) msg.ies.push_back({catalog::find_ie(name)->tag, value});
    if (!send_message(msg)) return false;
    // Sending RegistrationAccept moves the DUT (stream-ordered) into the
    // Registered trigger state.
    if (msg.layer == Layer::Nas && msg.type_name() == "RegistrationAccept" &&
        state_ == UeSecurityState::PostSecurity)
      state_ = UeSecurityState::Registered;
    return true;
  }

  bool send_message(const CpMessage& msg) {
    auto encoded = encode_message(msg);
    if (!encoded) {
      transport_error_ = "encode: " + encoded.error().message;
      return false;
    }
    auto framed = frame_write(encoded.value());
    if (!framed) {
      transport_error_ = "frame: " + framed.error().message;
      return false;
    }
    auto rc = conn_.write_all(framed.value());
    if (!rc) {
      transport_error_ = rc.error().message;
      return false;
    }
    trace_.push_back({TraceDirection::Sent, elapsed_ms(), msg});
    return true;
  }

  void on_uplink(const CpMessage& msg) {
    trace_.push_back({TraceDirection::Received, elapsed_ms(), msg});
    // Security-state tracking precedes trigger matching so a trigger on the
    // activating SecurityModeComplete itself fires in PostSecurity.
    if (msg.layer == Layer::Nas && msg.type_name() == "SecurityModeComplete" &&
        state_ == UeSecurityState::PreSecurity)
      state_ = UeSecurityState::PostSecurity;
    if (!triggered_ && state_ == tc_.trigger.state && msg.layer == trigger_.layer &&
        msg.msg_type == trigger_.code)
      triggered_ = true;
  }

  /// Reads and decodes uplinks until `done()` or the deadline. Returns false
  /// on transport/protocol failure (transport_error_ set).
  bool pump_until(TimePoint deadline, const std::function<bool()>& done) {
    std::uint8_t buf[4096];
    while (!done()) {
      Bytes payload;
      const auto status = reader_.poll(payload);
      if (status == FrameStatus::ProtocolError) {
        transport_error_ = "protocol error: oversized frame";
        return false;
      }
      if (status == FrameStatus::Ready) {
        auto msg = decode_message(payload);
        if (!msg) {
          transport_error_ = "protocol error: " + msg.error().message;
          return false;
        }
        on_uplink(msg.value());
        continue;
      }
      if (SteadyClock::now() >= deadline) return true;
      auto n = conn_.read_some(buf, sizeof(buf), deadline);
      if (!n) {
        if (n.error().message.find("timed out") != std::string::npos) return true;
        transport_error_ = n.error().message;
        return false;
      }
      if (n.value() == 0) {
        transport_error_ = "connection closed by DUT";
        return false;
      }
      reader_.feed({buf, n.value()});
    }
    return true;
  }

  void drain_pending() {
    pump_until(SteadyClock::now() + std::chrono::milliseconds(20), [] { return false; });
  }

  const TestCase& tc_;
  const EngineConfig& cfg_;
  const SessionScripts& scripts_;
  TimePoint start_;
  TcpConn conn_;
  FrameReader reader_;
  std::vector<TraceEvent> trace_;
  UeSecurityState state_ = UeSecurityState::PreSecurity;
  MessageInfo trigger_{};
  bool triggered_ = false;
  std::optional<std::string> transport_error_;
};

}  // namespace detail

/// Executes one test case against the DUT: fresh connection, script replay
/// to the trigger state, downlink injection, response-window capture.
inline Observation run_test(const TestCase& tc, const EngineConfig& cfg, const SessionScripts& scripts) {
  return detail::TestSession(tc, cfg, scripts).run();
}

/// Runs every case strictly sequentially in id order. Per-test transport
/// errors are embedded in the observations; the suite never aborts early.
inline std::vector<Observation> run_suite(const Suite& suite, const EngineConfig& cfg,
                                          const SessionScripts& scripts,
                                          const std::function<void(const ProgressEvent&)>& progress = {}) {
  std::vector<Observation> out;
  out.reserve(suite.cases.size());
  for (std::size_t i = 0; i < suite.cases.size(); ++i) {
    if (progress) progress({i + 1, suite.cases.size(), suite.cases[i].id});
    out.push_back(run_test(suite.cases[i], cfg, scripts));
  }
  return out;
}

inline nlohmann::json message_to_json(const CpMessage& msg) {
  nlohmann::json ies = nlohmann::json::object();
  for (const auto& ie : msg.ies) {
    const auto* info = catalog::find_ie(ie.tag);
    ies[info ? std::string(info->name) : "unknown"] = bytes_to_dsl_string(ie.value);
  }
  return {{"layer", to_string(msg.layer)},
          {"type", msg.type_name()},
          {"protection", to_string(msg.protection)},
          {"ies", ies}};
}

inline nlohmann::json trace_event_to_json(const TraceEvent& ev, bool with_timestamp = true) {
  nlohmann::json j;
  j["direction"] = to_string(ev.direction);
  if (with_timestamp) j["timestamp_ms"] = ev.timestamp_ms;
  j["message"] = message_to_json(ev.message);
  return j;
}

/// Full observation dump (used by --trace-dir), timestamps included.
inline nlohmann::json observation_to_json(const Observation& obs) {
  nlohmann::json j;
  j["test_id"] = obs.test_id;
  j["trigger_reached"] = obs.trigger_reached;
  j["window_ms"] = obs.window_ms;
  j["transport_error"] = obs.transport_error ? nlohmann::json(*obs.transport_error) : nlohmann::json();
  j["responses"] = nlohmann::json::array();
  for (const auto& ev : obs.responses) j["responses"].push_back(trace_event_to_json(ev));
  j["trace"] = nlohmann::json::array();
  for (const auto& ev : obs.trace) j["trace"].push_back(trace_event_to_json(ev));
  return j;
}

}  // namespace uesentry
