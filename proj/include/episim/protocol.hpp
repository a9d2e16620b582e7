#pragma once

// Session wire protocol. Every frame is one JSON object with a "type" and a
// "v" (currently 1). The state machine here is transport-free: feed it a
// client frame, get back the frames to send. docs/protocol.md has the schema.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "episim/trial_engine.hpp"

namespace episim {

inline constexpr int kProtocolVersion = 1;

namespace error_code {
inline constexpr std::string_view kBadMessage = "bad_message";
inline constexpr std::string_view kUnsupportedVersion = "unsupported_version";
inline constexpr std::string_view kInvalidState = "invalid_state";
inline constexpr std::string_view kInvalidSample = "invalid_sample";
inline constexpr std::string_view kInvalidConfig = "invalid_config";
}  // namespace error_code

struct ProtocolOptions {
  // Minimum spacing of force frames in client time; 0 sends one per update.
  double force_interval_s = 0.0;
  SessionConfig default_config;
  // Used when start_session carries no participant_id.
  std::string default_participant_id;
};

class SessionProtocol {
 public:
  // Called with every committed record, on the caller's thread.
  using RecordSink = std::function<void(const TrialRecord&)>;

  explicit SessionProtocol(RecordSink sink = {}, ProtocolOptions options = {});
  ~SessionProtocol();
  SessionProtocol(SessionProtocol&&) noexcept;
  SessionProtocol& operator=(SessionProtocol&&) noexcept;

  // Handles one client frame. Errors are reported as error frames; the
  // session state is left as it was before the bad frame.
  std::vector<std::string> handle(std::string_view frame);

  // Drops any trial in progress without producing a record.
  void disconnect();

  bool started() const;
  bool ended() const;
  bool trial_active() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace episim
