#include "episim/protocol.hpp"

#include <cmath>

#include "episim/kinematics.hpp"
#include "json.hpp"

namespace episim {

using json = nlohmann::ordered_json;

namespace {

struct ProtocolError {
  std::string_view code;
  std::string message;
};

json frame(std::string_view type) {
  json j;
  j["v"] = kProtocolVersion;
  j["type"] = type;
  return j;
}

json error_frame(std::string_view code, const std::string& message) {
  json j = frame("error");
  j["code"] = code;
  j["message"] = message;
  return j;
}

double number_field(const json& msg, const char* key) {
  auto it = msg.find(key);
  if (it == msg.end() || !it->is_number()) {
    throw ProtocolError{error_code::kBadMessage, std::string("missing numeric field '") + key + "'"};
  }
  return it->get<double>();
}

SessionConfig parse_config(const json& j, SessionConfig cfg) {
  if (!j.is_object()) throw ProtocolError{error_code::kInvalidConfig, "config must be an object"};
  try {
    if (j.contains("n_familiarization")) cfg.n_familiarization = j.at("n_familiarization").get<int>();
    if (j.contains("familiarization_mass_kg")) {
      cfg.familiarization_mass = j.at("familiarization_mass_kg").get<double>();
    }
    if (j.contains("test_masses_kg")) cfg.test_masses = j.at("test_masses_kg").get<std::vector<double>>();
    if (j.contains("blocks")) cfg.blocks = j.at("blocks").get<int>();
    if (j.contains("seed")) cfg.rng_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("feedback_in_familiarization")) {
      cfg.feedback_in_familiarization = j.at("feedback_in_familiarization").get<bool>();
    }
  } catch (const json::exception& e) {
    throw ProtocolError{error_code::kInvalidConfig, e.what()};
  }
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ProtocolError{error_code::kInvalidConfig, e.what()};
  }
  return cfg;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json strategy_summary(const TrialRecord& record) {
  const TrialMetrics m = analyze_trial(record);
  json j;
  j["probe_count"] = m.probes.count;
  j["mean_probe_depth_mm"] = optional_number(m.probes.mean_depth);
  j["mean_probe_rate_hz"] = optional_number(m.probes.mean_rate);
  json vel = json::object();
  for (Tissue t : kModelTissues) vel[std::string(tissue_name(t))] = optional_number(m.velocities[layer_slot(t)]);
  j["velocity_mm_s"] = std::move(vel);
  return j;
}

json outcome_fields(json j, const TrialRecord& record) {
  j["outcome"] = outcome_name(record.outcome.kind);
  j["signed_error_mm"] = record.outcome.signed_error_mm;
  j["final_depth_mm"] = record.final_depth;
  j["strategy_summary"] = strategy_summary(record);
  return j;
}

}  // namespace

struct SessionProtocol::State {
  RecordSink sink;
  ProtocolOptions options;
  std::optional<Session> session;
  std::optional<HoldResampler> resampler;
  std::optional<double> last_force_t;
  bool ended = false;

  std::vector<json> dispatch(const json& msg);
  std::vector<json> on_start_session(const json& msg);
  std::vector<json> on_start_trial();
  std::vector<json> on_position(const json& msg);
  std::vector<json> on_commit();
  std::vector<json> on_end_session();

  Session& require_session() {
    if (ended) throw ProtocolError{error_code::kInvalidState, "session has ended"};
    if (!session) throw ProtocolError{error_code::kInvalidState, "no session started"};
    return *session;
  }
  Trial& require_trial() {
    Session& s = require_session();
    if (!s.trial_active()) throw ProtocolError{error_code::kInvalidState, "no active trial"};
    return s.current_trial();
  }
  void drop_trial() {
    resampler.reset();
    last_force_t.reset();
    if (session) session->abort_trial();
  }
};

std::vector<json> SessionProtocol::State::dispatch(const json& msg) {
  if (!msg.is_object()) throw ProtocolError{error_code::kBadMessage, "frame must be a JSON object"};
  auto v = msg.find("v");
  if (v == msg.end() || !v->is_number_integer()) {
    throw ProtocolError{error_code::kBadMessage, "missing integer field 'v'"};
  }
  if (v->get<long long>() != kProtocolVersion) {
    throw ProtocolError{error_code::kUnsupportedVersion,
                        "unsupported protocol version " + v->dump() + ", expected 1"};
  }
  auto type = msg.find("type");
  if (type == msg.end() || !type->is_string()) {
    throw ProtocolError{error_code::kBadMessage, "missing string field 'type'"};
  }
  const auto& t = type->get_ref<const std::string&>();
  if (t == "start_session") return on_start_session(msg);
  if (t == "start_trial") return on_start_trial();
  if (t == "position") return on_position(msg);
  if (t == "commit") return on_commit();
  if (t == "end_session") return on_end_session();
  throw ProtocolError{error_code::kBadMessage, "unknown message type '" + t + "'"};
}

std::vector<json> SessionProtocol::State::on_start_session(const json& msg) {
  if (ended) throw ProtocolError{error_code::kInvalidState, "session has ended"};
  if (session) throw ProtocolError{error_code::kInvalidState, "session already started"};
  std::string pid = options.default_participant_id;
  if (auto it = msg.find("participant_id"); it != msg.end()) {
    if (!it->is_string()) throw ProtocolError{error_code::kBadMessage, "participant_id must be a string"};
    pid = it->get<std::string>();
  }
  SessionConfig cfg = options.default_config;
  if (auto it = msg.find("config"); it != msg.end()) cfg = parse_config(*it, cfg);
  session.emplace(cfg, pid);
  json out = frame("session_started");
  out["participant_id"] = pid;
  out["n_trials"] = session->schedule().size();
  return {out};
}

std::vector<json> SessionProtocol::State::on_start_trial() {
  Session& s = require_session();
  if (s.trial_active()) throw ProtocolError{error_code::kInvalidState, "a trial is already active"};
  if (s.finished()) throw ProtocolError{error_code::kInvalidState, "all scheduled trials are done"};
  Trial& trial = s.start_trial();
  resampler.emplace(trial);
  last_force_t.reset();
  json out = frame("trial_started");
  out["trial_index"] = trial.trial_index();
  out["kind"] = trial_kind_name(trial.kind());
  out["body_mass_kg"] = trial.body_mass();
  return {out};
}

std::vector<json> SessionProtocol::State::on_position(const json& msg) {
  require_trial();
  const double t = number_field(msg, "t");
  const double p_touhy = number_field(msg, "p_touhy");
  const double p_lor = number_field(msg, "p_lor_raw");
  Forces f;
  try {
    f = resampler->update(t, p_touhy, p_lor);
  } catch (const SampleError& e) {
    throw ProtocolError{error_code::kInvalidSample, e.what()};
  }
  if (last_force_t && t - *last_force_t < options.force_interval_s) return {};
  last_force_t = t;
  json out = frame("force");
  out["t"] = t;
  out["f_touhy"] = f.touhy;
  out["f_lor"] = f.lor;
  out["depth"] = p_touhy;
  return {out};
}

std::vector<json> SessionProtocol::State::on_commit() {
  Trial& trial = require_trial();
  resampler->flush();
  if (trial.sample_count() == 0) {
    throw ProtocolError{error_code::kInvalidState, "cannot commit a trial without position updates"};
  }
  const TrialRecord& rec = session->commit_trial();
  resampler.reset();
  last_force_t.reset();
  if (sink) sink(rec);
  json out = frame("trial_result");
  out["trial_index"] = rec.trial_index;
  out["kind"] = trial_kind_name(rec.kind);
  out["feedback_allowed"] = rec.feedback_allowed;
  if (rec.feedback_allowed) out = outcome_fields(std::move(out), rec);
  return {out};
}

std::vector<json> SessionProtocol::State::on_end_session() {
  require_session();
  drop_trial();
  ended = true;
  json trials = json::array();
  for (const auto& rec : session->records()) {
    json t;
    t["trial_index"] = rec.trial_index;
    t["kind"] = trial_kind_name(rec.kind);
    t["body_mass_kg"] = rec.body_mass;
    trials.push_back(outcome_fields(std::move(t), rec));
  }
  json out = frame("session_summary");
  out["n_trials"] = session->schedule().size();
  out["n_completed"] = session->records().size();
  out["trials"] = std::move(trials);
  return {out};
}

SessionProtocol::SessionProtocol(RecordSink sink, ProtocolOptions options)
    : state_(std::make_unique<State>()) {
  state_->sink = std::move(sink);
  state_->options = std::move(options);
}

SessionProtocol::~SessionProtocol() = default;
SessionProtocol::SessionProtocol(SessionProtocol&&) noexcept = default;
SessionProtocol& SessionProtocol::operator=(SessionProtocol&&) noexcept = default;

std::vector<std::string> SessionProtocol::handle(std::string_view text) {
  std::vector<json> out;
  try {
    json msg;
    try {
      msg = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ProtocolError{error_code::kBadMessage, std::string("invalid JSON: ") + e.what()};
    }
    out = state_->dispatch(msg);
  } catch (const ProtocolError& e) {
    out = {error_frame(e.code, e.message)};
  } catch (const StateError& e) {
    out = {error_frame(error_code::kInvalidState, e.what())};
  } catch (const SampleError& e) {
    out = {error_frame(error_code::kInvalidSample, e.what())};
  }
  std::vector<std::string> frames;
  frames.reserve(out.size());
  for (const auto& j : out) frames.push_back(j.dump());
  return frames;
}

void SessionProtocol::disconnect() { state_->drop_trial(); }

bool SessionProtocol::started() const { return state_->session.has_value(); }
bool SessionProtocol::ended() const { return state_->ended; }
bool SessionProtocol::trial_active() const {
  return state_->session && state_->session->trial_active();
}

}  // namespace episim
