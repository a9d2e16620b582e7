#include "episim/trial_engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

namespace episim {

std::string_view trial_kind_name(TrialKind k) {
  return k == TrialKind::Familiarization ? "familiarization" : "test";
}

std::optional<TrialKind> parse_trial_kind(std::string_view name) {
  if (name == "familiarization") return TrialKind::Familiarization;
  if (name == "test") return TrialKind::Test;
  return std::nullopt;
}

void SessionConfig::validate() const {
  if (n_familiarization < 0) throw ValidationError("n_familiarization must be >= 0");
  if (blocks < 0) throw ValidationError("blocks must be >= 0");
  if (test_masses.empty()) throw ValidationError("test_masses must not be empty");
  auto check_mass = [](double m) {
    if (!(m >= body::kMinMassKg && m <= body::kMaxMassKg)) {
      std::ostringstream os;
      os << "body mass " << m << " kg outside [" << body::kMinMassKg << ", "
         << body::kMaxMassKg << "] kg";
      throw ValidationError(os.str());
    }
  };
  if (n_familiarization > 0) check_mass(familiarization_mass);
  for (double m : test_masses) check_mass(m);
}

std::size_t SessionConfig::schedule_length() const {
  return static_cast<std::size_t>(n_familiarization) +
         static_cast<std::size_t>(blocks) * test_masses.size();
}

std::vector<ScheduledTrial> generate_schedule(const SessionConfig& config) {
  config.validate();
  std::vector<ScheduledTrial> out;
  out.reserve(config.schedule_length());
  for (int i = 0; i < config.n_familiarization; ++i) {
    out.push_back({TrialKind::Familiarization, config.familiarization_mass});
  }
  std::mt19937_64 rng(config.rng_seed);
  std::vector<double> block = config.test_masses;
  for (int b = 0; b < config.blocks; ++b) {
    std::shuffle(block.begin(), block.end(), rng);
    for (double m : block) out.push_back({TrialKind::Test, m});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trial

Trial::Trial(int trial_index, TrialKind kind, double body_mass, bool feedback_allowed,
             std::string participant_id)
    : model_(build_patient_model(body_mass)) {
  record_.participant_id = std::move(participant_id);
  record_.trial_index = trial_index;
  record_.kind = kind;
  record_.body_mass = body_mass;
  record_.feedback_allowed = feedback_allowed;
}

Forces Trial::ingest(double t, double p_touhy, double p_lor_raw) {
  if (!active_) throw StateError("trial already committed");
  if (!std::isfinite(t) || !std::isfinite(p_touhy) || !std::isfinite(p_lor_raw)) {
    throw SampleError("sample values must be finite");
  }
  if (!record_.samples.empty() && !(t > record_.samples.back().t)) {
    std::ostringstream os;
    os << "sample time " << t << " s does not advance past " << record_.samples.back().t << " s";
    throw SampleError(os.str());
  }
  model_.update_punctures(p_touhy, record_.punctures);
  if (!record_.lor_zero_offset && p_touhy >= 0.0) record_.lor_zero_offset = p_lor_raw;

  const double f_touhy = model_.touhy_force(p_touhy, record_.punctures);
  const Forces f{f_touhy, kLorForceScale * f_touhy};
  record_.samples.push_back({t, p_touhy, p_lor_raw, f.touhy, f.lor});
  return f;
}

Forces Trial::preview(double p_touhy) const {
  PunctureState state = record_.punctures;
  model_.update_punctures(p_touhy, state);
  const double f = model_.touhy_force(p_touhy, state);
  return {f, kLorForceScale * f};
}

TrialRecord Trial::commit() {
  if (!active_) throw StateError("trial already committed");
  if (record_.samples.empty()) throw StateError("cannot commit a trial without samples");
  active_ = false;
  record_.final_depth = record_.samples.back().p_touhy;
  record_.outcome = model_.classify_outcome(record_.final_depth);
  return record_;
}

// ---------------------------------------------------------------------------
// HoldResampler

namespace {
double tick_time(std::int64_t k) { return static_cast<double>(k) / kSampleRateHz; }
}  // namespace

Forces HoldResampler::update(double t, double p_touhy, double p_lor_raw) {
  if (!std::isfinite(t) || !std::isfinite(p_touhy) || !std::isfinite(p_lor_raw)) {
    throw SampleError("position update values must be finite");
  }
  if (!have_position_) {
    if (t < 0.0) throw SampleError("position update time must be >= 0");
    next_tick_ = static_cast<std::int64_t>(std::ceil(t * kSampleRateHz));
    while (tick_time(next_tick_) < t) ++next_tick_;
  } else {
    if (!(t > last_t_)) {
      std::ostringstream os;
      os << "position update time " << t << " s does not advance past " << last_t_ << " s";
      throw SampleError(os.str());
    }
    while (tick_time(next_tick_) < t) {
      trial_->ingest(tick_time(next_tick_), held_touhy_, held_lor_);
      ++next_tick_;
    }
  }
  have_position_ = true;
  last_t_ = t;
  held_touhy_ = p_touhy;
  held_lor_ = p_lor_raw;
  return trial_->preview(p_touhy);
}

void HoldResampler::flush() {
  if (!have_position_) return;
  trial_->ingest(tick_time(next_tick_), held_touhy_, held_lor_);
  ++next_tick_;
  // Later updates must come after the flushed tick.
  last_t_ = std::max(last_t_, tick_time(next_tick_ - 1));
}

// ---------------------------------------------------------------------------
// Replay

TrialRecord replay(const TrialRecord& record) {
  Trial trial(record.trial_index, record.kind, record.body_mass, record.feedback_allowed,
              record.participant_id);
  for (const auto& s : record.samples) trial.ingest(s.t, s.p_touhy, s.p_lor_raw);
  return trial.commit();
}

namespace {

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

std::string sample_divergence(std::size_t i, const char* field, double want, double got) {
  std::ostringstream os;
  os.precision(17);
  os << "sample " << i << " " << field << ": recorded " << want << ", replayed " << got;
  return os.str();
}

}  // namespace

std::optional<std::string> verify_replay(const TrialRecord& record) {
  if (record.samples.empty()) return "record has no samples";
  const TrialRecord again = replay(record);
  for (std::size_t i = 0; i < record.samples.size(); ++i) {
    const auto& a = record.samples[i];
    const auto& b = again.samples[i];
    if (!same_bits(a.f_touhy, b.f_touhy)) return sample_divergence(i, "f_touhy", a.f_touhy, b.f_touhy);
    if (!same_bits(a.f_lor, b.f_lor)) return sample_divergence(i, "f_lor", a.f_lor, b.f_lor);
  }
  if (!(again.punctures == record.punctures)) return "puncture flags differ";
  if (again.outcome.kind != record.outcome.kind) return "outcome differs";
  if (!same_bits(again.outcome.signed_error_mm, record.outcome.signed_error_mm)) {
    return "signed error differs";
  }
  if (!same_bits(again.final_depth, record.final_depth)) return "final depth differs";
  if (again.lor_zero_offset.has_value() != record.lor_zero_offset.has_value() ||
      (again.lor_zero_offset && !same_bits(*again.lor_zero_offset, *record.lor_zero_offset))) {
    return "LOR zero offset differs";
  }

  // Second route: resolve the active polynomial per sample, then evaluate the
  // whole stream with the batch kernel.
  const PatientModel model = build_patient_model(record.body_mass);
  PunctureState state;
  std::vector<double> depths;
  std::vector<ActiveTerm> terms;
  depths.reserve(record.samples.size());
  terms.reserve(record.samples.size());
  for (const auto& s : record.samples) {
    model.update_punctures(s.p_touhy, state);
    depths.push_back(s.p_touhy);
    terms.push_back(model.active_term(s.p_touhy, state));
  }
  std::vector<double> batch(depths.size());
  model.touhy_forces(depths, terms, batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!same_bits(batch[i], record.samples[i].f_touhy)) {
      return sample_divergence(i, "f_touhy (batch)", record.samples[i].f_touhy, batch[i]);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Session

Session::Session(SessionConfig config, std::string participant_id)
    : config_(std::move(config)),
      participant_id_(std::move(participant_id)),
      schedule_(generate_schedule(config_)) {}

Trial& Session::start_trial() {
  if (trial_) throw StateError("a trial is already active");
  if (next_index_ >= schedule_.size()) throw StateError("session schedule is complete");
  const auto& next = schedule_[next_index_];
  const bool feedback =
      next.kind == TrialKind::Familiarization && config_.feedback_in_familiarization;
  trial_.emplace(static_cast<int>(next_index_), next.kind, next.body_mass, feedback,
                 participant_id_);
  ++next_index_;
  return *trial_;
}

Trial& Session::current_trial() {
  if (!trial_) throw StateError("no active trial");
  return *trial_;
}

const TrialRecord& Session::commit_trial() {
  if (!trial_) throw StateError("no active trial");
  records_.push_back(trial_->commit());
  trial_.reset();
  return records_.back();
}

}  // namespace episim
