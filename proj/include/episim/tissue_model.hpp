#pragma once

// Layered tissue force model of the lumbar epidural region.
//
// Each tissue is rendered as a cubic spring F = a0 + a1*u + a2*u^2 + a3*u^3,
// where u is the needle's penetration depth into the current force region.
// Ligaments have two regions: before the puncture (elastic loading) and after
// it (cutting + shaft friction). Patient body mass scales every depth band by
// a single thickness ratio and divides local depth by the same ratio, so the
// peak force of a region does not depend on mass.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace episim {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DepthOutOfModel : public std::out_of_range {
 public:
  explicit DepthOutOfModel(double depth_mm);
  double depth_mm() const { return depth_mm_; }

 private:
  double depth_mm_;
};

enum class Tissue : std::uint8_t {
  Skin,
  Fat,
  SupraspinousLigament,
  InterspinousLigament,
  LigamentumFlavum,
  EpiduralSpace,
  DuraMater,  // only used to label depths past the epidural space
};

// Tissues that make up the modelled stack, shallow to deep.
inline constexpr std::array<Tissue, 6> kModelTissues{
    Tissue::Skin,
    Tissue::Fat,
    Tissue::SupraspinousLigament,
    Tissue::InterspinousLigament,
    Tissue::LigamentumFlavum,
    Tissue::EpiduralSpace,
};
inline constexpr std::size_t kTissueCount = 7;

std::string_view tissue_name(Tissue t);
std::optional<Tissue> parse_tissue(std::string_view name);

enum class Stage : std::uint8_t { BP, AP, None };

std::string_view stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

// Half-open interval [start, end) in mm of cumulative needle depth.
struct DepthBand {
  double start = 0.0;
  double end = 0.0;

  bool contains(double depth) const { return depth >= start && depth < end; }
  double width() const { return end - start; }
  bool operator==(const DepthBand&) const = default;
};

struct ForceRegion {
  Tissue tissue = Tissue::Skin;
  Stage stage = Stage::None;
  double a0 = 0.0;  // N
  double a1 = 0.0;  // N/mm
  double a2 = 0.0;  // N/mm^2
  double a3 = 0.0;  // N/mm^3
  DepthBand band;

  // Polynomial at local depth u (mm, already stiffness-scaled), clamped >= 0.
  double force_at_local(double u) const;
};

// Region table at the reference body mass. Bands are cumulative from the skin
// surface and must tile [0, total) in order.
class ForceTable {
 public:
  static const ForceTable& defaults();

  // Whitespace-separated rows: tissue stage a0 a1 a2 a3 start_mm end_mm.
  // '#' starts a comment. Throws ValidationError on malformed or inconsistent
  // tables.
  static ForceTable parse(std::istream& in);
  static ForceTable load(const std::string& path);
  void write(std::ostream& out) const;

  explicit ForceTable(std::vector<ForceRegion> regions);

  std::span<const ForceRegion> regions() const { return regions_; }

 private:
  void validate() const;
  std::vector<ForceRegion> regions_;
};

// Mass-dependent thickness ratio T_t/A_t.
namespace body {
inline constexpr double kWaistAreaCm2 = 574.94;
inline constexpr double kWaistRadiusCm = 13.53;
inline constexpr double kReferenceMassKg = 71.0;
inline constexpr double kMinMassKg = 30.0;
inline constexpr double kMaxMassKg = 200.0;
}  // namespace body

double thickness_ratio(double body_mass_kg);

// Per-tissue flags: has the tissue's before-puncture band been fully traversed
// during this trial. Flags only ever go from false to true.
class PunctureState {
 public:
  bool punctured(Tissue t) const { return flags_[static_cast<std::size_t>(t)]; }
  void mark(Tissue t) { flags_[static_cast<std::size_t>(t)] = true; }
  std::vector<Tissue> punctured_tissues() const;
  bool operator==(const PunctureState&) const = default;

 private:
  std::array<bool, kTissueCount> flags_{};
};

enum class OutcomeKind : std::uint8_t { FailedEpidural, Success, DuralPuncture };

std::string_view outcome_name(OutcomeKind k);
std::optional<OutcomeKind> parse_outcome(std::string_view name);

struct Outcome {
  OutcomeKind kind = OutcomeKind::Success;
  double signed_error_mm = 0.0;
  bool operator==(const Outcome&) const = default;
};

// Polynomial selected for one depth under one puncture history.
struct ActiveTerm {
  Tissue tissue;
  Stage stage;
  double start;
  double a0, a1, a2, a3;
};

class PatientModel {
 public:
  double body_mass() const { return body_mass_; }
  double thickness_ratio() const { return ratio_; }
  std::span<const ForceRegion> regions() const { return regions_; }
  DepthBand epidural_window() const { return epidural_window_; }
  double total_depth() const { return regions_.back().band.end; }

  // Region containing depth; throws DepthOutOfModel outside [0, total_depth).
  const ForceRegion& layer_at(double depth_mm) const;

  // Tissue at a depth; depths at or past total_depth are Dura Mater, and
  // negative depths (outside the body) yield nullopt.
  std::optional<Tissue> tissue_at(double depth_mm) const;

  // Full mass-scaled extent of a modelled tissue (all of its regions).
  DepthBand tissue_band(Tissue t) const;

  // Sets flags for every tissue whose BP band ends at or above depth.
  void update_punctures(double depth_mm, PunctureState& state) const;

  ActiveTerm active_term(double depth_mm, const PunctureState& state) const;

  double touhy_force(double depth_mm, const PunctureState& state) const;
  double lor_force(double depth_mm, const PunctureState& state) const;

  // Constant force behind the epidural space.
  double dura_wall_force() const { return dura_wall_force_; }

  Outcome classify_outcome(double final_depth_mm) const;

  // Batch Touhy force for a precomputed sequence of active terms (dispatched
  // SIMD kernel). out.size() must equal depths.size() == terms.size().
  void touhy_forces(std::span<const double> depths, std::span<const ActiveTerm> terms,
                    std::span<double> out) const;

 private:
  friend PatientModel build_patient_model(double, const ForceTable&);
  PatientModel() = default;

  const ForceRegion* find_region(Tissue t, Stage s) const;

  double body_mass_ = 0.0;
  double ratio_ = 1.0;
  std::vector<ForceRegion> regions_;
  DepthBand epidural_window_;
  double dura_wall_force_ = 0.0;
};

// Scales the table's depth bands for a patient of the given mass. Throws
// ValidationError outside [30, 200] kg.
PatientModel build_patient_model(double body_mass_kg,
                                 const ForceTable& table = ForceTable::defaults());

inline constexpr double kLorForceScale = 2.0;

}  // namespace episim
