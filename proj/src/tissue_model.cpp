#include "episim/tissue_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "episim/kernels.hpp"

namespace episim {

namespace {

std::string format_depth_error(double depth) {
  std::ostringstream os;
  os << "depth " << depth << " mm is outside the tissue model";
  return os.str();
}

}  // namespace

DepthOutOfModel::DepthOutOfModel(double depth_mm)
    : std::out_of_range(format_depth_error(depth_mm)), depth_mm_(depth_mm) {}

std::string_view tissue_name(Tissue t) {
  switch (t) {
    case Tissue::Skin: return "skin";
    case Tissue::Fat: return "fat";
    case Tissue::SupraspinousLigament: return "supraspinous";
    case Tissue::InterspinousLigament: return "interspinous";
    case Tissue::LigamentumFlavum: return "ligamentum_flavum";
    case Tissue::EpiduralSpace: return "epidural_space";
    case Tissue::DuraMater: return "dura_mater";
  }
  return "unknown";
}

std::optional<Tissue> parse_tissue(std::string_view name) {
  for (std::size_t i = 0; i < kTissueCount; ++i) {
    auto t = static_cast<Tissue>(i);
    if (tissue_name(t) == name) return t;
  }
  return std::nullopt;
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::BP: return "BP";
    case Stage::AP: return "AP";
    case Stage::None: return "-";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
  if (name == "BP") return Stage::BP;
  if (name == "AP") return Stage::AP;
  if (name == "-" || name == "None") return Stage::None;
  return std::nullopt;
}

std::string_view outcome_name(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::FailedEpidural: return "failed_epidural";
    case OutcomeKind::Success: return "success";
    case OutcomeKind::DuralPuncture: return "dural_puncture";
  }
  return "unknown";
}

std::optional<OutcomeKind> parse_outcome(std::string_view name) {
  if (name == "failed_epidural") return OutcomeKind::FailedEpidural;
  if (name == "success") return OutcomeKind::Success;
  if (name == "dural_puncture") return OutcomeKind::DuralPuncture;
  return std::nullopt;
}

double ForceRegion::force_at_local(double u) const {
  return kernels::eval_cubic(u, 0.0, a0, a1, a2, a3, 1.0);
}

// ---------------------------------------------------------------------------
// ForceTable

const ForceTable& ForceTable::defaults() {
  // Touhy needle, 71 kg reference patient.
  static const ForceTable table({
      {Tissue::Skin, Stage::BP, 0.0075, 0.0037, -0.0015, 0.0008, {0.0, 13.92}},
      {Tissue::Fat, Stage::AP, 1.9212, 0.1437, -0.1682, 0.0, {13.92, 17.15}},
      {Tissue::SupraspinousLigament, Stage::BP, 0.628, 0.2637, 0.0343, 0.0, {17.15, 19.37}},
      {Tissue::SupraspinousLigament, Stage::AP, 1.3855, -0.7174, 0.0923, 0.0, {19.37, 20.0}},
      {Tissue::InterspinousLigament, Stage::BP, 1.4021, 0.3054, 0.0, 0.0, {20.0, 23.18}},
      {Tissue::InterspinousLigament, Stage::AP, 2.3761, 0.0, 0.0, 0.0, {23.18, 41.18}},
      {Tissue::LigamentumFlavum, Stage::BP, 2.3761, 0.4783, -0.0186, 0.0, {41.18, 44.79}},
      {Tissue::LigamentumFlavum, Stage::AP, 3.861, -0.0539, -0.0375, 0.0, {44.79, 48.38}},
      {Tissue::EpiduralSpace, Stage::None, 0.0, 0.0, 0.0, 0.0, {48.38, 56.98}},
  });
  return table;
}

ForceTable::ForceTable(std::vector<ForceRegion> regions) : regions_(std::move(regions)) {
  validate();
}

void ForceTable::validate() const {
  if (regions_.empty()) throw ValidationError("force table is empty");
  if (regions_.front().band.start != 0.0) {
    throw ValidationError("force table must start at depth 0");
  }
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const auto& r = regions_[i];
    if (!(r.band.start < r.band.end)) {
      throw ValidationError("force region " + std::to_string(i) + " has an empty depth band");
    }
    if (i > 0 && r.band.start != regions_[i - 1].band.end) {
      throw ValidationError("force region " + std::to_string(i) +
                            " does not start where the previous one ends");
    }
    if (r.tissue == Tissue::DuraMater) {
      throw ValidationError("dura_mater cannot appear in a force table");
    }
    if (i > 0 && static_cast<int>(r.tissue) < static_cast<int>(regions_[i - 1].tissue)) {
      throw ValidationError("force regions must be ordered shallow to deep");
    }
  }
  const auto& last = regions_.back();
  if (last.tissue != Tissue::EpiduralSpace) {
    throw ValidationError("force table must end with the epidural space");
  }
  if (last.a0 != 0.0 || last.a1 != 0.0 || last.a2 != 0.0 || last.a3 != 0.0) {
    throw ValidationError("epidural space must have zero force coefficients");
  }
  for (Tissue t : kModelTissues) {
    const auto n = std::count_if(regions_.begin(), regions_.end(),
                                 [&](const ForceRegion& r) { return r.tissue == t; });
    if (n == 0) throw ValidationError("force table lacks tissue " + std::string(tissue_name(t)));
  }
  // A two-stage tissue lists BP before AP.
  for (std::size_t i = 1; i < regions_.size(); ++i) {
    if (regions_[i].tissue == regions_[i - 1].tissue &&
        !(regions_[i - 1].stage == Stage::BP && regions_[i].stage == Stage::AP)) {
      throw ValidationError("tissue " + std::string(tissue_name(regions_[i].tissue)) +
                            " must list BP then AP");
    }
  }
}

ForceTable ForceTable::parse(std::istream& in) {
  std::vector<ForceRegion> regions;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string tissue, stage;
    if (!(row >> tissue)) continue;
    ForceRegion r;
    if (!(row >> stage >> r.a0 >> r.a1 >> r.a2 >> r.a3 >> r.band.start >> r.band.end)) {
      throw ValidationError("force table line " + std::to_string(line_no) +
                            ": expected tissue stage a0 a1 a2 a3 start end");
    }
    std::string extra;
    if (row >> extra) {
      throw ValidationError("force table line " + std::to_string(line_no) + ": trailing data");
    }
    auto t = parse_tissue(tissue);
    auto s = parse_stage(stage);
    if (!t) throw ValidationError("force table line " + std::to_string(line_no) +
                                  ": unknown tissue '" + tissue + "'");
    if (!s) throw ValidationError("force table line " + std::to_string(line_no) +
                                  ": unknown stage '" + stage + "'");
    r.tissue = *t;
    r.stage = *s;
    regions.push_back(r);
  }
  return ForceTable(std::move(regions));
}

ForceTable ForceTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open force table '" + path + "'");
  return parse(in);
}

void ForceTable::write(std::ostream& out) const {
  out << "# tissue stage a0_N a1_N_per_mm a2_N_per_mm2 a3_N_per_mm3 start_mm end_mm\n";
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  for (const auto& r : regions_) {
    out << tissue_name(r.tissue) << ' ' << stage_name(r.stage) << ' ' << r.a0 << ' ' << r.a1
        << ' ' << r.a2 << ' ' << r.a3 << ' ' << r.band.start << ' ' << r.band.end << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

// ---------------------------------------------------------------------------

double thickness_ratio(double body_mass_kg) {
  using namespace body;
  const double waist_radius =
      std::sqrt(kWaistAreaCm2 * (body_mass_kg / kReferenceMassKg) / std::numbers::pi);
  const double r = waist_radius / kWaistRadiusCm;
  return r * r * r;
}

std::vector<Tissue> PunctureState::punctured_tissues() const {
  std::vector<Tissue> out;
  for (std::size_t i = 0; i < kTissueCount; ++i) {
    if (flags_[i]) out.push_back(static_cast<Tissue>(i));
  }
  return out;
}

PatientModel build_patient_model(double body_mass_kg, const ForceTable& table) {
  if (!(body_mass_kg >= body::kMinMassKg && body_mass_kg <= body::kMaxMassKg)) {
    std::ostringstream os;
    os << "body mass " << body_mass_kg << " kg outside the supported range ["
       << body::kMinMassKg << ", " << body::kMaxMassKg << "] kg";
    throw ValidationError(os.str());
  }
  PatientModel m;
  m.body_mass_ = body_mass_kg;
  m.ratio_ = thickness_ratio(body_mass_kg);
  m.regions_.assign(table.regions().begin(), table.regions().end());
  for (auto& r : m.regions_) {
    r.band.start *= m.ratio_;
    r.band.end *= m.ratio_;
  }
  // Scaling each boundary independently keeps the tiling exact.
  for (std::size_t i = 1; i < m.regions_.size(); ++i) {
    m.regions_[i].band.start = m.regions_[i - 1].band.end;
  }
  m.epidural_window_ = m.regions_.back().band;

  // Behind the space: a constant wall at the last region's exit force
  // (the region just shallower than the epidural space).
  const auto& before = m.regions_[m.regions_.size() - 2];
  m.dura_wall_force_ =
      kernels::eval_cubic(before.band.end, before.band.start, before.a0, before.a1, before.a2,
                          before.a3, m.ratio_);
  return m;
}

const ForceRegion& PatientModel::layer_at(double depth_mm) const {
  if (!(depth_mm >= 0.0) || depth_mm >= total_depth()) throw DepthOutOfModel(depth_mm);
  auto it = std::upper_bound(regions_.begin(), regions_.end(), depth_mm,
                             [](double d, const ForceRegion& r) { return d < r.band.end; });
  return *it;
}

std::optional<Tissue> PatientModel::tissue_at(double depth_mm) const {
  if (depth_mm < 0.0) return std::nullopt;
  if (depth_mm >= total_depth()) return Tissue::DuraMater;
  return layer_at(depth_mm).tissue;
}

DepthBand PatientModel::tissue_band(Tissue t) const {
  DepthBand band{0.0, 0.0};
  bool found = false;
  for (const auto& r : regions_) {
    if (r.tissue != t) continue;
    if (!found) band.start = r.band.start;
    band.end = r.band.end;
    found = true;
  }
  if (!found) throw ValidationError("tissue " + std::string(tissue_name(t)) + " is not modelled");
  return band;
}

const ForceRegion* PatientModel::find_region(Tissue t, Stage s) const {
  for (const auto& r : regions_) {
    if (r.tissue == t && r.stage == s) return &r;
  }
  return nullptr;
}

void PatientModel::update_punctures(double depth_mm, PunctureState& state) const {
  for (const auto& r : regions_) {
    if (r.stage == Stage::BP && depth_mm >= r.band.end) state.mark(r.tissue);
  }
}

ActiveTerm PatientModel::active_term(double depth_mm, const PunctureState& state) const {
  if (depth_mm < 0.0) {
    return {Tissue::Skin, Stage::None, 0.0, 0.0, 0.0, 0.0, 0.0};
  }
  if (depth_mm >= total_depth()) {
    return {Tissue::DuraMater, Stage::None, 0.0, dura_wall_force_, 0.0, 0.0, 0.0};
  }
  const ForceRegion* region = &layer_at(depth_mm);
  if (region->stage == Stage::BP && state.punctured(region->tissue)) {
    if (const ForceRegion* ap = find_region(region->tissue, Stage::AP)) region = ap;
  }
  return {region->tissue, region->stage, region->band.start,
          region->a0,     region->a1,    region->a2,
          region->a3};
}

double PatientModel::touhy_force(double depth_mm, const PunctureState& state) const {
  const ActiveTerm term = active_term(depth_mm, state);
  return kernels::eval_cubic(depth_mm, term.start, term.a0, term.a1, term.a2, term.a3, ratio_);
}

double PatientModel::lor_force(double depth_mm, const PunctureState& state) const {
  return kLorForceScale * touhy_force(depth_mm, state);
}

Outcome PatientModel::classify_outcome(double final_depth_mm) const {
  if (final_depth_mm < epidural_window_.start) {
    return {OutcomeKind::FailedEpidural, final_depth_mm - epidural_window_.start};
  }
  if (final_depth_mm >= epidural_window_.end) {
    return {OutcomeKind::DuralPuncture, final_depth_mm - epidural_window_.end};
  }
  return {OutcomeKind::Success, 0.0};
}

void PatientModel::touhy_forces(std::span<const double> depths, std::span<const ActiveTerm> terms,
                                std::span<double> out) const {
  const std::size_t n = depths.size();
  if (terms.size() != n || out.size() != n) {
    throw std::invalid_argument("touhy_forces: span sizes differ");
  }
  std::vector<double> start(n), a0(n), a1(n), a2(n), a3(n);
  for (std::size_t i = 0; i < n; ++i) {
    start[i] = terms[i].start;
    a0[i] = terms[i].a0;
    a1[i] = terms[i].a1;
    a2[i] = terms[i].a2;
    a3[i] = terms[i].a3;
  }
  kernels::eval_cubic(depths, {start, a0, a1, a2, a3}, ratio_, out);
}

}  // namespace episim
