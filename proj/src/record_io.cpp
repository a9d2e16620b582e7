#include "episim/record_io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "json.hpp"

namespace episim {

using json = nlohmann::ordered_json;

namespace {

json header_json(const TrialRecord& r) {
  json h;
  h["v"] = kRecordFormatVersion;
  h["record"] = "trial";
  h["participant_id"] = r.participant_id;
  h["trial_index"] = r.trial_index;
  h["kind"] = trial_kind_name(r.kind);
  h["body_mass_kg"] = r.body_mass;
  h["feedback_allowed"] = r.feedback_allowed;
  h["final_depth_mm"] = r.final_depth;
  h["outcome"] = outcome_name(r.outcome.kind);
  h["signed_error_mm"] = r.outcome.signed_error_mm;
  h["lor_zero_offset_mm"] = r.lor_zero_offset ? json(*r.lor_zero_offset) : json(nullptr);
  json punctured = json::array();
  for (Tissue t : r.punctures.punctured_tissues()) punctured.push_back(tissue_name(t));
  h["punctured"] = std::move(punctured);
  h["n_samples"] = r.samples.size();
  return h;
}

template <typename T>
T field(const json& j, const char* key, int line) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw RecordFormatError("line " + std::to_string(line) + ": missing field '" + key + "'");
  }
  try {
    return it->template get<T>();
  } catch (const json::exception&) {
    throw RecordFormatError("line " + std::to_string(line) + ": field '" + key +
                            "' has the wrong type");
  }
}

constexpr std::array<std::string_view, 5> kSampleKeys{"t_s", "p_touhy_mm", "p_lor_raw_mm",
                                                    "f_touhy_n", "f_lor_n"};

// Shortest round-trip form, same layout nlohmann would produce for the keys.
void append_sample(std::string& out, const Sample& s) {
  const std::array<double, 5> v{s.t, s.p_touhy, s.p_lor_raw, s.f_touhy, s.f_lor};
  char buf[32];
  out += '{';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += '"';
    out += kSampleKeys[i];
    out += "\":";
    const auto res = std::to_chars(buf, buf + sizeof buf, v[i]);
    out.append(buf, res.ptr);
  }
  out += "}\n";
}

// Parses exactly the layout append_sample writes; anything else goes to the
// general JSON path.
bool parse_sample_fast(std::string_view line, Sample& s) {
  std::array<double, 5> v{};
  std::size_t pos = 0;
  auto expect = [&](std::string_view lit) {
    if (line.substr(pos, lit.size()) != lit) return false;
    pos += lit.size();
    return true;
  };
  if (!expect("{")) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i && !expect(",")) return false;
    if (!expect("\"") || !expect(kSampleKeys[i]) || !expect("\":")) return false;
    const auto res = std::from_chars(line.data() + pos, line.data() + line.size(), v[i]);
    if (res.ec != std::errc()) return false;
    pos = static_cast<std::size_t>(res.ptr - line.data());
  }
  if (!expect("}") || pos != line.size()) return false;
  s = {v[0], v[1], v[2], v[3], v[4]};
  return true;
}

}  // namespace

void write_record(std::ostream& out, const TrialRecord& record) {
  out << header_json(record).dump() << '\n';
  std::string buf;
  buf.reserve(record.samples.size() * 96);
  for (const auto& s : record.samples) append_sample(buf, s);
  out << buf;
}

TrialRecord read_record(std::istream& in) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) throw RecordFormatError("empty record");
  json h;
  try {
    h = json::parse(line);
  } catch (const json::parse_error& e) {
    throw RecordFormatError(std::string("header: ") + e.what());
  }
  if (field<int>(h, "v", line_no) != kRecordFormatVersion) {
    throw RecordFormatError("unsupported record version");
  }
  if (field<std::string>(h, "record", line_no) != "trial") {
    throw RecordFormatError("header is not a trial record");
  }

  TrialRecord r;
  r.participant_id = field<std::string>(h, "participant_id", line_no);
  r.trial_index = field<int>(h, "trial_index", line_no);
  const auto kind = parse_trial_kind(field<std::string>(h, "kind", line_no));
  if (!kind) throw RecordFormatError("header: unknown trial kind");
  r.kind = *kind;
  r.body_mass = field<double>(h, "body_mass_kg", line_no);
  r.feedback_allowed = field<bool>(h, "feedback_allowed", line_no);
  r.final_depth = field<double>(h, "final_depth_mm", line_no);
  const auto outcome = parse_outcome(field<std::string>(h, "outcome", line_no));
  if (!outcome) throw RecordFormatError("header: unknown outcome");
  r.outcome = {*outcome, field<double>(h, "signed_error_mm", line_no)};
  if (auto it = h.find("lor_zero_offset_mm"); it != h.end() && !it->is_null()) {
    r.lor_zero_offset = field<double>(h, "lor_zero_offset_mm", line_no);
  }
  for (const auto& name : field<std::vector<std::string>>(h, "punctured", line_no)) {
    auto t = parse_tissue(name);
    if (!t) throw RecordFormatError("header: unknown tissue '" + name + "'");
    r.punctures.mark(*t);
  }
  const auto n = field<std::size_t>(h, "n_samples", line_no);
  r.samples.reserve(n);

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (Sample fast; parse_sample_fast(line, fast)) {
      r.samples.push_back(fast);
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw RecordFormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
    r.samples.push_back({field<double>(j, "t_s", line_no), field<double>(j, "p_touhy_mm", line_no),
                         field<double>(j, "p_lor_raw_mm", line_no),
                         field<double>(j, "f_touhy_n", line_no),
                         field<double>(j, "f_lor_n", line_no)});
  }
  if (r.samples.size() != n) {
    throw RecordFormatError("record declares " + std::to_string(n) + " samples but holds " +
                            std::to_string(r.samples.size()));
  }
  return r;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

void save_record(const std::filesystem::path& path, const TrialRecord& record) {
  std::ostringstream os;
  write_record(os, record);
  write_file_atomic(path, os.str());
}

TrialRecord load_record(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RecordFormatError("cannot open record '" + path.string() + "'");
  return read_record(in);
}

std::string record_file_name(const TrialRecord& record) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_t%02d.jsonl", record.trial_index);
  return (record.participant_id.empty() ? std::string("trial") : record.participant_id) + buf;
}

}  // namespace episim
