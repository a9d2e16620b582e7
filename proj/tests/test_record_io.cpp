#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "episim/record_io.hpp"
#include "episim/synthetic_agent.hpp"

using namespace episim;

namespace {

TrialRecord sample_record() {
  Trial trial(7, TrialKind::Familiarization, 55.0, true, "rec_p01");
  return execute_run(run_synthetic_agent(AgentProfile::intermediate(), trial.model(), 21), trial);
}

std::filesystem::path temp_dir(const char* name) {
  auto d = std::filesystem::temp_directory_path() / (std::string("episim_") + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("records round trip bit for bit") {
  const auto rec = sample_record();
  std::stringstream ss;
  write_record(ss, rec);
  const auto back = read_record(ss);
  CHECK(back == rec);
}

TEST_CASE("header names documented fields") {
  std::stringstream ss;
  write_record(ss, sample_record());
  std::string header, first;
  std::getline(ss, header);
  std::getline(ss, first);
  for (const char* key : {"\"participant_id\"", "\"trial_index\"", "\"body_mass_kg\"", "\"outcome\"",
                          "\"lor_zero_offset_mm\"", "\"n_samples\""}) {
    CHECK(header.find(key) != std::string::npos);
  }
  for (const char* key : {"\"t_s\"", "\"p_touhy_mm\"", "\"p_lor_raw_mm\"", "\"f_touhy_n\"", "\"f_lor_n\""}) {
    CHECK(first.find(key) != std::string::npos);
  }
}

TEST_CASE("sample lines in other JSON layouts are accepted") {
  std::stringstream ss;
  ss << R"({"v":1,"record":"trial","participant_id":"x","trial_index":0,"kind":"test",)"
     << R"("body_mass_kg":71.0,"feedback_allowed":false,"final_depth_mm":1.5,"outcome":"failed_epidural",)"
     << R"("signed_error_mm":-46.8,"lor_zero_offset_mm":null,"punctured":[],"n_samples":1})" << '\n'
     << R"({ "f_lor_n": 0.02, "t_s": 0.0, "p_touhy_mm": 1.5, "p_lor_raw_mm": 3, "f_touhy_n": 0.01 })" << '\n';
  const auto rec = read_record(ss);
  REQUIRE(rec.samples.size() == 1);
  CHECK(rec.samples[0].p_lor_raw == 3.0);
  CHECK(rec.samples[0].f_lor == 0.02);
  CHECK_FALSE(rec.lor_zero_offset.has_value());
}

TEST_CASE("malformed records are rejected") {
  std::istringstream empty("");
  CHECK_THROWS_AS(read_record(empty), RecordFormatError);
  std::istringstream bad_version(R"({"v":9,"record":"trial"})");
  CHECK_THROWS_AS(read_record(bad_version), RecordFormatError);

  std::stringstream ss;
  write_record(ss, sample_record());
  std::string text = ss.str();
  text.resize(text.size() / 2);  // truncated
  text.resize(text.rfind('\n') + 1);
  std::istringstream cut(text);
  CHECK_THROWS_AS(read_record(cut), RecordFormatError);
}

TEST_CASE("save and load through a file") {
  const auto dir = temp_dir("record_io");
  const auto rec = sample_record();
  const auto path = dir / record_file_name(rec);
  CHECK(path.filename() == "rec_p01_t07.jsonl");
  save_record(path, rec);
  CHECK(load_record(path) == rec);
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    CHECK(e.path().extension() == ".jsonl");  // no temp file left behind
  }
  CHECK_THROWS_AS(load_record(dir / "missing.jsonl"), RecordFormatError);
  std::filesystem::remove_all(dir);
}
