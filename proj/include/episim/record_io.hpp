#pragma once

// Trial record files: line-delimited JSON. Line 1 is a header object with the
// trial metadata; every following line is one sample:
//
//   {"t_s":0.001,"p_touhy_mm":...,"p_lor_raw_mm":...,"f_touhy_n":...,"f_lor_n":...}
//
// Doubles are written in shortest round-trip form, so a record read back is
// bit-identical to the one written.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "episim/trial_engine.hpp"

namespace episim {

inline constexpr int kRecordFormatVersion = 1;

class RecordFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_record(std::ostream& out, const TrialRecord& record);
TrialRecord read_record(std::istream& in);

// Writes to a temporary sibling and renames it into place, so a reader sees
// either the whole file or nothing.
void save_record(const std::filesystem::path& path, const TrialRecord& record);
TrialRecord load_record(const std::filesystem::path& path);

// "<participant>_t<NN>.jsonl"
std::string record_file_name(const TrialRecord& record);

// Writes `content` atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace episim
