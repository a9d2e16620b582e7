#pragma once

// Background persistence for committed trials. submit() only queues, so the
// trial loop never waits on the disk.

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

#include "episim/trial_engine.hpp"

namespace episim {

// Name of the environment variable holding the default record directory.
inline constexpr const char* kRecordDirEnv = "EPISIM_RECORD_DIR";

class RecordWriter {
 public:
  using ErrorHandler = std::function<void(const std::string&)>;

  explicit RecordWriter(std::filesystem::path dir, ErrorHandler on_error = {});
  ~RecordWriter();
  RecordWriter(const RecordWriter&) = delete;
  RecordWriter& operator=(const RecordWriter&) = delete;

  void submit(TrialRecord record);
  // Blocks until everything submitted so far is on disk.
  void flush();

  const std::filesystem::path& directory() const { return dir_; }
  std::size_t written() const;

 private:
  void run();

  std::filesystem::path dir_;
  ErrorHandler on_error_;
  mutable std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable idle_;
  std::deque<TrialRecord> queue_;
  bool busy_ = false;
  bool stopping_ = false;
  std::size_t written_ = 0;
  std::thread worker_;
};

}  // namespace episim
