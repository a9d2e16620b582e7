#include "episim/record_writer.hpp"

#include "episim/record_io.hpp"

namespace episim {

RecordWriter::RecordWriter(std::filesystem::path dir, ErrorHandler on_error)
    : dir_(std::move(dir)), on_error_(std::move(on_error)) {
  std::filesystem::create_directories(dir_);
  worker_ = std::thread([this] { run(); });
}

RecordWriter::~RecordWriter() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  worker_.join();
}

void RecordWriter::submit(TrialRecord record) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(record));
  }
  wake_.notify_one();
}

void RecordWriter::flush() {
  std::unique_lock lock(mutex_);
  idle_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

std::size_t RecordWriter::written() const {
  std::lock_guard lock(mutex_);
  return written_;
}

void RecordWriter::run() {
  std::unique_lock lock(mutex_);
  for (;;) {
    wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
    if (queue_.empty()) return;  // stopping with nothing left
    TrialRecord rec = std::move(queue_.front());
    queue_.pop_front();
    busy_ = true;
    lock.unlock();
    std::string error;
    try {
      save_record(dir_ / record_file_name(rec), rec);
    } catch (const std::exception& e) {
      error = e.what();
    }
    lock.lock();
    busy_ = false;
    if (error.empty()) ++written_;
    if (queue_.empty()) idle_.notify_all();
    if (!error.empty() && on_error_) {
      lock.unlock();
      on_error_(error);
      lock.lock();
    }
  }
}

}  // namespace episim
