#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <vector>

#include "memlog/log_record.hpp"

namespace memlog {

// File naming for one checkpoint epoch: log-<epoch>-<kind>-node-<n>.bin.
struct LogLayout {
  std::filesystem::path dir;
  std::uint64_t epoch = 0;

  std::filesystem::path file(LogKind kind, NodeId node) const;
};

// The log streams of every node for the current epoch, opened on first use.
class LogSet {
 public:
  LogSet(std::filesystem::path dir, FlushPolicy policy = {}, IoFaults* faults = nullptr);

  // Creates the files of `kinds` for every node up front (and again after
  // each rotation) so recovery can tell an empty log from a missing one.
  void declare(std::vector<LogKind> kinds, std::uint32_t node_count);
  std::size_t append(LogKind kind, NodeId node, const LogRecord& r);
  void flush_all();
  // Flushes and closes the current epoch, then starts `epoch`.
  void rotate(std::uint64_t epoch);

  const LogLayout& layout() const { return layout_; }
  std::uint64_t appended_bytes() const { return appended_bytes_; }
  std::uint64_t appended_bytes(LogKind kind) const;
  std::uint64_t appended_records(LogKind kind) const;

 private:
  LogLayout layout_;
  FlushPolicy policy_;
  IoFaults* faults_;
  std::vector<LogKind> kinds_;
  std::uint32_t node_count_ = 0;
  std::map<std::pair<LogKind, NodeId>, std::unique_ptr<LogWriter>> writers_;
  std::uint64_t appended_bytes_ = 0;
  std::map<LogKind, std::uint64_t> bytes_by_kind_;
  std::map<LogKind, std::uint64_t> records_by_kind_;

  LogWriter& writer(LogKind kind, NodeId node);
};

}  // namespace memlog
