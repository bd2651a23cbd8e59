#include "memlog/log_set.hpp"

namespace memlog {

std::filesystem::path LogLayout::file(LogKind kind, NodeId node) const {
  return dir / ("log-" + std::to_string(epoch) + "-" + std::string(to_string(kind)) + "-node-" +
                std::to_string(node) + ".bin");
}

LogSet::LogSet(std::filesystem::path dir, FlushPolicy policy, IoFaults* faults)
    : layout_{std::move(dir), 0}, policy_(policy), faults_(faults) {
  std::filesystem::create_directories(layout_.dir);
}

LogWriter& LogSet::writer(LogKind kind, NodeId node) {
  auto& w = writers_[{kind, node}];
  if (!w) w = std::make_unique<LogWriter>(layout_.file(kind, node), kind, policy_, faults_);
  return *w;
}

void LogSet::declare(std::vector<LogKind> kinds, std::uint32_t node_count) {
  kinds_ = std::move(kinds);
  node_count_ = node_count;
  for (LogKind k : kinds_) {
    for (NodeId n = 0; n < node_count_; ++n) writer(k, n);
  }
}

std::size_t LogSet::append(LogKind kind, NodeId node, const LogRecord& r) {
  const std::size_t n = writer(kind, node).append(r);
  appended_bytes_ += n;
  bytes_by_kind_[kind] += n;
  ++records_by_kind_[kind];
  return n;
}

void LogSet::flush_all() {
  for (auto& [_, w] : writers_) w->flush();
}

void LogSet::rotate(std::uint64_t epoch) {
  flush_all();
  writers_.clear();
  layout_.epoch = epoch;
  declare(kinds_, node_count_);
}

std::uint64_t LogSet::appended_bytes(LogKind kind) const {
  auto it = bytes_by_kind_.find(kind);
  return it == bytes_by_kind_.end() ? 0 : it->second;
}

std::uint64_t LogSet::appended_records(LogKind kind) const {
  auto it = records_by_kind_.find(kind);
  return it == records_by_kind_.end() ? 0 : it->second;
}

}  // namespace memlog
