#pragma once

#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "memlog/log_record.hpp"
#include "memlog/types.hpp"

namespace memlog {

struct IndexEntry {
  TxnId txn = 0;
  Tick commit = 0;
  AccessMode mode = AccessMode::Read;
};

// In-memory inverted index of the accesses since the last checkpoint,
// keyed by (table, tuple, column). Each attribute keeps its accesses in
// commit order, with the writes also kept on their own for binary search.
class InvertedIndex {
 public:
  // Footprints must arrive in commit order.
  void record(const FootprintRecord& f);
  void clear();

  std::size_t size() const { return txns_.size(); }
  const std::vector<FootprintRecord>& transactions() const { return txns_; }
  std::optional<std::size_t> position(TxnId id) const;
  const FootprintRecord& at(std::size_t pos) const { return txns_.at(pos); }
  const FootprintRecord* find(TxnId id) const;

  const std::vector<IndexEntry>* history(const AttrId& attr) const;
  // Latest committed writer of `attr` with commit < before.
  std::optional<std::size_t> latest_writer_before(const AttrId& attr, Tick before) const;
  // Writers of `attr` with after < commit < before, commit order.
  std::vector<std::size_t> writers_between(const AttrId& attr, Tick after, Tick before) const;
  // Writers of `attr` with commit > after.
  std::vector<std::size_t> writers_after(const AttrId& attr, Tick after) const;

 private:
  struct AttrHistory {
    std::vector<IndexEntry> entries;
    std::vector<std::pair<Tick, std::size_t>> writes;  // (commit, position)
  };
  std::vector<FootprintRecord> txns_;
  std::unordered_map<TxnId, std::size_t> positions_;
  std::unordered_map<AttrId, AttrHistory> attrs_;
};

// Exact per-attribute access counts; P(a) = count(a) / total.
class AccessHistogram {
 public:
  void record(std::span<const Access> accesses);
  void clear();

  std::uint64_t count(const AttrId& a) const;
  std::uint64_t total() const { return total_; }
  double probability(const AttrId& a) const;
  // Σ P over every observed attribute: 1 once anything is recorded, else 0.
  double probability_mass() const;

 private:
  std::unordered_map<AttrId, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

}  // namespace memlog
