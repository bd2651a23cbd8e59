#include "memlog/access_index.hpp"

#include <algorithm>

#include "memlog/error.hpp"

namespace memlog {

void InvertedIndex::record(const FootprintRecord& f) {
  if (!txns_.empty() && f.commit <= txns_.back().commit) {
    throw MalformedLogError("index records must arrive in commit order");
  }
  const std::size_t pos = txns_.size();
  if (!positions_.emplace(f.txn_id, pos).second) {
    throw MalformedLogError("duplicate transaction id " + std::to_string(f.txn_id));
  }
  txns_.push_back(f);
  for (const auto& a : f.accesses) {
    auto& h = attrs_[a.attr];
    h.entries.push_back({f.txn_id, f.commit, a.mode});
    if (writes(a.mode)) h.writes.emplace_back(f.commit, pos);
  }
}

void InvertedIndex::clear() {
  txns_.clear();
  positions_.clear();
  attrs_.clear();
}

std::optional<std::size_t> InvertedIndex::position(TxnId id) const {
  auto it = positions_.find(id);
  if (it == positions_.end()) return std::nullopt;
  return it->second;
}

const FootprintRecord* InvertedIndex::find(TxnId id) const {
  auto pos = position(id);
  return pos ? &txns_[*pos] : nullptr;
}

const std::vector<IndexEntry>* InvertedIndex::history(const AttrId& attr) const {
  auto it = attrs_.find(attr);
  return it == attrs_.end() ? nullptr : &it->second.entries;
}

std::optional<std::size_t> InvertedIndex::latest_writer_before(const AttrId& attr, Tick before) const {
  auto it = attrs_.find(attr);
  if (it == attrs_.end()) return std::nullopt;
  const auto& w = it->second.writes;
  auto ub = std::lower_bound(w.begin(), w.end(), before,
                             [](const auto& e, Tick t) { return e.first < t; });
  if (ub == w.begin()) return std::nullopt;
  return std::prev(ub)->second;
}

std::vector<std::size_t> InvertedIndex::writers_between(const AttrId& attr, Tick after, Tick before) const {
  std::vector<std::size_t> out;
  auto it = attrs_.find(attr);
  if (it == attrs_.end()) return out;
  const auto& w = it->second.writes;
  auto lo = std::upper_bound(w.begin(), w.end(), after,
                             [](Tick t, const auto& e) { return t < e.first; });
  for (; lo != w.end() && lo->first < before; ++lo) out.push_back(lo->second);
  return out;
}

std::vector<std::size_t> InvertedIndex::writers_after(const AttrId& attr, Tick after) const {
  std::vector<std::size_t> out;
  auto it = attrs_.find(attr);
  if (it == attrs_.end()) return out;
  const auto& w = it->second.writes;
  auto lo = std::upper_bound(w.begin(), w.end(), after,
                             [](Tick t, const auto& e) { return t < e.first; });
  for (; lo != w.end(); ++lo) out.push_back(lo->second);
  return out;
}

void AccessHistogram::record(std::span<const Access> accesses) {
  for (const auto& a : accesses) ++counts_[a.attr];
  total_ += accesses.size();
}

void AccessHistogram::clear() {
  counts_.clear();
  total_ = 0;
}

std::uint64_t AccessHistogram::count(const AttrId& a) const {
  auto it = counts_.find(a);
  return it == counts_.end() ? 0 : it->second;
}

double AccessHistogram::probability(const AttrId& a) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(count(a)) / static_cast<double>(total_);
}

double AccessHistogram::probability_mass() const { return total_ == 0 ? 0.0 : 1.0; }

}  // namespace memlog
