#include "memlog/time_dependence.hpp"

#include <algorithm>

namespace memlog {

namespace {

void sort_unique(std::vector<std::size_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::vector<std::size_t> expand(const InvertedIndex& idx, std::vector<std::size_t> frontier,
                                const std::vector<char>* cut) {
  std::vector<char> seen(idx.size(), 0);
  std::vector<std::size_t> out;
  for (std::size_t p : frontier) {
    if (!seen[p]) {
      seen[p] = 1;
      out.push_back(p);
    }
  }
  frontier = out;
  while (!frontier.empty()) {
    const std::size_t p = frontier.back();
    frontier.pop_back();
    if (cut && (*cut)[p]) continue;
    for (std::size_t q : time_dependents(idx, p)) {
      if (!seen[q]) {
        seen[q] = 1;
        out.push_back(q);
        frontier.push_back(q);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::size_t> time_dependents(const InvertedIndex& idx, std::span<const Access> accesses,
                                         Tick before) {
  std::vector<std::size_t> out;
  for (const auto& a : accesses) {
    if (auto w = idx.latest_writer_before(a.attr, before)) out.push_back(*w);
  }
  sort_unique(out);
  return out;
}

std::vector<std::size_t> time_dependents(const InvertedIndex& idx, std::size_t pos) {
  const auto& f = idx.at(pos);
  return time_dependents(idx, f.accesses, f.commit);
}

std::vector<std::size_t> time_dependent_closure(const InvertedIndex& idx, std::size_t pos,
                                                const std::vector<char>* cut) {
  return expand(idx, time_dependents(idx, pos), cut);
}

std::vector<std::size_t> time_dependent_closure(const InvertedIndex& idx,
                                                std::span<const Access> accesses, Tick before,
                                                const std::vector<char>* cut) {
  return expand(idx, time_dependents(idx, accesses, before), cut);
}

std::vector<std::size_t> phi(const InvertedIndex& idx, std::size_t pos_j, std::size_t pos_i,
                             std::span<const AttrId> attrs) {
  const Tick lo = idx.at(pos_j).commit;
  const Tick hi = idx.at(pos_i).commit;
  std::vector<std::size_t> out;
  for (const auto& a : attrs) {
    auto w = idx.writers_between(a, lo, hi);
    out.insert(out.end(), w.begin(), w.end());
  }
  sort_unique(out);
  return out;
}

std::vector<std::size_t> adaptive_redo_set(const InvertedIndex& idx, std::span<const std::size_t> seeds,
                                           const std::vector<char>& aries, bool prune) {
  return expand(idx, {seeds.begin(), seeds.end()}, prune ? &aries : nullptr);
}

std::vector<AttrId> written_attrs(const FootprintRecord& f) {
  std::vector<AttrId> out;
  for (const auto& a : f.accesses) {
    if (writes(a.mode)) out.push_back(a.attr);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<TxnId> to_ids(const InvertedIndex& idx, std::span<const std::size_t> positions) {
  std::vector<TxnId> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(idx.at(p).txn_id);
  return out;
}

}  // namespace memlog
