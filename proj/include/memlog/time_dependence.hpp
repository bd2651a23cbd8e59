#pragma once

#include <span>
#include <vector>

#include "memlog/access_index.hpp"

namespace memlog {

// All results are index positions (commit order), ascending and unique.

// ⊗(t): per accessed attribute, the latest writer committed before t.
std::vector<std::size_t> time_dependents(const InvertedIndex& idx, std::size_t pos);
// Same for a transaction that is not in the index yet.
std::vector<std::size_t> time_dependents(const InvertedIndex& idx, std::span<const Access> accesses,
                                         Tick before);

// ⊗^x(t): fixpoint of ⊗, t itself excluded. Members flagged in `cut` are
// kept but not expanded further (their data record makes their own
// dependencies irrelevant).
std::vector<std::size_t> time_dependent_closure(const InvertedIndex& idx, std::size_t pos,
                                                const std::vector<char>* cut = nullptr);
std::vector<std::size_t> time_dependent_closure(const InvertedIndex& idx,
                                                std::span<const Access> accesses, Tick before,
                                                const std::vector<char>* cut = nullptr);

// φ(t_j, t_i, attrs): transactions committed strictly between t_j and t_i
// that write at least one of `attrs`.
std::vector<std::size_t> phi(const InvertedIndex& idx, std::size_t pos_j, std::size_t pos_i,
                             std::span<const AttrId> attrs);

// Transactions to reprocess so that everything `seeds` wrote is rebuilt
// under mixed logs. A transaction with a data record (aries[pos] != 0) is
// restored from its images; otherwise it is re-executed and pulls in the
// latest earlier writer of every attribute it accesses. With prune=false
// the expansion also continues through data-logged members.
std::vector<std::size_t> adaptive_redo_set(const InvertedIndex& idx, std::span<const std::size_t> seeds,
                                           const std::vector<char>& aries, bool prune = true);

// Attributes a footprint writes, ascending.
std::vector<AttrId> written_attrs(const FootprintRecord& f);

std::vector<TxnId> to_ids(const InvertedIndex& idx, std::span<const std::size_t> positions);

}  // namespace memlog
