#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memlog/store.hpp"

namespace memlog {

inline constexpr TableId kItemTable = 0;   // (price, tag); never written
inline constexpr TableId kStockTable = 1;  // (quantity, ytd, order_cnt)

struct WorkloadSpec {
  std::uint32_t nodes = 4;
  std::uint64_t tuples_per_node = 1000;  // STOCK rows per node
  std::uint64_t items_per_node = 100;    // ITEM rows per node
  std::uint64_t txns = 5000;
  double distributed = 0.0;       // fraction with a remote stock row
  std::uint32_t writes_per_txn = 3;  // STOCK columns updated per touched row (1..3)
  std::uint32_t reads_per_txn = 2;   // ITEM rows read
  double f_fraction = 0.0;        // share of the two-attribute f(x, y) procedure
  double zipf = 0.0;              // STOCK key skew
  Tick interarrival = 10;         // submit spacing in ticks
  std::uint64_t seed = 1;

  // Throws ConfigError on an infeasible spec.
  void validate() const;
};

struct Request {
  std::string proc;
  std::vector<Value> params;
  Tick submit = 0;
};

Schema make_schema();
// f(x, y): y = 2x on STOCK column 0, and the neworder-like procedure.
void register_builtin_procedures(ProcedureRegistry& registry);
void register_builtin_procedures(Engine& engine);
// Inserts the seeded ITEM and STOCK rows; node n owns the n-th key range
// of each table.
void load_data(Engine& engine, const WorkloadSpec& spec);

std::vector<Request> generate_workload(const WorkloadSpec& spec);

TupleId stock_tuple(const WorkloadSpec& spec, NodeId node, std::uint64_t offset);
TupleId item_tuple(const WorkloadSpec& spec, NodeId node, std::uint64_t offset);

}  // namespace memlog
