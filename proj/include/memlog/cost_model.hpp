#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "memlog/types.hpp"

namespace memlog {

// Scalar costs behind the logging decision. Recovery costs are in ticks,
// I/O costs in bytes written.
struct CostModel {
  // Per-transaction recovery cost: re-executing a command record versus
  // installing a data record's after-images.
  double cmd_redo = 100;
  double aries_redo = 20;
  // Per-record I/O cost.
  double aries_io = 150;
  double cmd_io = 60;
  // Averages used where the online estimator cannot see the future.
  double avg_cmd_redo = 100;
  double avg_aries_redo = 20;
  double avg_aries_io = 150;
  // Total I/O allowed for data records between checkpoints.
  double io_budget = 300'000;
  // When positive, a data record's I/O cost grows with its write count:
  // aries_io + aries_io_per_write × writes.
  double aries_io_per_write = 0;

  double aries_io_of(std::size_t write_count) const {
    return aries_io + aries_io_per_write * static_cast<double>(write_count);
  }
  // Negative costs are an error; a data record that is not cheaper to
  // replay than a command is only a warning.
  std::vector<std::string> validate() const;
};

// Simulated-time costs for processing and recovery.
struct SimCosts {
  Tick exec = 100;              // run one transaction
  Tick dist_exec = 150;         // extra coordination for a distributed one
  Tick decision = 2;            // adaptive logging decision
  double io_per_byte = 0.25;    // log write
  Tick dist_redo = 150;         // extra coordination when re-executing a distributed txn
  Tick graph_per_footprint = 2; // dependency graph build
  double read_per_byte = 0.01;  // scanning logs and snapshots at recovery
  std::uint32_t lanes_per_node = 4;
};

}  // namespace memlog
