#include "memlog/workload.hpp"

#include "memlog/error.hpp"
#include "memlog/rng.hpp"

namespace memlog {

namespace {

Value wrap_add(Value a, Value b) {
  return static_cast<Value>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}

Value wrap_mul(Value a, Value b) {
  return static_cast<Value>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

// params: [x_key, y_key]
void proc_f(ProcContext& ctx, std::span<const Value> p) {
  if (p.size() != 2) throw AbortError("f expects 2 parameters");
  const Value x = ctx.read({{kStockTable, p[0]}, 0});
  ctx.write({{kStockTable, p[1]}, 0}, wrap_mul(2, x));
}

// params: [qty, ncols, home_stock, remote_stock or -1, item keys...]
void proc_neworder(ProcContext& ctx, std::span<const Value> p) {
  if (p.size() < 4) throw AbortError("neworder expects at least 4 parameters");
  const Value qty = p[0];
  const Value ncols = p[1];
  Value amount = 0;
  for (std::size_t i = 4; i < p.size(); ++i) amount = wrap_add(amount, ctx.read({{kItemTable, p[i]}, 0}));
  auto update = [&](Value key) {
    const TupleId s{kStockTable, key};
    const Value q = ctx.read({s, 0});
    ctx.write({s, 0}, q - qty >= 10 ? q - qty : q - qty + 91);
    if (ncols >= 2) ctx.write({s, 1}, wrap_add(ctx.read({s, 1}), wrap_mul(qty, amount)));
    if (ncols >= 3) ctx.write({s, 2}, wrap_add(ctx.read({s, 2}), 1));
  };
  update(p[2]);
  if (p[3] >= 0) update(p[3]);
}

}  // namespace

void WorkloadSpec::validate() const {
  if (nodes == 0) throw ConfigError("workload needs at least one node");
  if (tuples_per_node == 0 || items_per_node == 0) throw ConfigError("tables must not be empty");
  if (distributed < 0 || distributed > 1) throw ConfigError("distributed fraction must be within [0, 1]");
  if (distributed > 0 && nodes < 2) throw ConfigError("distributed transactions need at least 2 nodes");
  if (writes_per_txn < 1 || writes_per_txn > 3) throw ConfigError("writes per txn must be 1..3");
  if (f_fraction < 0 || f_fraction > 1) throw ConfigError("f fraction must be within [0, 1]");
  if (zipf < 0) throw ConfigError("zipf exponent must be non-negative");
  if (interarrival < 0) throw ConfigError("interarrival must be non-negative");
}

Schema make_schema() {
  Schema s;
  s.add_table("ITEM", 2);
  s.add_table("STOCK", 3);
  return s;
}

void register_builtin_procedures(ProcedureRegistry& registry) {
  registry.add("f", proc_f);
  registry.add("neworder", proc_neworder);
}

void register_builtin_procedures(Engine& engine) {
  engine.register_procedure("f", proc_f);
  engine.register_procedure("neworder", proc_neworder);
}

TupleId stock_tuple(const WorkloadSpec& spec, NodeId node, std::uint64_t offset) {
  return {kStockTable, static_cast<std::int64_t>(node * spec.tuples_per_node + offset)};
}

TupleId item_tuple(const WorkloadSpec& spec, NodeId node, std::uint64_t offset) {
  return {kItemTable, static_cast<std::int64_t>(node * spec.items_per_node + offset)};
}

void load_data(Engine& engine, const WorkloadSpec& spec) {
  spec.validate();
  Rng rng(spec.seed ^ 0x5EEDDA7AULL);
  for (NodeId n = 0; n < spec.nodes; ++n) {
    for (std::uint64_t i = 0; i < spec.items_per_node; ++i) {
      engine.insert(n, item_tuple(spec, n, i), {1 + static_cast<Value>(rng.below(100)), static_cast<Value>(i)});
    }
    for (std::uint64_t i = 0; i < spec.tuples_per_node; ++i) {
      engine.insert(n, stock_tuple(spec, n, i), {10 + static_cast<Value>(rng.below(91)), 0, 0});
    }
  }
}

std::vector<Request> generate_workload(const WorkloadSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Zipf stock(spec.tuples_per_node, spec.zipf);
  std::vector<Request> out;
  out.reserve(spec.txns);
  for (std::uint64_t i = 0; i < spec.txns; ++i) {
    Request r;
    r.submit = static_cast<Tick>(i) * spec.interarrival;
    const auto home = static_cast<NodeId>(rng.below(spec.nodes));
    const bool dist = spec.distributed > 0 && rng.bernoulli(spec.distributed);
    NodeId remote = home;
    if (dist) {
      remote = static_cast<NodeId>(rng.below(spec.nodes - 1));
      if (remote >= home) ++remote;
    }
    const bool f = spec.f_fraction > 0 && rng.bernoulli(spec.f_fraction);
    if (f) {
      r.proc = "f";
      r.params = {stock_tuple(spec, home, stock.sample(rng)).key, stock_tuple(spec, remote, stock.sample(rng)).key};
    } else {
      r.proc = "neworder";
      r.params = {1 + static_cast<Value>(rng.below(10)), static_cast<Value>(spec.writes_per_txn),
                  stock_tuple(spec, home, stock.sample(rng)).key,
                  dist ? stock_tuple(spec, remote, stock.sample(rng)).key : Value{-1}};
      for (std::uint32_t k = 0; k < spec.reads_per_txn; ++k) {
        r.params.push_back(item_tuple(spec, home, rng.below(spec.items_per_node)).key);
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace memlog
