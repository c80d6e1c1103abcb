#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rql/eval.hpp"
#include "rql/ir.hpp"

namespace rql {

enum class MonotoneKind { Yes, Stratified, No };

std::string_view to_string(MonotoneKind m);
std::optional<MonotoneKind> parse_monotone_kind(std::string_view s);

/// One row of the benchmark property matrix. Each flag says whether the query
/// has the property; `mutual` is true for mutually recursive queries.
struct Expected {
    bool linear = true;
    MonotoneKind monotone = MonotoneKind::Yes;
    bool set = true;
    bool mutual = false;
    bool constructorFree = true;

    /// Property names the full profile should reject: linear, monotone, set, mutual, cf.
    std::set<std::string> violated() const;
    bool operator==(const Expected&) const = default;
};

enum class DatasetKind {
    ChainGraph,
    CycleGraph,
    RandomDag,
    WeightedGraph,
    BomHierarchy,
    OwnershipGraph,
    AssignGraph,
    SocialGraph,
};

std::string_view to_string(DatasetKind k);
std::optional<DatasetKind> parse_dataset_kind(std::string_view s);

struct DatasetSpec {
    DatasetKind kind;
    int size = 10;
    std::uint64_t seed = 1;
    bool cyclic = false;

    std::string label() const;  // e.g. "randomdag-40-s1" or "randomdag-40-s1-cyclic"
    bool operator==(const DatasetSpec&) const = default;
};

/// Deterministic in (kind, size, seed, cyclic). Graph kinds produce
/// edge(src,dst), edges(x,y) and node(id,name).
Database gen_dataset(const DatasetSpec& spec);

/// Cycle detection over a two-column edge relation.
bool has_cycle(const Relation& edges, std::size_t from = 0, std::size_t to = 1);

/// Row-wise random subset of every table, for nested-dataset property tests.
Database sample_subset(const Database& db, double keep, std::uint64_t seed);

struct BenchQuery {
    std::string name;
    std::string description;
    QueryPtr ir;
    Expected expected;
    std::vector<DatasetSpec> datasets;
};

/// The sixteen benchmark queries in a fixed order.
std::vector<BenchQuery> build_corpus();
const BenchQuery& corpus_entry(const std::vector<BenchQuery>& corpus, std::string_view name);

// Query shapes shown verbatim in the literature and reused by tests.
namespace queries {
/// Linear transitive closure over edges(x,y); Set uses UNION, Bag UNION ALL.
QueryPtr transitive_closure(Category category);
/// Non-linear transitive closure over edges(x,y) joining path with itself.
QueryPtr transitive_closure_nonlinear(Category category);
/// Bag transitive closure followed by COUNT(*).
QueryPtr transitive_closure_count();
/// AllSubParts over SubParts(part, sub) starting from 'given_part'.
QueryPtr bom_all_subparts();
/// waitfor with MAX inside the recursion (rejected as non-monotone).
QueryPtr bom_waitfor_unstratified();
/// Single-source shortest path over edge(src,dst,cst) and base(dst,cst).
QueryPtr sssp();
}  // namespace queries

//---------------------------------------------------------------------------
// Manifest
//---------------------------------------------------------------------------

struct ManifestEntry {
    std::string name;
    std::string description;
    std::filesystem::path irPath;
    Expected expected;
    std::vector<DatasetSpec> datasets;
    std::vector<std::filesystem::path> dataDirs;
};

/// Writes manifest.json, queries/<name>.json and data/<name>/<label>/*.csv under dir.
void write_corpus(const std::filesystem::path& dir, const std::vector<BenchQuery>& corpus, bool withData = true);

/// Throws Error when manifest.json is missing or malformed.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);

}  // namespace rql
