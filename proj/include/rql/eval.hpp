#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rql/ir.hpp"

namespace rql {

using Tuple = std::vector<Value>;

struct Relation {
    RowSchema schema;
    std::vector<Tuple> rows;
    Category mode = Category::Bag;

    std::size_t size() const { return rows.size(); }
};

using Database = std::map<std::string, Relation>;

enum class EvalMode { Naive, SemiNaiveFull, DeltaOnly };

std::string_view to_string(EvalMode m);
std::optional<EvalMode> parse_eval_mode(std::string_view s);  // naive, seminaive, deltaonly

struct EvalConfig {
    EvalMode mode = EvalMode::SemiNaiveFull;
    int iterationCap = 1000;
    /// Forces Bag or Set dedupe for every fix component instead of each def's category.
    std::optional<Category> dedupe;
    /// Accumulated fix rows allowed before evaluation is treated as diverging.
    std::size_t rowBudget = 2'000'000;
};

struct FixStats {
    std::string component;  // first component of the fix
    int iterations = 0;
};

struct EvalStats {
    std::vector<FixStats> fixes;
    int max_iterations() const;
};

struct NontermError : Error {
    NontermError(std::string comp, int iters, const std::string& why)
        : Error("no fixpoint for '" + comp + "' " + why), component(std::move(comp)), iterations(iters) {}
    std::string component;
    int iterations;
};
struct MissingTable : Error { using Error::Error; };
struct DivisionByZero : Error { using Error::Error; };

/// Row variable bindings visible to an expression.
using Env = std::vector<std::pair<RelVarId, const Tuple*>>;

Relation eval(const QueryPtr& q, const Database& db, const EvalConfig& cfg = {}, EvalStats* stats = nullptr);
Value eval_expr(const Expr& e, const Env& env);

//---------------------------------------------------------------------------
// Relation comparison
//---------------------------------------------------------------------------

/// Rows sorted, duplicates kept.
std::vector<Tuple> canonical_rows(const Relation& r);
/// Sorted distinct rows.
std::vector<Tuple> distinct_rows(const Relation& r);
bool same_multiset(const Relation& a, const Relation& b);
bool same_set(const Relation& a, const Relation& b);
bool subset_of(const Relation& a, const Relation& b);  // as sets
std::string format_value(const Value& v);

//---------------------------------------------------------------------------
// Oracle harness
//---------------------------------------------------------------------------

struct DiffReport {
    bool naiveMatchesSemiNaive = true;
    bool affine = false;
    /// Set when affine: DeltaOnly stayed within SemiNaiveFull everywhere and lost rows somewhere.
    std::optional<bool> deltaOnlyStrictSubset;
    std::vector<std::string> mismatches;

    bool ok() const { return mismatches.empty(); }
    std::string to_json() const;
};

/// The outermost fix of q when it reads no outer row variable, else q itself.
/// Oracle comparisons run on it so that counting after the recursion does not
/// hide or invent differences in the recursive relation.
QueryPtr recursive_core(const QueryPtr& q);

DiffReport diff_test(const QueryPtr& q, const std::vector<Database>& datasets, int iterationCap = 1000,
                     std::size_t rowBudget = EvalConfig{}.rowBudget);
DiffReport diff_test(const QueryPtr& q, const Database& db, int iterationCap = 1000,
                     std::size_t rowBudget = EvalConfig{}.rowBudget);

//---------------------------------------------------------------------------
// CSV
//---------------------------------------------------------------------------

/// Header names must be the schema's columns (any order). Values are typed per schema.
Relation read_csv(std::istream& in, const RowSchema& schema);
/// Header row, then rows in canonical order.
void write_csv(std::ostream& out, const Relation& r);

/// Every table scanned by q, with its schema. Throws SchemaError on conflicting uses.
std::map<std::string, RowSchema> table_schemas(const QueryPtr& q);

/// Reads <dir>/<table>.csv for each table q scans. Throws MissingTable.
Database load_database(const std::filesystem::path& dir, const QueryPtr& q);
void save_database(const std::filesystem::path& dir, const Database& db);

}  // namespace rql
