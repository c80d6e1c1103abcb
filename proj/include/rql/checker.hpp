#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rql/dialect.hpp"
#include "rql/ir.hpp"

namespace rql {

enum class Risk { DbError, IncompleteResults, Nontermination };
enum class Severity { Error, Warning };

std::string_view to_string(Risk r);
std::string_view to_string(Severity s);

struct Diagnostic {
    std::string code;     // RANGE, MONOTONE, AFFINE, RELEVANT, SET, CONSTRUCTOR, MUTUAL, DIALECT
    std::string subCode;  // refinement, e.g. "duplicate" or "foreign-fix" for AFFINE
    std::string path;     // "$", "$.defs[0].src", ...
    std::string message;
    Risk risk;
    Severity severity = Severity::Error;
    std::size_t order = 0;  // pre-order index of the offending node
};

/// Fixed mapping from diagnostic code to the class of failure it predicts.
Risk risk_of(std::string_view code);

struct RestrictionProfile {
    std::string name;
    bool requireMonotone = true;
    bool requireLinear = true;
    bool requireSetSemantics = true;
    bool requireConstructorFree = true;
    bool allowMutualRecursion = false;
    bool allowNonLinear = false;
    std::optional<int> maxRecursionDepthHint;
    std::optional<Dialect> dialect;
};

struct UnknownProfile : Error { using Error::Error; };

RestrictionProfile profile_full();
RestrictionProfile profile_sql99();
RestrictionProfile profile_default_no_cf();
RestrictionProfile profile_none();
RestrictionProfile profile_for(Dialect d);
RestrictionProfile profile_by_name(std::string_view name);
std::vector<std::string> profile_names();

/// Throws Error when requireLinear and allowNonLinear are both set.
void validate_profile(const RestrictionProfile& p);

struct CheckReport {
    bool pass = true;
    std::string profile;
    std::vector<Diagnostic> diagnostics;

    std::string to_json() const;
    bool has(std::string_view code) const;
};

// Per-fix predicates. `path` and `order` locate the fix node inside the
// enclosing query so diagnostics carry root-relative positions.
std::vector<Diagnostic> check_range(const Query& fix, const std::string& path = "$", std::size_t order = 0);
std::vector<Diagnostic> check_monotone(const Query& fix, const std::string& path = "$", std::size_t order = 0);
std::vector<Diagnostic> check_linear(const Query& fix, const std::string& path = "$", std::size_t order = 0);
std::vector<Diagnostic> check_set_semantics(const Query& fix, const std::string& path = "$", std::size_t order = 0);
std::vector<Diagnostic> check_constructor_free(const Query& fix, const std::string& path = "$",
                                               std::size_t order = 0);

/// MUTUAL diagnostics from the precedence graph, honouring allowMutualRecursion.
std::vector<Diagnostic> check_mutual(const QueryPtr& q, const RestrictionProfile& profile);

/// MUTUAL and DIALECT diagnostics for the profile's dialect; throws UnknownDialect without one.
std::vector<Diagnostic> check_dialect(const QueryPtr& q, const RestrictionProfile& profile);

CheckReport check_all(const QueryPtr& q, const RestrictionProfile& profile);

/// Property names ("linear", "monotone", "set", "mutual", "cf", ...) with an error-severity diagnostic.
std::set<std::string> violated_properties(const CheckReport& report);

//---------------------------------------------------------------------------
// Precedence graph
//---------------------------------------------------------------------------

using ComponentKey = std::pair<FixId, std::size_t>;  // (fix, 0-based component)

/// Stable names for fix components: the user-given name, else recursive_N in pre-order.
std::map<ComponentKey, std::string> component_names(const QueryPtr& q);

struct PrecedenceGraph {
    std::vector<std::string> nodes;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // u -> v: v's definition reads u
    std::vector<std::vector<std::size_t>> sccs;
    std::map<ComponentKey, std::size_t> componentNode;

    std::optional<std::size_t> index_of(std::string_view name) const;
    bool has_edge(std::size_t u, std::size_t v) const;
    bool has_mutual_recursion() const;
};

PrecedenceGraph build_precedence_graph(const QueryPtr& q);

/// Tarjan's algorithm over an adjacency list; components come out in reverse topological order.
std::vector<std::vector<std::size_t>> strongly_connected_components(
    const std::vector<std::vector<std::size_t>>& adjacency);

}  // namespace rql
