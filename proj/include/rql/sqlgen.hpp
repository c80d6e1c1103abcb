#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rql/checker.hpp"
#include "rql/dialect.hpp"
#include "rql/ir.hpp"

namespace rql {

struct SqlDoc {
    std::string text;
    Dialect dialect;
    std::vector<std::string> warnings;
};

/// The dialect cannot express the query (mutual recursion, UNION in recursion, LATERAL).
struct UnsupportedFeature : Error { using Error::Error; };

/// The query failed the checker and the caller did not override.
struct UncheckedQuery : Error {
    UncheckedQuery(const std::string& msg, CheckReport r) : Error(msg), report(std::move(r)) {}
    CheckReport report;
};

struct EmitOptions {
    /// Emit despite checker errors; each one is recorded as a warning.
    bool allowUnchecked = false;
    /// Defaults to the dialect's preset profile. The dialect field is forced to the target.
    std::optional<RestrictionProfile> profile;
};

SqlDoc emit(const QueryPtr& q, Dialect dialect, const EmitOptions& opts = {});

/// Rendering only, no checker gate. Warnings produced while rendering are appended.
std::string render_sql(const QueryPtr& q, Dialect dialect, std::vector<std::string>& warnings);

/// Wraps a recursive term so Postgres accepts several references to `cteName`.
/// Throws Error for any other dialect.
std::string emit_nonlinear_shim(const std::string& cteName, const std::string& recursiveTerm, Dialect dialect,
                                std::vector<std::string>& warnings);

std::string quote_identifier(std::string_view name, Dialect dialect);

// Semantics-preserving rewrites applied before rendering.
QueryPtr merge_filters(const QueryPtr& q);
QueryPtr flatten_flatmaps(const QueryPtr& q);
QueryPtr simplify(const QueryPtr& q);  // merge_filters(flatten_flatmaps(q))

}  // namespace rql
