#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rql/ir.hpp"

namespace rql {

enum class Dialect { Postgres, DuckDB, MariaDB, SQLite, MySQL, SQLServer, Oracle };

enum class Support { Yes, Syntactic, No };

struct DialectFeatures {
    Support mutual;
    Support nonlinear;
    bool unionDistinctInRecursion;
    bool cycleClause;
};

struct UnknownDialect : Error { using Error::Error; };

const DialectFeatures& features(Dialect d);
std::string_view to_string(Dialect d);
std::string_view to_string(Support s);

/// Case-insensitive; throws UnknownDialect.
Dialect parse_dialect(std::string_view name);
std::optional<Dialect> try_parse_dialect(std::string_view name);

const std::vector<Dialect>& all_dialects();

}  // namespace rql
