#include "rql/dialect.hpp"

#include <algorithm>
#include <cctype>

namespace rql {

const DialectFeatures& features(Dialect d) {
    // mutual, nonlinear, UNION [distinct] inside recursion, CYCLE clause
    static const DialectFeatures postgres{Support::No, Support::No, true, true};
    static const DialectFeatures duckdb{Support::Syntactic, Support::Syntactic, true, false};
    static const DialectFeatures mariadb{Support::Yes, Support::Yes, true, true};
    static const DialectFeatures sqlite{Support::No, Support::Syntactic, true, false};
    static const DialectFeatures mysql{Support::No, Support::Syntactic, true, false};
    static const DialectFeatures sqlserver{Support::No, Support::Syntactic, false, false};
    static const DialectFeatures oracle{Support::No, Support::No, false, true};
    switch (d) {
        case Dialect::Postgres: return postgres;
        case Dialect::DuckDB: return duckdb;
        case Dialect::MariaDB: return mariadb;
        case Dialect::SQLite: return sqlite;
        case Dialect::MySQL: return mysql;
        case Dialect::SQLServer: return sqlserver;
        case Dialect::Oracle: return oracle;
    }
    return postgres;
}

std::string_view to_string(Dialect d) {
    switch (d) {
        case Dialect::Postgres: return "postgres";
        case Dialect::DuckDB: return "duckdb";
        case Dialect::MariaDB: return "mariadb";
        case Dialect::SQLite: return "sqlite";
        case Dialect::MySQL: return "mysql";
        case Dialect::SQLServer: return "sqlserver";
        case Dialect::Oracle: return "oracle";
    }
    return "?";
}

std::string_view to_string(Support s) {
    switch (s) {
        case Support::Yes: return "yes";
        case Support::Syntactic: return "syntactic";
        case Support::No: return "no";
    }
    return "?";
}

const std::vector<Dialect>& all_dialects() {
    static const std::vector<Dialect> all{Dialect::Postgres, Dialect::DuckDB, Dialect::MariaDB, Dialect::SQLite,
                                          Dialect::MySQL,    Dialect::SQLServer, Dialect::Oracle};
    return all;
}

std::optional<Dialect> try_parse_dialect(std::string_view name) {
    std::string n(name);
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
    if (n == "postgresql" || n == "pg") n = "postgres";
    if (n == "oracledb") n = "oracle";
    if (n == "mssql") n = "sqlserver";
    for (Dialect d : all_dialects())
        if (to_string(d) == n) return d;
    return std::nullopt;
}

Dialect parse_dialect(std::string_view name) {
    if (auto d = try_parse_dialect(name)) return *d;
    throw UnknownDialect("unknown dialect '" + std::string(name) + "'");
}

}  // namespace rql
