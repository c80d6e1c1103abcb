#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>

#include "rql/eval.hpp"

namespace rql {

namespace {

/// Splits one record, honouring double-quoted fields. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool quoted = false, any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

Value parse_value(const std::string& s, ColumnType t, std::size_t line) {
    auto bad = [&] {
        return SchemaError("line " + std::to_string(line) + ": '" + s + "' is not a valid " +
                           std::string(to_string(t)));
    };
    switch (t) {
        case ColumnType::Int: {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size()) throw bad();
            return v;
        }
        case ColumnType::Float: {
            double v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size()) throw bad();
            return v;
        }
        case ColumnType::Bool:
            if (s == "true" || s == "1") return true;
            if (s == "false" || s == "0") return false;
            throw bad();
        case ColumnType::Text: return s;
    }
    throw bad();
}

std::string csv_field(const Value& v) {
    std::string s = format_value(v);
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

Relation read_csv(std::istream& in, const RowSchema& schema) {
    std::vector<std::string> fields;
    if (!read_record(in, fields)) throw SchemaError("CSV input has no header row");
    if (fields.size() != schema.size()) throw SchemaError("CSV header has the wrong number of columns");
    std::vector<std::size_t> target(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        auto idx = schema.index_of(fields[i]);
        if (!idx) throw SchemaError("CSV column '" + fields[i] + "' is not in " + schema.describe());
        target[i] = *idx;
    }
    Relation r;
    r.schema = schema;
    std::size_t line = 1;
    while (read_record(in, fields)) {
        ++line;
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != schema.size())
            throw SchemaError("line " + std::to_string(line) + " has " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(schema.size()));
        Tuple row(schema.size());
        for (std::size_t i = 0; i < fields.size(); ++i)
            row[target[i]] = parse_value(fields[i], schema.columns[target[i]].type, line);
        r.rows.push_back(std::move(row));
    }
    return r;
}

void write_csv(std::ostream& out, const Relation& r) {
    for (std::size_t i = 0; i < r.schema.size(); ++i) out << (i ? "," : "") << r.schema.columns[i].name;
    out << "\n";
    for (auto& row : canonical_rows(r)) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
        out << "\n";
    }
}

std::map<std::string, RowSchema> table_schemas(const QueryPtr& q) {
    std::map<std::string, RowSchema> out;
    std::function<void(const Query&)> go = [&](const Query& n) {
        if (n.kind == QueryKind::TableScan) {
            auto [it, fresh] = out.emplace(n.name, n.schema);
            if (!fresh && !(it->second == n.schema))
                throw SchemaError("table '" + n.name + "' is used with schemas " + it->second.describe() + " and " +
                                  n.schema.describe());
        }
        for (auto& [s, c] : children_of(n)) go(*c);
    };
    go(*q);
    return out;
}

Database load_database(const std::filesystem::path& dir, const QueryPtr& q) {
    Database db;
    for (auto& [name, schema] : table_schemas(q)) {
        auto path = dir / (name + ".csv");
        std::ifstream in(path);
        if (!in) throw MissingTable("no CSV file for table '" + name + "' at " + path.string());
        try {
            db[name] = read_csv(in, schema);
        } catch (const SchemaError& e) {
            throw SchemaError(path.string() + ": " + e.what());
        }
    }
    return db;
}

void save_database(const std::filesystem::path& dir, const Database& db) {
    std::filesystem::create_directories(dir);
    for (auto& [name, rel] : db) {
        std::ofstream out(dir / (name + ".csv"));
        if (!out) throw Error("cannot write " + (dir / (name + ".csv")).string());
        write_csv(out, rel);
    }
}

}  // namespace rql
