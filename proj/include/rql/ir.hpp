#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace rql {

//---------------------------------------------------------------------------
// Errors
//---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct TypeError : Error { using Error::Error; };
struct RangeRestrictionError : Error { using Error::Error; };
struct ArityError : Error { using Error::Error; };
struct BaseCaseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " (at byte " + std::to_string(pos) + ")"), position(pos) {}
    std::size_t position;
};

//---------------------------------------------------------------------------
// Types and schemas
//---------------------------------------------------------------------------

enum class ColumnType { Int, Float, Bool, Text };

std::string_view to_string(ColumnType t);
std::optional<ColumnType> parse_column_type(std::string_view s);

struct Column {
    std::string name;
    ColumnType type;
    bool operator==(const Column&) const = default;
};

struct RowSchema {
    std::vector<Column> columns;

    bool operator==(const RowSchema&) const = default;
    std::size_t size() const { return columns.size(); }
    std::optional<std::size_t> index_of(std::string_view name) const;
    std::string describe() const;
};

/// Builds a schema, rejecting empty column lists and duplicate names.
RowSchema make_schema(std::vector<Column> columns);

enum class Shape { Scalar, NonScalar };
enum class Category { Bag, Set };

std::string_view to_string(Shape s);
std::string_view to_string(Category c);

/// Scalar when the operator itself is Scalar or any argument is.
Shape shape_join(Shape declared, const std::vector<Shape>& argShapes);

//---------------------------------------------------------------------------
// Recursion identifiers and dependency multisets
//---------------------------------------------------------------------------

using FixId = std::uint64_t;
using RelVarId = std::uint64_t;

FixId fresh_fix_id();
RelVarId fresh_var_id();

struct DepRef {
    FixId fix = 0;
    int argIndex = 0;  // 1-based
    auto operator<=>(const DepRef&) const = default;
};

/// Sorted multiset; duplicates are kept.
using DepMultiset = std::vector<DepRef>;

DepMultiset dep_sum(const DepMultiset& a, const DepMultiset& b);

//---------------------------------------------------------------------------
// Operators
//---------------------------------------------------------------------------

enum class Fixity { Prefix, Infix, Call };

struct OperatorSignature {
    std::string opId;   // unique, e.g. "add_int"
    std::string name;   // overload family, e.g. "add"
    std::vector<ColumnType> argTypes;
    ColumnType resultType;
    Shape declaredShape;
    bool isConstructor;
    bool isAggregate;
    std::string sqlToken;
    Fixity fixity;
};

const std::vector<OperatorSignature>& operator_registry();
const OperatorSignature& op_by_id(std::string_view opId);
const OperatorSignature* resolve_op(std::string_view name, const std::vector<ColumnType>& argTypes);

//---------------------------------------------------------------------------
// Expressions
//---------------------------------------------------------------------------

using Value = std::variant<std::int64_t, double, bool, std::string>;

ColumnType type_of(const Value& v);

enum class ExprKind { ColumnRef, Lit, Apply, AggApply, RowCtor };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    ExprKind kind;
    // ColumnRef
    RelVarId var = 0;
    std::string column;
    std::size_t columnIndex = 0;
    // Lit
    Value value;
    // Apply / AggApply
    const OperatorSignature* op = nullptr;
    // Apply / AggApply arguments, RowCtor field expressions
    std::vector<ExprPtr> args;
    // RowCtor
    std::vector<std::string> fieldNames;

    ColumnType type = ColumnType::Int;  // unused for RowCtor
    Shape shape = Shape::NonScalar;
    bool usesConstructor = false;
};

ExprPtr make_column_ref(RelVarId var, const RowSchema& schema, std::string_view column);
ExprPtr make_lit(Value v);
ExprPtr make_apply(const OperatorSignature& op, std::vector<ExprPtr> args);
ExprPtr make_agg(const OperatorSignature& op, std::vector<ExprPtr> args);
ExprPtr make_row(std::vector<std::string> names, std::vector<ExprPtr> fields);

RowSchema row_schema(const Expr& rowCtor);

//---------------------------------------------------------------------------
// Queries
//---------------------------------------------------------------------------

enum class QueryKind {
    TableScan,
    RecRef,
    Map,
    FlatMap,
    Filter,
    Distinct,
    Union,
    UnionAll,
    Intersect,
    IntersectAll,
    Aggregate,
    GroupBy,
    Fix,
    Join,  // n-ary frame produced by flatten_flatmaps
};

std::string_view to_string(QueryKind k);

struct Query;
using QueryPtr = std::shared_ptr<const Query>;

struct JoinSource {
    QueryPtr src;
    RelVarId binder;
};

struct Query {
    QueryKind kind;

    std::string name;  // TableScan
    DepRef dep;        // RecRef

    QueryPtr src;    // Map, FlatMap, Filter, Distinct, Aggregate, GroupBy
    QueryPtr inner;  // FlatMap
    QueryPtr left, right;
    RelVarId binder = 0;

    ExprPtr body;    // Map/Aggregate row, GroupBy select, optional Join projection
    ExprPtr pred;    // Filter, optional Join predicate
    ExprPtr keys;    // GroupBy
    ExprPtr having;  // GroupBy, optional

    // Fix
    FixId fixId = 0;
    std::vector<QueryPtr> bases;
    std::vector<QueryPtr> defs;
    std::vector<std::string> names;  // per component, may be empty strings
    std::size_t out = 0;             // component returned as the query result

    std::vector<JoinSource> sources;  // Join

    RowSchema schema;
    Category category = Category::Bag;
    DepMultiset deps;
    bool restricted = false;

    std::size_t arity() const { return bases.size(); }
};

// Node constructors. Each validates its inputs and computes the cached
// schema, category, dependency multiset and restricted flag.
QueryPtr make_table(std::string name, RowSchema schema);
QueryPtr make_recref(DepRef dep, RowSchema schema);
QueryPtr make_map(QueryPtr src, RelVarId binder, ExprPtr body);
QueryPtr make_flatmap(QueryPtr src, RelVarId binder, QueryPtr inner);
QueryPtr make_filter(QueryPtr src, RelVarId binder, ExprPtr pred);
QueryPtr make_distinct(QueryPtr src);
QueryPtr make_setop(QueryKind kind, QueryPtr left, QueryPtr right);
QueryPtr make_aggregate(QueryPtr src, RelVarId binder, ExprPtr body);
QueryPtr make_groupby(QueryPtr src, RelVarId binder, ExprPtr keys, ExprPtr select, ExprPtr having);
QueryPtr make_fix(FixId id, std::vector<QueryPtr> bases, std::vector<QueryPtr> defs,
                  std::vector<std::string> names = {}, std::size_t out = 0);
QueryPtr make_join(std::vector<JoinSource> sources, ExprPtr pred, ExprPtr body);

//---------------------------------------------------------------------------
// Builder DSL
//---------------------------------------------------------------------------

/// Expression handle with operator overloads.
class E {
public:
    explicit E(ExprPtr p) : p_(std::move(p)) {}
    E(int v);
    E(std::int64_t v);
    E(double v);
    E(bool v);
    E(const char* v);
    E(std::string v);

    const ExprPtr& ptr() const { return p_; }
    const Expr& operator*() const { return *p_; }
    const Expr* operator->() const { return p_.get(); }

private:
    ExprPtr p_;
};

E apply(std::string_view name, std::vector<E> args);
E aggregate_op(std::string_view name, std::vector<E> args);

E operator+(const E& a, const E& b);
E operator-(const E& a, const E& b);
E operator*(const E& a, const E& b);
E operator/(const E& a, const E& b);
E operator==(const E& a, const E& b);
E operator!=(const E& a, const E& b);
E operator<(const E& a, const E& b);
E operator<=(const E& a, const E& b);
E operator>(const E& a, const E& b);
E operator>=(const E& a, const E& b);
E operator&&(const E& a, const E& b);
E operator||(const E& a, const E& b);
E operator!(const E& a);

E concat(const E& a, const E& b);
E like(const E& text, const E& pattern);
E sum(const E& a);
E avg(const E& a);
E min(const E& a);
E max(const E& a);
E count();
E count(const E& a);

E row(std::initializer_list<std::pair<std::string, E>> fields);
E row(const std::vector<std::pair<std::string, E>>& fields);

/// The row variable bound by map/flatMap/filter/aggregate/groupBy.
class Row {
public:
    Row(RelVarId var, RowSchema schema) : var_(var), schema_(std::move(schema)) {}
    E operator[](std::string_view column) const;
    RelVarId id() const { return var_; }
    const RowSchema& schema() const { return schema_; }

private:
    RelVarId var_;
    RowSchema schema_;
};

QueryPtr table(std::string name, std::vector<Column> columns);
QueryPtr map(const QueryPtr& src, const std::function<E(const Row&)>& body);
QueryPtr flat_map(const QueryPtr& src, const std::function<QueryPtr(const Row&)>& inner);
QueryPtr filter(const QueryPtr& src, const std::function<E(const Row&)>& pred);
QueryPtr distinct(const QueryPtr& src);
QueryPtr union_(const QueryPtr& l, const QueryPtr& r);
QueryPtr union_all(const QueryPtr& l, const QueryPtr& r);
QueryPtr intersect(const QueryPtr& l, const QueryPtr& r);
QueryPtr intersect_all(const QueryPtr& l, const QueryPtr& r);
QueryPtr aggregate(const QueryPtr& src, const std::function<E(const Row&)>& body);
QueryPtr group_by(const QueryPtr& src, const std::function<E(const Row&)>& keys,
                  const std::function<E(const Row&)>& select,
                  const std::function<E(const Row&)>& having = {});

using FixBody = std::function<std::vector<QueryPtr>(const std::vector<QueryPtr>& refs)>;

/// Allocates a fresh FixId, hands the builder one RecRef per base and checks
/// range restriction on what it returns.
QueryPtr fix(std::vector<QueryPtr> bases, const FixBody& defs, std::vector<std::string> names = {},
             std::size_t out = 0);
QueryPtr fix(const QueryPtr& base, const std::function<QueryPtr(const QueryPtr&)>& def,
             std::string name = {});

//---------------------------------------------------------------------------
// Serialization (ir-v1)
//---------------------------------------------------------------------------

std::string serialize_ir(const QueryPtr& q);
QueryPtr deserialize_ir(std::string_view text);

/// Equality up to consistent renaming of FixIds and row variables.
bool structurally_equal(const QueryPtr& a, const QueryPtr& b);

//---------------------------------------------------------------------------
// Traversal helpers
//---------------------------------------------------------------------------

/// Children in canonical pre-order, each with its path step (".src", ".defs[1]", ...).
std::vector<std::pair<std::string, QueryPtr>> children_of(const Query& q);

/// Expressions owned directly by a node, with their path step.
std::vector<std::pair<std::string, ExprPtr>> exprs_of(const Query& q);

/// Row variables referenced by an expression.
void collect_vars(const Expr& e, std::vector<RelVarId>& out);

/// Rebuilds q with each direct child replaced by f(child). Returns q itself
/// when no child changed.
QueryPtr transform_children(const QueryPtr& q, const std::function<QueryPtr(const QueryPtr&)>& f);

/// Copy of e with column references on row variable `from` moved to `to`.
ExprPtr rename_var(const ExprPtr& e, RelVarId from, RelVarId to);

/// True when some expression in the subtree mentions the row variable.
bool references_var(const Query& q, RelVarId var);

}  // namespace rql
