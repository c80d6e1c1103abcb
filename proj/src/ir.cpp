#include "rql/ir.hpp"

#include <algorithm>
#include <atomic>
#include <set>

namespace rql {

std::string_view to_string(ColumnType t) {
    switch (t) {
        case ColumnType::Int: return "int";
        case ColumnType::Float: return "float";
        case ColumnType::Bool: return "bool";
        case ColumnType::Text: return "text";
    }
    return "?";
}

std::optional<ColumnType> parse_column_type(std::string_view s) {
    if (s == "int") return ColumnType::Int;
    if (s == "float") return ColumnType::Float;
    if (s == "bool") return ColumnType::Bool;
    if (s == "text") return ColumnType::Text;
    return std::nullopt;
}

std::string_view to_string(Shape s) { return s == Shape::Scalar ? "scalar" : "nonscalar"; }
std::string_view to_string(Category c) { return c == Category::Set ? "set" : "bag"; }

std::optional<std::size_t> RowSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return i;
    return std::nullopt;
}

std::string RowSchema::describe() const {
    std::string s = "(";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) s += ", ";
        s += columns[i].name;
        s += ' ';
        s += to_string(columns[i].type);
    }
    return s + ")";
}

RowSchema make_schema(std::vector<Column> columns) {
    if (columns.empty()) throw SchemaError("schema has no columns");
    std::set<std::string> seen;
    for (auto& c : columns) {
        if (c.name.empty()) throw SchemaError("empty column name");
        if (!seen.insert(c.name).second) throw SchemaError("duplicate column name '" + c.name + "'");
    }
    return RowSchema{std::move(columns)};
}

Shape shape_join(Shape declared, const std::vector<Shape>& argShapes) {
    if (declared == Shape::Scalar) return Shape::Scalar;
    for (Shape s : argShapes)
        if (s == Shape::Scalar) return Shape::Scalar;
    return Shape::NonScalar;
}

FixId fresh_fix_id() {
    static std::atomic<FixId> next{1};
    return next.fetch_add(1);
}

RelVarId fresh_var_id() {
    static std::atomic<RelVarId> next{1};
    return next.fetch_add(1);
}

DepMultiset dep_sum(const DepMultiset& a, const DepMultiset& b) {
    DepMultiset out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

//---------------------------------------------------------------------------
// Operator registry
//---------------------------------------------------------------------------

namespace {

std::vector<OperatorSignature> build_registry() {
    using CT = ColumnType;
    std::vector<OperatorSignature> ops;
    auto suffix = [](CT t) { return std::string(to_string(t)); };
    auto add = [&](std::string name, std::string id, std::vector<CT> args, CT res, bool ctor, bool agg,
                   std::string tok, Fixity fx) {
        ops.push_back({std::move(id), std::move(name), std::move(args), res,
                       agg ? Shape::Scalar : Shape::NonScalar, ctor, agg, std::move(tok), fx});
    };

    for (CT t : {CT::Int, CT::Float}) {
        add("add", "add_" + suffix(t), {t, t}, t, true, false, "+", Fixity::Infix);
        add("sub", "sub_" + suffix(t), {t, t}, t, true, false, "-", Fixity::Infix);
        add("mul", "mul_" + suffix(t), {t, t}, t, true, false, "*", Fixity::Infix);
        add("div", "div_" + suffix(t), {t, t}, t, true, false, "/", Fixity::Infix);
    }
    add("concat", "concat_text", {CT::Text, CT::Text}, CT::Text, true, false, "||", Fixity::Infix);

    for (CT t : {CT::Int, CT::Float, CT::Bool, CT::Text}) {
        add("eq", "eq_" + suffix(t), {t, t}, CT::Bool, false, false, "=", Fixity::Infix);
        add("ne", "ne_" + suffix(t), {t, t}, CT::Bool, false, false, "<>", Fixity::Infix);
    }
    for (CT t : {CT::Int, CT::Float, CT::Text}) {
        add("lt", "lt_" + suffix(t), {t, t}, CT::Bool, false, false, "<", Fixity::Infix);
        add("le", "le_" + suffix(t), {t, t}, CT::Bool, false, false, "<=", Fixity::Infix);
        add("gt", "gt_" + suffix(t), {t, t}, CT::Bool, false, false, ">", Fixity::Infix);
        add("ge", "ge_" + suffix(t), {t, t}, CT::Bool, false, false, ">=", Fixity::Infix);
    }
    add("and", "and_bool", {CT::Bool, CT::Bool}, CT::Bool, false, false, "AND", Fixity::Infix);
    add("or", "or_bool", {CT::Bool, CT::Bool}, CT::Bool, false, false, "OR", Fixity::Infix);
    add("not", "not_bool", {CT::Bool}, CT::Bool, false, false, "NOT", Fixity::Prefix);
    add("like", "like_text", {CT::Text, CT::Text}, CT::Bool, false, false, "LIKE", Fixity::Infix);

    add("sum", "sum_int", {CT::Int}, CT::Int, false, true, "SUM", Fixity::Call);
    add("sum", "sum_float", {CT::Float}, CT::Float, false, true, "SUM", Fixity::Call);
    add("avg", "avg_int", {CT::Int}, CT::Float, false, true, "AVG", Fixity::Call);
    add("avg", "avg_float", {CT::Float}, CT::Float, false, true, "AVG", Fixity::Call);
    for (CT t : {CT::Int, CT::Float, CT::Text}) {
        add("min", "min_" + suffix(t), {t}, t, false, true, "MIN", Fixity::Call);
        add("max", "max_" + suffix(t), {t}, t, false, true, "MAX", Fixity::Call);
    }
    add("count", "count_star", {}, CT::Int, false, true, "COUNT", Fixity::Call);
    for (CT t : {CT::Int, CT::Float, CT::Bool, CT::Text})
        add("count", "count_" + suffix(t), {t}, CT::Int, false, true, "COUNT", Fixity::Call);
    return ops;
}

}  // namespace

const std::vector<OperatorSignature>& operator_registry() {
    static const std::vector<OperatorSignature> ops = build_registry();
    return ops;
}

const OperatorSignature& op_by_id(std::string_view opId) {
    for (auto& op : operator_registry())
        if (op.opId == opId) return op;
    throw TypeError("unknown operator '" + std::string(opId) + "'");
}

const OperatorSignature* resolve_op(std::string_view name, const std::vector<ColumnType>& argTypes) {
    for (auto& op : operator_registry())
        if (op.name == name && op.argTypes == argTypes) return &op;
    return nullptr;
}

//---------------------------------------------------------------------------
// Expressions
//---------------------------------------------------------------------------

ColumnType type_of(const Value& v) {
    switch (v.index()) {
        case 0: return ColumnType::Int;
        case 1: return ColumnType::Float;
        case 2: return ColumnType::Bool;
        default: return ColumnType::Text;
    }
}

ExprPtr make_column_ref(RelVarId var, const RowSchema& schema, std::string_view column) {
    auto idx = schema.index_of(column);
    if (!idx) throw SchemaError("unknown column '" + std::string(column) + "' in " + schema.describe());
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::ColumnRef;
    e->var = var;
    e->column = std::string(column);
    e->columnIndex = *idx;
    e->type = schema.columns[*idx].type;
    return e;
}

ExprPtr make_lit(Value v) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Lit;
    e->type = type_of(v);
    e->value = std::move(v);
    return e;
}

static void check_args(const OperatorSignature& op, const std::vector<ExprPtr>& args) {
    if (args.size() != op.argTypes.size())
        throw TypeError("operator " + op.opId + " expects " + std::to_string(op.argTypes.size()) +
                        " arguments, got " + std::to_string(args.size()));
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (!args[i]) throw TypeError("null argument to " + op.opId);
        if (args[i]->kind == ExprKind::RowCtor) throw TypeError("row argument to " + op.opId);
        if (args[i]->type != op.argTypes[i])
            throw TypeError("operator " + op.opId + " argument " + std::to_string(i + 1) + " has type " +
                            std::string(to_string(args[i]->type)) + ", expected " +
                            std::string(to_string(op.argTypes[i])));
    }
}

ExprPtr make_apply(const OperatorSignature& op, std::vector<ExprPtr> args) {
    if (op.isAggregate) throw TypeError(op.opId + " is an aggregation; use make_agg");
    check_args(op, args);
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Apply;
    e->op = &op;
    std::vector<Shape> shapes;
    bool ctor = op.isConstructor;
    for (auto& a : args) {
        shapes.push_back(a->shape);
        ctor = ctor || a->usesConstructor;
    }
    e->shape = shape_join(op.declaredShape, shapes);
    e->usesConstructor = ctor;
    e->type = op.resultType;
    e->args = std::move(args);
    return e;
}

ExprPtr make_agg(const OperatorSignature& op, std::vector<ExprPtr> args) {
    if (!op.isAggregate) throw TypeError(op.opId + " is not an aggregation");
    check_args(op, args);
    bool ctor = op.isConstructor;
    for (auto& a : args) {
        if (a->shape == Shape::Scalar) throw ShapeError("nested aggregation inside " + op.opId);
        ctor = ctor || a->usesConstructor;
    }
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::AggApply;
    e->op = &op;
    e->shape = Shape::Scalar;
    e->usesConstructor = ctor;
    e->type = op.resultType;
    e->args = std::move(args);
    return e;
}

ExprPtr make_row(std::vector<std::string> names, std::vector<ExprPtr> fields) {
    if (names.size() != fields.size()) throw SchemaError("row field name/expression count mismatch");
    if (names.empty()) throw SchemaError("row constructor has no fields");
    std::set<std::string> seen;
    std::vector<Shape> shapes;
    bool ctor = false;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i].empty()) throw SchemaError("empty row field name");
        if (!seen.insert(names[i]).second) throw SchemaError("duplicate row field '" + names[i] + "'");
        if (!fields[i]) throw SchemaError("null row field '" + names[i] + "'");
        if (fields[i]->kind == ExprKind::RowCtor)
            throw SchemaError("nested row in field '" + names[i] + "'");
        shapes.push_back(fields[i]->shape);
        ctor = ctor || fields[i]->usesConstructor;
    }
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::RowCtor;
    e->fieldNames = std::move(names);
    e->args = std::move(fields);
    e->shape = shape_join(Shape::NonScalar, shapes);
    e->usesConstructor = ctor;
    return e;
}

RowSchema row_schema(const Expr& r) {
    if (r.kind != ExprKind::RowCtor) throw SchemaError("expected a row constructor");
    RowSchema s;
    for (std::size_t i = 0; i < r.args.size(); ++i) s.columns.push_back({r.fieldNames[i], r.args[i]->type});
    return s;
}

void collect_vars(const Expr& e, std::vector<RelVarId>& out) {
    if (e.kind == ExprKind::ColumnRef) {
        if (std::find(out.begin(), out.end(), e.var) == out.end()) out.push_back(e.var);
        return;
    }
    for (auto& a : e.args) collect_vars(*a, out);
}

//---------------------------------------------------------------------------
// Queries
//---------------------------------------------------------------------------

std::string_view to_string(QueryKind k) {
    switch (k) {
        case QueryKind::TableScan: return "table";
        case QueryKind::RecRef: return "recref";
        case QueryKind::Map: return "map";
        case QueryKind::FlatMap: return "flatmap";
        case QueryKind::Filter: return "filter";
        case QueryKind::Distinct: return "distinct";
        case QueryKind::Union: return "union";
        case QueryKind::UnionAll: return "unionall";
        case QueryKind::Intersect: return "intersect";
        case QueryKind::IntersectAll: return "intersectall";
        case QueryKind::Aggregate: return "aggregate";
        case QueryKind::GroupBy: return "groupby";
        case QueryKind::Fix: return "fix";
        case QueryKind::Join: return "join";
    }
    return "?";
}

namespace {

std::shared_ptr<Query> node(QueryKind k) {
    auto q = std::make_shared<Query>();
    q->kind = k;
    return q;
}

void require(const QueryPtr& q, const char* what) {
    if (!q) throw SchemaError(std::string("missing ") + what);
}

void require_row(const ExprPtr& e, const char* what) {
    if (!e || e->kind != ExprKind::RowCtor) throw SchemaError(std::string(what) + " must be a row constructor");
}

void require_pred(const ExprPtr& e, const char* what) {
    if (!e) throw SchemaError(std::string("missing ") + what);
    if (e->kind == ExprKind::RowCtor || e->type != ColumnType::Bool)
        throw TypeError(std::string(what) + " must be a boolean expression");
}

bool references_var(const Expr& e, RelVarId v) {
    if (e.kind == ExprKind::ColumnRef) return e.var == v;
    for (auto& a : e.args)
        if (references_var(*a, v)) return true;
    return false;
}

void finish(Query& q) { q.restricted = !q.deps.empty(); }

}  // namespace

QueryPtr make_table(std::string name, RowSchema schema) {
    if (name.empty()) throw SchemaError("table name is empty");
    auto q = node(QueryKind::TableScan);
    q->name = std::move(name);
    q->schema = make_schema(std::move(schema.columns));
    finish(*q);
    return q;
}

QueryPtr make_recref(DepRef dep, RowSchema schema) {
    if (dep.argIndex < 1) throw ValidationError("recursive reference index must be >= 1");
    auto q = node(QueryKind::RecRef);
    q->dep = dep;
    q->schema = make_schema(std::move(schema.columns));
    q->deps = {dep};
    finish(*q);
    return q;
}

QueryPtr make_map(QueryPtr src, RelVarId binder, ExprPtr body) {
    require(src, "map source");
    require_row(body, "map body");
    if (body->shape == Shape::Scalar) throw ShapeError("map body contains an aggregation; use aggregate or groupBy");
    auto q = node(QueryKind::Map);
    q->schema = row_schema(*body);
    q->deps = src->deps;
    q->category = Category::Bag;
    q->src = std::move(src);
    q->binder = binder;
    q->body = std::move(body);
    finish(*q);
    return q;
}

QueryPtr make_flatmap(QueryPtr src, RelVarId binder, QueryPtr inner) {
    require(src, "flatMap source");
    require(inner, "flatMap inner query");
    auto q = node(QueryKind::FlatMap);
    q->schema = inner->schema;
    q->deps = dep_sum(src->deps, inner->deps);
    q->category = Category::Bag;
    q->src = std::move(src);
    q->binder = binder;
    q->inner = std::move(inner);
    finish(*q);
    return q;
}

QueryPtr make_filter(QueryPtr src, RelVarId binder, ExprPtr pred) {
    require(src, "filter source");
    require_pred(pred, "filter predicate");
    if (pred->shape == Shape::Scalar) throw ShapeError("filter predicate contains an aggregation");
    auto q = node(QueryKind::Filter);
    q->schema = src->schema;
    q->deps = src->deps;
    q->category = src->category;
    q->src = std::move(src);
    q->binder = binder;
    q->pred = std::move(pred);
    finish(*q);
    return q;
}

QueryPtr make_distinct(QueryPtr src) {
    require(src, "distinct source");
    auto q = node(QueryKind::Distinct);
    q->schema = src->schema;
    q->deps = src->deps;
    q->category = Category::Set;
    q->src = std::move(src);
    finish(*q);
    return q;
}

QueryPtr make_setop(QueryKind kind, QueryPtr left, QueryPtr right) {
    require(left, "left operand");
    require(right, "right operand");
    if (kind != QueryKind::Union && kind != QueryKind::UnionAll && kind != QueryKind::Intersect &&
        kind != QueryKind::IntersectAll)
        throw ValidationError("not a set operator: " + std::string(to_string(kind)));
    if (!(left->schema == right->schema))
        throw SchemaError(std::string(to_string(kind)) + " of mismatched schemas " + left->schema.describe() +
                          " and " + right->schema.describe());
    auto q = node(kind);
    q->schema = left->schema;
    q->deps = dep_sum(left->deps, right->deps);
    q->category = (kind == QueryKind::Union || kind == QueryKind::Intersect) ? Category::Set : Category::Bag;
    q->left = std::move(left);
    q->right = std::move(right);
    finish(*q);
    return q;
}

QueryPtr make_aggregate(QueryPtr src, RelVarId binder, ExprPtr body) {
    require(src, "aggregate source");
    require_row(body, "aggregate body");
    bool anyScalar = false;
    for (std::size_t i = 0; i < body->args.size(); ++i) {
        auto& f = body->args[i];
        if (f->shape == Shape::Scalar) {
            anyScalar = true;
        } else if (references_var(*f, binder)) {
            throw ShapeError("aggregate field '" + body->fieldNames[i] + "' reads a column outside an aggregation");
        }
    }
    if (!anyScalar) throw ShapeError("aggregate body has no aggregation");
    auto q = node(QueryKind::Aggregate);
    q->schema = row_schema(*body);
    q->deps = src->deps;
    q->category = Category::Bag;
    q->src = std::move(src);
    q->binder = binder;
    q->body = std::move(body);
    finish(*q);
    return q;
}

QueryPtr make_groupby(QueryPtr src, RelVarId binder, ExprPtr keys, ExprPtr select, ExprPtr having) {
    require(src, "groupBy source");
    require_row(keys, "groupBy keys");
    require_row(select, "groupBy select");
    if (keys->shape == Shape::Scalar) throw ShapeError("groupBy keys contain an aggregation");
    if (having) require_pred(having, "groupBy having");
    bool anyScalar = select->shape == Shape::Scalar || (having && having->shape == Shape::Scalar);
    if (!anyScalar) throw ShapeError("groupBy has no aggregation in select or having");
    auto q = node(QueryKind::GroupBy);
    q->schema = row_schema(*select);
    q->deps = src->deps;
    q->category = Category::Bag;
    q->src = std::move(src);
    q->binder = binder;
    q->keys = std::move(keys);
    q->body = std::move(select);
    q->having = std::move(having);
    finish(*q);
    return q;
}

QueryPtr make_fix(FixId id, std::vector<QueryPtr> bases, std::vector<QueryPtr> defs, std::vector<std::string> names,
                  std::size_t out) {
    if (bases.empty()) throw ArityError("fix needs at least one base");
    if (defs.size() != bases.size())
        throw ArityError("fix of arity " + std::to_string(bases.size()) + " got " + std::to_string(defs.size()) +
                         " recursive definitions");
    if (!names.empty() && names.size() != bases.size()) throw ArityError("fix component name count mismatch");
    if (names.empty()) names.resize(bases.size());
    if (out >= bases.size()) throw ArityError("fix result component out of range");
    DepMultiset all;
    for (std::size_t i = 0; i < bases.size(); ++i) {
        require(bases[i], "fix base");
        require(defs[i], "fix definition");
        if (!bases[i]->deps.empty())
            throw BaseCaseError("base " + std::to_string(i + 1) + " reads a recursive reference");
        if (!(defs[i]->schema == bases[i]->schema))
            throw RangeRestrictionError("definition " + std::to_string(i + 1) + " has schema " +
                                        defs[i]->schema.describe() + " but its base has " +
                                        bases[i]->schema.describe());
        all = dep_sum(all, defs[i]->deps);
    }
    for (auto& d : all)
        if (d.fix == id && (d.argIndex < 1 || static_cast<std::size_t>(d.argIndex) > bases.size()))
            throw ValidationError("recursive reference index " + std::to_string(d.argIndex) + " exceeds fix arity " +
                                  std::to_string(bases.size()));
    auto q = node(QueryKind::Fix);
    q->fixId = id;
    std::erase_if(all, [&](const DepRef& d) { return d.fix == id; });
    q->deps = std::move(all);
    q->schema = bases[out]->schema;
    q->category = defs[out]->category;
    q->bases = std::move(bases);
    q->defs = std::move(defs);
    q->names = std::move(names);
    q->out = out;
    finish(*q);
    return q;
}

QueryPtr make_join(std::vector<JoinSource> sources, ExprPtr pred, ExprPtr body) {
    if (sources.empty()) throw SchemaError("join without sources");
    auto q = node(QueryKind::Join);
    for (auto& s : sources) {
        require(s.src, "join source");
        q->deps = dep_sum(q->deps, s.src->deps);
    }
    if (pred) require_pred(pred, "join predicate");
    if (body) {
        require_row(body, "join body");
        if (body->shape == Shape::Scalar) throw ShapeError("join body contains an aggregation");
        q->schema = row_schema(*body);
    } else {
        q->schema = sources.back().src->schema;
    }
    q->category = Category::Bag;
    q->sources = std::move(sources);
    q->pred = std::move(pred);
    q->body = std::move(body);
    finish(*q);
    return q;
}

std::vector<std::pair<std::string, QueryPtr>> children_of(const Query& q) {
    std::vector<std::pair<std::string, QueryPtr>> out;
    switch (q.kind) {
        case QueryKind::TableScan:
        case QueryKind::RecRef: break;
        case QueryKind::FlatMap:
            out.emplace_back(".src", q.src);
            out.emplace_back(".inner", q.inner);
            break;
        case QueryKind::Map:
        case QueryKind::Filter:
        case QueryKind::Distinct:
        case QueryKind::Aggregate:
        case QueryKind::GroupBy: out.emplace_back(".src", q.src); break;
        case QueryKind::Union:
        case QueryKind::UnionAll:
        case QueryKind::Intersect:
        case QueryKind::IntersectAll:
            out.emplace_back(".left", q.left);
            out.emplace_back(".right", q.right);
            break;
        case QueryKind::Fix:
            for (std::size_t i = 0; i < q.bases.size(); ++i)
                out.emplace_back(".bases[" + std::to_string(i) + "]", q.bases[i]);
            for (std::size_t i = 0; i < q.defs.size(); ++i)
                out.emplace_back(".defs[" + std::to_string(i) + "]", q.defs[i]);
            break;
        case QueryKind::Join:
            for (std::size_t i = 0; i < q.sources.size(); ++i)
                out.emplace_back(".sources[" + std::to_string(i) + "]", q.sources[i].src);
            break;
    }
    return out;
}

std::vector<std::pair<std::string, ExprPtr>> exprs_of(const Query& q) {
    std::vector<std::pair<std::string, ExprPtr>> out;
    switch (q.kind) {
        case QueryKind::Map:
        case QueryKind::Aggregate: out.emplace_back(".body", q.body); break;
        case QueryKind::Filter: out.emplace_back(".pred", q.pred); break;
        case QueryKind::GroupBy:
            out.emplace_back(".keys", q.keys);
            out.emplace_back(".select", q.body);
            if (q.having) out.emplace_back(".having", q.having);
            break;
        case QueryKind::Join:
            if (q.pred) out.emplace_back(".pred", q.pred);
            if (q.body) out.emplace_back(".body", q.body);
            break;
        default: break;
    }
    return out;
}

//---------------------------------------------------------------------------
// Builder DSL
//---------------------------------------------------------------------------

E::E(int v) : p_(make_lit(static_cast<std::int64_t>(v))) {}
E::E(std::int64_t v) : p_(make_lit(v)) {}
E::E(double v) : p_(make_lit(v)) {}
E::E(bool v) : p_(make_lit(v)) {}
E::E(const char* v) : p_(make_lit(std::string(v))) {}
E::E(std::string v) : p_(make_lit(std::move(v))) {}

static std::vector<ExprPtr> ptrs(const std::vector<E>& args) {
    std::vector<ExprPtr> out;
    for (auto& a : args) out.push_back(a.ptr());
    return out;
}

static std::vector<ColumnType> types(const std::vector<E>& args) {
    std::vector<ColumnType> out;
    for (auto& a : args) out.push_back(a->type);
    return out;
}

static std::string signature_text(std::string_view name, const std::vector<ColumnType>& ts) {
    std::string s(name);
    s += '(';
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (i) s += ", ";
        s += to_string(ts[i]);
    }
    return s + ')';
}

E apply(std::string_view name, std::vector<E> args) {
    auto ts = types(args);
    const OperatorSignature* op = resolve_op(name, ts);
    if (!op || op->isAggregate) throw TypeError("no operator " + signature_text(name, ts));
    return E(make_apply(*op, ptrs(args)));
}

E aggregate_op(std::string_view name, std::vector<E> args) {
    auto ts = types(args);
    const OperatorSignature* op = resolve_op(name, ts);
    if (!op || !op->isAggregate) throw TypeError("no aggregation " + signature_text(name, ts));
    return E(make_agg(*op, ptrs(args)));
}

E operator+(const E& a, const E& b) { return apply("add", {a, b}); }
E operator-(const E& a, const E& b) { return apply("sub", {a, b}); }
E operator*(const E& a, const E& b) { return apply("mul", {a, b}); }
E operator/(const E& a, const E& b) { return apply("div", {a, b}); }
E operator==(const E& a, const E& b) { return apply("eq", {a, b}); }
E operator!=(const E& a, const E& b) { return apply("ne", {a, b}); }
E operator<(const E& a, const E& b) { return apply("lt", {a, b}); }
E operator<=(const E& a, const E& b) { return apply("le", {a, b}); }
E operator>(const E& a, const E& b) { return apply("gt", {a, b}); }
E operator>=(const E& a, const E& b) { return apply("ge", {a, b}); }
E operator&&(const E& a, const E& b) { return apply("and", {a, b}); }
E operator||(const E& a, const E& b) { return apply("or", {a, b}); }
E operator!(const E& a) { return apply("not", {a}); }

E concat(const E& a, const E& b) { return apply("concat", {a, b}); }
E like(const E& text, const E& pattern) { return apply("like", {text, pattern}); }
E sum(const E& a) { return aggregate_op("sum", {a}); }
E avg(const E& a) { return aggregate_op("avg", {a}); }
E min(const E& a) { return aggregate_op("min", {a}); }
E max(const E& a) { return aggregate_op("max", {a}); }
E count() { return aggregate_op("count", {}); }
E count(const E& a) { return aggregate_op("count", {a}); }

E row(const std::vector<std::pair<std::string, E>>& fields) {
    std::vector<std::string> names;
    std::vector<ExprPtr> exprs;
    for (auto& [n, e] : fields) {
        names.push_back(n);
        exprs.push_back(e.ptr());
    }
    return E(make_row(std::move(names), std::move(exprs)));
}

E row(std::initializer_list<std::pair<std::string, E>> fields) {
    return row(std::vector<std::pair<std::string, E>>(fields));
}

E Row::operator[](std::string_view column) const { return E(make_column_ref(var_, schema_, column)); }

QueryPtr table(std::string name, std::vector<Column> columns) {
    return make_table(std::move(name), RowSchema{std::move(columns)});
}

QueryPtr map(const QueryPtr& src, const std::function<E(const Row&)>& body) {
    require(src, "map source");
    Row r(fresh_var_id(), src->schema);
    return make_map(src, r.id(), body(r).ptr());
}

QueryPtr flat_map(const QueryPtr& src, const std::function<QueryPtr(const Row&)>& inner) {
    require(src, "flatMap source");
    Row r(fresh_var_id(), src->schema);
    return make_flatmap(src, r.id(), inner(r));
}

QueryPtr filter(const QueryPtr& src, const std::function<E(const Row&)>& pred) {
    require(src, "filter source");
    Row r(fresh_var_id(), src->schema);
    return make_filter(src, r.id(), pred(r).ptr());
}

QueryPtr distinct(const QueryPtr& src) { return make_distinct(src); }
QueryPtr union_(const QueryPtr& l, const QueryPtr& r) { return make_setop(QueryKind::Union, l, r); }
QueryPtr union_all(const QueryPtr& l, const QueryPtr& r) { return make_setop(QueryKind::UnionAll, l, r); }
QueryPtr intersect(const QueryPtr& l, const QueryPtr& r) { return make_setop(QueryKind::Intersect, l, r); }
QueryPtr intersect_all(const QueryPtr& l, const QueryPtr& r) { return make_setop(QueryKind::IntersectAll, l, r); }

QueryPtr aggregate(const QueryPtr& src, const std::function<E(const Row&)>& body) {
    require(src, "aggregate source");
    Row r(fresh_var_id(), src->schema);
    return make_aggregate(src, r.id(), body(r).ptr());
}

QueryPtr group_by(const QueryPtr& src, const std::function<E(const Row&)>& keys,
                  const std::function<E(const Row&)>& select, const std::function<E(const Row&)>& having) {
    require(src, "groupBy source");
    Row r(fresh_var_id(), src->schema);
    ExprPtr h = having ? having(r).ptr() : nullptr;
    return make_groupby(src, r.id(), keys(r).ptr(), select(r).ptr(), h);
}

QueryPtr fix(std::vector<QueryPtr> bases, const FixBody& defs, std::vector<std::string> names, std::size_t out) {
    if (bases.empty()) throw ArityError("fix needs at least one base");
    for (std::size_t i = 0; i < bases.size(); ++i) {
        require(bases[i], "fix base");
        if (!bases[i]->deps.empty())
            throw BaseCaseError("base " + std::to_string(i + 1) + " reads a recursive reference");
    }
    FixId id = fresh_fix_id();
    std::vector<QueryPtr> refs;
    for (std::size_t i = 0; i < bases.size(); ++i)
        refs.push_back(make_recref(DepRef{id, static_cast<int>(i + 1)}, bases[i]->schema));
    auto built = defs(refs);
    return make_fix(id, std::move(bases), std::move(built), std::move(names), out);
}

QueryPtr fix(const QueryPtr& base, const std::function<QueryPtr(const QueryPtr&)>& def, std::string name) {
    std::vector<std::string> names;
    if (!name.empty()) names.push_back(std::move(name));
    return fix({base}, [&](const std::vector<QueryPtr>& refs) { return std::vector<QueryPtr>{def(refs[0])}; },
               std::move(names));
}

}  // namespace rql
