#include <gtest/gtest.h>

#include <functional>
#include <set>

#include "rql/corpus.hpp"
#include "rql/ir.hpp"

using namespace rql;

namespace {

constexpr auto Int = ColumnType::Int;

QueryPtr edges() { return table("edges", {{"x", Int}, {"y", Int}}); }

// Independent bottom-up recomputation of the cached node fields.
bool any_constructor(const Expr& e) {
    if ((e.kind == ExprKind::Apply || e.kind == ExprKind::AggApply) && e.op->isConstructor) return true;
    for (auto& a : e.args)
        if (any_constructor(*a)) return true;
    return false;
}

bool any_aggregate(const Expr& e) {
    if (e.kind == ExprKind::AggApply) return true;
    for (auto& a : e.args)
        if (any_aggregate(*a)) return true;
    return false;
}

void walk_exprs(const Expr& e, const std::function<void(const Expr&)>& f) {
    f(e);
    for (auto& a : e.args) walk_exprs(*a, f);
}

void walk(const QueryPtr& q, const std::function<void(const Query&)>& f) {
    f(*q);
    for (auto& [_, c] : children_of(*q)) walk(c, f);
}

DepMultiset recompute_deps(const Query& q) {
    DepMultiset d;
    switch (q.kind) {
        case QueryKind::TableScan: return d;
        case QueryKind::RecRef: return {q.dep};
        default: break;
    }
    for (auto& [_, c] : children_of(q)) d = dep_sum(d, recompute_deps(*c));
    if (q.kind == QueryKind::Fix) {
        DepMultiset foreign;
        for (auto& r : d)
            if (r.fix != q.fixId) foreign.push_back(r);
        return foreign;
    }
    return d;
}

}  // namespace

TEST(Shape, JoinUsesExistsSemantics) {
    EXPECT_EQ(shape_join(Shape::NonScalar, {Shape::Scalar, Shape::NonScalar}), Shape::Scalar);
    EXPECT_EQ(shape_join(Shape::NonScalar, {Shape::NonScalar, Shape::NonScalar}), Shape::NonScalar);
    EXPECT_EQ(shape_join(Shape::Scalar, {}), Shape::Scalar);
}

TEST(Shape, SumPlusOneIsScalar) {
    auto t = table("t", {{"n", Int}});
    auto q = aggregate(t, [](const Row& r) { return row({{"s", sum(r["n"]) + 1}}); });
    EXPECT_EQ(q->body->args[0]->shape, Shape::Scalar);
    auto m = map(t, [](const Row& r) { return row({{"s", r["n"] + 1}}); });
    EXPECT_EQ(m->body->args[0]->shape, Shape::NonScalar);
}

TEST(Operators, RegistryFlags) {
    for (auto& op : operator_registry()) {
        if (op.isAggregate) EXPECT_EQ(op.declaredShape, Shape::Scalar) << op.opId;
        bool valueProducing = op.name == "add" || op.name == "sub" || op.name == "mul" || op.name == "div" ||
                              op.name == "concat";
        EXPECT_EQ(op.isConstructor, valueProducing) << op.opId;
    }
}

TEST(Build, Table) {
    auto t = table("edge", {{"src", Int}, {"dst", Int}});
    EXPECT_EQ(t->kind, QueryKind::TableScan);
    EXPECT_EQ(t->category, Category::Bag);
    EXPECT_TRUE(t->deps.empty());
    EXPECT_FALSE(t->restricted);
    EXPECT_THROW(table("edge", {{"src", Int}, {"src", Int}}), SchemaError);
    auto base = table("base", {{"dst", Int}, {"cst", Int}});
    EXPECT_EQ(base->schema.describe(), "(dst int, cst int)");
}

TEST(Build, EmptySchemaRejected) { EXPECT_THROW(table("t", {}), SchemaError); }

TEST(Build, Categories) {
    EXPECT_EQ(union_(edges(), edges())->category, Category::Set);
    auto s = distinct(edges());
    EXPECT_EQ(union_all(s, s)->category, Category::Bag);
    EXPECT_EQ(intersect(edges(), edges())->category, Category::Set);
    EXPECT_EQ(intersect_all(edges(), edges())->category, Category::Bag);
    EXPECT_EQ(filter(s, [](const Row& r) { return r["x"] > 0; })->category, Category::Set);
    EXPECT_EQ(map(s, [](const Row& r) { return row({{"x", r["x"]}}); })->category, Category::Bag);
    EXPECT_EQ(distinct(distinct(edges()))->category, Category::Set);
}

TEST(Build, SchemaAndShapeErrors) {
    auto other = table("other", {{"a", Int}, {"b", Int}});
    EXPECT_THROW(union_(edges(), other), SchemaError);
    EXPECT_THROW(map(edges(), [](const Row& r) { return row({{"z", r["nope"]}}); }), SchemaError);
    EXPECT_THROW(map(edges(), [](const Row& r) { return row({{"s", sum(r["x"])}}); }), ShapeError);
    EXPECT_THROW(filter(edges(), [](const Row& r) { return r["x"]; }), TypeError);
    EXPECT_THROW(aggregate(edges(), [](const Row& r) { return row({{"x", r["x"]}}); }), ShapeError);
    EXPECT_THROW(group_by(edges(), [](const Row& r) { return row({{"x", r["x"]}}); },
                          [](const Row& r) { return row({{"x", r["x"]}}); }),
                 ShapeError);
}

TEST(Build, MapOverRecRefIsRestricted) {
    QueryPtr seen;
    auto f = fix(edges(), [&](const QueryPtr& p) {
        seen = map(p, [](const Row& r) { return row({{"x", r["x"]}, {"y", r["y"]}}); });
        return seen;
    });
    ASSERT_EQ(seen->deps.size(), 1u);
    EXPECT_EQ(seen->deps[0], (DepRef{f->fixId, 1}));
    EXPECT_TRUE(seen->restricted);
    EXPECT_TRUE(f->deps.empty());
    EXPECT_FALSE(f->restricted);
}

TEST(Build, FixRangeRestriction) {
    auto base = table("base", {{"dst", Int}, {"cst", Int}});
    EXPECT_THROW(fix(base, [](const QueryPtr& p) { return map(p, [](const Row& r) { return row({{"dst", r["dst"]}}); }); }),
                 RangeRestrictionError);
    EXPECT_THROW(fix(base, [](const QueryPtr& p) {
                     return map(p, [](const Row& r) { return row({{"cst", r["cst"]}, {"dst", r["dst"]}}); });
                 }),
                 RangeRestrictionError);
    EXPECT_THROW(fix({base, base}, [](const std::vector<QueryPtr>& r) { return std::vector<QueryPtr>{r[0]}; }),
                 ArityError);
}

TEST(Build, BaseMustNotRecurse) {
    EXPECT_THROW(fix(edges(), [](const QueryPtr& outer) {
                     auto inner = fix(outer, [](const QueryPtr& p) { return p; });
                     return inner;
                 }),
                 BaseCaseError);
}

TEST(Build, NestedFixKeepsForeignDep) {
    QueryPtr innerFix;
    auto outer = fix(edges(), [&](const QueryPtr& o) {
        innerFix = fix(edges(), [&](const QueryPtr& i) {
            return distinct(union_all(i, o));
        });
        return distinct(innerFix);
    });
    ASSERT_EQ(innerFix->deps.size(), 1u);
    EXPECT_EQ(innerFix->deps[0].fix, outer->fixId);
    EXPECT_TRUE(outer->deps.empty());
}

TEST(Build, FixIdsAreUnique) {
    auto a = queries::transitive_closure(Category::Set);
    auto b = queries::transitive_closure(Category::Set);
    EXPECT_NE(a->fixId, b->fixId);
    EXPECT_TRUE(structurally_equal(a, b));
}

TEST(Serialize, TableRoundTrip) {
    auto t = table("edge", {{"src", Int}, {"dst", Int}});
    std::string doc = serialize_ir(t);
    EXPECT_NE(doc.find("\"table\""), std::string::npos);
    EXPECT_NE(doc.find("\"edge\""), std::string::npos);
    EXPECT_TRUE(structurally_equal(deserialize_ir(doc), t));
}

TEST(Serialize, CorpusRoundTrips) {
    for (auto& q : build_corpus()) {
        std::string doc = serialize_ir(q.ir);
        QueryPtr back = deserialize_ir(doc);
        EXPECT_TRUE(structurally_equal(back, q.ir)) << q.name;
        EXPECT_EQ(serialize_ir(back), doc) << q.name;
    }
}

TEST(Serialize, RejectsOutOfRangeDep) {
    std::string doc = serialize_ir(queries::transitive_closure(Category::Set));
    auto pos = doc.find("\"arg\": 1");
    ASSERT_NE(pos, std::string::npos);
    doc.replace(pos, 8, "\"arg\": 5");
    EXPECT_THROW(deserialize_ir(doc), ValidationError);
}

TEST(Serialize, RejectsContradictingCache) {
    std::string doc = serialize_ir(union_(edges(), edges()));
    auto pos = doc.find("\"category\": \"set\"");
    ASSERT_NE(pos, std::string::npos);
    doc.replace(pos, 17, "\"category\": \"bag\"");
    EXPECT_THROW(deserialize_ir(doc), ValidationError);
}

TEST(Serialize, ParseErrorCarriesPosition) {
    try {
        deserialize_ir("{\"format\": \"ir-v1\", \"query\": ");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_GT(e.position, 0u);
    }
    EXPECT_THROW(deserialize_ir("{\"format\": \"ir-v0\", \"query\": {}}"), ParseError);
}

TEST(Properties, CachedFieldsMatchRecomputation) {
    for (auto& bq : build_corpus()) {
        walk(bq.ir, [&](const Query& q) {
            EXPECT_EQ(recompute_deps(q), q.deps) << bq.name << " " << to_string(q.kind);
            EXPECT_EQ(q.restricted, !q.deps.empty()) << bq.name;
            for (auto& [_, e] : exprs_of(q))
                walk_exprs(*e, [&](const Expr& x) {
                    EXPECT_EQ(x.usesConstructor, any_constructor(x)) << bq.name;
                    EXPECT_EQ(x.shape == Shape::Scalar, any_aggregate(x)) << bq.name;
                });
            if (q.kind == QueryKind::Fix)
                for (std::size_t i = 0; i < q.arity(); ++i) EXPECT_EQ(q.defs[i]->schema, q.bases[i]->schema);
            if (q.kind == QueryKind::UnionAll) EXPECT_EQ(q.category, Category::Bag);
        });
    }
}

TEST(Properties, DistinctFixIdsWithinOneQuery) {
    for (auto& bq : build_corpus()) {
        std::multiset<FixId> ids;
        walk(bq.ir, [&](const Query& q) {
            if (q.kind == QueryKind::Fix) ids.insert(q.fixId);
        });
        std::set<FixId> unique(ids.begin(), ids.end());
        EXPECT_EQ(unique.size(), ids.size()) << bq.name;
    }
}
