#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

#include "rql/checker.hpp"
#include "rql/corpus.hpp"

using namespace rql;

namespace {

constexpr auto Int = ColumnType::Int;

std::vector<std::string> codes(const std::vector<Diagnostic>& ds) {
    std::vector<std::string> out;
    for (auto& d : ds) out.push_back(d.code);
    return out;
}

using Codes = std::vector<std::string>;

const Query* find_fix(const QueryPtr& q) {
    if (q->kind == QueryKind::Fix) return q.get();
    for (auto& [_, c] : children_of(*q))
        if (auto* f = find_fix(c)) return f;
    return nullptr;
}

const Query& first_fix(const QueryPtr& q) {
    const Query* f = find_fix(q);
    if (!f) throw std::logic_error("query has no fix");
    return *f;
}

const std::vector<BenchQuery>& corpus() {
    static const auto c = build_corpus();
    return c;
}

QueryPtr corpus_ir(std::string_view name) { return corpus_entry(corpus(), name).ir; }

QueryPtr edges() { return table("edges", {{"x", Int}, {"y", Int}}); }

}  // namespace

TEST(Monotone, AggregationInsideRecursion) {
    auto ds = check_monotone(*queries::bom_waitfor_unstratified());
    ASSERT_EQ(codes(ds), Codes{"MONOTONE"});
    EXPECT_EQ(ds[0].risk, Risk::DbError);
}

TEST(Monotone, AggregationAfterRecursionPasses) {
    EXPECT_TRUE(check_monotone(first_fix(corpus_ir("BOM"))).empty());
    EXPECT_TRUE(check_monotone(first_fix(queries::sssp())).empty());
    EXPECT_TRUE(check_all(corpus_ir("BOM"), profile_full()).diagnostics.size() > 0);
    EXPECT_FALSE(check_all(corpus_ir("BOM"), profile_full()).has("MONOTONE"));
}

TEST(Monotone, IdentityDef) {
    auto f = fix(edges(), [](const QueryPtr& p) {
        return map(p, [](const Row& r) { return row({{"x", r["x"]}, {"y", r["y"]}}); });
    });
    EXPECT_TRUE(check_monotone(*f).empty());
}

TEST(Linear, NonLinearTcIsNotAffine) {
    auto ds = check_linear(*queries::transitive_closure_nonlinear(Category::Set));
    ASSERT_EQ(codes(ds), Codes{"AFFINE"});
    EXPECT_EQ(ds[0].risk, Risk::IncompleteResults);
    EXPECT_EQ(ds[0].subCode, "duplicate");
}

TEST(Linear, UnusedComponentIsNotRelevant) {
    auto f = fix({edges(), edges()}, [](const std::vector<QueryPtr>& r) {
        return std::vector<QueryPtr>{distinct(r[0]), distinct(r[0])};
    });
    EXPECT_EQ(codes(check_linear(*f)), Codes{"RELEVANT"});
}

TEST(Linear, DefIgnoringItsOwnReference) {
    auto f = fix(edges(), [](const QueryPtr&) { return distinct(edges()); });
    EXPECT_EQ(codes(check_linear(*f)), Codes{"RELEVANT"});
}

TEST(Linear, LinearTcPasses) {
    EXPECT_TRUE(check_linear(*queries::transitive_closure(Category::Bag)).empty());
}

TEST(Linear, ForeignFixReference) {
    QueryPtr inner;
    fix(edges(), [&](const QueryPtr& o) {
        inner = fix(edges(), [&](const QueryPtr& i) { return distinct(union_all(i, o)); });
        return distinct(inner);
    });
    auto ds = check_linear(*inner);
    ASSERT_FALSE(ds.empty());
    EXPECT_EQ(ds[0].code, "AFFINE");
    EXPECT_EQ(ds[0].subCode, "foreign-fix");
}

TEST(SetSemantics, Examples) {
    EXPECT_TRUE(check_set_semantics(*queries::transitive_closure(Category::Set)).empty());
    auto bag = check_set_semantics(*queries::transitive_closure(Category::Bag));
    ASSERT_EQ(codes(bag), Codes{"SET"});
    EXPECT_EQ(bag[0].risk, Risk::Nontermination);
    auto viaUnion = fix(edges(), [](const QueryPtr& p) { return union_(p, edges()); });
    EXPECT_TRUE(check_set_semantics(*viaUnion).empty());
}

TEST(ConstructorFree, Examples) {
    auto ds = check_constructor_free(first_fix(queries::sssp()));
    ASSERT_FALSE(ds.empty());
    EXPECT_EQ(ds[0].code, "CONSTRUCTOR");
    EXPECT_EQ(ds[0].risk, Risk::Nontermination);
    EXPECT_TRUE(check_constructor_free(*queries::transitive_closure(Category::Set)).empty());
    auto guarded = fix(edges(), [](const QueryPtr& p) {
        return distinct(filter(p, [](const Row& r) { return r["x"] < 10; }));
    });
    EXPECT_TRUE(check_constructor_free(*guarded).empty());
}

TEST(Dialect, MutualRecursion) {
    auto evenOdd = corpus_ir("Even-Odd");
    EXPECT_TRUE(check_all(evenOdd, profile_for(Dialect::Postgres)).has("MUTUAL"));
    EXPECT_FALSE(check_all(evenOdd, profile_for(Dialect::MariaDB)).has("MUTUAL"));
    auto duck = check_all(evenOdd, profile_for(Dialect::DuckDB));
    for (auto& d : duck.diagnostics)
        if (d.code == "MUTUAL") EXPECT_EQ(d.severity, Severity::Warning);
}

TEST(Dialect, SetSemanticsOnSqlServer) {
    auto tc = queries::transitive_closure(Category::Set);
    EXPECT_TRUE(check_all(tc, profile_for(Dialect::SQLServer)).has("DIALECT"));
    EXPECT_TRUE(check_all(tc, profile_for(Dialect::Oracle)).has("DIALECT"));
    EXPECT_FALSE(check_all(tc, profile_for(Dialect::Postgres)).has("DIALECT"));
    EXPECT_THROW(parse_dialect("db2"), UnknownDialect);
}

TEST(CheckAll, Examples) {
    auto anc = check_all(corpus_ir("Ancestry"), profile_full());
    EXPECT_EQ(violated_properties(anc), (std::set<std::string>{"cf"}));
    auto cspa = check_all(corpus_ir("CSPA"), profile_full());
    EXPECT_TRUE(cspa.has("AFFINE"));
    EXPECT_TRUE(cspa.has("MUTUAL"));
    EXPECT_TRUE(check_all(queries::transitive_closure(Category::Bag), profile_none()).pass);
    EXPECT_FALSE(check_all(queries::transitive_closure(Category::Bag), profile_full()).pass);
}

TEST(CheckAll, VerdictMatrix) {
    ASSERT_EQ(corpus().size(), 16u);
    for (auto& q : corpus())
        EXPECT_EQ(violated_properties(check_all(q.ir, profile_full())), q.expected.violated()) << q.name;
}

TEST(CheckAll, Deterministic) {
    for (auto& q : corpus()) {
        auto a = check_all(q.ir, profile_full()).to_json();
        auto b = check_all(q.ir, profile_full()).to_json();
        auto c = check_all(deserialize_ir(serialize_ir(q.ir)), profile_full()).to_json();
        EXPECT_EQ(a, b) << q.name;
        EXPECT_EQ(a, c) << q.name;
    }
}

TEST(CheckAll, ChecksAreIndependent) {
    struct One {
        std::function<void(RestrictionProfile&)> enable;
        std::vector<std::string> codes;
    };
    std::vector<One> checks = {
        {[](RestrictionProfile& p) { p.requireMonotone = true; }, {"MONOTONE"}},
        {[](RestrictionProfile& p) { p.requireLinear = true; p.allowNonLinear = false; }, {"AFFINE", "RELEVANT"}},
        {[](RestrictionProfile& p) { p.requireSetSemantics = true; }, {"SET"}},
        {[](RestrictionProfile& p) { p.requireConstructorFree = true; }, {"CONSTRUCTOR"}},
        {[](RestrictionProfile& p) { p.allowMutualRecursion = false; }, {"MUTUAL"}},
    };
    auto only = [](const CheckReport& r, const std::vector<std::string>& cs) {
        std::vector<std::string> out;
        for (auto& d : r.diagnostics)
            if (std::find(cs.begin(), cs.end(), d.code) != cs.end()) out.push_back(d.code + "@" + d.path);
        return out;
    };
    for (auto& q : corpus()) {
        auto full = check_all(q.ir, profile_full());
        for (auto& c : checks) {
            RestrictionProfile p = profile_none();
            c.enable(p);
            EXPECT_EQ(only(check_all(q.ir, p), c.codes), only(full, c.codes)) << q.name << " " << c.codes[0];
        }
    }
}

TEST(Risk, FixedMapping) {
    EXPECT_EQ(risk_of("MONOTONE"), Risk::DbError);
    EXPECT_EQ(risk_of("AFFINE"), Risk::IncompleteResults);
    EXPECT_EQ(risk_of("RELEVANT"), Risk::IncompleteResults);
    EXPECT_EQ(risk_of("MUTUAL"), Risk::IncompleteResults);
    EXPECT_EQ(risk_of("SET"), Risk::Nontermination);
    EXPECT_EQ(risk_of("CONSTRUCTOR"), Risk::Nontermination);
}

TEST(Profile, LinearAndNonLinearExclusive) {
    RestrictionProfile p = profile_full();
    p.allowNonLinear = true;
    EXPECT_THROW(validate_profile(p), Error);
    EXPECT_THROW(profile_by_name("strictest"), UnknownProfile);
    for (auto& n : profile_names()) EXPECT_NO_THROW(validate_profile(profile_by_name(n))) << n;
}

TEST(Precedence, TransitiveClosure) {
    auto g = build_precedence_graph(queries::transitive_closure(Category::Set));
    ASSERT_EQ(g.nodes.size(), 2u);
    auto e = g.index_of("edges"), p = g.index_of("path");
    ASSERT_TRUE(e && p);
    EXPECT_TRUE(g.has_edge(*e, *p));
    EXPECT_TRUE(g.has_edge(*p, *p));
    EXPECT_FALSE(g.has_mutual_recursion());
}

TEST(Precedence, EvenOdd) {
    auto g = build_precedence_graph(corpus_ir("Even-Odd"));
    EXPECT_TRUE(g.has_mutual_recursion());
    auto even = *g.index_of("even"), odd = *g.index_of("odd");
    bool together = false;
    for (auto& scc : g.sccs)
        if (scc.size() == 2 && std::count(scc.begin(), scc.end(), even) && std::count(scc.begin(), scc.end(), odd))
            together = true;
    EXPECT_TRUE(together);
}

TEST(Precedence, NonRecursiveJoin) {
    auto t = table("t", {{"a", Int}});
    auto q = flat_map(edges(), [&](const Row& e) {
        return map(filter(t, [&](const Row& r) { return r["a"] == e["x"]; }),
                   [&](const Row& r) { return row({{"a", r["a"]}}); });
    });
    auto g = build_precedence_graph(q);
    for (auto& scc : g.sccs) EXPECT_EQ(scc.size(), 1u);
    for (auto& [u, v] : g.edges) EXPECT_NE(u, v);
}
