#include <gtest/gtest.h>

#include "rql/corpus.hpp"
#include "rql/eval.hpp"
#include "rql/sqlgen.hpp"
#include "sql_normalize.hpp"

using namespace rql;

namespace {

constexpr auto Int = ColumnType::Int;

const char* kBagClosure = R"(WITH RECURSIVE path AS (
  SELECT *
  FROM edges
    -- UNION will terminate
    UNION ALL
  (SELECT path.x, edges.y
  FROM path, edges
  WHERE path.y = edges.x))
SELECT COUNT(*) FROM path)";

const char* kAllSubParts = R"(WITH RECURSIVE AllSubParts AS (
  SELECT part, sub -- Base case
  FROM SubParts WHERE part = 'given_part'
  UNION ALL
  SELECT sp.part, sp.sub -- Recursive case
  FROM SubParts sp, AllSubParts asp
  WHERE sp.part = asp.sub
)
SELECT * FROM AllSubParts;)";

const char* kShortestPath = R"(WITH RECURSIVE path AS (
    (SELECT * FROM base)
      UNION
    (SELECT edge.dst, path.cst + edge.cst
 FROM edge, path WHERE path.dst = edge.src))
SELECT path.dst, MIN(path.cst)
FROM path GROUP BY path.dst)";

EmitOptions unsafe() {
    EmitOptions o;
    o.allowUnchecked = true;
    return o;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

const std::vector<BenchQuery>& corpus() {
    static const auto c = build_corpus();
    return c;
}

}  // namespace

TEST(Normalize, Basics) {
    EXPECT_EQ(sqlnorm::normalize("SELECT v1.x AS x FROM edges AS v1;", true), "SELECT edges.x FROM edges");
    EXPECT_EQ(sqlnorm::normalize("select p.x -- c\nFROM path p", false), "SELECT x FROM path");
}

TEST(Golden, BagTransitiveClosure) {
    std::string sql = emit(queries::transitive_closure_count(), Dialect::Postgres, unsafe()).text;
    EXPECT_EQ(sqlnorm::normalize(sql, true), sqlnorm::normalize(kBagClosure, true));
    EXPECT_EQ(sqlnorm::normalize(sql), sqlnorm::normalize(kBagClosure));
}

TEST(Golden, BillOfMaterials) {
    std::string sql = emit(queries::bom_all_subparts(), Dialect::Postgres, unsafe()).text;
    EXPECT_EQ(sqlnorm::normalize(sql), sqlnorm::normalize(kAllSubParts));
}

TEST(Golden, ShortestPath) {
    std::string sql = emit(queries::sssp(), Dialect::DuckDB, unsafe()).text;
    EXPECT_EQ(sqlnorm::normalize(sql, true), sqlnorm::normalize(kShortestPath, true));
}

TEST(Emit, UncheckedQueryNeedsOverride) {
    auto tc = queries::transitive_closure_count();
    RestrictionProfile full = profile_full();
    EmitOptions strict;
    strict.profile = full;
    try {
        emit(tc, Dialect::Postgres, strict);
        FAIL();
    } catch (const UncheckedQuery& e) {
        EXPECT_TRUE(e.report.has("SET"));
    }
    EmitOptions o = strict;
    o.allowUnchecked = true;
    SqlDoc doc = emit(tc, Dialect::Postgres, o);
    ASSERT_FALSE(doc.warnings.empty());
    EXPECT_EQ(doc.text.rfind("-- warning: unchecked SET", 0), 0u);
}

TEST(Emit, DialectPresetAcceptsBagRecursion) {
    EXPECT_NO_THROW(emit(queries::transitive_closure(Category::Bag), Dialect::Postgres));
    EXPECT_NO_THROW(emit(queries::sssp(), Dialect::DuckDB));
}

TEST(Emit, MutualRecursionSupport) {
    auto evenOdd = corpus_entry(corpus(), "Even-Odd").ir;
    SqlDoc maria = emit(evenOdd, Dialect::MariaDB);
    EXPECT_NE(maria.text.find("WITH RECURSIVE even AS ("), std::string::npos);
    EXPECT_NE(maria.text.find("odd AS ("), std::string::npos);
    for (Dialect d : {Dialect::Postgres, Dialect::SQLite, Dialect::MySQL, Dialect::Oracle, Dialect::SQLServer})
        EXPECT_THROW(emit(evenOdd, d), UnsupportedFeature) << to_string(d);
    for (Dialect d : {Dialect::Postgres, Dialect::SQLite, Dialect::MySQL, Dialect::Oracle, Dialect::SQLServer})
        EXPECT_THROW(emit(evenOdd, d, unsafe()), UnsupportedFeature) << to_string(d);
}

TEST(Emit, SetRecursionRefusedWithoutUnionDistinct) {
    auto tc = queries::transitive_closure(Category::Set);
    EXPECT_THROW(emit(tc, Dialect::Oracle), UnsupportedFeature);
    EXPECT_THROW(emit(tc, Dialect::SQLServer), UnsupportedFeature);
    EXPECT_NO_THROW(emit(queries::transitive_closure(Category::Bag), Dialect::Oracle));
}

TEST(Emit, CategoryFidelity) {
    std::string set = emit(queries::transitive_closure(Category::Set), Dialect::Postgres).text;
    std::string bag = emit(queries::transitive_closure(Category::Bag), Dialect::Postgres).text;
    EXPECT_EQ(count_of(set, "UNION ALL"), 0u);
    EXPECT_EQ(count_of(set, "UNION"), 1u);
    EXPECT_EQ(count_of(bag, "UNION ALL"), 1u);
    std::string maria = emit(queries::transitive_closure(Category::Bag), Dialect::MariaDB).text;
    EXPECT_EQ(count_of(maria, "UNION ALL"), 1u);
}

TEST(Emit, DeterministicAndTerminated) {
    for (auto& q : corpus())
        for (Dialect d : all_dialects()) {
            std::string a, b;
            try {
                a = emit(q.ir, d, unsafe()).text;
                b = emit(deserialize_ir(serialize_ir(q.ir)), d, unsafe()).text;
            } catch (const UnsupportedFeature&) {
                continue;
            }
            EXPECT_EQ(a, b) << q.name << " " << to_string(d);
            ASSERT_GE(a.size(), 2u);
            EXPECT_EQ(a.substr(a.size() - 2), ";\n") << q.name;
            EXPECT_EQ(a.find('\r'), std::string::npos);
        }
}

TEST(Emit, UnnamedFixComponents) {
    auto e = table("edges", {{"x", Int}, {"y", Int}});
    auto q = fix(e, [&](const QueryPtr& p) { return union_(p, e); });
    std::string sql = emit(q, Dialect::Postgres).text;
    EXPECT_NE(sql.find("WITH RECURSIVE recursive_1 AS"), std::string::npos);
}

TEST(Shim, NonLinearOnPostgres) {
    auto nl = queries::transitive_closure_nonlinear(Category::Set);
    EmitOptions o;
    RestrictionProfile p = profile_for(Dialect::Postgres);
    p.requireLinear = false;
    p.allowNonLinear = true;
    o.profile = p;
    SqlDoc doc = emit(nl, Dialect::Postgres, o);
    EXPECT_NE(doc.text.find("(WITH path AS (SELECT * FROM path) SELECT"), std::string::npos);
    EXPECT_FALSE(doc.warnings.empty());

    try {
        emit(nl, Dialect::Postgres);
        FAIL();
    } catch (const UncheckedQuery& e) {
        EXPECT_TRUE(e.report.has("AFFINE"));
    }
    std::string linear = emit(queries::transitive_closure(Category::Set), Dialect::Postgres, o).text;
    EXPECT_EQ(linear.find("WITH path AS"), std::string::npos);

    std::vector<std::string> w;
    EXPECT_THROW(emit_nonlinear_shim("path", "SELECT 1", Dialect::MySQL, w), Error);
}

TEST(Quote, PerDialect) {
    EXPECT_EQ(quote_identifier("path", Dialect::Postgres), "path");
    EXPECT_EQ(quote_identifier("order", Dialect::Postgres), "\"order\"");
    EXPECT_EQ(quote_identifier("order", Dialect::MySQL), "`order`");
    EXPECT_EQ(quote_identifier("order", Dialect::MariaDB), "`order`");
    EXPECT_EQ(quote_identifier("order", Dialect::SQLServer), "[order]");
    EXPECT_EQ(quote_identifier("Even-Odd", Dialect::DuckDB), "\"Even-Odd\"");
}

TEST(Features, SupportMatrix) {
    EXPECT_EQ(features(Dialect::MariaDB).mutual, Support::Yes);
    EXPECT_EQ(features(Dialect::DuckDB).mutual, Support::Syntactic);
    EXPECT_EQ(features(Dialect::Postgres).mutual, Support::No);
    EXPECT_FALSE(features(Dialect::Oracle).unionDistinctInRecursion);
    EXPECT_FALSE(features(Dialect::SQLServer).unionDistinctInRecursion);
    EXPECT_TRUE(features(Dialect::Postgres).unionDistinctInRecursion);
    EXPECT_EQ(parse_dialect("PostgreSQL"), Dialect::Postgres);
}

TEST(Simplify, MergeFilters) {
    auto r = table("r", {{"x", Int}, {"y", Int}});
    auto two = filter(filter(r, [](const Row& t) { return t["x"] > 1; }), [](const Row& t) { return t["y"] < 2; });
    auto merged = merge_filters(two);
    ASSERT_EQ(merged->kind, QueryKind::Filter);
    EXPECT_EQ(merged->src->kind, QueryKind::TableScan);
    EXPECT_EQ(emit(merged, Dialect::Postgres).text, "SELECT * FROM r AS v1 WHERE v1.x > 1 AND v1.y < 2;\n");

    auto one = filter(r, [](const Row& t) { return t["x"] > 1; });
    EXPECT_TRUE(structurally_equal(merge_filters(one), one));
}

TEST(Simplify, FlattenFlatMaps) {
    auto t1 = table("t1", {{"a", Int}});
    auto t2 = table("t2", {{"b", Int}});
    auto t3 = table("t3", {{"c", Int}});
    auto q = flat_map(t1, [&](const Row& a) {
        return flat_map(t2, [&](const Row& b) {
            return map(filter(t3, [&](const Row& c) { return c["c"] == b["b"] && a["a"] > 1; }),
                       [&](const Row& c) { return row({{"a", a["a"]}, {"c", c["c"]}}); });
        });
    });
    auto flat = flatten_flatmaps(q);
    ASSERT_EQ(flat->kind, QueryKind::Join);
    EXPECT_EQ(flat->sources.size(), 3u);
    std::string sql = emit(q, Dialect::Postgres).text;
    EXPECT_NE(sql.find("FROM t1 AS v1, t2 AS v2, t3 AS v3 WHERE"), std::string::npos);
    EXPECT_EQ(count_of(sql, "SELECT"), 1u);
}

TEST(Simplify, PreservesResultsOnCorpus) {
    for (auto& q : corpus()) {
        Database db = gen_dataset(q.datasets.front());
        QueryPtr s = simplify(q.ir);
        EvalConfig cfg;
        cfg.iterationCap = 200;
        Relation a = eval(q.ir, db, cfg);
        Relation b = eval(s, db, cfg);
        EXPECT_TRUE(same_multiset(a, b)) << q.name;
        EXPECT_EQ(a.schema, b.schema) << q.name;
    }
}
