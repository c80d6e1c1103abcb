#include <gtest/gtest.h>

#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "rql/corpus.hpp"
#include "rql/eval.hpp"

using namespace rql;

namespace {

constexpr auto Int = ColumnType::Int;
using Pairs = std::set<std::pair<std::int64_t, std::int64_t>>;

Relation relation(RowSchema schema, std::vector<Tuple> rows) {
    Relation r;
    r.schema = std::move(schema);
    r.rows = std::move(rows);
    return r;
}

Database edges_db(const Pairs& edges) {
    std::vector<Tuple> rows;
    for (auto [x, y] : edges) rows.push_back({x, y});
    return {{"edges", relation(make_schema({{"x", Int}, {"y", Int}}), rows)}};
}

Pairs as_pairs(const Relation& r) {
    Pairs out;
    for (auto& t : r.rows) out.insert({std::get<std::int64_t>(t[0]), std::get<std::int64_t>(t[1])});
    return out;
}

// Reachability by breadth-first search from every source.
Pairs bfs_closure(const Pairs& edges) {
    std::map<std::int64_t, std::vector<std::int64_t>> adj;
    std::set<std::int64_t> nodes;
    for (auto [x, y] : edges) {
        adj[x].push_back(y);
        nodes.insert(x);
    }
    Pairs out;
    for (auto s : nodes) {
        std::set<std::int64_t> seen;
        std::queue<std::int64_t> q;
        for (auto y : adj[s]) q.push(y);
        while (!q.empty()) {
            auto v = q.front();
            q.pop();
            if (!seen.insert(v).second) continue;
            out.insert({s, v});
            for (auto y : adj[v]) q.push(y);
        }
    }
    return out;
}

std::map<std::int64_t, std::int64_t> dijkstra(const Relation& edge, std::int64_t src) {
    std::map<std::int64_t, std::vector<std::pair<std::int64_t, std::int64_t>>> adj;
    for (auto& t : edge.rows)
        adj[std::get<std::int64_t>(t[0])].push_back({std::get<std::int64_t>(t[1]), std::get<std::int64_t>(t[2])});
    std::map<std::int64_t, std::int64_t> dist;
    using Item = std::pair<std::int64_t, std::int64_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0, src});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (dist.count(v)) continue;
        dist[v] = d;
        for (auto [w, c] : adj[v])
            if (!dist.count(w)) pq.push({d + c, w});
    }
    return dist;
}

Relation run(const QueryPtr& q, const Database& db, EvalMode mode, int cap = 1000, EvalStats* stats = nullptr) {
    EvalConfig cfg;
    cfg.mode = mode;
    cfg.iterationCap = cap;
    return eval(q, db, cfg, stats);
}

const Pairs kChain = {{0, 1}, {1, 2}, {2, 3}};
const Pairs kCycle = {{0, 1}, {1, 0}};

}  // namespace

TEST(Fixpoint, NonLinearChainLosesRowsUnderDeltaOnly) {
    auto q = queries::transitive_closure_nonlinear(Category::Set);
    auto db = edges_db(kChain);
    EXPECT_EQ(run(q, db, EvalMode::DeltaOnly).size(), 5u);
    EXPECT_EQ(run(q, db, EvalMode::SemiNaiveFull).size(), 6u);
    EXPECT_EQ(run(q, db, EvalMode::Naive).size(), 6u);
    EXPECT_EQ(as_pairs(run(q, db, EvalMode::SemiNaiveFull)), bfs_closure(kChain));
}

TEST(Fixpoint, BagRecursionOnCycleHitsCap) {
    auto q = queries::transitive_closure(Category::Bag);
    for (int cap : {1, 7, 50}) {
        EvalStats stats;
        try {
            run(q, edges_db(kCycle), EvalMode::SemiNaiveFull, cap, &stats);
            FAIL() << "cap " << cap;
        } catch (const NontermError& e) {
            EXPECT_EQ(e.iterations, cap);
            EXPECT_EQ(e.component, "path");
            EXPECT_EQ(stats.max_iterations(), cap);
        }
    }
}

TEST(Fixpoint, SetRecursionOnCycleTerminates) {
    EvalStats stats;
    Relation r = run(queries::transitive_closure(Category::Set), edges_db(kCycle), EvalMode::SemiNaiveFull, 1000, &stats);
    EXPECT_LE(stats.max_iterations(), 4);
    EXPECT_EQ(as_pairs(r), (Pairs{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
    EXPECT_EQ(as_pairs(r), bfs_closure(kCycle));
}

TEST(Fixpoint, DedupeOverride) {
    EvalConfig cfg;
    cfg.dedupe = Category::Set;
    Relation r = eval(queries::transitive_closure(Category::Bag), edges_db(kCycle), cfg);
    EXPECT_EQ(r.size(), 4u);
}

TEST(Fixpoint, DefWithNothingNew) {
    auto e = table("edges", {{"x", Int}, {"y", Int}});
    auto q = fix(e, [&](const QueryPtr& p) { return distinct(filter(p, [](const Row& r) { return r["x"] < 0; })); });
    EvalStats stats;
    Relation r = eval(q, edges_db(kChain), {}, &stats);
    EXPECT_EQ(as_pairs(r), kChain);
    EXPECT_EQ(stats.max_iterations(), 1);
}

TEST(Fixpoint, EmptyInput) {
    for (auto mode : {EvalMode::Naive, EvalMode::SemiNaiveFull, EvalMode::DeltaOnly}) {
        EXPECT_EQ(run(queries::transitive_closure_nonlinear(Category::Set), edges_db({}), mode).size(), 0u);
        EXPECT_EQ(run(queries::transitive_closure(Category::Bag), edges_db({}), mode).size(), 0u);
    }
}

TEST(Fixpoint, MatchesBfsOnRandomGraphs) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
        for (bool cyclic : {false, true}) {
            Database db = gen_dataset({DatasetKind::RandomDag, 60, seed, cyclic});
            Pairs edges = as_pairs(db.at("edges"));
            Pairs oracle = bfs_closure(edges);
            for (auto mode : {EvalMode::Naive, EvalMode::SemiNaiveFull}) {
                EXPECT_EQ(as_pairs(run(queries::transitive_closure(Category::Set), db, mode)), oracle) << seed;
                EXPECT_EQ(as_pairs(run(queries::transitive_closure_nonlinear(Category::Set), db, mode)), oracle)
                    << seed;
            }
        }
}

TEST(Fixpoint, ClosureIsIdempotent) {
    auto q = queries::transitive_closure(Category::Set);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Database db = gen_dataset({DatasetKind::RandomDag, 40, seed, seed == 3});
        Relation once = eval(q, db);
        Database again = db;
        auto& edges = again.at("edges");
        edges.rows.insert(edges.rows.end(), once.rows.begin(), once.rows.end());
        EXPECT_TRUE(same_set(eval(q, again), once)) << seed;
    }
}

TEST(Fixpoint, SetModeDeltaOnlyHoldsNewRows) {
    // Every productive round adds at least one row, so rounds are bounded by the result size.
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Database db = gen_dataset({DatasetKind::RandomDag, 50, seed, true});
        EvalStats stats;
        Relation r = eval(queries::transitive_closure(Category::Set), db, {}, &stats);
        EXPECT_LE(static_cast<std::size_t>(stats.max_iterations()), r.size() + 1);
        EXPECT_EQ(distinct_rows(r).size(), r.size());
        EXPECT_EQ(r.mode, Category::Set);
    }
}

TEST(Fixpoint, RowBudget) {
    EvalConfig cfg;
    cfg.rowBudget = 100;
    EXPECT_THROW(eval(queries::transitive_closure(Category::Bag), edges_db(kCycle), cfg), NontermError);
}

TEST(Expr, Arithmetic) {
    EXPECT_EQ(std::get<std::int64_t>(eval_expr(*(E(3) + E(4)), {})), 7);
    EXPECT_EQ(std::get<std::int64_t>(eval_expr(*(E(7) / E(2)), {})), 3);
    EXPECT_DOUBLE_EQ(std::get<double>(eval_expr(*(E(0.5) * E(3.0)), {})), 1.5);
    EXPECT_EQ(std::get<std::string>(eval_expr(*concat(E("a"), E("b")), {})), "ab");
    EXPECT_TRUE(std::get<bool>(eval_expr(*like(E("/n1/n2/"), E("%/n2/%")), {})));
    EXPECT_FALSE(std::get<bool>(eval_expr(*like(E("/n1/n2/"), E("%/n3/%")), {})));
    EXPECT_THROW(eval_expr(*(E(1) / E(0)), {}), DivisionByZero);
    EXPECT_THROW(eval_expr(*(E(std::numeric_limits<std::int64_t>::max()) + E(1)), {}), Error);
}

TEST(Expr, ColumnsThroughMap) {
    auto t = table("t", {{"a", Int}, {"b", Int}});
    Database db{{"t", relation(t->schema, {{std::int64_t{3}, std::int64_t{4}}})}};
    Relation r = eval(map(t, [](const Row& x) { return row({{"s", x["a"] + x["b"]}}); }), db);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(std::get<std::int64_t>(r.rows[0][0]), 7);
}

TEST(Aggregate, SumAndEmptyInput) {
    auto t = table("t", {{"n", Int}});
    auto q = aggregate(t, [](const Row& r) { return row({{"s", sum(r["n"])}}); });
    Database db{{"t", relation(t->schema, {{std::int64_t{1}}, {std::int64_t{2}}, {std::int64_t{3}}})}};
    Relation r = eval(q, db);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(std::get<std::int64_t>(r.rows[0][0]), 6);
    Database empty{{"t", relation(t->schema, {})}};
    EXPECT_EQ(eval(q, empty).size(), 0u);
}

TEST(Aggregate, MinOverPaths) {
    auto t = table("p", {{"dst", Int}, {"cst", Int}});
    auto q = group_by(t, [](const Row& r) { return row({{"dst", r["dst"]}}); },
                      [](const Row& r) { return row({{"dst", r["dst"]}, {"cst", min(r["cst"])}}); });
    Database db{{"p", relation(t->schema, {{std::int64_t{4}, std::int64_t{7}},
                                          {std::int64_t{4}, std::int64_t{5}},
                                          {std::int64_t{4}, std::int64_t{9}}})}};
    Relation r = eval(q, db);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(std::get<std::int64_t>(r.rows[0][1]), 5);
}

TEST(Aggregate, ShortestPathMatchesDijkstra) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Database db = gen_dataset({DatasetKind::WeightedGraph, 16, seed, false});
        auto expected = dijkstra(db.at("edge"), 0);
        Relation r = eval(queries::sssp(), db);
        std::map<std::int64_t, std::int64_t> got;
        for (auto& t : r.rows) got[std::get<std::int64_t>(t[0])] = std::get<std::int64_t>(t[1]);
        EXPECT_EQ(got, expected) << seed;
    }
}

TEST(Aggregate, ShortestPathDivergesOnCycles) {
    Database db = gen_dataset({DatasetKind::WeightedGraph, 16, 1, true});
    EXPECT_THROW(run(queries::sssp(), db, EvalMode::SemiNaiveFull, 200), NontermError);
}

TEST(DiffTest, LinearClosureOnRandomDag) {
    Database db = gen_dataset({DatasetKind::RandomDag, 200, 7, false});
    EXPECT_GE(db.at("edges").size(), 200u);
    DiffReport r = diff_test(queries::transitive_closure(Category::Set), db);
    EXPECT_TRUE(r.naiveMatchesSemiNaive);
    EXPECT_FALSE(r.affine);
    EXPECT_TRUE(r.ok()) << r.to_json();
}

TEST(DiffTest, NonLinearOnChain) {
    DiffReport r = diff_test(queries::transitive_closure_nonlinear(Category::Set), edges_db(kChain));
    EXPECT_TRUE(r.affine);
    ASSERT_TRUE(r.deltaOnlyStrictSubset.has_value());
    EXPECT_TRUE(*r.deltaOnlyStrictSubset);
}

TEST(DiffTest, CspaLosesRowsUnderDeltaOnly) {
    auto corpus = build_corpus();
    const BenchQuery& cspa = corpus_entry(corpus, "CSPA");
    std::vector<Database> dbs;
    for (auto& spec : cspa.datasets) dbs.push_back(gen_dataset(spec));
    DiffReport r = diff_test(cspa.ir, dbs);
    EXPECT_TRUE(r.naiveMatchesSemiNaive);
    EXPECT_TRUE(r.deltaOnlyStrictSubset.value_or(false)) << r.to_json();
}

TEST(DiffTest, RecursiveCoreSkipsPostProcessing) {
    auto core = recursive_core(queries::sssp());
    EXPECT_EQ(core->kind, QueryKind::Fix);
    auto plain = table("edges", {{"x", Int}, {"y", Int}});
    EXPECT_EQ(recursive_core(plain), plain);
}

TEST(Csv, RoundTrip) {
    auto schema = make_schema({{"id", Int}, {"name", ColumnType::Text}, {"ok", ColumnType::Bool}});
    Relation r = relation(schema, {{std::int64_t{2}, std::string("b,\"x\""), true},
                                   {std::int64_t{1}, std::string("a"), false}});
    std::ostringstream out;
    write_csv(out, r);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "id,name,ok");
    EXPECT_LT(out.str().find("1,a"), out.str().find("2,"));
    std::istringstream in(out.str());
    EXPECT_TRUE(same_multiset(read_csv(in, schema), r));
}

TEST(Csv, Errors) {
    auto schema = make_schema({{"x", Int}, {"y", Int}});
    std::istringstream badHeader("x,z\n1,2\n");
    EXPECT_THROW(read_csv(badHeader, schema), SchemaError);
    std::istringstream badValue("x,y\n1,two\n");
    EXPECT_THROW(read_csv(badValue, schema), SchemaError);
    std::istringstream reordered("y,x\n2,1\n");
    Relation r = read_csv(reordered, schema);
    EXPECT_EQ(as_pairs(r), (Pairs{{1, 2}}));
    EXPECT_THROW(eval(queries::transitive_closure(Category::Set), Database{}), MissingTable);
}

TEST(Modes, Parse) {
    EXPECT_EQ(parse_eval_mode("naive"), EvalMode::Naive);
    EXPECT_EQ(parse_eval_mode("seminaive"), EvalMode::SemiNaiveFull);
    EXPECT_EQ(parse_eval_mode("deltaonly"), EvalMode::DeltaOnly);
    EXPECT_FALSE(parse_eval_mode("fast").has_value());
}

TEST(Schema, MismatchedTableRejected) {
    Database db{{"edges", relation(make_schema({{"a", Int}, {"b", Int}}), {})}};
    EXPECT_THROW(eval(queries::transitive_closure(Category::Set), db), SchemaError);
}
