#include <json.hpp>

#include <algorithm>
#include <functional>
#include <set>

#include "rql/checker.hpp"
#include "rql/eval.hpp"

namespace rql {

namespace {

struct Outcome {
    std::optional<Relation> rel;
    std::string failure;
};

Outcome run(const QueryPtr& q, const Database& db, EvalMode mode, int cap, std::size_t budget) {
    EvalConfig cfg;
    cfg.mode = mode;
    cfg.iterationCap = cap;
    cfg.rowBudget = budget;
    try {
        return {eval(q, db, cfg), ""};
    } catch (const NontermError& e) {
        return {std::nullopt, e.what()};
    }
}

void binders_and_uses(const Query& q, std::set<RelVarId>& bound, std::vector<RelVarId>& used) {
    if (q.kind == QueryKind::Join)
        for (auto& s : q.sources) bound.insert(s.binder);
    else if (q.binder)
        bound.insert(q.binder);
    for (auto& [step, e] : exprs_of(q)) collect_vars(*e, used);
    for (auto& [step, c] : children_of(q)) binders_and_uses(*c, bound, used);
}

bool closed(const Query& q) {
    std::set<RelVarId> bound;
    std::vector<RelVarId> used;
    binders_and_uses(q, bound, used);
    return std::all_of(used.begin(), used.end(), [&](RelVarId v) { return bound.count(v) > 0; });
}

}  // namespace

QueryPtr recursive_core(const QueryPtr& q) {
    std::function<QueryPtr(const QueryPtr&)> find = [&](const QueryPtr& n) -> QueryPtr {
        if (n->kind == QueryKind::Fix) return n;
        for (auto& [step, c] : children_of(*n))
            if (auto f = find(c)) return f;
        return nullptr;
    };
    QueryPtr f = find(q);
    return f && closed(*f) ? f : q;
}

DiffReport diff_test(const QueryPtr& query, const std::vector<Database>& datasets, int iterationCap,
                     std::size_t rowBudget) {
    DiffReport report;
    const QueryPtr q = recursive_core(query);
    RestrictionProfile linearOnly = profile_none();
    linearOnly.name = "linear-only";
    linearOnly.requireLinear = true;
    linearOnly.allowNonLinear = false;
    report.affine = check_all(q, linearOnly).has("AFFINE");

    bool strict = false, outside = false;
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        const std::string tag = "dataset " + std::to_string(i) + ": ";
        Outcome naive = run(q, datasets[i], EvalMode::Naive, iterationCap, rowBudget);
        Outcome semi = run(q, datasets[i], EvalMode::SemiNaiveFull, iterationCap, rowBudget);
        if (naive.rel && semi.rel) {
            if (!same_set(*naive.rel, *semi.rel)) {
                report.naiveMatchesSemiNaive = false;
                report.mismatches.push_back(tag + "naive gives " + std::to_string(distinct_rows(*naive.rel).size()) +
                                            " distinct rows, semi-naive " +
                                            std::to_string(distinct_rows(*semi.rel).size()));
            }
        } else if (naive.rel || semi.rel) {
            report.naiveMatchesSemiNaive = false;
            report.mismatches.push_back(tag + "only one mode terminated: " + naive.failure + semi.failure);
        }
        if (report.affine && semi.rel) {
            Outcome delta = run(q, datasets[i], EvalMode::DeltaOnly, iterationCap, rowBudget);
            if (delta.rel) {
                if (!subset_of(*delta.rel, *semi.rel)) {
                    outside = true;
                    report.mismatches.push_back(tag + "delta-only produced rows outside the semi-naive result");
                } else if (!same_set(*delta.rel, *semi.rel)) {
                    strict = true;
                }
            }
        }
    }
    if (report.affine) {
        report.deltaOnlyStrictSubset = strict && !outside;
        if (!strict) report.mismatches.push_back("delta-only evaluation lost no rows on any dataset");
    }
    return report;
}

DiffReport diff_test(const QueryPtr& q, const Database& db, int iterationCap, std::size_t rowBudget) {
    return diff_test(q, std::vector<Database>{db}, iterationCap, rowBudget);
}

std::string DiffReport::to_json() const {
    nlohmann::ordered_json j;
    j["ok"] = ok();
    j["naiveMatchesSemiNaive"] = naiveMatchesSemiNaive;
    j["affine"] = affine;
    if (deltaOnlyStrictSubset)
        j["deltaOnlyStrictSubset"] = *deltaOnlyStrictSubset;
    else
        j["deltaOnlyStrictSubset"] = nullptr;
    j["mismatches"] = mismatches;
    return j.dump(2) + "\n";
}

}  // namespace rql
