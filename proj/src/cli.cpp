#include "rql/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "rql/checker.hpp"
#include "rql/corpus.hpp"
#include "rql/eval.hpp"
#include "rql/sqlgen.hpp"

namespace rql {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Options {
    std::string irPath;
    std::string dataDir;
    std::string corpusDir;
    std::string profile;
    std::string dialect;
    std::string mode = "seminaive";
    std::string outPath;
    std::string writeDir;
    int cap = 1000;
    int benchCap = 50;
    bool unsafe = false;
    bool noData = false;
};

QueryPtr load_ir(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read IR file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_ir(ss.str());
}

std::optional<Dialect> chosen_dialect(const Options& o) {
    if (o.dialect.empty()) return std::nullopt;
    return parse_dialect(o.dialect);
}

/// --profile wins, then RQL_PROFILE, then the dialect preset, then `full`.
RestrictionProfile chosen_profile(const Options& o) {
    auto d = chosen_dialect(o);
    RestrictionProfile p;
    if (!o.profile.empty())
        p = profile_by_name(o.profile);
    else if (const char* env = std::getenv("RQL_PROFILE"); env && *env)
        p = profile_by_name(env);
    else if (d)
        p = profile_for(*d);
    else
        p = profile_full();
    if (d) p.dialect = d;
    return p;
}

bool profile_given(const Options& o) {
    const char* env = std::getenv("RQL_PROFILE");
    return !o.profile.empty() || (env && *env);
}

/// Writes to --out when given, else to the command's stdout.
void deliver(const Options& o, std::ostream& out, const std::string& text) {
    if (o.outPath.empty()) {
        out << text;
        return;
    }
    std::ofstream f(o.outPath, std::ios::binary);
    if (!f) throw Error("cannot write '" + o.outPath + "'");
    f << text;
}

int cmd_check(const Options& o, std::ostream& out) {
    QueryPtr q = load_ir(o.irPath);
    CheckReport r = check_all(q, chosen_profile(o));
    deliver(o, out, r.to_json());
    return r.pass ? ExitOk : ExitViolation;
}

int cmd_emit(const Options& o, std::ostream& out, std::ostream& err) {
    QueryPtr q = load_ir(o.irPath);
    Dialect d = parse_dialect(o.dialect);
    EmitOptions opts;
    opts.allowUnchecked = o.unsafe;
    if (profile_given(o)) opts.profile = chosen_profile(o);
    try {
        SqlDoc doc = emit(q, d, opts);
        deliver(o, out, doc.text);
        return ExitOk;
    } catch (const UnsupportedFeature& e) {
        err << "rql: " << to_string(d) << " cannot run this query: " << e.what() << "\n";
        return ExitUnsupported;
    } catch (const UncheckedQuery& e) {
        err << "rql: " << e.what() << " (pass --unsafe to emit anyway)\n" << e.report.to_json();
        return ExitViolation;
    }
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
    QueryPtr q = load_ir(o.irPath);
    auto mode = parse_eval_mode(o.mode);
    if (!mode) throw Error("unknown mode '" + o.mode + "' (naive, seminaive, deltaonly)");
    Database db = load_database(o.dataDir, q);
    EvalConfig cfg;
    cfg.mode = *mode;
    cfg.iterationCap = o.cap;
    try {
        Relation r = eval(q, db, cfg);
        std::ostringstream csv;
        write_csv(csv, r);
        deliver(o, out, csv.str());
        return ExitOk;
    } catch (const NontermError& e) {
        err << "rql: " << e.what() << " (component '" << e.component << "', " << e.iterations << " iterations)\n";
        return ExitNonterminating;
    }
}

//---------------------------------------------------------------------------
// bench

std::string join_names(const std::set<std::string>& s) {
    std::string out;
    for (auto& x : s) out += (out.empty() ? "" : ",") + x;
    return out.empty() ? "-" : out;
}

ordered_json bench_entry(const ManifestEntry& m, int cap, std::size_t budget, bool& matched) {
    QueryPtr q = load_ir(m.irPath.string());
    CheckReport report = check_all(q, profile_full());
    std::set<std::string> got = violated_properties(report);
    std::set<std::string> want = m.expected.violated();

    std::vector<Database> dbs;
    for (std::size_t i = 0; i < m.datasets.size(); ++i) {
        bool onDisk = i < m.dataDirs.size() && fs::exists(m.dataDirs[i]);
        dbs.push_back(onDisk ? load_database(m.dataDirs[i], q) : gen_dataset(m.datasets[i]));
    }
    DiffReport diff = diff_test(q, dbs, cap, budget);
    bool checkEquivalence = m.expected.monotone != MonotoneKind::No;
    bool equivalenceOk = !checkEquivalence || diff.naiveMatchesSemiNaive;
    bool deltaOk = !diff.affine || diff.deltaOnlyStrictSubset.value_or(false);

    ordered_json datasets = ordered_json::array();
    for (std::size_t i = 0; i < dbs.size(); ++i) {
        EvalConfig cfg;
        cfg.iterationCap = cap;
        cfg.rowBudget = budget;
        ordered_json d{{"label", m.datasets[i].label()}, {"cyclic", m.datasets[i].cyclic}};
        try {
            EvalStats stats;
            Relation r = eval(q, dbs[i], cfg, &stats);
            d["terminated"] = true;
            d["rows"] = r.size();
            d["iterations"] = stats.max_iterations();
        } catch (const NontermError& e) {
            d["terminated"] = false;
            d["iterations"] = e.iterations;
        }
        datasets.push_back(std::move(d));
    }

    ordered_json emitted;
    for (Dialect d : all_dialects()) {
        std::string status = "ok";
        try {
            emit(q, d);
        } catch (const UnsupportedFeature&) {
            status = "unsupported";
        } catch (const UncheckedQuery& e) {
            status = "rejected:" + join_names(violated_properties(e.report));
        }
        emitted[std::string(to_string(d))] = status;
    }

    matched = got == want && equivalenceOk && deltaOk;
    ordered_json j;
    j["name"] = m.name;
    j["match"] = matched;
    j["expectedViolations"] = std::vector<std::string>(want.begin(), want.end());
    j["checkerViolations"] = std::vector<std::string>(got.begin(), got.end());
    j["naiveMatchesSemiNaive"] = checkEquivalence ? ordered_json(diff.naiveMatchesSemiNaive) : ordered_json(nullptr);
    j["deltaOnlyStrictSubset"] =
        diff.deltaOnlyStrictSubset ? ordered_json(*diff.deltaOnlyStrictSubset) : ordered_json(nullptr);
    j["datasets"] = std::move(datasets);
    j["emit"] = std::move(emitted);
    return j;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
    std::vector<ManifestEntry> entries = read_manifest(o.corpusDir);
    if (entries.empty()) throw Error("manifest in " + o.corpusDir + " lists no queries");
    const std::size_t budget = 200'000;
    ordered_json rows = ordered_json::array();
    int mismatches = 0;
    err << std::left << std::setw(10) << "query" << std::setw(28) << "expected" << std::setw(28) << "checker"
        << "result\n";
    for (auto& m : entries) {
        bool matched = false;
        ordered_json row = bench_entry(m, o.benchCap, budget, matched);
        if (!matched) ++mismatches;
        std::set<std::string> want = m.expected.violated();
        std::set<std::string> got(row["checkerViolations"].begin(), row["checkerViolations"].end());
        err << std::setw(10) << m.name << std::setw(28) << join_names(want) << std::setw(28) << join_names(got)
            << (matched ? "ok" : "MISMATCH") << "\n";
        rows.push_back(std::move(row));
    }
    ordered_json summary{{"queries", std::move(rows)}, {"mismatches", mismatches}};
    deliver(o, out, summary.dump(2) + "\n");
    return mismatches == 0 ? ExitOk : ExitViolation;
}

int cmd_corpus_list(const Options& o, std::ostream& out) {
    auto corpus = build_corpus();
    if (!o.writeDir.empty()) write_corpus(o.writeDir, corpus, !o.noData);
    std::ostringstream s;
    s << std::left << std::setw(10) << "query" << std::setw(8) << "linear" << std::setw(12) << "monotone"
      << std::setw(6) << "set" << std::setw(8) << "mutual" << std::setw(4) << "cf" << "description\n";
    auto yn = [](bool b) { return b ? "Y" : "N"; };
    for (auto& q : corpus) {
        s << std::setw(10) << q.name << std::setw(8) << yn(q.expected.linear) << std::setw(12)
          << to_string(q.expected.monotone) << std::setw(6) << yn(q.expected.set) << std::setw(8)
          << yn(q.expected.mutual) << std::setw(4) << yn(q.expected.constructorFree) << q.description << "\n";
    }
    deliver(o, out, s.str());
    return ExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Check recursive queries against restriction profiles, emit dialect SQL and evaluate them.", "rql"};
    app.require_subcommand(1);
    Options o;

    auto profileOpt = [&](CLI::App* c) {
        c->add_option("--profile", o.profile,
                      "Restriction profile (default: $RQL_PROFILE, else the dialect preset, else full)");
    };
    auto outOpt = [&](CLI::App* c) { c->add_option("--out", o.outPath, "Write the result to this file"); };

    CLI::App* check = app.add_subcommand("check", "Check an IR document against a profile");
    check->add_option("ir", o.irPath, "IR document (JSON)")->required();
    profileOpt(check);
    check->add_option("--dialect", o.dialect, "Also check dialect support");
    outOpt(check);

    CLI::App* emitCmd = app.add_subcommand("emit", "Generate SQL for a dialect");
    emitCmd->add_option("ir", o.irPath, "IR document (JSON)")->required();
    emitCmd->add_option("--dialect", o.dialect, "Target dialect")->required();
    profileOpt(emitCmd);
    emitCmd->add_flag("--unsafe", o.unsafe, "Emit despite checker errors, listing them in a comment header");
    outOpt(emitCmd);

    CLI::App* run = app.add_subcommand("run", "Evaluate an IR document over CSV tables");
    run->add_option("ir", o.irPath, "IR document (JSON)")->required();
    run->add_option("data", o.dataDir, "Directory holding <table>.csv files")->required();
    run->add_option("--mode", o.mode, "naive, seminaive or deltaonly");
    run->add_option("--cap", o.cap, "Fixpoint iteration cap")->check(CLI::PositiveNumber);
    outOpt(run);

    CLI::App* bench = app.add_subcommand("bench", "Run the benchmark suite described by a corpus manifest");
    bench->add_option("corpus", o.corpusDir, "Corpus directory with manifest.json")->required();
    bench->add_option("--cap", o.benchCap, "Fixpoint iteration cap per evaluation")->check(CLI::PositiveNumber);
    outOpt(bench);

    CLI::App* list = app.add_subcommand("corpus-list", "List the benchmark queries");
    list->add_option("--write", o.writeDir, "Materialize manifest, IR documents and datasets here");
    list->add_flag("--no-data", o.noData, "With --write, skip the CSV datasets");
    outOpt(list);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? ExitOk : ExitInputError;
    }
    try {
        if (check->parsed()) return cmd_check(o, out);
        if (emitCmd->parsed()) return cmd_emit(o, out, err);
        if (run->parsed()) return cmd_run(o, out, err);
        if (bench->parsed()) return cmd_bench(o, out, err);
        return cmd_corpus_list(o, out);
    } catch (const std::exception& e) {
        err << "rql: " << e.what() << "\n";
        return ExitInputError;
    }
}

}  // namespace rql
