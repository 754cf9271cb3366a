#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "partsat/cli.hpp"
#include "partsat/encoders.hpp"
#include "partsat/estimator.hpp"
#include "partsat/journal.hpp"
#include "partsat/orchestrator.hpp"
#include "partsat/rng.hpp"
#include "partsat/solver.hpp"

using namespace partsat;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

json cli_json(std::vector<std::string> args) {
    args.push_back("--json");
    const Run r = run_cli(args);
    INFO(r.err);
    REQUIRE(r.code == 0);
    return json::parse(r.out);
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("partsat-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    return {std::istreambuf_iterator<char>(f), {}};
}

// Bivium with 60 keystream bits and `free_vars` starting variables left open.
std::string bivium_toy(const TempDir& dir, std::uint64_t seed, std::size_t free_vars, std::size_t len = 60) {
    const std::string path = dir / ("toy" + std::to_string(seed) + "-" + std::to_string(free_vars) + ".cnf");
    const Run r = run_cli({"encode", "--cipher", "bivium", "--len", std::to_string(len), "--weaken",
                       std::to_string(177 - free_vars), "--seed", std::to_string(seed), "--cnf", path});
    REQUIRE(r.code == 0);
    return path;
}

}  // namespace

TEST_CASE("encode writes instances with meta") {
    TempDir dir;
    const json b = cli_json({"encode", "--cipher", "bivium", "--len", "200", "--seed", "7", "--cnf", dir / "b.cnf"});
    CHECK(b["starting_vars"] == 177);
    CHECK(b["free_starting_vars"] == 177);
    const Cnf cnf = read_dimacs_file(dir / "b.cnf");
    const auto meta = parse_meta_comments(cnf.comments);
    REQUIRE(meta);
    CHECK(meta->starting_vars.size() == 177);
    CHECK(meta->keystream_len == 200);
    CHECK(!meta->secret_witness);

    const json g = cli_json({"encode", "--cipher", "grain", "--len", "160", "--weaken", "44", "--cnf", dir / "g.cnf"});
    CHECK(g["free_starting_vars"] == 116);
    CHECK(parse_meta_comments(read_dimacs_file(dir / "g.cnf").comments)->weakened_k == 44);

    const json a = cli_json({"encode", "--cipher", "a51", "--len", "114", "--cnf", dir / "a.cnf"});
    CHECK(a["starting_vars"] == 64);

    CHECK(run_cli({"encode", "--cipher", "bivium", "--len", "200", "--seed", "7", "--cnf", dir / "b2.cnf"}).code == 0);
    CHECK(slurp(dir / "b.cnf") == slurp(dir / "b2.cnf"));

    CHECK(run_cli({"encode", "--cipher", "bivium", "--len", "200", "--seed", "7", "--unsafe-witness", "--cnf", dir / "w.cnf"})
              .code == 0);
    const auto wmeta = parse_meta_comments(read_dimacs_file(dir / "w.cnf").comments);
    REQUIRE(wmeta->secret_witness);
    CHECK(keystream_oracle(Cipher::Bivium, *wmeta->secret_witness, 200) == meta->keystream);

    const Run to_stdout = run_cli({"encode", "--cipher", "a51"});
    CHECK(to_stdout.code == 0);
    CHECK(parse_dimacs(to_stdout.out).var_count == read_dimacs_file(dir / "a.cnf").var_count);

    CHECK(run_cli({"encode", "--cipher", "des"}).code == 1);
    CHECK(run_cli({"encode", "--cipher", "a51", "--weaken", "3"}).code == 1);
    CHECK(run_cli({"encode"}).code == 1);
}

TEST_CASE("estimate reports F with its interval") {
    TempDir dir;
    const std::string toy = bivium_toy(dir, 1, 8);
    const json j = cli_json({"estimate", "--cnf", toy, "-n", "1000", "--seed", "4", "--metric", "wall"});
    CHECK(j["members"].size() == 8);
    const PredictiveEstimate e = estimate_from_json(j["estimate"]);
    CHECK(e.n == 1000);
    CHECK(e.d == 8);
    CHECK(e.metric == Metric::WallSeconds);
    CHECK(e.ci_lower <= e.f_value);
    CHECK(e.f_value <= e.ci_upper);
    CHECK(estimate_to_json(e) == j["estimate"]);

    const json one = cli_json({"estimate", "--cnf", toy, "-n", "1"});
    CHECK(one["estimate"]["low_confidence"] == true);
    const Run text = run_cli({"estimate", "--cnf", toy, "-n", "1"});
    CHECK(text.out.find("low confidence") != std::string::npos);

    // An empty decomposition set costs exactly one solve of the whole formula.
    const Cnf hard = read_dimacs_file(toy);
    const json zero = cli_json({"estimate", "--cnf", toy, "--vars", "", "-n", "5"});
    CHECK(zero["estimate"]["d"] == 0);
    CHECK(zero["estimate"]["f_value"].get<double>() == static_cast<double>(solve(hard).cost.conflicts));
}

TEST_CASE("estimate on a random formula lands in its interval around the exact total") {
    TempDir dir;
    // Planted-solution 3-CNF over 40 vars: subproblems need real search.
    Rng rng(9);
    Cnf cnf;
    cnf.var_count = 40;
    std::vector<bool> hidden(41);
    for (int v = 1; v <= 40; ++v) hidden[v] = rng() >> 63;
    while (cnf.clauses.size() < 170) {
        Clause c;
        bool sat = false;
        while (c.size() < 3) {
            const Var v = static_cast<Var>(1 + uniform_below(rng, 40));
            bool dup = false;
            for (Lit l : c) dup = dup || var_of(l) == v;
            if (dup) continue;
            const Lit l = (rng() >> 63) ? v : -v;
            sat = sat || ((l > 0) == hidden[v]);
            c.push_back(l);
        }
        if (sat) cnf.clauses.push_back(c);
    }
    write_dimacs_file(cnf, dir / "r.cnf");
    const auto dset = DecompositionSet::of({1, 2, 3, 4, 5, 6, 7, 8});
    const double exact = exact_total_cost(cnf, dset, Metric::Conflicts).total;
    const json j = cli_json({"estimate", "--cnf", dir / "r.cnf", "--vars", "1-8", "-n", "1000", "--gamma", "0.975"});
    const PredictiveEstimate e = estimate_from_json(j["estimate"]);
    MESSAGE("F " << e.f_value << " in [" << e.ci_lower << ", " << e.ci_upper << "], exact " << exact);
    CHECK(e.sample_stddev > 0);
    CHECK(e.ci_contains(exact));

    // Same seed, same numbers.
    CHECK(cli_json({"estimate", "--cnf", dir / "r.cnf", "--vars", "1-8", "-n", "1000", "--gamma", "0.975"}) == j);
}

TEST_CASE("optimize on the planted space and on a formula") {
    TempDir dir;
    const json p = cli_json({"optimize", "--planted", "0110100111", "--scratch", dir.path.string()});
    CHECK(p["best"]["vars"] == json({2, 3, 5, 8, 9, 10}));
    CHECK(fs::exists(dir / "optimize-trace.jsonl"));
    const json sa = cli_json({"optimize", "--planted", "0110100111", "--algorithm", "sa", "--journal", dir / "sa.jsonl"});
    CHECK(sa["best"]["vars"] == json({2, 3, 5, 8, 9, 10}));

    const json zero = cli_json({"optimize", "--planted", "0110100111", "--max-evaluations", "1", "--journal", dir / "z.jsonl"});
    CHECK(zero["start_only"] == true);
    CHECK(zero["best"]["vars"] == json({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));

    // Width 3: the tabu crawl visits every point exactly once.
    const json w3 = cli_json({"optimize", "--planted", "010", "--journal", dir / "w3.jsonl"});
    CHECK(w3["evaluations"] == 8);
    CHECK(w3["reason"] == "tabu_empty");
    const auto scan = scan_journal(dir / "w3.jsonl");
    std::set<std::string> seen;
    std::size_t evaluated = 0;
    for (const auto& r : scan.records) {
        if (r["type"] != "trace" || r["cached"].get<bool>()) continue;
        ++evaluated;
        seen.insert(r["chi"].get<std::string>());
    }
    CHECK(evaluated == 8);
    CHECK(seen.size() == 8);
    CHECK(scan.records.front()["type"] == "header");
    CHECK(scan.records.back()["type"] == "summary");

    const std::string toy = bivium_toy(dir, 2, 12);
    const json f = cli_json({"optimize", "--cnf", toy, "-n", "20", "--max-evaluations", "6", "--metric", "wall",
                             "--journal", dir / "f.jsonl"});
    CHECK(f["universe"].size() == 12);
    CHECK(f["evaluations"] == 6);
    CHECK(f["best"]["estimate"]["f_value"].get<double>() <= f["start_f"].get<double>());
    CHECK(run_cli({"optimize", "--cnf", toy, "--start", "170", "--journal", dir / "x.jsonl"}).code == 1);
}

TEST_CASE("solve inverts a weakened toy and reports against the estimate") {
    TempDir dir;
    const std::string toy = bivium_toy(dir, 3, 10, 200);
    CHECK(run_cli({"estimate", "--cnf", toy, "-n", "50", "--journal", dir / "e.jsonl"}).code == 0);
    const json j = cli_json({"solve", "--cnf", toy, "--estimate", dir / "e.jsonl", "--model-out", dir / "m.txt"});
    CHECK(j["status"] == "SAT");
    REQUIRE(j["models"].size() == 1);
    CHECK(j["models"][0]["keystream_ok"] == true);
    CHECK(j["models"][0]["satisfies"] == true);
    CHECK(j["completed"].get<std::uint64_t>() <= 1024);
    CHECK(j.contains("relative_deviation"));

    const Run v = run_cli({"verify", "--cnf", toy, "--model", dir / "m.txt"});
    CHECK(v.code == 0);
    CHECK(v.out.find("model: PASS") != std::string::npos);

    std::string bad = slurp(dir / "m.txt");
    const auto pos = bad.find(" 1 ") != std::string::npos ? bad.find(" 1 ") : bad.find(" -1 ");
    bad.replace(pos, bad.find(' ', pos + 1) - pos, bad.substr(pos, 2) == " 1" ? " -1" : " 1");
    std::ofstream(dir / "bad.txt") << bad;
    CHECK(run_cli({"verify", "--cnf", toy, "--model", dir / "bad.txt"}).code == 2);

    const json all = cli_json({"solve", "--cnf", toy, "--no-stop-on-sat", "--workers", "2"});
    CHECK(all["completed"] == 1024);
    CHECK(all["total_items"] == 1024);
}

TEST_CASE("solve on an unsatisfiable toy") {
    TempDir dir;
    Instance inst = make_instance(Cipher::Bivium, 200, 23);
    inst.meta.keystream.flip(0);
    Instance bad = tseitin_encode(build_circuit(Cipher::Bivium, 200), inst.meta.keystream);
    bad.meta = inst.meta;
    bad = weaken(bad, 171);
    write_dimacs_file(with_meta_comments(bad.cnf, bad.meta, false), dir / "u.cnf");
    const json j = cli_json({"solve", "--cnf", dir / "u.cnf", "--journal", dir / "s.jsonl"});
    CHECK(j["status"] == "UNSAT");
    CHECK(j["completed"] == 64);
    CHECK(j["models"].empty());

    // Running again resumes every item from the journal.
    const json again = cli_json({"solve", "--cnf", dir / "u.cnf", "--journal", dir / "s.jsonl"});
    CHECK(again["resumed_items"] == 64);
    CHECK(again["conflicts"] == j["conflicts"]);
    CHECK(scan_journal(dir / "s.jsonl").records.back()["type"] == "summary");

    CHECK(run_cli({"solve", "--cnf", dir / "u.cnf", "--vars", "1-30"}).code == 1);
}

TEST_CASE("verify checks journals, encoders and the SUPB property") {
    TempDir dir;
    const std::string toy = bivium_toy(dir, 4, 6);
    CHECK(run_cli({"solve", "--cnf", toy, "--no-stop-on-sat", "--journal", dir / "j.jsonl"}).code == 0);
    const json ok = cli_json({"verify", "--journal", dir / "j.jsonl"});
    CHECK(ok["pass"] == true);

    std::vector<std::string> lines;
    {
        std::ifstream f(dir / "j.jsonl");
        for (std::string l; std::getline(f, l);) lines.push_back(l);
    }
    REQUIRE(lines.size() > 5);
    std::string& victim = lines[4];
    const auto c = victim.find("\"crc\":") + 6;
    victim[c] = victim[c] == '1' ? '2' : '1';
    {
        std::ofstream f(dir / "j.jsonl", std::ios::trunc);
        for (const auto& l : lines) f << l << "\n";
    }
    const Run bad = run_cli({"verify", "--journal", dir / "j.jsonl"});
    CHECK(bad.code == 2);
    CHECK(bad.out.find("line 5") != std::string::npos);
    CHECK(run_cli({"solve", "--cnf", toy, "--no-stop-on-sat", "--journal", dir / "j.jsonl"}).code == 2);

    for (const char* cipher : {"a51", "bivium", "grain"}) {
        CAPTURE(cipher);
        CHECK(run_cli({"verify", "--encoder", cipher, "--states", "200"}).code == 0);
        const Run fault = run_cli({"verify", "--encoder", cipher, "--states", "200", "--inject-fault"});
        CHECK(fault.code == 2);
        CHECK(fault.out.find("FAIL") != std::string::npos);
    }

    const json supb = cli_json({"verify", "--cnf", toy, "--supb", "100"});
    CHECK(supb["pass"] == true);
    CHECK(run_cli({"verify"}).code == 1);
}

TEST_CASE("exit codes, config file and environment") {
    TempDir dir;
    const std::string toy = bivium_toy(dir, 5, 6);
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"estimate"}).code == 1);
    CHECK(run_cli({"estimate", "--cnf", toy, "--metric", "joules"}).code == 1);
    CHECK(run_cli({"estimate", "--cnf", dir / "missing.cnf"}).code == 1);
    CHECK(run_cli({"--help"}).code == 0);

    // A zero conflict budget censors every draw of a formula that needs search.
    std::ofstream(dir / "php.cnf") << "p cnf 6 9\n1 2 0\n3 4 0\n5 6 0\n-1 -3 0\n-1 -5 0\n-3 -5 0\n-2 -4 0\n-2 -6 0\n-4 -6 0\n";
    const Run censored = run_cli({"estimate", "--cnf", dir / "php.cnf", "--vars", "", "-n", "3", "--max-conflicts", "0"});
    CHECK(censored.code == 3);
    CHECK(censored.out.find("invalid") != std::string::npos);

    std::ofstream(dir / "run.conf") << "# defaults for this experiment\n[solve]\nworkers = 3\nno-stop-on-sat = true\n";
    const json cfg = cli_json({"--config", dir / "run.conf", "solve", "--cnf", toy});
    CHECK(cfg["workers"] == 3);
    CHECK(cfg["stop_on_sat"] == false);
    CHECK(cfg["completed"] == 64);

    ::setenv("PARTSAT_WORKERS", "2", 1);
    CHECK(cli_json({"--config", dir / "run.conf", "solve", "--cnf", toy})["workers"] == 2);
    CHECK(cli_json({"--config", dir / "run.conf", "solve", "--cnf", toy, "--workers", "4"})["workers"] == 4);
    ::unsetenv("PARTSAT_WORKERS");

    std::ofstream(dir / "typo.conf") << "[solve]\nwrokers = 3\n";
    CHECK(run_cli({"--config", dir / "typo.conf", "solve", "--cnf", toy}).code == 1);

    ::setenv("PARTSAT_SCRATCH", dir.path.c_str(), 1);
    CHECK(run_cli({"optimize", "--planted", "0101"}).code == 0);
    CHECK(fs::exists(dir / "optimize-trace.jsonl"));
    ::unsetenv("PARTSAT_SCRATCH");
}
