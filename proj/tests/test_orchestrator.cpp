#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "partsat/encoders.hpp"
#include "partsat/journal.hpp"
#include "partsat/orchestrator.hpp"
#include "partsat/rng.hpp"
#include "support/hard_cnf.hpp"
#include "support/random_cnf.hpp"

using namespace partsat;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "partsat_test_orchestrator";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    fs::remove(p);
    return p;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines, bool final_newline = true) {
    std::ofstream out(p, std::ios::trunc);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out << lines[i];
        if (i + 1 < lines.size() || final_newline) out << '\n';
    }
}

// Satisfiable toy: a weakened Bivium instance with a small decomposition set
// next to the fixed block.
struct Toy {
    Instance inst;
    DecompositionSet dset;
};

Toy bivium_toy(std::uint64_t seed, std::size_t d, std::size_t free_rest) {
    const std::size_t k = 177 - d - free_rest;
    Instance inst = weaken(make_instance(Cipher::Bivium, 60, seed), k);
    std::vector<Var> members;
    for (std::size_t i = 0; i < d; ++i) members.push_back(static_cast<Var>(177 - k - d + 1 + i));
    return {std::move(inst), DecompositionSet::of(members)};
}

}  // namespace

TEST_CASE("journal records carry checksums") {
    const nlohmann::json rec = {{"type", "item"}, {"item_id", 3}, {"wall_seconds", 0.125}};
    const std::string line = seal_record(rec);
    CHECK(open_record(line) == rec);
    std::string bad = line;
    bad[bad.find("3")] = '4';
    CHECK_THROWS_AS(open_record(bad), JournalError);
    CHECK_THROWS_AS(open_record("{not json"), JournalError);
    CHECK_THROWS_AS(open_record(R"({"type":"item"})"), JournalError);
    CHECK(crc32("123456789") == 0xCBF43926u);
}

TEST_CASE("journal scan handles torn tails and refuses corruption") {
    const fs::path p = scratch("scan.jsonl");
    {
        JournalWriter w(p);
        for (int i = 0; i < 4; ++i) w.append({{"i", i}});
    }
    auto lines = read_lines(p);
    REQUIRE(lines.size() == 4);
    CHECK(scan_journal(p).records.size() == 4);

    write_lines(p, {lines[0], lines[1], lines[2], lines[3].substr(0, 5)}, false);
    const auto torn = scan_journal(p);
    CHECK(torn.torn_tail);
    CHECK(torn.records.size() == 3);

    std::string flipped = lines[1];
    flipped[flipped.find("\"i\":1") + 4] = '7';
    write_lines(p, {lines[0], flipped, lines[2], lines[3]});
    try {
        scan_journal(p);
        FAIL("corruption not detected");
    } catch (const JournalError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("pool delivers every item once for any worker count") {
    Rng rng(4);
    const Cnf cnf = testing::random_3cnf(40, 4.0, rng);
    const auto dset = DecompositionSet::of({1, 2, 3, 4, 5, 6});
    for (std::size_t workers : {1, 2, 5}) {
        std::multiset<std::uint64_t> seen;
        const std::size_t n = run_pool(
            cnf, dset, 64, [](std::size_t i) { return WorkItem{i, BitVec::from_uint(i, 6)}; },
            PoolOptions{workers, {}, {}, 3}, [&](WorkResult&& r) {
                seen.insert(r.item_id);
                CHECK(r.worker_id < workers);
                CHECK(r.finished >= r.started);
                return true;
            });
        CHECK(n == 64);
        CHECK(seen.size() == 64);
        CHECK(std::set<std::uint64_t>(seen.begin(), seen.end()).size() == 64);
    }
    CHECK_THROWS_AS(run_pool(
                        cnf, dset, 1, [](std::size_t i) { return WorkItem{i, BitVec(6)}; }, PoolOptions{0, {}, {}, 3},
                        [](WorkResult&&) { return true; }),
                    std::invalid_argument);
}

TEST_CASE("a crashing worker's item is dispatched again") {
    Rng rng(5);
    const Cnf cnf = testing::random_3cnf(30, 4.26, rng);
    const auto dset = DecompositionSet::of({1, 2, 3, 4});
    std::mutex m;
    std::map<BitVec, int, BitVecLexLess> calls;
    SubproblemSolver flaky = [&](const Cnf& f, const PartialAssignment& a, const Budget& b) {
        BitVec key(4);
        for (int i = 0; i < 4; ++i) key.set(static_cast<std::size_t>(i), a.value(i + 1).value());
        {
            std::lock_guard lock(m);
            if (calls[key]++ == 0 && key.count() % 2 == 1) throw std::runtime_error("worker lost");
        }
        return solve(f, a, b);
    };
    EstimationOptions opt;
    opt.sample_size = 50;
    opt.seed = 9;
    opt.workers = 3;
    const auto clean = run_estimation(cnf, dset, opt);
    opt.solver = flaky;
    const auto recovered = run_estimation(cnf, dset, opt);
    CHECK(recovered.estimate.f_value == clean.estimate.f_value);

    SubproblemSolver broken = [](const Cnf&, const PartialAssignment&, const Budget&) -> SolveOutcome {
        throw std::runtime_error("always fails");
    };
    opt.solver = broken;
    CHECK_THROWS_AS(run_estimation(cnf, dset, opt), std::runtime_error);
}

TEST_CASE("estimation does not depend on the worker count") {
    Rng rng(6);
    const Cnf cnf = testing::random_3cnf(60, 4.26, rng);
    const auto dset = DecompositionSet::of(testing::random_vars(60, 10, rng));
    EstimationOptions opt;
    opt.sample_size = 200;
    opt.seed = derive_seed(6, streams::kSample);
    opt.workers = 1;
    const auto one = run_estimation(cnf, dset, opt);
    opt.workers = 8;
    const auto eight = run_estimation(cnf, dset, opt);
    CHECK(one.estimate.f_value == eight.estimate.f_value);
    CHECK(one.estimate.ci_upper == eight.estimate.ci_upper);
    CHECK(one.mean_activity == eight.mean_activity);

    // Solves without conflicts contribute all-zero activity.
    double sum = 0.0;
    for (double a : one.mean_activity) sum += a;
    std::size_t with_conflicts = 0;
    for (const auto& o : one.observations) with_conflicts += o.cost.conflicts > 0;
    CHECK(sum == doctest::Approx(static_cast<double>(with_conflicts) / 200.0).epsilon(1e-9));

    std::vector<Observation> direct;
    const auto sample = draw_sample(dset, 200, opt.seed);
    for (const auto& a : sample.assignments) direct.push_back(observe(cnf, dset, a, {}, Metric::Conflicts));
    CHECK(predictive_function(direct, 10).f_value == one.estimate.f_value);
}

TEST_CASE("estimation edge cases") {
    Rng rng(7);
    const Cnf cnf = testing::random_3cnf(40, 4.26, rng);
    const auto dset = DecompositionSet::of({1, 2, 3, 4, 5});
    EstimationOptions opt;
    opt.sample_size = 1;
    opt.seed = 3;
    const auto single = run_estimation(cnf, dset, opt);
    CHECK(single.estimate.f_value == 32.0 * single.observations[0].cost_value);
    CHECK(single.estimate.low_confidence);

    const Cnf php = testing::pigeonhole(8);
    opt.sample_size = 6;
    opt.budget = Budget::conflicts(2);
    const auto censored = run_estimation(php, DecompositionSet::of({1, 2}), opt);
    CHECK(!censored.estimate.valid);
    CHECK(censored.estimate.censored_count == 6);
}

TEST_CASE("estimation journal keeps items and the estimate") {
    Rng rng(8);
    const Cnf cnf = testing::random_3cnf(30, 4.26, rng);
    const fs::path p = scratch("estimate.jsonl");
    EstimationOptions opt;
    opt.sample_size = 20;
    opt.seed = 1;
    opt.journal = p;
    const auto run = run_estimation(cnf, DecompositionSet::of({1, 2, 3}), opt);
    const auto scan = scan_journal(p);
    REQUIRE(scan.records.size() == 22);
    CHECK(scan.records.front().at("type") == "header");
    const auto est = read_estimate_journal(p);
    REQUIRE(est);
    CHECK(est->f_value == run.estimate.f_value);
    CHECK(est->ci_lower == run.estimate.ci_lower);
    CHECK(est->n == 20);
}

TEST_CASE("gray order visits every assignment once") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 256; ++k) {
        const BitVec a = gray_assignment(k, 8);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(a.test(i)) << i;
        seen.insert(v);
        if (k > 0) CHECK(hamming_distance(a, gray_assignment(k - 1, 8)) == 1);
    }
    CHECK(seen.size() == 256);
}

TEST_CASE("aggregate one-core cost") {
    SolveRunReport empty;
    CHECK(aggregate_one_core_cost(empty) == 0.0);

    SubproblemSolver one_conflict = [](const Cnf&, const PartialAssignment&, const Budget&) {
        SolveOutcome out;
        out.status = SolveStatus::Unsat;
        out.cost.conflicts = 1;
        return out;
    };
    Cnf cnf;
    cnf.var_count = 4;
    SolvingOptions opt;
    opt.solver = one_conflict;
    opt.stop_on_sat = false;
    const auto report = run_solving(cnf, DecompositionSet::of({1, 2, 3, 4}), opt);
    CHECK(report.completed == 16);
    CHECK(aggregate_one_core_cost(report) == 16.0);

    Rng rng(10);
    const Cnf real = testing::random_3cnf(18, 4.26, rng);
    const auto dset = DecompositionSet::of(testing::random_vars(18, 7, rng));
    SolvingOptions exhaustive;
    exhaustive.stop_on_sat = false;
    exhaustive.workers = 3;
    const auto full = run_solving(real, dset, exhaustive);
    CHECK(full.completed == 128);
    CHECK(aggregate_one_core_cost(full) == exact_total_cost(real, dset, Metric::Conflicts).total);
}

TEST_CASE("solving a weakened toy recovers the keystream") {
    const Toy toy = bivium_toy(21, 6, 10);
    SolvingOptions opt;
    opt.workers = 2;
    opt.stop_on_sat = false;
    const auto report = run_solving(toy.inst.cnf, toy.dset, opt);
    CHECK(report.completed == 64);
    REQUIRE(!report.sat_models.empty());
    for (const auto& m : report.sat_models) {
        CHECK(satisfies(toy.inst.cnf, m.model));
        CHECK(model_reproduces_keystream(toy.inst.meta, m.model));
    }

    opt.stop_on_sat = true;
    const auto first = run_solving(toy.inst.cnf, toy.dset, opt);
    CHECK(first.sat_models.size() == 1);
    CHECK(first.completed <= 64);
}

TEST_CASE("an unsatisfiable toy completes every item without a model") {
    Instance inst = make_instance(Cipher::Bivium, 200, 23);
    InstanceMeta meta = inst.meta;
    meta.keystream.flip(0);
    Instance bad = tseitin_encode(build_circuit(Cipher::Bivium, 200), meta.keystream);
    bad.meta.secret_witness = inst.meta.secret_witness;
    bad = weaken(bad, 177 - 12);
    std::vector<Var> members;
    for (Var v = 7; v <= 12; ++v) members.push_back(v);
    SolvingOptions opt;
    opt.stop_on_sat = true;
    const auto report = run_solving(bad.cnf, DecompositionSet::of(members), opt);
    CHECK(report.completed == 64);
    CHECK(report.sat_models.empty());
}

TEST_CASE("completed set and aggregate are independent of the worker count") {
    Rng rng(12);
    const Cnf cnf = testing::random_3cnf(45, 4.26, rng);
    const auto dset = DecompositionSet::of(testing::random_vars(45, 6, rng));
    SolvingOptions opt;
    opt.stop_on_sat = false;
    std::optional<SolveRunReport> base;
    for (std::size_t w : {1, 4, 8}) {
        opt.workers = w;
        const auto r = run_solving(cnf, dset, opt);
        CHECK(r.completed == 64);
        if (!base) {
            base = r;
            continue;
        }
        CHECK(r.completed_ids() == base->completed_ids());
        CHECK(r.conflicts == base->conflicts);
        CHECK(r.propagations == base->propagations);
    }
}

TEST_CASE("kill and resume reproduces the uninterrupted run") {
    Rng rng(13);
    const Cnf cnf = testing::random_3cnf(40, 4.26, rng);
    const auto dset = DecompositionSet::of(testing::random_vars(40, 6, rng));
    SolvingOptions opt;
    opt.stop_on_sat = false;
    opt.workers = 3;
    const auto straight = run_solving(cnf, dset, opt);

    const fs::path p = scratch("resume.jsonl");
    opt.journal = p;
    opt.abort_after_items = 20;
    const auto part = run_solving(cnf, dset, opt);
    CHECK(part.aborted);
    CHECK(part.completed == 20);

    // Simulate a write torn by the kill.
    {
        std::ofstream out(p, std::ios::app);
        out << R"({"type":"item","item_id":5)";
    }
    opt.abort_after_items.reset();
    const auto rest = run_solving(cnf, dset, opt);
    CHECK(!rest.aborted);
    CHECK(rest.resumed_items == 20);
    CHECK(rest.completed_ids() == straight.completed_ids());
    CHECK(rest.conflicts == straight.conflicts);
    CHECK(aggregate_one_core_cost(rest) == aggregate_one_core_cost(straight));

    // Every item appears exactly once in the final journal.
    std::multiset<std::uint64_t> ids;
    for (const auto& r : scan_journal(p).records)
        if (r.at("type") == "item") ids.insert(r.at("item_id").get<std::uint64_t>());
    CHECK(ids.size() == 64);
    CHECK(std::set<std::uint64_t>(ids.begin(), ids.end()).size() == 64);

    // Replaying a finished journal solves nothing new.
    const auto replay = run_solving(cnf, dset, opt);
    CHECK(replay.resumed_items == 64);
    CHECK(replay.completed_ids() == straight.completed_ids());
}

TEST_CASE("resume deduplicates repeated items and rejects foreign or corrupt journals") {
    Rng rng(14);
    const Cnf cnf = testing::random_3cnf(30, 4.26, rng);
    const auto dset = DecompositionSet::of({1, 2, 3, 4});
    const fs::path p = scratch("dedup.jsonl");
    SolvingOptions opt;
    opt.stop_on_sat = false;
    opt.journal = p;
    opt.abort_after_items = 5;
    run_solving(cnf, dset, opt);
    auto lines = read_lines(p);
    REQUIRE(lines.size() == 6);
    lines.push_back(lines[2]);
    write_lines(p, lines);
    opt.abort_after_items.reset();
    const auto report = run_solving(cnf, dset, opt);
    CHECK(report.resumed_items == 5);
    CHECK(report.completed == 16);

    CHECK_THROWS_AS(run_solving(cnf, DecompositionSet::of({1, 2, 3, 5}), opt), JournalError);

    lines = read_lines(p);
    lines[3][lines[3].find("\"item_id\":") + 10] = '9';
    write_lines(p, lines);
    CHECK_THROWS_AS(run_solving(cnf, dset, opt), JournalError);
}

TEST_CASE("stop_on_sat cancels running items promptly") {
    // Item 0 is satisfiable at once; every other item spins until cancelled,
    // polling the flag at the solver's check interval.
    std::atomic<int> started{0};
    std::atomic<int> cancelled{0};
    SubproblemSolver fake = [&](const Cnf& cnf, const PartialAssignment& a, const Budget& b) {
        ++started;
        SolveOutcome out;
        bool all_false = true;
        for (const auto& [v, val] : a.bindings()) all_false = all_false && !val;
        if (all_false) {
            out.status = SolveStatus::Sat;
            out.model = BitVec(static_cast<std::size_t>(cnf.var_count));
            return out;
        }
        std::uint64_t steps = 0;
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(20);
        while (std::chrono::steady_clock::now() < deadline) {
            ++steps;
            if (steps % kCancelCheckInterval == 0 && b.cancel && b.cancel->requested()) {
                ++cancelled;
                out.status = SolveStatus::Cancelled;
                out.cost.propagations = steps;
                return out;
            }
        }
        out.status = SolveStatus::BudgetExceeded;
        return out;
    };
    Cnf cnf;
    cnf.var_count = 8;
    SolvingOptions opt;
    opt.solver = fake;
    opt.workers = 4;
    opt.stop_on_sat = true;
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = run_solving(cnf, DecompositionSet::of({1, 2, 3, 4, 5, 6}), opt);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(report.sat_models.size() == 1);
    CHECK(report.completed == 1);
    CHECK(elapsed < 5.0);
    CHECK(cancelled.load() == started.load() - 1);
}

TEST_CASE("the real solver stops soon after cancellation") {
    const Cnf hard = testing::pigeonhole(11);
    Cnf easy_or_hard = hard;
    // Variable 200 = 1 satisfies the formula trivially when it appears in every clause.
    easy_or_hard.var_count = 200;
    for (auto& c : easy_or_hard.clauses) c.push_back(200);
    SolvingOptions opt;
    opt.workers = 3;
    opt.stop_on_sat = true;
    // Gray order: item 0 assigns 200 = false (hard), item 1 assigns true (SAT at once).
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = run_solving(easy_or_hard, DecompositionSet::of({200}), opt);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(report.sat_models.size() == 1);
    CHECK(elapsed < 2.0);
}
