#include <doctest.h>

#include <chrono>
#include <sstream>
#include <thread>

#include "partsat/formula.hpp"
#include "partsat/rng.hpp"
#include "partsat/solver.hpp"
#include "support/hard_cnf.hpp"
#include "support/random_cnf.hpp"
#include "support/truth_table.hpp"

using namespace partsat;

namespace {

Cnf make(Var n, std::vector<Clause> clauses) {
    Cnf cnf;
    cnf.var_count = n;
    cnf.clauses = std::move(clauses);
    return cnf;
}

PartialAssignment lits(std::initializer_list<Lit> ls) {
    return PartialAssignment::from_literals(std::vector<Lit>(ls));
}

}  // namespace

TEST_CASE("unit contradiction is refuted without decisions") {
    const auto out = solve(make(1, {{1}, {-1}}));
    CHECK(out.status == SolveStatus::Unsat);
    CHECK(out.cost.decisions == 0);
    CHECK(!out.model);
}

TEST_CASE("assumption forces the other literal") {
    const auto out = solve(make(2, {{1, 2}}), lits({-1}));
    REQUIRE(out.status == SolveStatus::Sat);
    REQUIRE(out.model);
    CHECK(!out.model->test(0));
    CHECK(out.model->test(1));
}

TEST_CASE("conflicting assumptions and formula") {
    CHECK(solve(make(2, {{1}}), lits({-1})).status == SolveStatus::Unsat);
    CHECK(solve(make(3, {{1, 2}, {1, 3}, {-2, -3}}), lits({-1})).status == SolveStatus::Unsat);
    CHECK_THROWS_AS(solve(make(2, {{1}}), lits({3})), std::out_of_range);
}

TEST_CASE("empty formula and formula without clauses on some variables") {
    const auto out = solve(make(0, {}));
    CHECK(out.status == SolveStatus::Sat);
    const auto out2 = solve(make(4, {{2}}));
    REQUIRE(out2.status == SolveStatus::Sat);
    CHECK(out2.model->size() == 4);
    CHECK(out2.model->test(1));
}

TEST_CASE("random 3-CNF agrees with truth table") {
    Rng rng(11);
    int sat = 0;
    for (int i = 0; i < 200; ++i) {
        const double ratio = 3.0 + 2.0 * (i % 21) / 20.0;
        const Cnf cnf = testing::random_3cnf(20, ratio, rng);
        const auto out = solve(cnf);
        REQUIRE(is_decided(out.status));
        const bool expected = testing::truth_table_sat(cnf);
        CHECK((out.status == SolveStatus::Sat) == expected);
        if (out.model) {
            CHECK(satisfies(cnf, *out.model));
            ++sat;
        }
    }
    CHECK(sat > 20);
    CHECK(sat < 190);
}

TEST_CASE("assumptions agree with substitution") {
    Rng rng(12);
    for (int i = 0; i < 300; ++i) {
        const Cnf cnf = testing::random_3cnf(16, 4.2, rng);
        const auto vars = testing::random_vars(16, 1 + uniform_below(rng, 6), rng);
        const auto alpha = testing::random_assignment(vars, rng);
        const auto a = solve(cnf, alpha);
        const auto b = solve(substitute(cnf, alpha));
        CHECK(a.status == b.status);
        if (a.model) {
            for (const auto& [v, val] : alpha.bindings()) CHECK(a.model->test(static_cast<std::size_t>(v - 1)) == val);
        }
    }
}

TEST_CASE("deterministic cost counters") {
    Rng rng(13);
    for (int i = 0; i < 20; ++i) {
        const Cnf cnf = testing::random_3cnf(60, 4.26, rng);
        const auto first = solve(cnf);
        for (int rep = 0; rep < 5; ++rep) {
            const auto again = solve(cnf);
            CHECK(again.status == first.status);
            CHECK(again.cost.conflicts == first.cost.conflicts);
            CHECK(again.cost.decisions == first.cost.decisions);
            CHECK(again.cost.propagations == first.cost.propagations);
            CHECK(again.activity == first.activity);
        }
    }
}

TEST_CASE("conflict budget is monotone") {
    Rng rng(14);
    for (int i = 0; i < 15; ++i) {
        const Cnf cnf = testing::random_3cnf(80, 4.26, rng);
        const auto full = solve(cnf);
        REQUIRE(is_decided(full.status));
        const std::uint64_t c = full.cost.conflicts;
        // The budget that first lets this run finish is c + 1 (c when the
        // last conflict proves UNSAT at level 0).
        const std::uint64_t b = full.status == SolveStatus::Unsat ? std::max<std::uint64_t>(c, 1) : c + 1;
        for (std::uint64_t budget : {b, b + 1, b + 17, b * 3}) {
            const auto r = solve(cnf, {}, Budget::conflicts(budget));
            CHECK(r.status == full.status);
            CHECK(r.cost.conflicts == c);
        }
        if (c > 1) {
            const auto r = solve(cnf, {}, Budget::conflicts(c - 1));
            CHECK(r.status == SolveStatus::BudgetExceeded);
            CHECK(r.cost.conflicts == c - 1);
        }
    }
}

TEST_CASE("hard instance exhausts a small budget") {
    const auto out = solve(testing::pigeonhole(8), {}, Budget::conflicts(50));
    CHECK(out.status == SolveStatus::BudgetExceeded);
    CHECK(out.cost.conflicts == 50);
}

TEST_CASE("pigeonhole is refuted") {
    CHECK(solve(testing::pigeonhole(5)).status == SolveStatus::Unsat);
}

TEST_CASE("pre-set cancellation returns immediately") {
    Budget b;
    b.cancel = CancelFlag{};
    b.cancel->request();
    const auto out = solve(testing::pigeonhole(9), {}, b);
    CHECK(out.status == SolveStatus::Cancelled);
    CHECK(out.cost.conflicts == 0);
}

TEST_CASE("cancellation from another thread stops a running solve") {
    Budget b;
    b.cancel = CancelFlag{};
    std::thread stopper([flag = *b.cancel] {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        flag.request();
    });
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = solve(testing::pigeonhole(11), {}, b);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stopper.join();
    CHECK(out.status == SolveStatus::Cancelled);
    CHECK(elapsed < 2.0);
}

TEST_CASE("wall-clock budget") {
    Budget b;
    b.max_wall_seconds = 0.05;
    const auto out = solve(testing::pigeonhole(11), {}, b);
    CHECK(out.status == SolveStatus::BudgetExceeded);
    CHECK(out.cost.wall_seconds < 1.0);
}

TEST_CASE("activity snapshot is normalized") {
    const auto out = solve(testing::pigeonhole(6));
    double total = 0.0;
    for (double a : out.activity) {
        CHECK(a >= 0.0);
        total += a;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    const auto trivial = solve(make(3, {{1}}));
    for (double a : trivial.activity) CHECK(a == 0.0);
}

TEST_CASE("propagate_only") {
    SUBCASE("implication chain") {
        const auto r = propagate_only(make(3, {{-1, 2}, {-2, 3}}), lits({1}));
        CHECK(r.status == PropagationStatus::DecidedSat);
        CHECK(r.implied == std::vector<Lit>{2, 3});
    }
    SUBCASE("empty clause") {
        CHECK(propagate_only(make(2, {{}})).status == PropagationStatus::DecidedUnsat);
    }
    SUBCASE("undecided without assumptions") {
        CHECK(propagate_only(make(3, {{1, 2}, {-2, 3}})).status == PropagationStatus::Undecided);
    }
    SUBCASE("contradicting assumption") {
        CHECK(propagate_only(make(2, {{1}}), lits({-1})).status == PropagationStatus::DecidedUnsat);
    }
}

TEST_CASE("SUPB sampling on trivial varsets") {
    Rng rng(15);
    const Cnf cnf = testing::random_3cnf(30, 4.26, rng);
    std::vector<Var> all;
    for (Var v = 1; v <= 30; ++v) all.push_back(v);
    CHECK(verify_supb_sampled(cnf, DecompositionSet::of(all), 200, 1) == 1.0);
    CHECK(verify_supb_sampled(cnf, DecompositionSet::of({}), 10, 1) == 0.0);
}

TEST_CASE("proof log lemmas are reverse-unit-propagation consequences") {
    Rng rng(16);
    int checked = 0;
    for (int i = 0; i < 10; ++i) {
        const Cnf cnf = testing::random_3cnf(50, 4.6, rng);
        std::ostringstream proof;
        SolverOptions opt;
        opt.proof = &proof;
        const auto out = solve(cnf, {}, {}, opt);
        if (out.status != SolveStatus::Unsat) continue;
        Cnf db = cnf;
        std::istringstream in(proof.str());
        std::string line;
        bool saw_empty = false;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string first;
            ls >> first;
            if (first == "d") continue;
            Clause lemma;
            Lit l = std::stoi(first);
            while (l != 0) {
                lemma.push_back(l);
                ls >> l;
            }
            PartialAssignment negation;
            for (Lit x : lemma) negation.bind(var_of(x), x < 0);
            CHECK(propagate_only(db, negation).status == PropagationStatus::DecidedUnsat);
            if (lemma.empty()) saw_empty = true;
            db.clauses.push_back(lemma);
            ++checked;
        }
        CHECK(saw_empty);
    }
    CHECK(checked > 0);
}
