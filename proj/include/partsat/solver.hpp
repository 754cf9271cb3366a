#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "partsat/bitvec.hpp"
#include "partsat/decomposition_set.hpp"
#include "partsat/formula.hpp"

namespace partsat {

enum class SolveStatus { Sat, Unsat, BudgetExceeded, Cancelled };

std::string_view to_string(SolveStatus s);
std::optional<SolveStatus> parse_solve_status(std::string_view s);
inline bool is_decided(SolveStatus s) { return s == SolveStatus::Sat || s == SolveStatus::Unsat; }

struct SolveCost {
    std::uint64_t conflicts = 0;
    std::uint64_t decisions = 0;     // heuristic decisions; assumption levels are not counted
    std::uint64_t propagations = 0;  // literals dequeued from the trail
    double wall_seconds = 0.0;
};

struct SolveOutcome {
    SolveStatus status = SolveStatus::Unsat;
    std::optional<BitVec> model;  // bit v-1 = value of variable v; present iff Sat
    SolveCost cost;
    // Conflict activity per variable (index v-1) at termination, normalized
    // to sum 1. All zeros when no conflict ever bumped a variable.
    std::vector<double> activity;
};

// Thread-safe cancellation signal shared between a leader and running solves.
class CancelFlag {
public:
    CancelFlag() : flag_(std::make_shared<std::atomic<bool>>(false)) {}
    void request() const { flag_->store(true, std::memory_order_relaxed); }
    bool requested() const { return flag_->load(std::memory_order_relaxed); }

private:
    std::shared_ptr<std::atomic<bool>> flag_;
};

struct Budget {
    std::optional<std::uint64_t> max_conflicts;
    std::optional<double> max_wall_seconds;
    std::optional<CancelFlag> cancel;

    static Budget unlimited() { return {}; }
    static Budget conflicts(std::uint64_t n) {
        Budget b;
        b.max_conflicts = n;
        return b;
    }
};

// The cancel flag and the wall-clock limit are polled once per this many
// propagated literals, and at every conflict.
inline constexpr std::uint64_t kCancelCheckInterval = 1024;
// Restart k (0-based) happens after luby(k) * kRestartUnit conflicts.
inline constexpr std::uint64_t kRestartUnit = 100;
// Learnt-clause reduction happens when the conflict count reaches
// kReduceFirst, then every kReduceFirst + k * kReduceIncrement conflicts.
inline constexpr std::uint64_t kReduceFirst = 2000;
inline constexpr std::uint64_t kReduceIncrement = 300;

struct SolverOptions {
    // When set, learnt clauses and deletions are written in DRAT text form.
    std::ostream* proof = nullptr;
};

// Complete, deterministic CDCL. Identical (cnf, assumptions, conflict budget)
// give identical status and identical conflicts/decisions/propagations.
// A Sat result whose model fails the independent checker throws
// std::logic_error.
SolveOutcome solve(const Cnf& cnf, const PartialAssignment& assumptions = {}, const Budget& budget = {},
                   const SolverOptions& options = {});

enum class PropagationStatus { DecidedSat, DecidedUnsat, Undecided };

std::string_view to_string(PropagationStatus s);

struct PropagationResult {
    PropagationStatus status = PropagationStatus::Undecided;
    std::vector<Lit> implied;  // trail literals other than the assumptions, in trail order
};

// Unit propagation to fixpoint with no decisions.
PropagationResult propagate_only(const Cnf& cnf, const PartialAssignment& assumptions = {});

// Fraction of `trials` uniform assignments of the members of `varset` on
// which propagate_only settles the formula.
double verify_supb_sampled(const Cnf& cnf, const DecompositionSet& varset, std::size_t trials, std::uint64_t seed);

}  // namespace partsat
