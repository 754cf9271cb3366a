#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "partsat/bitvec.hpp"
#include "partsat/decomposition_set.hpp"
#include "partsat/estimator.hpp"
#include "partsat/formula.hpp"
#include "partsat/journal.hpp"
#include "partsat/solver.hpp"

namespace partsat {

// Solves one subproblem: the formula under the assumptions, within budget.
// The budget always carries a cancel flag owned by the leader.
using SubproblemSolver = std::function<SolveOutcome(const Cnf&, const PartialAssignment&, const Budget&)>;

SubproblemSolver default_subproblem_solver();

struct WorkItem {
    std::uint64_t item_id = 0;
    BitVec assignment;  // over the members of the active decomposition set
};

struct WorkResult {
    std::uint64_t item_id = 0;
    SolveOutcome outcome;
    std::size_t worker_id = 0;
    double started = 0.0;  // seconds since the run began
    double finished = 0.0;
};

struct PoolOptions {
    std::size_t workers = 1;
    Budget budget;                 // per item; a per-item cancel flag is added
    SubproblemSolver solver;       // empty: the CDCL solver
    std::size_t max_attempts = 3;  // a solver exception re-dispatches the item up to this many times
};

// Leader/worker execution of `count` items over `options.workers` threads.
// Items are produced on demand by `make_item(i)` for i = 0..count-1, in
// that dispatch order. `on_result` runs on the calling (leader) thread,
// once per item, in completion order. Returning false stops the run:
// queued items are dropped and running ones are cancelled; their results
// are not delivered. Returns the number of delivered results.
std::size_t run_pool(const Cnf& cnf, const DecompositionSet& dset, std::size_t count,
                     const std::function<WorkItem(std::size_t)>& make_item, const PoolOptions& options,
                     const std::function<bool(WorkResult&&)>& on_result);

struct EstimationOptions {
    std::size_t sample_size = 1000;
    std::uint64_t seed = 0;  // the sample is drawn from this seed directly
    Budget budget;
    Metric metric = Metric::Conflicts;
    double gamma = 0.95;
    std::size_t workers = 1;
    SubproblemSolver solver;
    std::optional<std::filesystem::path> journal;  // items and the final estimate are appended
};

struct EstimationRun {
    PredictiveEstimate estimate;
    std::vector<Observation> observations;  // in sample order
    // Mean over the sample of each solve's normalized activity, indexed v-1.
    std::vector<double> mean_activity;
};

// Draws the sample, solves it on the pool and aggregates in sample order, so
// the result does not depend on the worker count.
EstimationRun run_estimation(const Cnf& cnf, const DecompositionSet& dset, const EstimationOptions& options);

// Gray-code enumeration: item k assigns bit i of (k ^ (k >> 1)) to member i.
BitVec gray_assignment(std::uint64_t item_id, std::size_t d);

struct SolvingOptions {
    std::size_t workers = 1;
    bool stop_on_sat = true;
    Budget budget;  // per item; unlimited by default
    std::size_t enumeration_cap = kDefaultEnumerationCap;
    SubproblemSolver solver;
    // Journal and checkpoint in one file. An existing journal for the same
    // formula and decomposition set is resumed.
    std::optional<std::filesystem::path> journal;
    // Stops after this many items have been journaled in this call, as if the
    // process had been killed; used to exercise resume.
    std::optional<std::size_t> abort_after_items;
};

struct ItemRecord {
    std::uint64_t item_id = 0;
    BitVec assignment;
    SolveStatus status = SolveStatus::Unsat;
    SolveCost cost;
    std::optional<BitVec> model;
};

struct SatModel {
    std::uint64_t item_id = 0;
    BitVec assignment;
    BitVec model;
};

struct SolveRunReport {
    DecompositionSet dset;
    std::uint64_t total_items = 0;
    std::uint64_t completed = 0;
    std::vector<ItemRecord> items;  // completed items, sorted by item_id
    std::vector<SatModel> sat_models;  // sorted by item_id
    std::uint64_t conflicts = 0;
    std::uint64_t decisions = 0;
    std::uint64_t propagations = 0;
    double solve_seconds = 0.0;  // sum of per-item wall time
    double elapsed_seconds = 0.0;
    std::size_t workers = 1;
    bool stop_on_sat = true;
    std::uint64_t resumed_items = 0;  // items taken from an existing journal
    std::uint64_t undecided_items = 0;  // completed with BUDGET_EXCEEDED
    bool aborted = false;

    std::vector<std::uint64_t> completed_ids() const;
};

SolveRunReport run_solving(const Cnf& cnf, const DecompositionSet& dset, const SolvingOptions& options);

// Sum of the per-item cost over completed items: the single-core cost of
// processing the decomposition family.
double aggregate_one_core_cost(const SolveRunReport& report, Metric metric = Metric::Conflicts);

// CRC-32 of the formula's clauses in DIMACS form (comments excluded); ties a
// journal to the formula it was written for.
std::uint32_t formula_fingerprint(const Cnf& cnf);

// Journal record types written by the library.
namespace journal_kind {
inline constexpr const char* kHeader = "header";
inline constexpr const char* kItem = "item";
inline constexpr const char* kEstimate = "estimate";
inline constexpr const char* kTrace = "trace";
inline constexpr const char* kSummary = "summary";
}  // namespace journal_kind

nlohmann::json estimate_to_json(const PredictiveEstimate& est);
PredictiveEstimate estimate_from_json(const nlohmann::json& j);

// Last "estimate" record of an estimation journal, if any.
std::optional<PredictiveEstimate> read_estimate_journal(const std::filesystem::path& path);

}  // namespace partsat
