#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "partsat/bitvec.hpp"
#include "partsat/estimator.hpp"
#include "partsat/formula.hpp"
#include "partsat/orchestrator.hpp"

namespace partsat {

// Search points are masks chi over a fixed universe of starting variables.

// All points at Hamming distance 1..radius from chi: by distance, then by
// the flipped positions in lexicographic order. Throws std::length_error
// when the neighborhood would exceed kMaxNeighborhood points.
inline constexpr std::size_t kMaxNeighborhood = 1'000'000;
std::vector<BitVec> neighbors(const BitVec& chi, std::size_t radius);
std::uint64_t neighborhood_size(std::size_t width, std::size_t radius);  // saturates at UINT64_MAX

// Acceptance rule: always for an improvement, otherwise with probability
// exp(-(candidate - current) / T), decided by unit_random < that value.
bool sa_accept(double f_candidate, double f_current, double temperature, double unit_random);

struct PointEvaluation {
    PredictiveEstimate estimate;
    // Conflict activity per universe position, used to pick new tabu centers.
    std::vector<double> activity;
};

// F as a function of the point. Implementations must be deterministic in chi.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual std::size_t width() const = 0;
    virtual PointEvaluation evaluate(const BitVec& chi) = 0;
};

struct SampledEvaluatorOptions {
    std::size_t sample_size = 1000;
    std::uint64_t seed = 0;
    Budget budget;
    Metric metric = Metric::Conflicts;
    double gamma = 0.95;
    std::size_t workers = 1;
    SubproblemSolver solver;
};

// Monte Carlo F over a CNF. The sample for point chi is drawn from
// point_seed(seed, chi), and its N solves run on the worker pool.
class SampledEvaluator : public Evaluator {
public:
    SampledEvaluator(const Cnf& cnf, std::vector<Var> universe, SampledEvaluatorOptions options);
    std::size_t width() const override { return universe_.size(); }
    PointEvaluation evaluate(const BitVec& chi) override;
    const std::vector<Var>& universe() const { return universe_; }

private:
    const Cnf& cnf_;
    std::vector<Var> universe_;
    SampledEvaluatorOptions options_;
};

std::uint64_t point_seed(std::uint64_t seed, const BitVec& chi);

// Synthetic cost with a unique optimum and no other local minimum:
// F(chi) = 1000 * (1 + hamming(chi, optimum)) + 37 * (mix(chi) mod 7).
// Activity is uniform.
class PlantedCost : public Evaluator {
public:
    explicit PlantedCost(BitVec optimum) : optimum_(std::move(optimum)) {}
    std::size_t width() const override { return optimum_.size(); }
    PointEvaluation evaluate(const BitVec& chi) override;
    double value(const BitVec& chi) const;
    const BitVec& optimum() const { return optimum_; }

private:
    BitVec optimum_;
};

struct SearchLimits {
    std::optional<std::size_t> max_evaluations;  // counts the start point
    std::optional<double> max_wall_seconds;
};

struct TraceRecord {
    std::size_t iteration = 0;
    BitVec chi;
    double f = 0.0;
    std::size_t n = 0;
    std::size_t censored_count = 0;
    bool accepted = false;  // the point became the new center
    bool center = false;    // the record marks a recentering (tabu) or the start
    bool cached = false;    // F came from this run's cache, not a new evaluation
    std::optional<double> temperature;
};

enum class StopReason { Temperature, Evaluations, WallClock, Exhausted, TabuEmpty };

std::string_view to_string(StopReason r);

struct SearchResult {
    BitVec best;
    PredictiveEstimate best_estimate;
    // Simulated annealing only: the point Algorithm 1's listing would return
    // (the last accepted point, which may be worse than best).
    BitVec literal_best;
    std::vector<TraceRecord> trace;
    std::size_t evaluations = 0;     // distinct points evaluated
    std::size_t reevaluations = 0;   // evaluations of an already evaluated point (always 0)
    StopReason reason = StopReason::Exhausted;
    bool start_only = false;  // the limits allowed no evaluation beyond the start
};

struct AnnealingSchedule {
    std::optional<double> t0;      // default F(start) / 10
    double q = 0.98;               // T <- q * T
    std::optional<double> t_inf;   // default t0 * 1e-4
    bool cool_per_evaluation = true;  // false: cool once per accepted move
};

struct AnnealingOptions {
    AnnealingSchedule schedule;
    SearchLimits limits;
    std::uint64_t seed = 0;
};

SearchResult simulated_annealing(Evaluator& evaluator, const BitVec& start, const AnnealingOptions& options);

// Points with fully checked neighborhoods (L1) and checked points whose
// neighborhoods still have unchecked points (L2, with the count of checked
// neighbors).
class TabuLists {
public:
    TabuLists(std::size_t width, std::size_t radius = 1);

    // Adds chi to L2, marks it in the neighborhoods of L2 points containing
    // it, and moves points whose neighborhoods became checked to L1. A new
    // point's own neighborhood starts with the points already checked.
    void mark(const BitVec& chi);

    bool checked(const BitVec& chi) const { return in_l1(chi) || in_l2(chi); }
    bool in_l1(const BitVec& chi) const { return l1_.count(chi) != 0; }
    bool in_l2(const BitVec& chi) const { return l2_.count(chi) != 0; }
    std::size_t l1_size() const { return l1_.size(); }
    std::size_t l2_size() const { return l2_.size(); }
    std::vector<BitVec> l1() const;  // sorted by lex_less
    std::vector<BitVec> l2() const;  // sorted by lex_less
    std::size_t checked_neighbors(const BitVec& chi) const;  // for an L2 point

    // Recomputes the invariants from scratch; throws std::logic_error if any
    // fails.
    void check_invariants() const;

private:
    std::size_t width_;
    std::size_t radius_;
    std::uint64_t full_;
    std::unordered_set<BitVec, BitVecHash> l1_;
    std::unordered_map<BitVec, std::uint64_t, BitVecHash> l2_;
};

// argmax over candidates of the summed activity of their members; ties go
// to the lexicographically smallest point. Throws on an empty list.
BitVec get_new_center(const std::vector<BitVec>& candidates, const std::vector<double>& activity);

struct TabuOptions {
    std::size_t radius = 1;
    SearchLimits limits;
    std::uint64_t seed = 0;
    // Called after every mark with the current lists.
    std::function<void(const TabuLists&)> on_mark;
    // Called when the center moves through get_new_center, with the L2
    // candidates, the activity used and the chosen point.
    std::function<void(const std::vector<BitVec>&, const std::vector<double>&, const BitVec&)> on_recenter;
};

SearchResult tabu_search(Evaluator& evaluator, const BitVec& start, const TabuOptions& options);

nlohmann::json trace_record_json(const TraceRecord& r);

}  // namespace partsat
