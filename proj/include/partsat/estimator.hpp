#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "partsat/bitvec.hpp"
#include "partsat/decomposition_set.hpp"
#include "partsat/formula.hpp"
#include "partsat/solver.hpp"

namespace partsat {

// Cost observable used as the value of one draw of the runtime variable.
// Conflicts are deterministic and hardware-independent; wall seconds are
// kept for timing-style reports and are not reproducible between runs.
enum class Metric { Conflicts, WallSeconds };

std::string_view to_string(Metric m);
std::optional<Metric> parse_metric(std::string_view s);  // "conflicts" | "wall" | "wall_seconds"
double metric_value(const SolveCost& cost, Metric m);

struct RandomSample {
    DecompositionSet dset;
    std::uint64_t seed = 0;
    std::vector<BitVec> assignments;  // each of width dset.d()

    std::size_t size() const { return assignments.size(); }
};

// N i.i.d. uniform assignments of the members of dset, with replacement.
// Bit k of an assignment comes from the top bit of one mt19937_64 draw.
RandomSample draw_sample(const DecompositionSet& dset, std::size_t n, std::uint64_t seed);

struct Observation {
    BitVec assignment;
    SolveStatus status = SolveStatus::Unsat;
    double cost_value = 0.0;  // zeta; for censored draws a lower bound
    bool censored = false;
    SolveCost cost;
};

// Observation for a finished solve. Censored draws take the budget limit of
// the chosen metric when it exceeds the measured value.
Observation make_observation(BitVec assignment, const SolveOutcome& outcome, const Budget& budget, Metric metric);

// Solves cnf under the assignment of dset's members. When `activity` is
// non-null it receives the solver's normalized activity snapshot.
Observation observe(const Cnf& cnf, const DecompositionSet& dset, const BitVec& assignment, const Budget& budget,
                    Metric metric, std::vector<double>* activity = nullptr);

struct PredictiveEstimate {
    double f_value = 0.0;  // 2^d * sample_mean
    double sample_mean = 0.0;
    double sample_stddev = 0.0;  // N-1 denominator; 0 when N == 1
    std::size_t n = 0;
    std::size_t d = 0;
    double gamma = 0.95;
    double delta = 0.0;  // normal_quantile(gamma)
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    std::size_t censored_count = 0;
    Metric metric = Metric::Conflicts;
    bool valid = true;          // false when every observation was censored
    bool lower_bound = false;   // censored_count > 0: F only bounds the cost from below
    bool low_confidence = false;  // N < 2, no spread estimate

    double half_width() const { return (ci_upper - ci_lower) / 2.0; }
    bool ci_contains(double total) const { return ci_lower <= total && total <= ci_upper; }
};

// F = 2^d * mean(zeta). The interval is F +/- 2^d * delta * sigma / sqrt(N)
// with delta = Phi^{-1}(gamma). Note the one-sided reading of gamma: a
// symmetric interval built this way covers with probability 2*gamma - 1,
// so gamma = 0.975 gives the usual 95% two-sided interval.
PredictiveEstimate predictive_function(std::span<const Observation> observations, std::size_t d,
                                       double gamma = 0.95, Metric metric = Metric::Conflicts);

// Inverse standard normal CDF (Wichura, AS 241 PPND16; relative accuracy
// about 1e-16). Throws std::domain_error unless 0 < gamma < 1.
double normal_quantile(double gamma);

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct ExactDistribution {
    std::map<double, std::uint64_t> entries;  // cost value -> multiplicity
    std::uint64_t total_count() const;
};

struct ExactTotal {
    ExactDistribution distribution;
    double total = 0.0;              // sum of value * multiplicity
    std::vector<double> per_assignment;  // index k: assignment with bit i = (k >> i) & 1
    std::vector<Observation> observations;
};

inline constexpr std::size_t kDefaultEnumerationCap = 24;

// Solves all 2^d members of the decomposition family. Throws
// std::length_error when d exceeds `cap`.
ExactTotal exact_total_cost(const Cnf& cnf, const DecompositionSet& dset, Metric metric,
                            const Budget& budget = {}, std::size_t cap = kDefaultEnumerationCap);

}  // namespace partsat
