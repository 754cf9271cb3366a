#include "partsat/estimator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "partsat/rng.hpp"

namespace partsat {

std::string_view to_string(Metric m) { return m == Metric::Conflicts ? "conflicts" : "wall_seconds"; }

std::optional<Metric> parse_metric(std::string_view s) {
    if (s == "conflicts") return Metric::Conflicts;
    if (s == "wall" || s == "wall_seconds") return Metric::WallSeconds;
    return std::nullopt;
}

double metric_value(const SolveCost& cost, Metric m) {
    return m == Metric::Conflicts ? static_cast<double>(cost.conflicts) : cost.wall_seconds;
}

RandomSample draw_sample(const DecompositionSet& dset, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("random sample size must be at least 1");
    RandomSample sample{dset, seed, {}};
    sample.assignments.reserve(n);
    Rng rng(seed);
    for (std::size_t j = 0; j < n; ++j) {
        BitVec bits(dset.d());
        for (std::size_t k = 0; k < bits.size(); ++k) bits.set(k, rng() >> 63);
        sample.assignments.push_back(std::move(bits));
    }
    return sample;
}

Observation make_observation(BitVec assignment, const SolveOutcome& outcome, const Budget& budget, Metric metric) {
    Observation obs;
    obs.assignment = std::move(assignment);
    obs.status = outcome.status;
    obs.cost = outcome.cost;
    obs.censored = !is_decided(outcome.status);
    obs.cost_value = metric_value(outcome.cost, metric);
    if (obs.censored && metric == Metric::Conflicts && budget.max_conflicts)
        obs.cost_value = std::max(obs.cost_value, static_cast<double>(*budget.max_conflicts));
    if (obs.censored && metric == Metric::WallSeconds && budget.max_wall_seconds)
        obs.cost_value = std::max(obs.cost_value, *budget.max_wall_seconds);
    return obs;
}

Observation observe(const Cnf& cnf, const DecompositionSet& dset, const BitVec& assignment, const Budget& budget,
                    Metric metric, std::vector<double>* activity) {
    auto outcome = solve(cnf, dset.assignment(assignment), budget);
    Observation obs = make_observation(assignment, outcome, budget, metric);
    if (activity) *activity = std::move(outcome.activity);
    return obs;
}

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

PredictiveEstimate predictive_function(std::span<const Observation> observations, std::size_t d, double gamma,
                                       Metric metric) {
    if (observations.empty()) throw std::invalid_argument("predictive function needs at least one observation");
    PredictiveEstimate est;
    est.n = observations.size();
    est.d = d;
    est.gamma = gamma;
    est.delta = normal_quantile(gamma);
    est.metric = metric;

    CompensatedSum sum;
    for (const auto& o : observations) {
        if (o.cost_value < 0.0 || !std::isfinite(o.cost_value))
            throw std::invalid_argument("observation cost must be finite and nonnegative");
        sum.add(o.cost_value);
        if (o.censored) ++est.censored_count;
    }
    const double n = static_cast<double>(est.n);
    est.sample_mean = sum.value() / n;
    if (est.n > 1) {
        CompensatedSum sq;
        for (const auto& o : observations) {
            const double dev = o.cost_value - est.sample_mean;
            sq.add(dev * dev);
        }
        est.sample_stddev = std::sqrt(sq.value() / (n - 1.0));
    } else {
        est.low_confidence = true;
    }
    const double scale = std::ldexp(1.0, static_cast<int>(d));
    est.f_value = scale * est.sample_mean;
    const double half = scale * est.delta * est.sample_stddev / std::sqrt(n);
    est.ci_lower = est.f_value - half;
    est.ci_upper = est.f_value + half;
    est.lower_bound = est.censored_count > 0;
    est.valid = est.censored_count < est.n;
    return est;
}

double normal_quantile(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::domain_error("normal_quantile needs 0 < gamma < 1, got " + std::to_string(gamma));
    const double q = gamma - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? gamma : 1.0 - gamma;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                   1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                   0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                   0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                   7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

std::uint64_t ExactDistribution::total_count() const {
    std::uint64_t n = 0;
    for (const auto& [value, count] : entries) n += count;
    return n;
}

ExactTotal exact_total_cost(const Cnf& cnf, const DecompositionSet& dset, Metric metric, const Budget& budget,
                            std::size_t cap) {
    const std::size_t d = dset.d();
    if (d > cap || d >= 63)
        throw std::length_error("enumeration of 2^" + std::to_string(d) + " subproblems exceeds cap 2^" +
                                std::to_string(cap));
    dset.check_range(cnf.var_count);
    ExactTotal out;
    const std::uint64_t count = std::uint64_t{1} << d;
    out.per_assignment.reserve(count);
    out.observations.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        auto obs = observe(cnf, dset, BitVec::from_uint(k, d), budget, metric);
        out.per_assignment.push_back(obs.cost_value);
        ++out.distribution.entries[obs.cost_value];
        out.observations.push_back(std::move(obs));
    }
    CompensatedSum total;
    for (const auto& [value, mult] : out.distribution.entries) total.add(value * static_cast<double>(mult));
    out.total = total.value();
    return out;
}

}  // namespace partsat
