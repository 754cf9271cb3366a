#include "partsat/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "partsat/rng.hpp"

namespace partsat {

std::uint64_t neighborhood_size(std::size_t width, std::size_t radius) {
    constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t total = 0;
    std::uint64_t binom = 1;
    for (std::size_t k = 1; k <= std::min(radius, width); ++k) {
        // binom = C(width, k), computed exactly while it fits.
        const std::uint64_t num = width - k + 1;
        if (binom > kMax / num) return kMax;
        binom = binom * num / k;
        if (total > kMax - binom) return kMax;
        total += binom;
    }
    return total;
}

std::vector<BitVec> neighbors(const BitVec& chi, std::size_t radius) {
    const std::size_t width = chi.size();
    if (neighborhood_size(width, radius) > kMaxNeighborhood)
        throw std::length_error("neighborhood of radius " + std::to_string(radius) + " in width " +
                                std::to_string(width) + " is too large to enumerate");
    std::vector<BitVec> out;
    for (std::size_t k = 1; k <= std::min(radius, width); ++k) {
        std::vector<std::size_t> pos(k);
        for (std::size_t i = 0; i < k; ++i) pos[i] = i;
        for (;;) {
            BitVec n = chi;
            for (auto p : pos) n.flip(p);
            out.push_back(std::move(n));
            std::size_t i = k;
            while (i > 0 && pos[i - 1] == width - k + (i - 1)) --i;
            if (i == 0) break;
            ++pos[i - 1];
            for (std::size_t j = i; j < k; ++j) pos[j] = pos[j - 1] + 1;
        }
    }
    return out;
}

bool sa_accept(double f_candidate, double f_current, double temperature, double unit_random) {
    if (f_candidate < f_current) return true;
    if (!(temperature > 0.0)) return f_candidate == f_current;
    return unit_random < std::exp(-(f_candidate - f_current) / temperature);
}

namespace {

std::uint64_t mix_bits(const BitVec& chi) {
    std::uint64_t h = splitmix64(chi.size());
    for (auto w : chi.words()) h = splitmix64(h ^ w);
    return h;
}

}  // namespace

std::uint64_t point_seed(std::uint64_t seed, const BitVec& chi) {
    return derive_seed(derive_seed(seed, streams::kPointSample), mix_bits(chi));
}

SampledEvaluator::SampledEvaluator(const Cnf& cnf, std::vector<Var> universe, SampledEvaluatorOptions options)
    : cnf_(cnf), universe_(std::move(universe)), options_(std::move(options)) {
    DecompositionSet::full(universe_).check_range(cnf_.var_count);
}

PointEvaluation SampledEvaluator::evaluate(const BitVec& chi) {
    const DecompositionSet dset(universe_, chi);
    EstimationOptions eo;
    eo.sample_size = options_.sample_size;
    eo.seed = point_seed(options_.seed, chi);
    eo.budget = options_.budget;
    eo.metric = options_.metric;
    eo.gamma = options_.gamma;
    eo.workers = options_.workers;
    eo.solver = options_.solver;
    EstimationRun run = run_estimation(cnf_, dset, eo);
    PointEvaluation pe;
    pe.estimate = run.estimate;
    pe.activity.reserve(universe_.size());
    for (Var v : universe_) pe.activity.push_back(run.mean_activity[static_cast<std::size_t>(v - 1)]);
    return pe;
}

double PlantedCost::value(const BitVec& chi) const {
    return 1000.0 * (1.0 + static_cast<double>(hamming_distance(chi, optimum_))) +
           37.0 * static_cast<double>(mix_bits(chi) % 7);
}

PointEvaluation PlantedCost::evaluate(const BitVec& chi) {
    if (chi.size() != optimum_.size()) throw std::invalid_argument("point width does not match the planted space");
    PointEvaluation pe;
    pe.estimate.f_value = value(chi);
    pe.estimate.sample_mean = pe.estimate.f_value;
    pe.estimate.n = 1;
    pe.estimate.d = chi.count();
    pe.estimate.ci_lower = pe.estimate.ci_upper = pe.estimate.f_value;
    pe.activity.assign(chi.size(), 1.0 / static_cast<double>(std::max<std::size_t>(chi.size(), 1)));
    return pe;
}

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::Temperature: return "temperature";
        case StopReason::Evaluations: return "evaluations";
        case StopReason::WallClock: return "wall_clock";
        case StopReason::Exhausted: return "exhausted";
        case StopReason::TabuEmpty: return "tabu_empty";
    }
    return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

class LimitWatch {
public:
    explicit LimitWatch(const SearchLimits& limits) : limits_(limits), t0_(Clock::now()) {}

    std::optional<StopReason> hit(std::size_t evaluations) const {
        if (limits_.max_evaluations && evaluations >= *limits_.max_evaluations) return StopReason::Evaluations;
        if (limits_.max_wall_seconds &&
            std::chrono::duration<double>(Clock::now() - t0_).count() >= *limits_.max_wall_seconds)
            return StopReason::WallClock;
        return std::nullopt;
    }

private:
    SearchLimits limits_;
    Clock::time_point t0_;
};

void shuffle(std::vector<BitVec>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

TraceRecord record(std::size_t iteration, const BitVec& chi, const PredictiveEstimate& est) {
    TraceRecord r;
    r.iteration = iteration;
    r.chi = chi;
    r.f = est.f_value;
    r.n = est.n;
    r.censored_count = est.censored_count;
    return r;
}

void check_start(const Evaluator& ev, const BitVec& start) {
    if (start.size() != ev.width())
        throw std::invalid_argument("start point has width " + std::to_string(start.size()) + ", expected " +
                                    std::to_string(ev.width()));
}

}  // namespace

SearchResult simulated_annealing(Evaluator& evaluator, const BitVec& start, const AnnealingOptions& options) {
    check_start(evaluator, start);
    const auto& sched = options.schedule;
    if (!(sched.q > 0.0 && sched.q < 1.0)) throw std::invalid_argument("cooling multiplier must lie in (0, 1)");

    LimitWatch watch(options.limits);
    Rng order_rng(derive_seed(options.seed, streams::kNeighborOrder));
    Rng accept_rng(derive_seed(options.seed, streams::kAcceptance));
    std::unordered_map<BitVec, PredictiveEstimate, BitVecHash> cache;

    SearchResult res;
    const PredictiveEstimate start_est = evaluator.evaluate(start).estimate;
    cache.emplace(start, start_est);
    res.evaluations = 1;

    const double t0 = sched.t0.value_or(start_est.f_value > 0.0 ? start_est.f_value / 10.0 : 1.0);
    const double t_inf = sched.t_inf.value_or(t0 * 1e-4);
    if (!(t0 > 0.0) || !(t_inf > 0.0) || !(t_inf < t0))
        throw std::invalid_argument("schedule needs 0 < T_inf < T0");

    double temperature = t0;
    BitVec center = start;
    double f_center = start_est.f_value;
    res.best = start;
    res.best_estimate = start_est;
    res.literal_best = start;
    {
        TraceRecord r = record(0, start, start_est);
        r.accepted = r.center = true;
        r.temperature = temperature;
        res.trace.push_back(std::move(r));
    }

    std::size_t radius = 1;
    std::optional<StopReason> stop;
    while (!stop) {
        if (temperature < t_inf) {
            stop = StopReason::Temperature;
            break;
        }
        if ((stop = watch.hit(res.evaluations))) break;
        if (radius > evaluator.width()) {
            stop = StopReason::Exhausted;
            break;
        }
        std::vector<BitVec> candidates;
        try {
            candidates = neighbors(center, radius);
        } catch (const std::length_error&) {
            stop = StopReason::Exhausted;
            break;
        }
        shuffle(candidates, order_rng);

        bool moved = false;
        for (const auto& chi : candidates) {
            if (temperature < t_inf) {
                stop = StopReason::Temperature;
                break;
            }
            auto it = cache.find(chi);
            const bool cached = it != cache.end();
            if (!cached) {
                if ((stop = watch.hit(res.evaluations))) break;
                it = cache.emplace(chi, evaluator.evaluate(chi).estimate).first;
                ++res.evaluations;
            }
            const PredictiveEstimate& est = it->second;
            const bool accept = sa_accept(est.f_value, f_center, temperature, unit_uniform(accept_rng));
            TraceRecord r = record(res.trace.size(), chi, est);
            r.accepted = r.center = accept;
            r.cached = cached;
            r.temperature = temperature;
            res.trace.push_back(std::move(r));
            if (sched.cool_per_evaluation) temperature *= sched.q;
            if (accept) {
                center = chi;
                f_center = est.f_value;
                res.literal_best = chi;
                if (est.f_value < res.best_estimate.f_value) {
                    res.best = chi;
                    res.best_estimate = est;
                }
                if (!sched.cool_per_evaluation) temperature *= sched.q;
                radius = 1;
                moved = true;
                break;
            }
        }
        if (stop) break;
        if (!moved) ++radius;
    }
    res.reason = *stop;
    res.start_only = res.evaluations == 1 && (res.reason == StopReason::Evaluations || res.reason == StopReason::WallClock);
    return res;
}

TabuLists::TabuLists(std::size_t width, std::size_t radius)
    : width_(width), radius_(radius), full_(neighborhood_size(width, radius)) {
    if (radius == 0) throw std::invalid_argument("radius must be at least 1");
    if (full_ > kMaxNeighborhood) throw std::length_error("tabu neighborhood too large");
}

void TabuLists::mark(const BitVec& chi) {
    if (chi.size() != width_) throw std::invalid_argument("point width does not match the tabu lists");
    if (checked(chi)) throw std::logic_error("point " + chi.to_hex() + " is already in a tabu list");
    std::uint64_t own = 0;
    for (const auto& n : neighbors(chi, radius_)) {
        if (in_l1(n)) {
            ++own;
            continue;
        }
        auto it = l2_.find(n);
        if (it == l2_.end()) continue;
        ++own;
        if (++it->second == full_) {
            l1_.insert(it->first);
            l2_.erase(it);
        }
    }
    if (own == full_)
        l1_.insert(chi);
    else
        l2_.emplace(chi, own);
}

std::vector<BitVec> TabuLists::l1() const {
    std::vector<BitVec> v(l1_.begin(), l1_.end());
    std::sort(v.begin(), v.end(), lex_less);
    return v;
}

std::vector<BitVec> TabuLists::l2() const {
    std::vector<BitVec> v;
    v.reserve(l2_.size());
    for (const auto& [p, n] : l2_) v.push_back(p);
    std::sort(v.begin(), v.end(), lex_less);
    return v;
}

std::size_t TabuLists::checked_neighbors(const BitVec& chi) const {
    auto it = l2_.find(chi);
    if (it == l2_.end()) throw std::out_of_range("point is not in L2");
    return static_cast<std::size_t>(it->second);
}

void TabuLists::check_invariants() const {
    for (const auto& p : l1_) {
        if (l2_.count(p)) throw std::logic_error("point " + p.to_hex() + " is in both L1 and L2");
        for (const auto& n : neighbors(p, radius_))
            if (!checked(n)) throw std::logic_error("L1 point " + p.to_hex() + " has an unchecked neighbor");
    }
    for (const auto& [p, count] : l2_) {
        std::uint64_t actual = 0;
        for (const auto& n : neighbors(p, radius_)) actual += checked(n);
        if (actual != count) throw std::logic_error("L2 point " + p.to_hex() + " has a stale checked count");
        if (actual == full_) throw std::logic_error("L2 point " + p.to_hex() + " has a fully checked neighborhood");
    }
}

BitVec get_new_center(const std::vector<BitVec>& candidates, const std::vector<double>& activity) {
    if (candidates.empty()) throw std::invalid_argument("get_new_center needs at least one candidate");
    const BitVec* best = nullptr;
    double best_score = 0.0;
    for (const auto& c : candidates) {
        if (activity.size() != c.size()) throw std::invalid_argument("activity width does not match the points");
        double score = 0.0;
        for (auto k : c.ones()) score += activity[k];
        if (!best || score > best_score || (score == best_score && lex_less(c, *best))) {
            best = &c;
            best_score = score;
        }
    }
    return *best;
}

SearchResult tabu_search(Evaluator& evaluator, const BitVec& start, const TabuOptions& options) {
    check_start(evaluator, start);
    LimitWatch watch(options.limits);
    Rng order_rng(derive_seed(options.seed, streams::kNeighborOrder));
    TabuLists lists(evaluator.width(), options.radius);
    std::unordered_map<BitVec, PointEvaluation, BitVecHash> seen;

    SearchResult res;
    auto evaluate = [&](const BitVec& chi) -> const PointEvaluation& {
        auto [it, fresh] = seen.emplace(chi, PointEvaluation{});
        if (!fresh) ++res.reevaluations;
        it->second = evaluator.evaluate(chi);
        ++res.evaluations;
        lists.mark(chi);
        if (options.on_mark) options.on_mark(lists);
        return it->second;
    };

    const PointEvaluation& first = evaluate(start);
    res.best = start;
    res.best_estimate = first.estimate;
    res.literal_best = start;
    {
        TraceRecord r = record(0, start, first.estimate);
        r.accepted = r.center = true;
        res.trace.push_back(std::move(r));
    }

    BitVec center = start;
    std::optional<StopReason> stop;
    while (!stop) {
        if (lists.l2_size() == 0) {
            stop = StopReason::TabuEmpty;
            break;
        }
        if ((stop = watch.hit(res.evaluations))) break;
        std::vector<BitVec> candidates = neighbors(center, options.radius);
        shuffle(candidates, order_rng);
        bool improved = false;
        for (const auto& chi : candidates) {
            if (lists.checked(chi)) continue;
            if ((stop = watch.hit(res.evaluations))) break;
            const PointEvaluation& pe = evaluate(chi);
            res.trace.push_back(record(res.trace.size(), chi, pe.estimate));
            if (pe.estimate.f_value < res.best_estimate.f_value) {
                res.best = chi;
                res.best_estimate = pe.estimate;
                improved = true;
            }
        }
        if (stop) break;
        if (improved) {
            center = res.best;
        } else {
            if (lists.l2_size() == 0) {
                stop = StopReason::TabuEmpty;
                break;
            }
            const std::vector<BitVec> l2 = lists.l2();
            const std::vector<double>& activity = seen.at(center).activity;
            center = get_new_center(l2, activity);
            if (options.on_recenter) options.on_recenter(l2, activity, center);
        }
        TraceRecord r = record(res.trace.size(), center, seen.at(center).estimate);
        r.accepted = r.center = r.cached = true;
        res.trace.push_back(std::move(r));
    }
    res.literal_best = res.best;
    res.reason = *stop;
    res.start_only = res.evaluations == 1 && (res.reason == StopReason::Evaluations || res.reason == StopReason::WallClock);
    return res;
}

nlohmann::json trace_record_json(const TraceRecord& r) {
    nlohmann::json j = {{"type", journal_kind::kTrace},
                        {"iteration", r.iteration},
                        {"chi", r.chi.to_hex()},
                        {"width", r.chi.size()},
                        {"f", r.f},
                        {"n", r.n},
                        {"censored_count", r.censored_count},
                        {"accepted", r.accepted},
                        {"center", r.center},
                        {"cached", r.cached}};
    j["temperature"] = r.temperature ? nlohmann::json(*r.temperature) : nlohmann::json(nullptr);
    return j;
}

}  // namespace partsat
