#include "partsat/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "partsat/rng.hpp"

namespace partsat {

SubproblemSolver default_subproblem_solver() {
    return [](const Cnf& cnf, const PartialAssignment& assumptions, const Budget& budget) {
        return solve(cnf, assumptions, budget);
    };
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Finished {
    std::size_t index = 0;
    WorkItem item;
    std::optional<SolveOutcome> outcome;
    std::exception_ptr error;
    std::size_t worker = 0;
    double started = 0.0;
    double finished = 0.0;
};

class Pool {
public:
    Pool(const Cnf& cnf, const DecompositionSet& dset, std::size_t count,
         const std::function<WorkItem(std::size_t)>& make_item, const PoolOptions& options)
        : cnf_(cnf), dset_(dset), count_(count), make_item_(make_item), options_(options),
          solver_(options.solver ? options.solver : default_subproblem_solver()), t0_(Clock::now()) {}

    ~Pool() { shutdown(); }

    std::size_t run(const std::function<bool(WorkResult&&)>& on_result) {
        if (options_.workers == 0) throw std::invalid_argument("worker count must be at least 1");
        const std::size_t threads = std::min(options_.workers, std::max<std::size_t>(count_, 1));
        for (std::size_t w = 0; w < threads; ++w) threads_.emplace_back([this, w] { work(w); });

        std::vector<std::uint8_t> delivered(count_, 0);
        std::vector<std::size_t> attempts(count_, 0);
        std::size_t outstanding = count_;
        std::size_t delivered_count = 0;
        while (outstanding > 0) {
            Finished done;
            {
                std::unique_lock lock(mutex_);
                done_cv_.wait(lock, [&] { return !done_.empty(); });
                done = std::move(done_.front());
                done_.pop_front();
            }
            if (done.error) {
                if (++attempts[done.index] < options_.max_attempts) {
                    {
                        std::lock_guard lock(mutex_);
                        retry_.push_back({done.index, std::move(done.item)});
                    }
                    work_cv_.notify_one();
                    continue;
                }
                shutdown();
                std::rethrow_exception(done.error);
            }
            if (delivered[done.index]) continue;
            delivered[done.index] = 1;
            --outstanding;
            ++delivered_count;
            WorkResult result{done.item.item_id, std::move(*done.outcome), done.worker, done.started, done.finished};
            if (!on_result(std::move(result))) break;
        }
        shutdown();
        return delivered_count;
    }

private:
    void work(std::size_t worker) {
        for (;;) {
            std::size_t index = 0;
            WorkItem item;
            CancelFlag flag;
            {
                std::unique_lock lock(mutex_);
                work_cv_.wait(lock, [&] { return stop_ || !retry_.empty() || next_ < count_; });
                if (stop_) return;
                if (!retry_.empty()) {
                    index = retry_.front().first;
                    item = std::move(retry_.front().second);
                    retry_.pop_front();
                } else {
                    index = next_++;
                    lock.unlock();
                    item = make_item_(index);
                    lock.lock();
                    if (stop_) return;
                }
                running_.emplace(index, flag);
            }
            Finished done;
            done.index = index;
            done.worker = worker;
            Budget budget = options_.budget;
            budget.cancel = flag;
            done.started = seconds_since(t0_);
            try {
                done.outcome = solver_(cnf_, dset_.assignment(item.assignment), budget);
            } catch (...) {
                done.error = std::current_exception();
            }
            done.finished = seconds_since(t0_);
            done.item = std::move(item);
            {
                std::lock_guard lock(mutex_);
                running_.erase(index);
                done_.push_back(std::move(done));
            }
            done_cv_.notify_one();
        }
    }

    void shutdown() {
        {
            std::lock_guard lock(mutex_);
            stop_ = true;
            retry_.clear();
            for (auto& [index, flag] : running_) flag.request();
        }
        work_cv_.notify_all();
        for (auto& t : threads_)
            if (t.joinable()) t.join();
        threads_.clear();
    }

    const Cnf& cnf_;
    const DecompositionSet& dset_;
    const std::size_t count_;
    const std::function<WorkItem(std::size_t)>& make_item_;
    const PoolOptions& options_;
    SubproblemSolver solver_;
    const Clock::time_point t0_;

    std::mutex mutex_;
    std::condition_variable work_cv_;
    std::condition_variable done_cv_;
    std::size_t next_ = 0;
    std::deque<std::pair<std::size_t, WorkItem>> retry_;
    std::map<std::size_t, CancelFlag> running_;
    std::deque<Finished> done_;
    bool stop_ = false;
    std::vector<std::thread> threads_;
};

nlohmann::json members_json(const DecompositionSet& dset) { return nlohmann::json(dset.members()); }

nlohmann::json cost_fields(nlohmann::json j, const SolveCost& cost) {
    j["conflicts"] = cost.conflicts;
    j["decisions"] = cost.decisions;
    j["propagations"] = cost.propagations;
    j["wall_seconds"] = cost.wall_seconds;
    return j;
}

nlohmann::json item_json(std::uint64_t id, const BitVec& assignment, const SolveOutcome& outcome,
                         std::size_t worker) {
    nlohmann::json j;
    j["type"] = journal_kind::kItem;
    j["item_id"] = id;
    j["assignment"] = assignment.to_hex();
    j["status"] = std::string(to_string(outcome.status));
    j["worker"] = worker;
    if (outcome.model) j["model"] = outcome.model->to_hex();
    return cost_fields(std::move(j), outcome.cost);
}

}  // namespace

std::size_t run_pool(const Cnf& cnf, const DecompositionSet& dset, std::size_t count,
                     const std::function<WorkItem(std::size_t)>& make_item, const PoolOptions& options,
                     const std::function<bool(WorkResult&&)>& on_result) {
    dset.check_range(cnf.var_count);
    Pool pool(cnf, dset, count, make_item, options);
    return pool.run(on_result);
}

nlohmann::json estimate_to_json(const PredictiveEstimate& est) {
    return {
        {"f_value", est.f_value},
        {"sample_mean", est.sample_mean},
        {"sample_stddev", est.sample_stddev},
        {"n", est.n},
        {"d", est.d},
        {"gamma", est.gamma},
        {"delta", est.delta},
        {"ci_lower", est.ci_lower},
        {"ci_upper", est.ci_upper},
        {"censored_count", est.censored_count},
        {"metric", std::string(to_string(est.metric))},
        {"valid", est.valid},
        {"lower_bound", est.lower_bound},
        {"low_confidence", est.low_confidence},
    };
}

PredictiveEstimate estimate_from_json(const nlohmann::json& j) {
    PredictiveEstimate est;
    est.f_value = j.at("f_value").get<double>();
    est.sample_mean = j.at("sample_mean").get<double>();
    est.sample_stddev = j.at("sample_stddev").get<double>();
    est.n = j.at("n").get<std::size_t>();
    est.d = j.at("d").get<std::size_t>();
    est.gamma = j.at("gamma").get<double>();
    est.delta = j.at("delta").get<double>();
    est.ci_lower = j.at("ci_lower").get<double>();
    est.ci_upper = j.at("ci_upper").get<double>();
    est.censored_count = j.at("censored_count").get<std::size_t>();
    const auto metric = parse_metric(j.at("metric").get<std::string>());
    if (!metric) throw std::invalid_argument("unknown metric in estimate record");
    est.metric = *metric;
    est.valid = j.at("valid").get<bool>();
    est.lower_bound = j.at("lower_bound").get<bool>();
    est.low_confidence = j.at("low_confidence").get<bool>();
    return est;
}

std::optional<PredictiveEstimate> read_estimate_journal(const std::filesystem::path& path) {
    const auto scan = scan_journal(path);
    std::optional<PredictiveEstimate> last;
    for (const auto& r : scan.records)
        if (r.value("type", "") == journal_kind::kEstimate) last = estimate_from_json(r.at("estimate"));
    return last;
}

std::uint32_t formula_fingerprint(const Cnf& cnf) {
    Cnf bare;
    bare.var_count = cnf.var_count;
    bare.clauses = cnf.clauses;
    return crc32(emit_dimacs(bare));
}

EstimationRun run_estimation(const Cnf& cnf, const DecompositionSet& dset, const EstimationOptions& options) {
    const RandomSample sample = draw_sample(dset, options.sample_size, options.seed);
    const std::size_t n = sample.size();

    std::optional<JournalWriter> journal;
    if (options.journal) {
        journal.emplace(*options.journal, 0);
        journal->append({{"type", journal_kind::kHeader},
                         {"mode", "estimate"},
                         {"cnf_crc", formula_fingerprint(cnf)},
                         {"members", members_json(dset)},
                         {"n", n},
                         {"seed", options.seed},
                         {"metric", std::string(to_string(options.metric))},
                         {"gamma", options.gamma}});
    }

    std::vector<std::optional<Observation>> observations(n);
    std::vector<std::vector<double>> activities(n);
    PoolOptions pool{options.workers, options.budget, options.solver, 3};
    run_pool(
        cnf, dset, n, [&](std::size_t j) { return WorkItem{j, sample.assignments[j]}; }, pool,
        [&](WorkResult&& r) {
            const std::size_t j = static_cast<std::size_t>(r.item_id);
            if (journal) journal->append(item_json(r.item_id, sample.assignments[j], r.outcome, r.worker_id));
            observations[j] = make_observation(sample.assignments[j], r.outcome, options.budget, options.metric);
            activities[j] = std::move(r.outcome.activity);
            return true;
        });

    EstimationRun run;
    run.observations.reserve(n);
    for (auto& o : observations) run.observations.push_back(std::move(*o));
    run.estimate = predictive_function(run.observations, dset.d(), options.gamma, options.metric);
    run.mean_activity.assign(static_cast<std::size_t>(cnf.var_count), 0.0);
    for (const auto& a : activities)
        for (std::size_t v = 0; v < a.size() && v < run.mean_activity.size(); ++v) run.mean_activity[v] += a[v];
    for (auto& a : run.mean_activity) a /= static_cast<double>(n);
    if (journal) journal->append({{"type", journal_kind::kEstimate}, {"estimate", estimate_to_json(run.estimate)}});
    return run;
}

BitVec gray_assignment(std::uint64_t item_id, std::size_t d) { return BitVec::from_uint(item_id ^ (item_id >> 1), d); }

std::vector<std::uint64_t> SolveRunReport::completed_ids() const {
    std::vector<std::uint64_t> ids;
    ids.reserve(items.size());
    for (const auto& it : items) ids.push_back(it.item_id);
    return ids;
}

namespace {

ItemRecord item_from_json(const nlohmann::json& r, std::size_t d, Var var_count) {
    ItemRecord rec;
    rec.item_id = r.at("item_id").get<std::uint64_t>();
    rec.assignment = BitVec::from_hex(r.at("assignment").get<std::string>(), d);
    const auto status = parse_solve_status(r.at("status").get<std::string>());
    if (!status) throw std::invalid_argument("bad status");
    rec.status = *status;
    rec.cost.conflicts = r.at("conflicts").get<std::uint64_t>();
    rec.cost.decisions = r.at("decisions").get<std::uint64_t>();
    rec.cost.propagations = r.at("propagations").get<std::uint64_t>();
    rec.cost.wall_seconds = r.at("wall_seconds").get<double>();
    if (auto it = r.find("model"); it != r.end())
        rec.model = BitVec::from_hex(it->get<std::string>(), static_cast<std::size_t>(var_count));
    return rec;
}

nlohmann::json solve_header(const Cnf& cnf, const DecompositionSet& dset) {
    return {{"type", journal_kind::kHeader},
            {"mode", "solve"},
            {"cnf_crc", formula_fingerprint(cnf)},
            {"var_count", cnf.var_count},
            {"members", members_json(dset)},
            {"order", "gray"}};
}

}  // namespace

SolveRunReport run_solving(const Cnf& cnf, const DecompositionSet& dset, const SolvingOptions& options) {
    const auto t0 = Clock::now();
    const std::size_t d = dset.d();
    if (d > options.enumeration_cap || d >= 63)
        throw std::length_error("solving 2^" + std::to_string(d) + " subproblems exceeds the enumeration cap 2^" +
                                std::to_string(options.enumeration_cap));
    dset.check_range(cnf.var_count);
    const std::uint64_t total = std::uint64_t{1} << d;

    std::map<std::uint64_t, ItemRecord> completed;
    std::optional<JournalWriter> journal;
    if (options.journal) {
        const auto& path = *options.journal;
        const nlohmann::json header = solve_header(cnf, dset);
        if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
            const JournalScan scan = scan_journal(path);
            if (scan.records.empty()) {
                journal.emplace(path, 0);
                journal->append(header);
            } else {
                nlohmann::json found = scan.records.front();
                if (found != header)
                    throw JournalError("journal " + path.string() + " was written for a different run", 1);
                for (std::size_t i = 1; i < scan.records.size(); ++i) {
                    const auto& r = scan.records[i];
                    if (r.value("type", "") != journal_kind::kItem) continue;
                    ItemRecord rec;
                    try {
                        rec = item_from_json(r, d, cnf.var_count);
                    } catch (const std::exception& e) {
                        throw JournalError("journal record " + std::to_string(i + 1) + " is malformed: " + e.what(),
                                           i + 1);
                    }
                    if (rec.item_id >= total || rec.assignment != gray_assignment(rec.item_id, d))
                        throw JournalError("journal record " + std::to_string(i + 1) + " names an item outside the run",
                                           i + 1);
                    completed.emplace(rec.item_id, std::move(rec));  // first record wins
                }
                journal.emplace(path, scan.valid_bytes);
            }
        } else {
            journal.emplace(path, 0);
            journal->append(header);
        }
    }

    SolveRunReport report;
    report.dset = dset;
    report.total_items = total;
    report.workers = options.workers;
    report.stop_on_sat = options.stop_on_sat;
    report.resumed_items = completed.size();

    const bool sat_known = std::any_of(completed.begin(), completed.end(),
                                       [](const auto& kv) { return kv.second.status == SolveStatus::Sat; });
    if (!(options.stop_on_sat && sat_known) && !(options.abort_after_items && *options.abort_after_items == 0)) {
        std::vector<std::uint64_t> remaining;
        if (!completed.empty()) {
            remaining.reserve(total - completed.size());
            for (std::uint64_t k = 0; k < total; ++k)
                if (!completed.count(k)) remaining.push_back(k);
        }
        const bool fresh = completed.empty();
        const std::size_t count = fresh ? static_cast<std::size_t>(total) : remaining.size();
        std::size_t journaled = 0;
        PoolOptions pool{options.workers, options.budget, options.solver, 3};
        run_pool(
            cnf, dset, count,
            [&](std::size_t i) {
                const std::uint64_t id = fresh ? i : remaining[i];
                return WorkItem{id, gray_assignment(id, d)};
            },
            pool,
            [&](WorkResult&& r) {
                ItemRecord rec;
                rec.item_id = r.item_id;
                rec.assignment = gray_assignment(r.item_id, d);
                rec.status = r.outcome.status;
                rec.cost = r.outcome.cost;
                rec.model = r.outcome.model;
                if (journal) journal->append(item_json(r.item_id, rec.assignment, r.outcome, r.worker_id));
                const bool sat = rec.status == SolveStatus::Sat;
                completed.emplace(rec.item_id, std::move(rec));
                ++journaled;
                if (sat && options.stop_on_sat) return false;
                if (options.abort_after_items && journaled >= *options.abort_after_items) {
                    report.aborted = true;
                    return false;
                }
                return true;
            });
    }

    for (auto& [id, rec] : completed) {
        report.conflicts += rec.cost.conflicts;
        report.decisions += rec.cost.decisions;
        report.propagations += rec.cost.propagations;
        report.solve_seconds += rec.cost.wall_seconds;
        if (!is_decided(rec.status)) ++report.undecided_items;
        if (rec.status == SolveStatus::Sat && rec.model) report.sat_models.push_back({id, rec.assignment, *rec.model});
        report.items.push_back(std::move(rec));
    }
    report.completed = report.items.size();
    report.elapsed_seconds = seconds_since(t0);
    return report;
}

double aggregate_one_core_cost(const SolveRunReport& report, Metric metric) {
    CompensatedSum sum;
    for (const auto& it : report.items) sum.add(metric_value(it.cost, metric));
    return sum.value();
}

}  // namespace partsat
