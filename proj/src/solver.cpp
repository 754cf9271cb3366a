#include "partsat/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "partsat/rng.hpp"

namespace partsat {

std::string_view to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Sat: return "SAT";
        case SolveStatus::Unsat: return "UNSAT";
        case SolveStatus::BudgetExceeded: return "BUDGET_EXCEEDED";
        case SolveStatus::Cancelled: return "CANCELLED";
    }
    return "?";
}

std::optional<SolveStatus> parse_solve_status(std::string_view s) {
    for (auto st : {SolveStatus::Sat, SolveStatus::Unsat, SolveStatus::BudgetExceeded, SolveStatus::Cancelled})
        if (to_string(st) == s) return st;
    return std::nullopt;
}

std::string_view to_string(PropagationStatus s) {
    switch (s) {
        case PropagationStatus::DecidedSat: return "DECIDED_SAT";
        case PropagationStatus::DecidedUnsat: return "DECIDED_UNSAT";
        case PropagationStatus::Undecided: return "UNDECIDED";
    }
    return "?";
}

namespace {

// Internal literal: 2 * (v - 1) + (negative ? 1 : 0).
using ILit = std::uint32_t;
using IVar = std::uint32_t;
using CRef = std::uint32_t;

constexpr CRef kNoReason = ~CRef{0};
constexpr ILit kNoLit = ~ILit{0};

constexpr std::int8_t kFalse = 0;
constexpr std::int8_t kTrue = 1;
constexpr std::int8_t kUndef = 2;

inline ILit make_ilit(Lit l) { return static_cast<ILit>(2 * (var_of(l) - 1) + (l < 0 ? 1 : 0)); }
inline IVar ivar(ILit p) { return p >> 1; }
inline bool isneg(ILit p) { return p & 1u; }
inline Lit to_dimacs(ILit p) {
    const Lit v = static_cast<Lit>(ivar(p)) + 1;
    return isneg(p) ? -v : v;
}

std::uint64_t luby(std::uint64_t x) {
    // Luby sequence 1 1 2 1 1 2 4 ... at 0-based index x.
    std::uint64_t size = 1;
    std::uint64_t seq = 0;
    while (size < x + 1) {
        ++seq;
        size = 2 * size + 1;
    }
    while (size - 1 != x) {
        size = (size - 1) >> 1;
        --seq;
        x = x % size;
    }
    return std::uint64_t{1} << seq;
}

struct ClauseMeta {
    std::uint32_t start;
    std::uint32_t size;
    std::uint32_t lbd;
    float activity;
    bool learnt;
    bool deleted;
};

struct Watcher {
    CRef cref;
    ILit blocker;
};

// Binary max-heap over variables keyed by activity; equal activities are
// ordered by smaller variable index first.
class VarHeap {
public:
    explicit VarHeap(const std::vector<double>& activity) : act_(activity) {}

    void reserve(std::size_t n) { index_.assign(n, -1); }
    bool contains(IVar v) const { return index_[v] >= 0; }
    bool empty() const { return heap_.empty(); }

    void insert(IVar v) {
        if (contains(v)) return;
        index_[v] = static_cast<int>(heap_.size());
        heap_.push_back(v);
        up(heap_.size() - 1);
    }

    void increased(IVar v) {
        if (contains(v)) up(static_cast<std::size_t>(index_[v]));
    }

    IVar pop() {
        const IVar top = heap_.front();
        heap_.front() = heap_.back();
        index_[heap_.front()] = 0;
        heap_.pop_back();
        index_[top] = -1;
        if (!heap_.empty()) down(0);
        return top;
    }

private:
    bool before(IVar a, IVar b) const { return act_[a] > act_[b] || (act_[a] == act_[b] && a < b); }

    void up(std::size_t i) {
        const IVar v = heap_[i];
        while (i > 0) {
            const std::size_t parent = (i - 1) >> 1;
            if (!before(v, heap_[parent])) break;
            heap_[i] = heap_[parent];
            index_[heap_[i]] = static_cast<int>(i);
            i = parent;
        }
        heap_[i] = v;
        index_[v] = static_cast<int>(i);
    }

    void down(std::size_t i) {
        const IVar v = heap_[i];
        for (;;) {
            std::size_t child = 2 * i + 1;
            if (child >= heap_.size()) break;
            if (child + 1 < heap_.size() && before(heap_[child + 1], heap_[child])) ++child;
            if (!before(heap_[child], v)) break;
            heap_[i] = heap_[child];
            index_[heap_[i]] = static_cast<int>(i);
            i = child;
        }
        heap_[i] = v;
        index_[v] = static_cast<int>(i);
    }

    const std::vector<double>& act_;
    std::vector<IVar> heap_;
    std::vector<int> index_;
};

class CdclSolver {
public:
    CdclSolver(const Cnf& cnf, const SolverOptions& options);

    SolveOutcome solve(const PartialAssignment& assumptions, const Budget& budget);
    PropagationResult propagate_only(const PartialAssignment& assumptions);

private:
    using Clock = std::chrono::steady_clock;

    std::int8_t value(ILit p) const {
        const std::int8_t a = assigns_[ivar(p)];
        return a == kUndef ? kUndef : static_cast<std::int8_t>(a ^ static_cast<std::int8_t>(isneg(p)));
    }
    std::uint32_t decision_level() const { return static_cast<std::uint32_t>(trail_lim_.size()); }
    ILit* lits(CRef c) { return &arena_[clauses_[c].start]; }

    void enqueue(ILit p, CRef reason);
    CRef add_clause(const std::vector<ILit>& lits, bool learnt, std::uint32_t lbd);
    void attach(CRef c);
    CRef propagate();
    void analyze(CRef confl, std::vector<ILit>& out_learnt, std::uint32_t& out_btlevel);
    bool lit_redundant(ILit p, std::uint32_t abstract_levels);
    std::uint32_t abstract_level(IVar v) const { return 1u << (level_[v] & 31u); }
    std::uint32_t compute_lbd(const std::vector<ILit>& c);
    void cancel_until(std::uint32_t level);
    void bump_var(IVar v);
    void bump_clause(CRef c);
    void decay_activities();
    bool locked(CRef c);
    void reduce_db();
    void collect_garbage();
    bool all_clauses_satisfied();
    bool should_stop();
    void log_clause(const std::vector<ILit>& c, bool deletion);

    SolveOutcome finish(SolveStatus status);

    const Cnf& cnf_;
    SolverOptions options_;
    std::size_t nvars_;
    bool ok_ = true;

    std::vector<ILit> arena_;
    std::vector<ClauseMeta> clauses_;
    std::vector<CRef> learnts_;
    std::vector<std::vector<Watcher>> watches_;
    std::size_t wasted_ = 0;

    std::vector<std::int8_t> assigns_;
    std::vector<std::uint32_t> level_;
    std::vector<CRef> reason_;
    std::vector<std::int8_t> polarity_;  // 1 = last value was true
    std::vector<ILit> trail_;
    std::vector<std::uint32_t> trail_lim_;
    std::size_t qhead_ = 0;

    std::vector<double> activity_;
    double var_inc_ = 1.0;
    double cla_inc_ = 1.0;
    VarHeap heap_;

    std::vector<std::uint8_t> seen_;
    std::vector<ILit> analyze_stack_;
    std::vector<ILit> analyze_toclear_;
    std::vector<std::uint32_t> lbd_stamp_;
    std::uint32_t lbd_counter_ = 0;

    SolveCost cost_;
    Budget budget_;
    Clock::time_point start_;
    bool stop_ = false;
    SolveStatus stop_status_ = SolveStatus::Cancelled;
};

CdclSolver::CdclSolver(const Cnf& cnf, const SolverOptions& options)
    : cnf_(cnf),
      options_(options),
      nvars_(static_cast<std::size_t>(cnf.var_count)),
      watches_(2 * nvars_),
      assigns_(nvars_, kUndef),
      level_(nvars_, 0),
      reason_(nvars_, kNoReason),
      polarity_(nvars_, 0),
      activity_(nvars_, 0.0),
      heap_(activity_),
      seen_(nvars_, 0),
      lbd_stamp_(nvars_ + 1, 0) {
    heap_.reserve(nvars_);
    for (IVar v = 0; v < nvars_; ++v) heap_.insert(v);

    std::vector<ILit> buf;
    for (const auto& clause : cnf.clauses) {
        buf.clear();
        bool tautology = false;
        for (Lit l : clause) {
            if (l == 0 || var_of(l) > cnf.var_count)
                throw std::out_of_range("literal " + std::to_string(l) + " outside formula range");
            buf.push_back(make_ilit(l));
        }
        std::sort(buf.begin(), buf.end());
        buf.erase(std::unique(buf.begin(), buf.end()), buf.end());
        for (std::size_t k = 1; k < buf.size(); ++k)
            if (buf[k] == (buf[k - 1] ^ 1u)) tautology = true;
        if (tautology) continue;
        if (buf.empty()) {
            ok_ = false;
        } else if (buf.size() == 1) {
            const auto v = value(buf[0]);
            if (v == kFalse)
                ok_ = false;
            else if (v == kUndef)
                enqueue(buf[0], kNoReason);
        } else {
            add_clause(buf, false, 0);
        }
    }
}

void CdclSolver::enqueue(ILit p, CRef reason) {
    const IVar v = ivar(p);
    assigns_[v] = static_cast<std::int8_t>(!isneg(p));
    level_[v] = decision_level();
    reason_[v] = reason;
    trail_.push_back(p);
}

CRef CdclSolver::add_clause(const std::vector<ILit>& lits, bool learnt, std::uint32_t lbd) {
    const CRef c = static_cast<CRef>(clauses_.size());
    clauses_.push_back(ClauseMeta{static_cast<std::uint32_t>(arena_.size()), static_cast<std::uint32_t>(lits.size()),
                                  lbd, 0.0f, learnt, false});
    arena_.insert(arena_.end(), lits.begin(), lits.end());
    attach(c);
    if (learnt) learnts_.push_back(c);
    return c;
}

void CdclSolver::attach(CRef c) {
    const ILit* l = lits(c);
    watches_[l[0] ^ 1u].push_back(Watcher{c, l[1]});
    watches_[l[1] ^ 1u].push_back(Watcher{c, l[0]});
}

bool CdclSolver::should_stop() {
    if (budget_.cancel && budget_.cancel->requested()) {
        stop_status_ = SolveStatus::Cancelled;
        return true;
    }
    if (budget_.max_wall_seconds) {
        const double elapsed = std::chrono::duration<double>(Clock::now() - start_).count();
        if (elapsed >= *budget_.max_wall_seconds) {
            stop_status_ = SolveStatus::BudgetExceeded;
            return true;
        }
    }
    return false;
}

CRef CdclSolver::propagate() {
    CRef confl = kNoReason;
    while (qhead_ < trail_.size()) {
        const ILit p = trail_[qhead_++];
        ++cost_.propagations;
        if (cost_.propagations % kCancelCheckInterval == 0 && should_stop()) {
            stop_ = true;
            return kNoReason;
        }
        const ILit false_lit = p ^ 1u;
        auto& ws = watches_[p];
        std::size_t i = 0;
        std::size_t j = 0;
        const std::size_t n = ws.size();
        while (i < n) {
            const Watcher w = ws[i++];
            if (value(w.blocker) == kTrue) {
                ws[j++] = w;
                continue;
            }
            ILit* c = lits(w.cref);
            if (c[0] == false_lit) std::swap(c[0], c[1]);
            const ILit first = c[0];
            const Watcher nw{w.cref, first};
            if (first != w.blocker && value(first) == kTrue) {
                ws[j++] = nw;
                continue;
            }
            const std::uint32_t size = clauses_[w.cref].size;
            bool moved = false;
            for (std::uint32_t k = 2; k < size; ++k) {
                if (value(c[k]) != kFalse) {
                    std::swap(c[1], c[k]);
                    watches_[c[1] ^ 1u].push_back(nw);
                    moved = true;
                    break;
                }
            }
            if (moved) continue;
            ws[j++] = nw;
            if (value(first) == kFalse) {
                confl = w.cref;
                qhead_ = trail_.size();
                while (i < n) ws[j++] = ws[i++];
            } else {
                enqueue(first, w.cref);
            }
        }
        ws.resize(j);
        if (confl != kNoReason) break;
    }
    return confl;
}

void CdclSolver::bump_var(IVar v) {
    activity_[v] += var_inc_;
    if (activity_[v] > 1e100) {
        for (auto& a : activity_) a *= 1e-100;
        var_inc_ *= 1e-100;
    }
    heap_.increased(v);
}

void CdclSolver::bump_clause(CRef c) {
    auto& meta = clauses_[c];
    meta.activity += static_cast<float>(cla_inc_);
    if (meta.activity > 1e20f) {
        for (CRef l : learnts_) clauses_[l].activity *= 1e-20f;
        cla_inc_ *= 1e-20;
    }
}

void CdclSolver::decay_activities() {
    var_inc_ *= 1.0 / 0.95;
    cla_inc_ *= 1.0 / 0.999;
}

std::uint32_t CdclSolver::compute_lbd(const std::vector<ILit>& c) {
    ++lbd_counter_;
    std::uint32_t n = 0;
    for (ILit p : c) {
        const std::uint32_t lv = level_[ivar(p)];
        if (lbd_stamp_[lv] != lbd_counter_) {
            lbd_stamp_[lv] = lbd_counter_;
            ++n;
        }
    }
    return n;
}

void CdclSolver::analyze(CRef confl, std::vector<ILit>& out_learnt, std::uint32_t& out_btlevel) {
    int path_count = 0;
    ILit p = kNoLit;
    out_learnt.clear();
    out_learnt.push_back(kNoLit);
    std::size_t index = trail_.size();

    do {
        const auto& meta = clauses_[confl];
        if (meta.learnt) bump_clause(confl);
        const ILit* c = lits(confl);
        for (std::uint32_t j = (p == kNoLit ? 0 : 1); j < meta.size; ++j) {
            const ILit q = c[j];
            const IVar v = ivar(q);
            if (!seen_[v] && level_[v] > 0) {
                bump_var(v);
                seen_[v] = 1;
                if (level_[v] >= decision_level())
                    ++path_count;
                else
                    out_learnt.push_back(q);
            }
        }
        do {
            --index;
        } while (!seen_[ivar(trail_[index])]);
        p = trail_[index];
        confl = reason_[ivar(p)];
        seen_[ivar(p)] = 0;
        --path_count;
    } while (path_count > 0);
    out_learnt[0] = p ^ 1u;

    // Recursive minimization.
    analyze_toclear_ = out_learnt;
    std::uint32_t abstract_levels = 0;
    for (std::size_t i = 1; i < out_learnt.size(); ++i) abstract_levels |= abstract_level(ivar(out_learnt[i]));
    std::size_t keep = 1;
    for (std::size_t i = 1; i < out_learnt.size(); ++i) {
        const IVar v = ivar(out_learnt[i]);
        if (reason_[v] == kNoReason || !lit_redundant(out_learnt[i], abstract_levels))
            out_learnt[keep++] = out_learnt[i];
    }
    out_learnt.resize(keep);
    for (ILit q : analyze_toclear_) seen_[ivar(q)] = 0;

    if (out_learnt.size() == 1) {
        out_btlevel = 0;
    } else {
        std::size_t max_i = 1;
        for (std::size_t i = 2; i < out_learnt.size(); ++i)
            if (level_[ivar(out_learnt[i])] > level_[ivar(out_learnt[max_i])]) max_i = i;
        std::swap(out_learnt[1], out_learnt[max_i]);
        out_btlevel = level_[ivar(out_learnt[1])];
    }
}

bool CdclSolver::lit_redundant(ILit p, std::uint32_t abstract_levels) {
    analyze_stack_.clear();
    analyze_stack_.push_back(p);
    const std::size_t top = analyze_toclear_.size();
    while (!analyze_stack_.empty()) {
        const CRef r = reason_[ivar(analyze_stack_.back())];
        analyze_stack_.pop_back();
        const auto& meta = clauses_[r];
        const ILit* c = lits(r);
        for (std::uint32_t i = 1; i < meta.size; ++i) {
            const ILit q = c[i];
            const IVar v = ivar(q);
            if (!seen_[v] && level_[v] > 0) {
                if (reason_[v] != kNoReason && (abstract_level(v) & abstract_levels) != 0) {
                    seen_[v] = 1;
                    analyze_stack_.push_back(q);
                    analyze_toclear_.push_back(q);
                } else {
                    for (std::size_t j = top; j < analyze_toclear_.size(); ++j) seen_[ivar(analyze_toclear_[j])] = 0;
                    analyze_toclear_.resize(top);
                    return false;
                }
            }
        }
    }
    return true;
}

void CdclSolver::cancel_until(std::uint32_t level) {
    if (decision_level() <= level) return;
    for (std::size_t c = trail_.size(); c-- > trail_lim_[level];) {
        const IVar v = ivar(trail_[c]);
        assigns_[v] = kUndef;
        reason_[v] = kNoReason;
        polarity_[v] = static_cast<std::int8_t>(!isneg(trail_[c]));
        heap_.insert(v);
    }
    qhead_ = trail_lim_[level];
    trail_.resize(trail_lim_[level]);
    trail_lim_.resize(level);
}

bool CdclSolver::locked(CRef c) {
    const ILit first = lits(c)[0];
    return value(first) == kTrue && reason_[ivar(first)] == c;
}

void CdclSolver::log_clause(const std::vector<ILit>& c, bool deletion) {
    if (!options_.proof) return;
    auto& out = *options_.proof;
    if (deletion) out << "d ";
    for (ILit p : c) out << to_dimacs(p) << ' ';
    out << "0\n";
}

void CdclSolver::reduce_db() {
    std::vector<CRef> candidates;
    std::vector<CRef> kept;
    for (CRef c : learnts_) {
        const auto& meta = clauses_[c];
        if (meta.lbd <= 2 || locked(c))
            kept.push_back(c);
        else
            candidates.push_back(c);
    }
    std::sort(candidates.begin(), candidates.end(), [this](CRef a, CRef b) {
        const auto& ma = clauses_[a];
        const auto& mb = clauses_[b];
        if (ma.lbd != mb.lbd) return ma.lbd > mb.lbd;
        if (ma.activity != mb.activity) return ma.activity < mb.activity;
        return a < b;
    });
    const std::size_t remove = candidates.size() / 2;
    std::vector<ILit> buf;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const CRef c = candidates[i];
        if (i < remove) {
            auto& meta = clauses_[c];
            meta.deleted = true;
            wasted_ += meta.size;
            if (options_.proof) {
                buf.assign(lits(c), lits(c) + meta.size);
                log_clause(buf, true);
            }
        } else {
            kept.push_back(c);
        }
    }
    std::sort(kept.begin(), kept.end());
    learnts_ = std::move(kept);

    for (auto& ws : watches_)
        ws.erase(std::remove_if(ws.begin(), ws.end(), [this](const Watcher& w) { return clauses_[w.cref].deleted; }),
                 ws.end());
    if (wasted_ * 2 > arena_.size()) collect_garbage();
}

void CdclSolver::collect_garbage() {
    std::vector<CRef> remap(clauses_.size(), kNoReason);
    std::vector<ClauseMeta> fresh_meta;
    std::vector<ILit> fresh_arena;
    fresh_arena.reserve(arena_.size() - wasted_);
    for (CRef c = 0; c < clauses_.size(); ++c) {
        const auto& meta = clauses_[c];
        if (meta.deleted) continue;
        remap[c] = static_cast<CRef>(fresh_meta.size());
        ClauseMeta m = meta;
        m.start = static_cast<std::uint32_t>(fresh_arena.size());
        fresh_arena.insert(fresh_arena.end(), arena_.begin() + meta.start, arena_.begin() + meta.start + meta.size);
        fresh_meta.push_back(m);
    }
    for (auto& ws : watches_)
        for (auto& w : ws) w.cref = remap[w.cref];
    for (auto& r : reason_)
        if (r != kNoReason) r = remap[r];
    for (auto& c : learnts_) c = remap[c];
    clauses_ = std::move(fresh_meta);
    arena_ = std::move(fresh_arena);
    wasted_ = 0;
}

bool CdclSolver::all_clauses_satisfied() {
    for (const auto& clause : cnf_.clauses) {
        bool sat = false;
        for (Lit l : clause) {
            if (value(make_ilit(l)) == kTrue) {
                sat = true;
                break;
            }
        }
        if (!sat) return false;
    }
    return true;
}

SolveOutcome CdclSolver::finish(SolveStatus status) {
    SolveOutcome out;
    out.status = status;
    cost_.wall_seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    out.cost = cost_;
    out.activity.assign(nvars_, 0.0);
    double total = 0.0;
    for (double a : activity_) total += a;
    if (total > 0.0)
        for (std::size_t v = 0; v < nvars_; ++v) out.activity[v] = activity_[v] / total;
    if (status == SolveStatus::Sat) {
        BitVec model(nvars_);
        for (std::size_t v = 0; v < nvars_; ++v) model.set(v, assigns_[v] == kTrue);
        if (auto bad = first_falsified_clause(cnf_, model))
            throw std::logic_error("internal solver defect: model falsifies clause " + std::to_string(*bad));
        out.model = std::move(model);
    }
    if (status == SolveStatus::Unsat && options_.proof) *options_.proof << "0\n";
    return out;
}

SolveOutcome CdclSolver::solve(const PartialAssignment& assumptions, const Budget& budget) {
    budget_ = budget;
    start_ = Clock::now();
    if (assumptions.max_var() > cnf_.var_count)
        throw std::out_of_range("assumption on variable " + std::to_string(assumptions.max_var()) +
                                " beyond var_count " + std::to_string(cnf_.var_count));
    std::vector<ILit> assumps;
    for (Lit l : assumptions.literals()) assumps.push_back(make_ilit(l));

    if (!ok_) return finish(SolveStatus::Unsat);
    if (should_stop()) return finish(stop_status_);
    if (propagate() != kNoReason) return finish(SolveStatus::Unsat);
    if (stop_) return finish(stop_status_);

    std::vector<ILit> learnt;
    std::uint64_t restarts = 0;
    std::uint64_t restart_at = luby(restarts) * kRestartUnit;
    std::uint64_t conflicts_this_restart = 0;
    std::uint64_t next_reduce = kReduceFirst;
    std::uint64_t reductions = 0;

    for (;;) {
        const CRef confl = propagate();
        if (stop_) return finish(stop_status_);
        if (confl != kNoReason) {
            ++cost_.conflicts;
            ++conflicts_this_restart;
            if (decision_level() == 0) return finish(SolveStatus::Unsat);
            std::uint32_t btlevel = 0;
            analyze(confl, learnt, btlevel);
            cancel_until(btlevel);
            log_clause(learnt, false);
            if (learnt.size() == 1) {
                enqueue(learnt[0], kNoReason);
            } else {
                const CRef c = add_clause(learnt, true, compute_lbd(learnt));
                bump_clause(c);
                enqueue(learnt[0], c);
            }
            decay_activities();

            if (budget_.max_conflicts && cost_.conflicts >= *budget_.max_conflicts)
                return finish(SolveStatus::BudgetExceeded);
            if (should_stop()) return finish(stop_status_);
            continue;
        }

        if (conflicts_this_restart >= restart_at) {
            cancel_until(0);
            ++restarts;
            restart_at = luby(restarts) * kRestartUnit;
            conflicts_this_restart = 0;
            if (should_stop()) return finish(stop_status_);
        }
        if (cost_.conflicts >= next_reduce) {
            ++reductions;
            next_reduce += kReduceFirst + reductions * kReduceIncrement;
            reduce_db();
        }

        ILit next = kNoLit;
        while (decision_level() < assumps.size()) {
            const ILit p = assumps[decision_level()];
            const auto v = value(p);
            if (v == kTrue) {
                trail_lim_.push_back(static_cast<std::uint32_t>(trail_.size()));
            } else if (v == kFalse) {
                return finish(SolveStatus::Unsat);
            } else {
                next = p;
                break;
            }
        }
        if (next == kNoLit) {
            while (!heap_.empty()) {
                const IVar v = heap_.pop();
                if (assigns_[v] == kUndef) {
                    next = static_cast<ILit>(2 * v + (polarity_[v] ? 0u : 1u));
                    break;
                }
            }
            if (next == kNoLit) return finish(SolveStatus::Sat);
            ++cost_.decisions;
        }
        trail_lim_.push_back(static_cast<std::uint32_t>(trail_.size()));
        enqueue(next, kNoReason);
    }
}

PropagationResult CdclSolver::propagate_only(const PartialAssignment& assumptions) {
    PropagationResult result;
    start_ = Clock::now();
    if (assumptions.max_var() > cnf_.var_count)
        throw std::out_of_range("assumption on variable " + std::to_string(assumptions.max_var()) +
                                " beyond var_count " + std::to_string(cnf_.var_count));
    auto collect = [&](PropagationStatus status) {
        result.status = status;
        for (ILit p : trail_) {
            const Lit l = to_dimacs(p);
            if (!assumptions.contains(var_of(l))) result.implied.push_back(l);
        }
        return result;
    };
    if (!ok_) return collect(PropagationStatus::DecidedUnsat);
    if (propagate() != kNoReason) return collect(PropagationStatus::DecidedUnsat);
    trail_lim_.push_back(static_cast<std::uint32_t>(trail_.size()));
    for (Lit l : assumptions.literals()) {
        const ILit p = make_ilit(l);
        const auto v = value(p);
        if (v == kFalse) return collect(PropagationStatus::DecidedUnsat);
        if (v == kUndef) enqueue(p, kNoReason);
    }
    if (propagate() != kNoReason) return collect(PropagationStatus::DecidedUnsat);
    return collect(all_clauses_satisfied() ? PropagationStatus::DecidedSat : PropagationStatus::Undecided);
}

}  // namespace

SolveOutcome solve(const Cnf& cnf, const PartialAssignment& assumptions, const Budget& budget,
                   const SolverOptions& options) {
    CdclSolver solver(cnf, options);
    return solver.solve(assumptions, budget);
}

PropagationResult propagate_only(const Cnf& cnf, const PartialAssignment& assumptions) {
    CdclSolver solver(cnf, SolverOptions{});
    return solver.propagate_only(assumptions);
}

double verify_supb_sampled(const Cnf& cnf, const DecompositionSet& varset, std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw std::invalid_argument("verify_supb_sampled needs at least one trial");
    varset.check_range(cnf.var_count);
    Rng rng(seed);
    std::size_t decided = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        BitVec bits(varset.d());
        for (std::size_t k = 0; k < bits.size(); ++k) bits.set(k, rng() >> 63);
        const auto r = propagate_only(cnf, varset.assignment(bits));
        if (r.status != PropagationStatus::Undecided) ++decided;
    }
    return static_cast<double>(decided) / static_cast<double>(trials);
}

}  // namespace partsat
