#include "partsat/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "partsat/encoders.hpp"
#include "partsat/estimator.hpp"
#include "partsat/journal.hpp"
#include "partsat/optimizer.hpp"
#include "partsat/orchestrator.hpp"
#include "partsat/rng.hpp"
#include "partsat/solver.hpp"

namespace partsat::cli {

namespace {

using nlohmann::json;

class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Shared {
    std::string cnf;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string metric = "conflicts";
    bool json = false;
    std::string journal;
    std::string scratch = ".";
};

struct Limits {
    std::optional<std::uint64_t> max_conflicts;
    std::optional<double> max_seconds;

    Budget budget() const {
        Budget b;
        b.max_conflicts = max_conflicts;
        b.max_wall_seconds = max_seconds;
        return b;
    }
};

struct EncodeArgs {
    std::string cipher;
    std::optional<std::size_t> len;
    std::size_t weaken = 0;
    bool unsafe_witness = false;
};

struct EstimateArgs {
    std::optional<std::string> vars;
    std::size_t n = 1000;
    double gamma = 0.95;
    Limits limits;
};

struct OptimizeArgs {
    std::string algorithm = "tabu";
    std::optional<std::string> universe;
    std::optional<std::string> start;
    std::optional<std::string> planted;
    std::size_t n = 1000;
    double gamma = 0.95;
    Limits limits;
    std::optional<std::size_t> max_evaluations;
    std::optional<double> time_limit;
    std::size_t radius = 1;
    std::optional<double> t0;
    double q = 0.98;
    std::optional<double> t_inf;
    bool cool_per_move = false;
};

struct SolveArgs {
    std::optional<std::string> vars;
    bool stop_on_sat = true;
    std::size_t enumeration_cap = kDefaultEnumerationCap;
    Limits limits;
    std::string estimate;
    std::string model_out;
};

struct VerifyArgs {
    std::string model;
    std::optional<std::size_t> supb;
    std::string encoder;
    std::size_t states = 10000;
    std::optional<std::size_t> len;
    bool inject_fault = false;
};

struct Loaded {
    Cnf cnf;
    std::optional<InstanceMeta> meta;
};

Loaded load_cnf(const Shared& s) {
    if (s.cnf.empty()) throw UsageError("--cnf is required");
    Loaded l;
    l.cnf = read_dimacs_file(s.cnf);
    l.meta = parse_meta_comments(l.cnf.comments);
    return l;
}

Metric metric_of(const Shared& s) { return *parse_metric(s.metric); }

std::vector<Var> default_universe(const Loaded& l) {
    if (l.meta) return l.meta->free_starting_vars();
    std::vector<Var> all;
    for (Var v = 1; v <= l.cnf.var_count; ++v) all.push_back(v);
    return all;
}

std::vector<Var> vars_or(const std::optional<std::string>& text, const Loaded& l) {
    if (!text) return default_universe(l);
    auto vars = parse_var_ranges(*text);
    for (Var v : vars)
        if (v > l.cnf.var_count) throw UsageError("variable " + std::to_string(v) + " is not in the formula");
    return vars;
}

std::size_t default_len(Cipher c) {
    switch (c) {
        case Cipher::A51: return kA51BurstLength;
        case Cipher::Bivium: return 200;
        case Cipher::Grain: return 160;
    }
    return 0;
}

Cipher cipher_of(const std::string& name) {
    auto c = parse_cipher(name);
    if (!c) throw UsageError("unknown cipher '" + name + "'");
    return *c;
}

std::string num(double x) {
    std::ostringstream s;
    s << std::setprecision(6) << x;
    return s.str();
}

json var_list(const std::vector<Var>& vars) { return json(vars); }

// --- encode ---------------------------------------------------------------

int cmd_encode(const Shared& s, const EncodeArgs& a, std::ostream& out) {
    const Cipher cipher = cipher_of(a.cipher);
    Instance inst = make_instance(cipher, a.len.value_or(default_len(cipher)), s.seed);
    if (a.weaken > 0) inst = weaken(inst, a.weaken);
    const Cnf cnf = with_meta_comments(inst.cnf, inst.meta, a.unsafe_witness);
    if (s.cnf.empty()) {
        emit_dimacs(cnf, out);
        return kExitOk;
    }
    write_dimacs_file(cnf, s.cnf);
    const std::size_t free_vars = inst.meta.free_starting_vars().size();
    if (s.json) {
        out << json{{"command", "encode"},
                    {"cnf", s.cnf},
                    {"cipher", to_string(cipher)},
                    {"keystream_len", inst.meta.keystream_len},
                    {"weakened_K", inst.meta.weakened_k},
                    {"var_count", cnf.var_count},
                    {"clause_count", cnf.clauses.size()},
                    {"starting_vars", inst.meta.starting_vars.size()},
                    {"free_starting_vars", free_vars},
                    {"seed", s.seed},
                    {"witness_included", a.unsafe_witness}}
                   .dump(2)
            << "\n";
    } else {
        out << "wrote " << s.cnf << ": " << to_string(cipher) << ", keystream " << inst.meta.keystream_len << " bits, "
            << cnf.var_count << " vars, " << cnf.clauses.size() << " clauses\n";
        out << "starting vars " << inst.meta.starting_vars.size() << " (" << free_vars << " free)\n";
    }
    return kExitOk;
}

// --- estimate -------------------------------------------------------------

void print_estimate(std::ostream& out, const PredictiveEstimate& e) {
    out << "F = " << num(e.f_value) << "  (" << to_string(e.metric) << ", d = " << e.d << ", N = " << e.n << ")\n";
    out << "CI [" << num(e.ci_lower) << ", " << num(e.ci_upper) << "] at gamma " << e.gamma << "\n";
    out << "sample mean " << num(e.sample_mean) << ", stddev " << num(e.sample_stddev) << "\n";
    out << "censored " << e.censored_count << " of " << e.n << "\n";
    if (!e.valid) out << "invalid: every draw hit the budget\n";
    else if (e.lower_bound) out << "lower bound: censored draws count at the budget\n";
    if (e.low_confidence) out << "low confidence: N < 2\n";
}

int cmd_estimate(const Shared& s, const EstimateArgs& a, std::ostream& out) {
    const Loaded l = load_cnf(s);
    const auto dset = DecompositionSet::of(vars_or(a.vars, l));
    dset.check_range(l.cnf.var_count);
    EstimationOptions o;
    o.sample_size = a.n;
    o.seed = derive_seed(s.seed, streams::kSample);
    o.budget = a.limits.budget();
    o.metric = metric_of(s);
    o.gamma = a.gamma;
    o.workers = s.workers;
    if (!s.journal.empty()) o.journal = s.journal;
    const EstimationRun run = run_estimation(l.cnf, dset, o);
    if (s.json) {
        out << json{{"command", "estimate"},
                    {"cnf", s.cnf},
                    {"seed", s.seed},
                    {"members", var_list(dset.members())},
                    {"estimate", estimate_to_json(run.estimate)}}
                   .dump(2)
            << "\n";
    } else {
        out << "decomposition set " << (dset.d() ? format_var_ranges(dset.members()) : "(empty)") << "\n";
        print_estimate(out, run.estimate);
    }
    return run.estimate.valid ? kExitOk : kExitResource;
}

// --- optimize -------------------------------------------------------------

int cmd_optimize(const Shared& s, const OptimizeArgs& a, std::ostream& out) {
    std::optional<Loaded> l;
    std::unique_ptr<Evaluator> ev;
    std::vector<Var> universe;
    BitVec start;
    if (a.planted) {
        const BitVec optimum = BitVec::from_string(*a.planted);
        if (optimum.empty()) throw UsageError("--planted needs at least one bit");
        for (std::size_t i = 0; i < optimum.size(); ++i) universe.push_back(static_cast<Var>(i + 1));
        ev = std::make_unique<PlantedCost>(optimum);
        start = BitVec(optimum.size(), true);
    } else {
        l = load_cnf(s);
        universe = vars_or(a.universe, *l);
        if (universe.empty()) throw UsageError("the search universe is empty");
        start = BitVec(universe.size(), !a.start);
        if (a.start) {
            for (Var v : parse_var_ranges(*a.start)) {
                auto it = std::find(universe.begin(), universe.end(), v);
                if (it == universe.end()) throw UsageError("start variable " + std::to_string(v) + " is not in the universe");
                start.set(static_cast<std::size_t>(it - universe.begin()));
            }
        }
        SampledEvaluatorOptions eo;
        eo.sample_size = a.n;
        eo.seed = s.seed;
        eo.budget = a.limits.budget();
        eo.metric = metric_of(s);
        eo.gamma = a.gamma;
        eo.workers = s.workers;
        ev = std::make_unique<SampledEvaluator>(l->cnf, universe, eo);
    }

    SearchLimits limits;
    limits.max_evaluations = a.max_evaluations;
    limits.max_wall_seconds = a.time_limit;
    SearchResult res;
    if (a.algorithm == "sa") {
        AnnealingOptions o;
        o.schedule.t0 = a.t0;
        o.schedule.q = a.q;
        o.schedule.t_inf = a.t_inf;
        o.schedule.cool_per_evaluation = !a.cool_per_move;
        o.limits = limits;
        o.seed = s.seed;
        res = simulated_annealing(*ev, start, o);
    } else {
        TabuOptions o;
        o.radius = a.radius;
        o.limits = limits;
        o.seed = s.seed;
        res = tabu_search(*ev, start, o);
    }

    auto members = [&](const BitVec& chi) {
        std::vector<Var> m;
        for (std::size_t i : chi.ones()) m.push_back(universe[i]);
        return m;
    };
    const std::vector<Var> best = members(res.best);

    const std::filesystem::path trace_path =
        s.journal.empty() ? std::filesystem::path(s.scratch) / "optimize-trace.jsonl" : std::filesystem::path(s.journal);
    {
        JournalWriter w(trace_path, 0);
        w.append({{"type", journal_kind::kHeader},
                  {"mode", "optimize"},
                  {"algorithm", a.algorithm},
                  {"cnf", a.planted ? "" : s.cnf},
                  {"universe", format_var_ranges(universe)},
                  {"seed", s.seed},
                  {"n", a.planted ? 0 : a.n}});
        for (const auto& r : res.trace) w.append(trace_record_json(r));
        w.append({{"type", journal_kind::kSummary},
                  {"best", res.best.to_hex()},
                  {"f_best", res.best_estimate.f_value},
                  {"evaluations", res.evaluations},
                  {"reason", to_string(res.reason)}});
    }

    if (s.json) {
        json j{{"command", "optimize"},
               {"algorithm", a.algorithm},
               {"seed", s.seed},
               {"universe", var_list(universe)},
               {"start_f", res.trace.front().f},
               {"best",
                {{"vars", var_list(best)}, {"chi", res.best.to_hex()}, {"estimate", estimate_to_json(res.best_estimate)}}},
               {"evaluations", res.evaluations},
               {"reevaluations", res.reevaluations},
               {"reason", to_string(res.reason)},
               {"start_only", res.start_only},
               {"trace_journal", trace_path.string()}};
        if (a.algorithm == "sa") j["literal_best"] = var_list(members(res.literal_best));
        out << j.dump(2) << "\n";
    } else {
        out << a.algorithm << " stopped (" << to_string(res.reason) << ") after " << res.evaluations << " evaluations\n";
        out << "start F " << num(res.trace.front().f) << "\n";
        out << "best F " << num(res.best_estimate.f_value) << " with d = " << best.size() << "\n";
        out << "best set " << (best.empty() ? "(empty)" : format_var_ranges(best)) << "\n";
        if (res.start_only) out << "no point beyond the start was evaluated\n";
        out << "trace " << trace_path.string() << "\n";
    }
    return kExitOk;
}

// --- solve ----------------------------------------------------------------

void write_model(const std::string& path, const BitVec& model) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "s SATISFIABLE\nv";
    for (std::size_t i = 0; i < model.size(); ++i) f << ' ' << (model.test(i) ? "" : "-") << i + 1;
    f << " 0\n";
}

int cmd_solve(const Shared& s, const SolveArgs& a, std::ostream& out, std::ostream& err) {
    const Loaded l = load_cnf(s);
    const auto dset = DecompositionSet::of(vars_or(a.vars, l));
    if (dset.d() > a.enumeration_cap)
        throw UsageError("decomposition set has " + std::to_string(dset.d()) + " variables, above the enumeration cap " +
                         std::to_string(a.enumeration_cap));
    const Metric metric = metric_of(s);
    std::optional<PredictiveEstimate> prior;
    if (!a.estimate.empty()) {
        prior = read_estimate_journal(a.estimate);
        if (!prior) throw UsageError(a.estimate + " holds no estimate record");
    }

    SolvingOptions o;
    o.workers = s.workers;
    o.stop_on_sat = a.stop_on_sat;
    o.budget = a.limits.budget();
    o.enumeration_cap = a.enumeration_cap;
    if (!s.journal.empty()) o.journal = s.journal;
    const SolveRunReport rep = run_solving(l.cnf, dset, o);
    const double aggregate = aggregate_one_core_cost(rep, metric);

    bool models_ok = true;
    json models = json::array();
    for (const auto& m : rep.sat_models) {
        const bool cnf_ok = satisfies(l.cnf, m.model);
        std::optional<bool> ks_ok;
        if (l.meta && l.meta->keystream_len > 0) ks_ok = model_reproduces_keystream(*l.meta, m.model);
        models_ok = models_ok && cnf_ok && ks_ok.value_or(true);
        json mj{{"item_id", m.item_id}, {"assignment", m.assignment.to_hex()}, {"model", m.model.to_hex()},
                {"satisfies", cnf_ok}};
        mj["keystream_ok"] = ks_ok ? json(*ks_ok) : json(nullptr);
        models.push_back(mj);
    }
    if (!rep.sat_models.empty() && !a.model_out.empty()) write_model(a.model_out, rep.sat_models.front().model);

    const std::string status = !rep.sat_models.empty()                                 ? "SAT"
                               : rep.completed == rep.total_items && !rep.undecided_items ? "UNSAT"
                                                                                         : "UNKNOWN";
    json summary{{"command", "solve"},
                 {"status", status},
                 {"members", var_list(dset.members())},
                 {"total_items", rep.total_items},
                 {"completed", rep.completed},
                 {"resumed_items", rep.resumed_items},
                 {"undecided_items", rep.undecided_items},
                 {"stop_on_sat", rep.stop_on_sat},
                 {"workers", rep.workers},
                 {"models", models},
                 {"aggregate", {{"metric", to_string(metric)}, {"value", aggregate}}},
                 {"conflicts", rep.conflicts},
                 {"decisions", rep.decisions},
                 {"propagations", rep.propagations},
                 {"solve_seconds", rep.solve_seconds},
                 {"elapsed_seconds", rep.elapsed_seconds}};
    if (prior) {
        summary["estimate"] = estimate_to_json(*prior);
        summary["relative_deviation"] = aggregate > 0 ? std::abs(aggregate - prior->f_value) / aggregate : 0.0;
        summary["within_ci"] = prior->ci_contains(aggregate);
    }
    if (o.journal) {
        json record = summary;
        record["type"] = journal_kind::kSummary;
        JournalWriter(*o.journal).append(record);
    }

    if (s.json) {
        out << summary.dump(2) << "\n";
    } else {
        out << status << "\n";
        out << "completed " << rep.completed << " of " << rep.total_items << " subproblems (d = " << dset.d() << ", "
            << rep.workers << " workers";
        if (rep.resumed_items) out << ", " << rep.resumed_items << " from the journal";
        out << ")\n";
        if (rep.undecided_items) out << rep.undecided_items << " subproblems hit the budget\n";
        for (std::size_t i = 0; i < models.size() && i < 5; ++i) {
            const json& mj = models[i];
            out << "model at item " << mj["item_id"].get<std::uint64_t>() << ": "
                << (mj["satisfies"].get<bool>() ? "satisfies the formula" : "DOES NOT satisfy the formula");
            if (!mj["keystream_ok"].is_null())
                out << (mj["keystream_ok"].get<bool>() ? ", reproduces the keystream" : ", WRONG keystream");
            out << "\n";
        }
        if (models.size() > 5) out << "... and " << models.size() - 5 << " more models\n";
        out << "one-core cost " << num(aggregate) << " " << to_string(metric) << "\n";
        if (prior)
            out << "estimate F " << num(prior->f_value) << ", deviation "
                << num(100.0 * summary["relative_deviation"].get<double>()) << "%"
                << (summary["within_ci"].get<bool>() ? ", inside" : ", outside") << " its CI\n";
        out << "elapsed " << num(rep.elapsed_seconds) << " s\n";
    }
    if (!models_ok) {
        err << "a reported model failed verification\n";
        return kExitVerification;
    }
    return status == "UNKNOWN" ? kExitResource : kExitOk;
}

// --- verify ---------------------------------------------------------------

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

BitVec read_model_file(const std::string& path, Var var_count) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read " + path);
    BitVec model(static_cast<std::size_t>(var_count));
    std::string line;
    while (std::getline(f, line)) {
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "s" || tok == "c" || tok.empty()) continue;
        if (tok != "v") ls.seekg(0);
        long long lit;
        while (ls >> lit) {
            if (lit == 0) continue;
            const long long v = std::llabs(lit);
            if (v > var_count) throw UsageError("model literal " + std::to_string(lit) + " is out of range");
            model.set(static_cast<std::size_t>(v - 1), lit > 0);
        }
    }
    return model;
}

Check check_model(const Loaded& l, const std::string& path) {
    const BitVec model = read_model_file(path, l.cnf.var_count);
    if (auto bad = first_falsified_clause(l.cnf, model)) return {"model", false, "clause " + std::to_string(*bad + 1) + " is falsified"};
    if (l.meta && l.meta->keystream_len > 0 && !model_reproduces_keystream(*l.meta, model))
        return {"model", false, "starting state does not reproduce the keystream"};
    return {"model", true, "all " + std::to_string(l.cnf.clauses.size()) + " clauses satisfied"};
}

Check check_supb(const Loaded& l, std::size_t trials, std::uint64_t seed) {
    if (!l.meta) throw UsageError("--supb needs a formula with meta comments");
    const double frac =
        verify_supb_sampled(l.cnf, DecompositionSet::of(l.meta->starting_vars), trials, derive_seed(seed, streams::kSupb));
    return {"supb", frac == 1.0, "decided by propagation in " + num(frac * 100.0) + "% of " + std::to_string(trials) + " trials"};
}

void inject_fault(Circuit& c) {
    const std::size_t first_gate = c.inputs.size();
    std::size_t target = c.gates.size() - 1;
    if (!c.outputs.empty() && c.outputs.front() >= first_gate) target = c.outputs.front() - first_gate;
    Gate& g = c.gates[target];
    if (g.kind == GateKind::Not) g.in[1] = g.in[0];
    g.kind = g.kind == GateKind::Xor ? GateKind::And : GateKind::Xor;
}

Check check_encoder(const std::string& name, std::size_t len, std::size_t states, bool fault, std::uint64_t seed) {
    const Cipher cipher = cipher_of(name);
    Circuit circuit = build_circuit(cipher, len);
    if (fault) inject_fault(circuit);
    const std::size_t width = state_width(cipher);
    Instance inst = tseitin_encode(circuit, BitVec(len));
    inst.cnf.clauses.resize(inst.cnf.clauses.size() - len);
    const auto dset = DecompositionSet::of(inst.meta.starting_vars);
    std::vector<std::int64_t> output_index(static_cast<std::size_t>(inst.cnf.var_count) + 1, -1);
    for (std::size_t i = 0; i < len; ++i) output_index[inst.meta.keystream_vars[i]] = static_cast<std::int64_t>(i);
    Rng rng(derive_seed(seed, streams::kVerifyStates));
    for (std::size_t t = 0; t < states; ++t) {
        BitVec state(width);
        for (std::size_t i = 0; i < width; ++i) state.set(i, rng() >> 63);
        const BitVec expected = keystream_oracle(cipher, state, len);
        if (circuit.simulate(state) != expected)
            return {"encoder", false, "circuit and simulator disagree on state " + state.to_hex()};
        const auto prop = propagate_only(inst.cnf, dset.assignment(state));
        BitVec got(len);
        std::size_t found = 0;
        for (Lit lit : prop.implied) {
            const std::int64_t idx = output_index[var_of(lit)];
            if (idx < 0) continue;
            got.set(static_cast<std::size_t>(idx), lit > 0);
            ++found;
        }
        if (prop.status == PropagationStatus::DecidedUnsat || found != len || got != expected)
            return {"encoder", false, "CNF and simulator disagree on state " + state.to_hex()};
    }
    return {"encoder", true, std::string(to_string(cipher)) + " agrees on " + std::to_string(states) + " states"};
}

Check check_journal(const std::string& path) {
    try {
        const JournalScan scan = scan_journal(path);
        std::string detail = std::to_string(scan.records.size()) + " records intact";
        if (scan.torn_tail) detail += ", incomplete last line ignored";
        return {"journal", true, detail};
    } catch (const JournalError& e) {
        return {"journal", false, "line " + std::to_string(e.line()) + ": " + e.what()};
    }
}

int cmd_verify(const Shared& s, const VerifyArgs& a, std::ostream& out) {
    std::vector<Check> checks;
    std::optional<Loaded> l;
    auto loaded = [&]() -> const Loaded& {
        if (!l) l = load_cnf(s);
        return *l;
    };
    if (!a.model.empty()) checks.push_back(check_model(loaded(), a.model));
    if (a.supb) checks.push_back(check_supb(loaded(), *a.supb, s.seed));
    if (!a.encoder.empty()) {
        const Cipher c = cipher_of(a.encoder);
        checks.push_back(check_encoder(a.encoder, a.len.value_or(default_len(c)), a.states, a.inject_fault, s.seed));
    }
    if (!s.journal.empty()) checks.push_back(check_journal(s.journal));
    if (checks.empty()) throw UsageError("nothing to verify: give --model, --supb, --encoder or --journal");

    bool all = true;
    for (const auto& c : checks) all = all && c.pass;
    if (s.json) {
        json arr = json::array();
        for (const auto& c : checks) arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        out << json{{"command", "verify"}, {"pass", all}, {"checks", arr}}.dump(2) << "\n";
    } else {
        for (const auto& c : checks) out << c.name << ": " << (c.pass ? "PASS" : "FAIL") << " (" << c.detail << ")\n";
    }
    return all ? kExitOk : kExitVerification;
}

// --- wiring ---------------------------------------------------------------

void add_shared(CLI::App* sub, Shared& s) {
    sub->add_option("--cnf", s.cnf, "DIMACS formula");
    sub->add_option("--seed", s.seed, "64-bit seed for every random choice");
    sub->add_option("--workers", s.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--metric", s.metric, "subproblem cost")->check(CLI::IsMember({"conflicts", "wall"}));
    sub->add_flag("--json", s.json, "print a JSON document instead of text");
    sub->add_option("--journal", s.journal, "journal file");
    sub->add_option("--scratch", s.scratch, "directory for default output files");
}

void add_limits(CLI::App* sub, Limits& l) {
    sub->add_option("--max-conflicts", l.max_conflicts, "conflict budget per subproblem");
    sub->add_option("--max-seconds", l.max_seconds, "wall budget per subproblem")->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Partitioning of hard SAT instances: estimation, search and solving of decomposition families",
                 "partsat"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "key = value file; [command] sections apply to one command");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    Shared s;
    EncodeArgs enc;
    EstimateArgs est;
    OptimizeArgs opt;
    SolveArgs sol;
    VerifyArgs ver;

    auto* encode = app.add_subcommand("encode", "write a keystream-inversion instance");
    add_shared(encode, s);
    encode->add_option("--cipher", enc.cipher, "a51 | bivium | grain")->required();
    encode->add_option("--len", enc.len, "keystream bits (default a51 114, bivium 200, grain 160)");
    encode->add_option("--weaken", enc.weaken, "fix the last K cells of the second register");
    encode->add_flag("--unsafe-witness", enc.unsafe_witness, "store the secret state in the meta comments");

    auto* estimate = app.add_subcommand("estimate", "Monte Carlo estimate of the one-core cost of a partitioning");
    add_shared(estimate, s);
    estimate->add_option("--vars", est.vars, "decomposition set as ranges, e.g. 1-10,15 (default: free starting vars)");
    estimate->add_option("-n,--n", est.n, "sample size")->check(CLI::PositiveNumber);
    estimate->add_option("--gamma", est.gamma, "CI level; the half-width uses the gamma quantile")
        ->check(CLI::Range(0.5, 1.0));
    add_limits(estimate, est.limits);

    auto* optimize = app.add_subcommand("optimize", "search for a decomposition set with low estimated cost");
    add_shared(optimize, s);
    optimize->add_option("--algorithm", opt.algorithm)->check(CLI::IsMember({"tabu", "sa"}));
    optimize->add_option("--universe", opt.universe, "variables the search may use (default: free starting vars)");
    optimize->add_option("--start", opt.start, "starting set (default: the whole universe)");
    optimize->add_option("--planted", opt.planted, "search a synthetic cost space with this optimum bit string");
    optimize->add_option("-n,--n", opt.n, "sample size per point")->check(CLI::PositiveNumber);
    optimize->add_option("--gamma", opt.gamma)->check(CLI::Range(0.5, 1.0));
    add_limits(optimize, opt.limits);
    optimize->add_option("--max-evaluations", opt.max_evaluations, "points evaluated, start included");
    optimize->add_option("--time-limit", opt.time_limit, "seconds for the whole search");
    optimize->add_option("--radius", opt.radius, "tabu neighborhood radius")->check(CLI::PositiveNumber);
    optimize->add_option("--t0", opt.t0, "initial temperature (default F(start) / 10)");
    optimize->add_option("--q", opt.q, "cooling factor")->check(CLI::Range(0.0, 1.0));
    optimize->add_option("--t-inf", opt.t_inf, "final temperature (default t0 * 1e-4)");
    optimize->add_flag("--cool-per-move", opt.cool_per_move, "cool once per accepted move, not per evaluation");

    auto* solve = app.add_subcommand("solve", "solve every subproblem of a partitioning");
    add_shared(solve, s);
    solve->add_option("--vars", sol.vars, "decomposition set (default: free starting vars)");
    solve->add_flag("--stop-on-sat,!--no-stop-on-sat", sol.stop_on_sat, "stop at the first model");
    solve->add_option("--enumeration-cap", sol.enumeration_cap, "largest decomposition set accepted");
    add_limits(solve, sol.limits);
    solve->add_option("--estimate", sol.estimate, "estimate journal to compare the one-core cost against");
    solve->add_option("--model-out", sol.model_out, "write the first model here");

    auto* verify = app.add_subcommand("verify", "check models, SUPB, encoders and journals");
    add_shared(verify, s);
    verify->add_option("--model", ver.model, "model file (v-lines) to check against --cnf");
    verify->add_option("--supb", ver.supb, "sample this many starting-state assignments for the SUPB property");
    verify->add_option("--encoder", ver.encoder, "compare circuit, CNF and simulator for a cipher");
    verify->add_option("--states", ver.states, "random states for --encoder");
    verify->add_option("--len", ver.len, "keystream bits for --encoder");
    verify->add_flag("--inject-fault", ver.inject_fault, "corrupt one gate before the --encoder check");

    // Environment values sit between the config file and the command line.
    std::vector<std::string> full = args;
    for (const auto& [flag, env] : {std::pair{"--workers", "PARTSAT_WORKERS"}, std::pair{"--scratch", "PARTSAT_SCRATCH"}}) {
        const char* value = std::getenv(env);
        const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(std::string(flag) + "=", 0) == 0;
        });
        const bool has_command = std::any_of(args.begin(), args.end(), [](const std::string& a) {
            return a == "encode" || a == "estimate" || a == "optimize" || a == "solve" || a == "verify";
        });
        if (value && *value && !given && has_command) {
            full.push_back(flag);
            full.push_back(value);
        }
    }

    try {
        std::vector<std::string> reversed(full.rbegin(), full.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*encode) return cmd_encode(s, enc, out);
        if (*estimate) return cmd_estimate(s, est, out);
        if (*optimize) return cmd_optimize(s, opt, out);
        if (*solve) return cmd_solve(s, sol, out, err);
        return cmd_verify(s, ver, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const JournalError& e) {
        err << "journal error";
        if (e.line()) err << " at line " << e.line();
        err << ": " << e.what() << "\n";
        return kExitVerification;
    } catch (const std::bad_alloc&) {
        err << "error: out of memory\n";
        return kExitResource;
    } catch (const std::length_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitResource;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace partsat::cli
