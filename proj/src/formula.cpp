#include "partsat/formula.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace partsat {

bool Cnf::has_empty_clause() const {
    return std::any_of(clauses.begin(), clauses.end(), [](const Clause& c) { return c.empty(); });
}

bool same_structure(const Cnf& a, const Cnf& b) { return a.var_count == b.var_count && a.clauses == b.clauses; }

void PartialAssignment::bind(Var v, bool value) {
    if (v < 1) throw std::invalid_argument("variable index must be positive, got " + std::to_string(v));
    auto [it, inserted] = bindings_.emplace(v, value);
    if (!inserted && it->second != value)
        throw std::invalid_argument("conflicting bindings for variable " + std::to_string(v));
}

std::optional<bool> PartialAssignment::value(Var v) const {
    auto it = bindings_.find(v);
    if (it == bindings_.end()) return std::nullopt;
    return it->second;
}

std::vector<Lit> PartialAssignment::literals() const {
    std::vector<Lit> out;
    out.reserve(bindings_.size());
    for (const auto& [v, b] : bindings_) out.push_back(b ? v : -v);
    return out;
}

PartialAssignment PartialAssignment::from_literals(std::span<const Lit> lits) {
    PartialAssignment a;
    for (Lit l : lits) {
        if (l == 0) throw std::invalid_argument("literal 0 is not a valid binding");
        a.bind(var_of(l), l > 0);
    }
    return a;
}

PartialAssignment PartialAssignment::disjoint_union(const PartialAssignment& a, const PartialAssignment& b) {
    PartialAssignment out = a;
    for (const auto& [v, val] : b.bindings_) {
        if (out.contains(v)) throw std::invalid_argument("assignments overlap on variable " + std::to_string(v));
        out.bindings_.emplace(v, val);
    }
    return out;
}

std::string_view to_string(ParseErrorKind kind) {
    switch (kind) {
        case ParseErrorKind::MissingHeader: return "missing header";
        case ParseErrorKind::MalformedHeader: return "malformed header";
        case ParseErrorKind::DuplicateHeader: return "duplicate header";
        case ParseErrorKind::BadToken: return "bad token";
        case ParseErrorKind::LiteralOutOfRange: return "literal out of range";
        case ParseErrorKind::Tautology: return "tautological clause";
        case ParseErrorKind::UnterminatedClause: return "unterminated clause";
        case ParseErrorKind::ClauseCountMismatch: return "clause count mismatch";
    }
    return "parse error";
}

ParseError::ParseError(ParseErrorKind kind, std::size_t line, const std::string& detail)
    : std::runtime_error("line " + std::to_string(line) + ": " + std::string(to_string(kind)) +
                         (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      line_(line) {}

namespace {

bool parse_int(std::string_view tok, long long& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> toks;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) toks.push_back(line.substr(i, j - i));
        i = j;
    }
    return toks;
}

}  // namespace

Cnf parse_dimacs(std::istream& in) {
    Cnf cnf;
    bool have_header = false;
    long long declared_clauses = 0;
    Clause current;
    std::size_t clause_start_line = 0;
    std::size_t lineno = 0;
    std::string line;

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view view(line);
        std::size_t first = view.find_first_not_of(" \t");
        if (first == std::string_view::npos) continue;
        view.remove_prefix(first);

        if (view[0] == 'c') {
            std::string_view text = view.substr(1);
            if (!text.empty() && text[0] == ' ') text.remove_prefix(1);
            cnf.comments.emplace_back(text);
            continue;
        }
        if (view[0] == 'p') {
            if (have_header) throw ParseError(ParseErrorKind::DuplicateHeader, lineno, "");
            const auto toks = split_ws(view);
            long long nv = 0;
            long long nc = 0;
            if (toks.size() != 4 || toks[0] != "p" || toks[1] != "cnf" || !parse_int(toks[2], nv) ||
                !parse_int(toks[3], nc) || nv < 0 || nc < 0 || nv > (1LL << 30))
                throw ParseError(ParseErrorKind::MalformedHeader, lineno, std::string(view));
            cnf.var_count = static_cast<Var>(nv);
            declared_clauses = nc;
            have_header = true;
            continue;
        }
        if (!have_header) throw ParseError(ParseErrorKind::MissingHeader, lineno, "clause data before 'p cnf' line");

        for (auto tok : split_ws(view)) {
            long long value = 0;
            if (!parse_int(tok, value)) throw ParseError(ParseErrorKind::BadToken, lineno, std::string(tok));
            if (value == 0) {
                Clause sorted = current;
                std::sort(sorted.begin(), sorted.end(), [](Lit a, Lit b) {
                    return var_of(a) != var_of(b) ? var_of(a) < var_of(b) : a < b;
                });
                for (std::size_t k = 1; k < sorted.size(); ++k)
                    if (sorted[k] == -sorted[k - 1])
                        throw ParseError(ParseErrorKind::Tautology, clause_start_line,
                                         "clause contains " + std::to_string(sorted[k - 1]) + " and " +
                                             std::to_string(sorted[k]));
                cnf.clauses.push_back(std::move(current));
                current.clear();
                continue;
            }
            if (value < -cnf.var_count || value > cnf.var_count)
                throw ParseError(ParseErrorKind::LiteralOutOfRange, lineno,
                                 std::to_string(value) + " with " + std::to_string(cnf.var_count) + " variables");
            if (current.empty()) clause_start_line = lineno;
            current.push_back(static_cast<Lit>(value));
        }
    }
    if (!have_header) throw ParseError(ParseErrorKind::MissingHeader, lineno, "no 'p cnf' line");
    if (!current.empty()) throw ParseError(ParseErrorKind::UnterminatedClause, lineno, "missing terminating 0");
    if (static_cast<long long>(cnf.clauses.size()) != declared_clauses)
        throw ParseError(ParseErrorKind::ClauseCountMismatch, lineno,
                         "header declares " + std::to_string(declared_clauses) + ", found " +
                             std::to_string(cnf.clauses.size()));
    return cnf;
}

Cnf parse_dimacs(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_dimacs(in);
}

Cnf read_dimacs_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_dimacs(in);
}

void emit_dimacs(const Cnf& cnf, std::ostream& out) {
    for (const auto& c : cnf.comments) {
        if (c.empty())
            out << "c\n";
        else
            out << "c " << c << '\n';
    }
    out << "p cnf " << cnf.var_count << ' ' << cnf.clauses.size() << '\n';
    for (const auto& clause : cnf.clauses) {
        for (Lit l : clause) out << l << ' ';
        out << "0\n";
    }
}

std::string emit_dimacs(const Cnf& cnf) {
    std::ostringstream out;
    emit_dimacs(cnf, out);
    return out.str();
}

void write_dimacs_file(const Cnf& cnf, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    emit_dimacs(cnf, out);
    if (!out) throw std::runtime_error("write failed for " + path);
}

Cnf substitute(const Cnf& cnf, const PartialAssignment& alpha) {
    if (alpha.max_var() > cnf.var_count)
        throw std::out_of_range("binding for variable " + std::to_string(alpha.max_var()) + " beyond var_count " +
                                std::to_string(cnf.var_count));
    std::vector<std::int8_t> value(static_cast<std::size_t>(cnf.var_count) + 1, -1);
    for (const auto& [v, b] : alpha.bindings()) value[static_cast<std::size_t>(v)] = b ? 1 : 0;

    Cnf out;
    out.var_count = cnf.var_count;
    out.comments = cnf.comments;
    out.clauses.reserve(cnf.clauses.size());
    for (const auto& clause : cnf.clauses) {
        Clause reduced;
        bool satisfied = false;
        for (Lit l : clause) {
            const auto val = value[static_cast<std::size_t>(var_of(l))];
            if (val < 0) {
                reduced.push_back(l);
            } else if ((val == 1) == (l > 0)) {
                satisfied = true;
                break;
            }
        }
        if (!satisfied) out.clauses.push_back(std::move(reduced));
    }
    return out;
}

std::optional<std::size_t> first_falsified_clause(const Cnf& cnf, const BitVec& model) {
    if (model.size() < static_cast<std::size_t>(cnf.var_count))
        throw std::invalid_argument("model narrower than formula");
    for (std::size_t i = 0; i < cnf.clauses.size(); ++i) {
        bool sat = false;
        for (Lit l : cnf.clauses[i]) {
            if (model.test(static_cast<std::size_t>(var_of(l) - 1)) == (l > 0)) {
                sat = true;
                break;
            }
        }
        if (!sat) return i;
    }
    return std::nullopt;
}

bool satisfies(const Cnf& cnf, const BitVec& model) { return !first_falsified_clause(cnf, model).has_value(); }

}  // namespace partsat
