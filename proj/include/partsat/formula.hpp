#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "partsat/bitvec.hpp"

namespace partsat {

// Variables are 1-based as in DIMACS; a literal is +v or -v.
using Var = std::int32_t;
using Lit = std::int32_t;
using Clause = std::vector<Lit>;

inline Var var_of(Lit l) { return l < 0 ? -l : l; }

struct Cnf {
    Var var_count = 0;
    std::vector<Clause> clauses;
    std::vector<std::string> comments;  // comment text without the leading "c "

    bool has_empty_clause() const;

    friend bool operator==(const Cnf&, const Cnf&) = default;
};

bool same_structure(const Cnf& a, const Cnf& b);

class PartialAssignment {
public:
    PartialAssignment() = default;

    // Binding the same variable twice to the same value is a no-op; to the
    // opposite value it throws.
    void bind(Var v, bool value);
    std::optional<bool> value(Var v) const;
    bool contains(Var v) const { return bindings_.count(v) != 0; }

    const std::map<Var, bool>& bindings() const { return bindings_; }
    std::size_t size() const { return bindings_.size(); }
    bool empty() const { return bindings_.empty(); }
    Var max_var() const { return bindings_.empty() ? 0 : bindings_.rbegin()->first; }

    std::vector<Lit> literals() const;
    static PartialAssignment from_literals(std::span<const Lit> lits);

    // Union of two assignments with disjoint keys; throws on overlap.
    static PartialAssignment disjoint_union(const PartialAssignment& a, const PartialAssignment& b);

    friend bool operator==(const PartialAssignment&, const PartialAssignment&) = default;

private:
    std::map<Var, bool> bindings_;
};

enum class ParseErrorKind {
    MissingHeader,
    MalformedHeader,
    DuplicateHeader,
    BadToken,
    LiteralOutOfRange,
    Tautology,
    UnterminatedClause,
    ClauseCountMismatch,
};

std::string_view to_string(ParseErrorKind kind);

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorKind kind, std::size_t line, const std::string& detail);
    ParseErrorKind kind() const { return kind_; }
    std::size_t line() const { return line_; }

private:
    ParseErrorKind kind_;
    std::size_t line_;
};

Cnf parse_dimacs(std::istream& in);
Cnf parse_dimacs(std::string_view text);
Cnf read_dimacs_file(const std::string& path);

void emit_dimacs(const Cnf& cnf, std::ostream& out);
std::string emit_dimacs(const Cnf& cnf);
void write_dimacs_file(const Cnf& cnf, const std::string& path);

// C[X/alpha]: satisfied clauses are dropped, falsified literals removed.
// A clause that loses all its literals stays as an empty clause. Variable
// numbering is unchanged.
Cnf substitute(const Cnf& cnf, const PartialAssignment& alpha);

// Independent clause-by-clause model check. The model holds the value of
// variable v at bit v-1. Returns the index of the first falsified clause.
std::optional<std::size_t> first_falsified_clause(const Cnf& cnf, const BitVec& model);
bool satisfies(const Cnf& cnf, const BitVec& model);

}  // namespace partsat
