#pragma once

#include "partsat/formula.hpp"

namespace partsat::testing {

// Pigeonhole principle: `holes + 1` pigeons into `holes` holes. Unsatisfiable
// and exponentially hard for resolution, so useful for budget and
// cancellation tests.
inline Cnf pigeonhole(int holes) {
    const int pigeons = holes + 1;
    auto var = [holes](int p, int h) { return p * holes + h + 1; };
    Cnf cnf;
    cnf.var_count = pigeons * holes;
    for (int p = 0; p < pigeons; ++p) {
        Clause c;
        for (int h = 0; h < holes; ++h) c.push_back(var(p, h));
        cnf.clauses.push_back(c);
    }
    for (int h = 0; h < holes; ++h)
        for (int p = 0; p < pigeons; ++p)
            for (int q = p + 1; q < pigeons; ++q) cnf.clauses.push_back({-var(p, h), -var(q, h)});
    return cnf;
}

}  // namespace partsat::testing
