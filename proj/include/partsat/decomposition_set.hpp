#pragma once

#include <vector>

#include "partsat/bitvec.hpp"
#include "partsat/formula.hpp"

namespace partsat {

// A decomposition set: a subset of a fixed, strictly increasing universe of
// candidate variables (the starting set), represented by its membership mask
// chi over that universe.
class DecompositionSet {
public:
    DecompositionSet() = default;
    DecompositionSet(std::vector<Var> universe, BitVec member_mask);

    // Every universe variable is a member.
    static DecompositionSet full(std::vector<Var> universe);
    // Universe = members; used when no wider search space is involved.
    static DecompositionSet of(std::vector<Var> members);

    const std::vector<Var>& universe() const { return universe_; }
    const BitVec& mask() const { return mask_; }
    const std::vector<Var>& members() const { return members_; }
    std::size_t d() const { return members_.size(); }

    DecompositionSet with_mask(BitVec mask) const { return DecompositionSet(universe_, std::move(mask)); }

    // Bit k of `bits` is the value of members()[k].
    PartialAssignment assignment(const BitVec& bits) const;

    // Throws if any universe variable lies outside [1, var_count].
    void check_range(Var var_count) const;

    friend bool operator==(const DecompositionSet& a, const DecompositionSet& b) {
        return a.universe_ == b.universe_ && a.mask_ == b.mask_;
    }

private:
    std::vector<Var> universe_;
    BitVec mask_;
    std::vector<Var> members_;
};

}  // namespace partsat
