#include "partsat/decomposition_set.hpp"

#include <stdexcept>
#include <string>

namespace partsat {

DecompositionSet::DecompositionSet(std::vector<Var> universe, BitVec member_mask)
    : universe_(std::move(universe)), mask_(std::move(member_mask)) {
    if (mask_.size() != universe_.size())
        throw std::invalid_argument("mask width " + std::to_string(mask_.size()) + " does not match universe size " +
                                    std::to_string(universe_.size()));
    for (std::size_t i = 0; i < universe_.size(); ++i) {
        if (universe_[i] < 1) throw std::invalid_argument("universe variables must be positive");
        if (i > 0 && universe_[i] <= universe_[i - 1])
            throw std::invalid_argument("universe must be strictly increasing");
    }
    for (std::size_t i : mask_.ones()) members_.push_back(universe_[i]);
}

DecompositionSet DecompositionSet::full(std::vector<Var> universe) {
    const std::size_t n = universe.size();
    return DecompositionSet(std::move(universe), BitVec(n, true));
}

DecompositionSet DecompositionSet::of(std::vector<Var> members) { return full(std::move(members)); }

PartialAssignment DecompositionSet::assignment(const BitVec& bits) const {
    if (bits.size() != members_.size())
        throw std::invalid_argument("assignment width " + std::to_string(bits.size()) + " does not match d = " +
                                    std::to_string(members_.size()));
    PartialAssignment alpha;
    for (std::size_t k = 0; k < members_.size(); ++k) alpha.bind(members_[k], bits.test(k));
    return alpha;
}

void DecompositionSet::check_range(Var var_count) const {
    if (!universe_.empty() && universe_.back() > var_count)
        throw std::out_of_range("decomposition universe variable " + std::to_string(universe_.back()) +
                                " exceeds var_count " + std::to_string(var_count));
}

}  // namespace partsat
