#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "partsat/bitvec.hpp"
#include "partsat/formula.hpp"

namespace partsat {

enum class Cipher { A51, Bivium, Grain };

std::string_view to_string(Cipher c);
std::optional<Cipher> parse_cipher(std::string_view s);  // "a51" | "bivium" | "grain", case-insensitive

// Number of starting variables: A5/1 64-bit register fill, Bivium 177-bit
// and Grain 160-bit post-initialization state.
std::size_t state_width(Cipher c);
// Length of the register whose tail is fixed when weakening (Bivium 84,
// Grain LFSR 80). Throws for A5/1, which has no weakened family.
std::size_t second_register_length(Cipher c);
inline constexpr std::size_t kA51BurstLength = 114;

// Reference keystream by direct register simulation.
//
// State layouts (bit i of `state` is starting variable i + 1):
//   A5/1:   R1 bits 0..18, R2 bits 0..21, R3 bits 0..22 (register bit 0 is
//           the feedback end). Each output bit: majority clock, then
//           R1[18] ^ R2[21] ^ R3[22].
//   Bivium: s1..s93 (register A) then s94..s177 (register B).
//   Grain:  NFSR b0..b79 then LFSR s0..s79 (index 0 is the oldest cell).
BitVec keystream_oracle(Cipher cipher, const BitVec& state, std::size_t len);

enum class GateKind { And, Xor, Not, Maj3, Mux };

std::string_view to_string(GateKind k);

// Gate inputs are wire indices. Mux(sel, a, b) = sel ? a : b.
struct Gate {
    GateKind kind;
    std::array<std::uint32_t, 3> in;
};

// Wires 0..inputs.size()-1 are the circuit inputs; gate g drives wire
// inputs.size() + g. Gates are stored in topological order.
struct Circuit {
    std::optional<Cipher> cipher;
    std::vector<std::string> inputs;
    std::vector<Gate> gates;
    std::vector<std::uint32_t> outputs;

    std::size_t wire_count() const { return inputs.size() + gates.size(); }

    // Checks that every gate reads only earlier wires with distinct inputs
    // and that outputs name existing wires.
    void validate() const;

    // Values of all wires for the given inputs.
    BitVec evaluate(const BitVec& input_values) const;
    BitVec simulate(const BitVec& input_values) const;  // output values only
};

class CircuitBuilder {
public:
    explicit CircuitBuilder(std::vector<std::string> input_names);

    std::uint32_t input(std::size_t i) const { return static_cast<std::uint32_t>(i); }
    std::uint32_t and_(std::uint32_t a, std::uint32_t b) { return add(GateKind::And, a, b, 0); }
    std::uint32_t xor_(std::uint32_t a, std::uint32_t b) { return add(GateKind::Xor, a, b, 0); }
    std::uint32_t not_(std::uint32_t a) { return add(GateKind::Not, a, 0, 0); }
    std::uint32_t maj3(std::uint32_t a, std::uint32_t b, std::uint32_t c) { return add(GateKind::Maj3, a, b, c); }
    std::uint32_t mux(std::uint32_t sel, std::uint32_t a, std::uint32_t b) { return add(GateKind::Mux, sel, a, b); }
    std::uint32_t xor_all(const std::vector<std::uint32_t>& wires);
    std::uint32_t and_all(const std::vector<std::uint32_t>& wires);

    void output(std::uint32_t wire) { circuit_.outputs.push_back(wire); }
    Circuit finish(std::optional<Cipher> cipher);

private:
    std::uint32_t add(GateKind kind, std::uint32_t a, std::uint32_t b, std::uint32_t c);
    Circuit circuit_;
};

// Circuit whose inputs are the starting variables of `cipher` and whose
// outputs are the first `keystream_len` keystream bits.
Circuit build_circuit(Cipher cipher, std::size_t keystream_len);

struct InstanceMeta {
    std::optional<Cipher> cipher;
    std::vector<Var> starting_vars;
    BitVec keystream;
    std::size_t keystream_len = 0;
    std::vector<Var> keystream_vars;  // variables of the output wires
    std::size_t weakened_k = 0;
    std::optional<BitVec> secret_witness;

    // Starting variables not fixed by weakening.
    std::vector<Var> free_starting_vars() const;

    friend bool operator==(const InstanceMeta&, const InstanceMeta&) = default;
};

struct Instance {
    Cnf cnf;
    InstanceMeta meta;
};

// One variable per wire (wire w is variable w + 1, so inputs come first),
// standard gate clauses, and a unit clause per output fixing it to the
// given keystream bit. Assigning all inputs decides the formula by unit
// propagation.
Instance tseitin_encode(const Circuit& circuit, const BitVec& keystream_bits);

// Random secret from derive_seed(seed, streams::kSecret), its keystream via
// the oracle, encoded. The secret is kept in meta.secret_witness only.
Instance make_instance(Cipher cipher, std::size_t keystream_len, std::uint64_t seed);

// Fixes the last K starting variables to their witness values with unit
// clauses. For K up to the second register's length these are exactly its
// last K cells; larger K continue into the tail of the first register.
Instance weaken(const Instance& instance, std::size_t k);

// "c meta:" comment lines (without the leading "c "). The witness is only
// written when include_witness is set.
std::vector<std::string> meta_comment_lines(const InstanceMeta& meta, bool include_witness);
// Parses meta lines out of a comment list; nullopt when none are present.
std::optional<InstanceMeta> parse_meta_comments(const std::vector<std::string>& comments);

// Writes the meta into cnf.comments, replacing earlier meta lines.
Cnf with_meta_comments(Cnf cnf, const InstanceMeta& meta, bool include_witness);

// "1-5,9,12-14"
std::string format_var_ranges(const std::vector<Var>& vars);
std::vector<Var> parse_var_ranges(std::string_view text);

// Keystream check of a model: projects the starting variables and compares
// the oracle's output with meta.keystream.
bool model_reproduces_keystream(const InstanceMeta& meta, const BitVec& model);

}  // namespace partsat
