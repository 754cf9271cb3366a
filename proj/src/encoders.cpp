#include "partsat/encoders.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>
#include <stdexcept>

#include "partsat/rng.hpp"

namespace partsat {

std::string_view to_string(Cipher c) {
    switch (c) {
        case Cipher::A51: return "a51";
        case Cipher::Bivium: return "bivium";
        case Cipher::Grain: return "grain";
    }
    return "?";
}

std::optional<Cipher> parse_cipher(std::string_view s) {
    std::string lower(s);
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (lower == "a51" || lower == "a5/1") return Cipher::A51;
    if (lower == "bivium") return Cipher::Bivium;
    if (lower == "grain") return Cipher::Grain;
    return std::nullopt;
}

std::size_t state_width(Cipher c) {
    switch (c) {
        case Cipher::A51: return 64;
        case Cipher::Bivium: return 177;
        case Cipher::Grain: return 160;
    }
    return 0;
}

std::size_t second_register_length(Cipher c) {
    switch (c) {
        case Cipher::A51: throw std::invalid_argument("A5/1 instances have no weakened family");
        case Cipher::Bivium: return 84;
        case Cipher::Grain: return 80;
    }
    return 0;
}

std::string_view to_string(GateKind k) {
    switch (k) {
        case GateKind::And: return "AND";
        case GateKind::Xor: return "XOR";
        case GateKind::Not: return "NOT";
        case GateKind::Maj3: return "MAJ3";
        case GateKind::Mux: return "MUX";
    }
    return "?";
}

namespace {

int arity(GateKind k) {
    switch (k) {
        case GateKind::Not: return 1;
        case GateKind::And:
        case GateKind::Xor: return 2;
        case GateKind::Maj3:
        case GateKind::Mux: return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Register simulations

BitVec a51_keystream(const BitVec& state, std::size_t len) {
    constexpr std::uint32_t kMask[3] = {0x07FFFF, 0x3FFFFF, 0x7FFFFF};
    constexpr std::uint32_t kTaps[3] = {0x072000, 0x300000, 0x700080};
    constexpr std::uint32_t kMid[3] = {0x000100, 0x000400, 0x000400};
    constexpr std::uint32_t kOut[3] = {0x040000, 0x200000, 0x400000};
    constexpr std::size_t kOffset[3] = {0, 19, 41};
    constexpr std::size_t kLen[3] = {19, 22, 23};

    std::uint32_t reg[3] = {0, 0, 0};
    for (int r = 0; r < 3; ++r)
        for (std::size_t i = 0; i < kLen[r]; ++i)
            if (state.test(kOffset[r] + i)) reg[r] |= std::uint32_t{1} << i;

    auto parity = [](std::uint32_t x) { return static_cast<std::uint32_t>(__builtin_parity(x)); };
    BitVec out(len);
    for (std::size_t t = 0; t < len; ++t) {
        const bool c[3] = {(reg[0] & kMid[0]) != 0, (reg[1] & kMid[1]) != 0, (reg[2] & kMid[2]) != 0};
        const bool maj = (c[0] + c[1] + c[2]) >= 2;
        for (int r = 0; r < 3; ++r) {
            if (c[r] != maj) continue;
            const std::uint32_t fb = parity(reg[r] & kTaps[r]);
            reg[r] = ((reg[r] << 1) & kMask[r]) | fb;
        }
        out.set(t, (parity(reg[0] & kOut[0]) ^ parity(reg[1] & kOut[1]) ^ parity(reg[2] & kOut[2])) != 0);
    }
    return out;
}

BitVec bivium_keystream(const BitVec& state, std::size_t len) {
    std::vector<std::uint8_t> s(178, 0);
    for (std::size_t i = 1; i <= 177; ++i) s[i] = state.test(i - 1);
    BitVec out(len);
    for (std::size_t t = 0; t < len; ++t) {
        std::uint8_t t1 = s[66] ^ s[93];
        std::uint8_t t2 = s[162] ^ s[177];
        out.set(t, (t1 ^ t2) != 0);
        t1 ^= (s[91] & s[92]) ^ s[171];
        t2 ^= (s[175] & s[176]) ^ s[69];
        for (std::size_t k = 93; k >= 2; --k) s[k] = s[k - 1];
        s[1] = t2;
        for (std::size_t k = 177; k >= 95; --k) s[k] = s[k - 1];
        s[94] = t1;
    }
    return out;
}

std::uint8_t grain_nfsr_feedback(const std::uint8_t* b, std::uint8_t s0) {
    return s0 ^ b[62] ^ b[60] ^ b[52] ^ b[45] ^ b[37] ^ b[33] ^ b[28] ^ b[21] ^ b[14] ^ b[9] ^ b[0] ^
           (b[63] & b[60]) ^ (b[37] & b[33]) ^ (b[15] & b[9]) ^ (b[60] & b[52] & b[45]) ^
           (b[33] & b[28] & b[21]) ^ (b[63] & b[45] & b[28] & b[9]) ^ (b[60] & b[52] & b[37] & b[33]) ^
           (b[63] & b[60] & b[21] & b[15]) ^ (b[63] & b[60] & b[52] & b[45] & b[37]) ^
           (b[33] & b[28] & b[21] & b[15] & b[9]) ^ (b[52] & b[45] & b[37] & b[33] & b[28] & b[21]);
}

BitVec grain_keystream(const BitVec& state, std::size_t len) {
    std::uint8_t b[80];
    std::uint8_t s[80];
    for (std::size_t i = 0; i < 80; ++i) {
        b[i] = state.test(i);
        s[i] = state.test(80 + i);
    }
    BitVec out(len);
    for (std::size_t t = 0; t < len; ++t) {
        const std::uint8_t x0 = s[3], x1 = s[25], x2 = s[46], x3 = s[64], x4 = b[63];
        const std::uint8_t h = x1 ^ x4 ^ (x0 & x3) ^ (x2 & x3) ^ (x3 & x4) ^ (x0 & x1 & x2) ^ (x0 & x2 & x3) ^
                               (x0 & x2 & x4) ^ (x1 & x2 & x4) ^ (x2 & x3 & x4);
        out.set(t, (b[1] ^ b[2] ^ b[4] ^ b[10] ^ b[31] ^ b[43] ^ b[56] ^ h) != 0);
        const std::uint8_t fs = s[62] ^ s[51] ^ s[38] ^ s[23] ^ s[13] ^ s[0];
        const std::uint8_t fb = grain_nfsr_feedback(b, s[0]);
        for (std::size_t i = 0; i < 79; ++i) {
            b[i] = b[i + 1];
            s[i] = s[i + 1];
        }
        b[79] = fb;
        s[79] = fs;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Circuits

std::vector<std::string> register_names(const std::string& prefix, std::size_t first, std::size_t count) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < count; ++i) names.push_back(prefix + std::to_string(first + i));
    return names;
}

Circuit a51_circuit(std::size_t len) {
    std::vector<std::string> names = register_names("r1_", 0, 19);
    for (auto& n : register_names("r2_", 0, 22)) names.push_back(n);
    for (auto& n : register_names("r3_", 0, 23)) names.push_back(n);
    CircuitBuilder cb(std::move(names));

    constexpr std::size_t kLen[3] = {19, 22, 23};
    constexpr std::size_t kOffset[3] = {0, 19, 41};
    constexpr std::size_t kMid[3] = {8, 10, 10};
    const std::vector<std::size_t> taps[3] = {{13, 16, 17, 18}, {20, 21}, {7, 20, 21, 22}};

    std::vector<std::uint32_t> reg[3];
    for (int r = 0; r < 3; ++r)
        for (std::size_t i = 0; i < kLen[r]; ++i) reg[r].push_back(cb.input(kOffset[r] + i));

    for (std::size_t t = 0; t < len; ++t) {
        const std::uint32_t maj = cb.maj3(reg[0][kMid[0]], reg[1][kMid[1]], reg[2][kMid[2]]);
        for (int r = 0; r < 3; ++r) {
            // Register r moves iff its clocking bit equals the majority, i.e.
            // stay = clock_bit ^ maj.
            const std::uint32_t stay = cb.xor_(reg[r][kMid[r]], maj);
            std::vector<std::uint32_t> tapped;
            for (std::size_t k : taps[r]) tapped.push_back(reg[r][k]);
            const std::uint32_t fb = cb.xor_all(tapped);
            std::vector<std::uint32_t> next(kLen[r]);
            next[0] = cb.mux(stay, reg[r][0], fb);
            for (std::size_t i = 1; i < kLen[r]; ++i) next[i] = cb.mux(stay, reg[r][i], reg[r][i - 1]);
            reg[r] = std::move(next);
        }
        cb.output(cb.xor_(cb.xor_(reg[0][18], reg[1][21]), reg[2][22]));
    }
    return cb.finish(Cipher::A51);
}

Circuit bivium_circuit(std::size_t len) {
    CircuitBuilder cb(register_names("s", 1, 177));
    // s[1..177] hold current wires; index 0 unused.
    std::vector<std::uint32_t> s(178);
    for (std::size_t i = 1; i <= 177; ++i) s[i] = cb.input(i - 1);
    for (std::size_t t = 0; t < len; ++t) {
        const std::uint32_t t1 = cb.xor_(s[66], s[93]);
        const std::uint32_t t2 = cb.xor_(s[162], s[177]);
        cb.output(cb.xor_(t1, t2));
        if (t + 1 == len) break;
        const std::uint32_t n1 = cb.xor_(cb.xor_(t1, cb.and_(s[91], s[92])), s[171]);
        const std::uint32_t n2 = cb.xor_(cb.xor_(t2, cb.and_(s[175], s[176])), s[69]);
        for (std::size_t k = 93; k >= 2; --k) s[k] = s[k - 1];
        s[1] = n2;
        for (std::size_t k = 177; k >= 95; --k) s[k] = s[k - 1];
        s[94] = n1;
    }
    return cb.finish(Cipher::Bivium);
}

Circuit grain_circuit(std::size_t len) {
    std::vector<std::string> names = register_names("b", 0, 80);
    for (auto& n : register_names("s", 0, 80)) names.push_back(n);
    CircuitBuilder cb(std::move(names));
    std::vector<std::uint32_t> b(80);
    std::vector<std::uint32_t> s(80);
    for (std::size_t i = 0; i < 80; ++i) {
        b[i] = cb.input(i);
        s[i] = cb.input(80 + i);
    }
    for (std::size_t t = 0; t < len; ++t) {
        const std::uint32_t x0 = s[3], x1 = s[25], x2 = s[46], x3 = s[64], x4 = b[63];
        const std::uint32_t x2x3 = cb.and_(x2, x3);
        const std::uint32_t x0x2 = cb.and_(x0, x2);
        const std::uint32_t h = cb.xor_all({x1, x4, cb.and_(x0, x3), x2x3, cb.and_(x3, x4), cb.and_(x0x2, x1),
                                            cb.and_(x0x2, x3), cb.and_(x0x2, x4), cb.and_(cb.and_(x1, x2), x4),
                                            cb.and_(x2x3, x4)});
        cb.output(cb.xor_all({b[1], b[2], b[4], b[10], b[31], b[43], b[56], h}));
        if (t + 1 == len) break;

        const std::uint32_t fs = cb.xor_all({s[62], s[51], s[38], s[23], s[13], s[0]});
        const std::uint32_t b6360 = cb.and_(b[63], b[60]);
        const std::uint32_t b3733 = cb.and_(b[37], b[33]);
        const std::uint32_t b6052 = cb.and_(b[60], b[52]);
        const std::uint32_t b2821 = cb.and_(b[28], b[21]);
        const std::uint32_t b3328_21 = cb.and_(b[33], b2821);
        const std::uint32_t b6052_45 = cb.and_(b6052, b[45]);
        const std::uint32_t fb = cb.xor_all({
            s[0], b[62], b[60], b[52], b[45], b[37], b[33], b[28], b[21], b[14], b[9], b[0],
            b6360,
            b3733,
            cb.and_(b[15], b[9]),
            b6052_45,
            b3328_21,
            cb.and_all({b[63], b[45], b[28], b[9]}),
            cb.and_(b6052, b3733),
            cb.and_all({b6360, b[21], b[15]}),
            cb.and_all({b6360, b[52], b[45], b[37]}),
            cb.and_all({b3328_21, b[15], b[9]}),
            cb.and_all({b[52], b[45], b3733, b2821}),
        });
        std::rotate(b.begin(), b.begin() + 1, b.end());
        std::rotate(s.begin(), s.begin() + 1, s.end());
        b[79] = fb;
        s[79] = fs;
    }
    return cb.finish(Cipher::Grain);
}

}  // namespace

BitVec keystream_oracle(Cipher cipher, const BitVec& state, std::size_t len) {
    if (state.size() != state_width(cipher))
        throw std::invalid_argument(std::string(to_string(cipher)) + " state must have " +
                                    std::to_string(state_width(cipher)) + " bits, got " +
                                    std::to_string(state.size()));
    switch (cipher) {
        case Cipher::A51: return a51_keystream(state, len);
        case Cipher::Bivium: return bivium_keystream(state, len);
        case Cipher::Grain: return grain_keystream(state, len);
    }
    return {};
}

void Circuit::validate() const {
    for (std::size_t g = 0; g < gates.size(); ++g) {
        const auto& gate = gates[g];
        const std::size_t self = inputs.size() + g;
        const int n = arity(gate.kind);
        for (int k = 0; k < n; ++k) {
            if (gate.in[static_cast<std::size_t>(k)] >= self)
                throw std::invalid_argument("gate " + std::to_string(g) + " reads wire " +
                                            std::to_string(gate.in[static_cast<std::size_t>(k)]) +
                                            " that is not defined before it");
            for (int j = 0; j < k; ++j)
                if (gate.in[static_cast<std::size_t>(j)] == gate.in[static_cast<std::size_t>(k)])
                    throw std::invalid_argument("gate " + std::to_string(g) + " repeats an input wire");
        }
    }
    for (auto w : outputs)
        if (w >= wire_count()) throw std::invalid_argument("output names undefined wire " + std::to_string(w));
}

BitVec Circuit::evaluate(const BitVec& input_values) const {
    if (input_values.size() != inputs.size())
        throw std::invalid_argument("circuit expects " + std::to_string(inputs.size()) + " inputs");
    BitVec w(wire_count());
    for (std::size_t i = 0; i < inputs.size(); ++i) w.set(i, input_values.test(i));
    for (std::size_t g = 0; g < gates.size(); ++g) {
        const auto& gate = gates[g];
        const bool a = w.test(gate.in[0]);
        const bool b = arity(gate.kind) > 1 && w.test(gate.in[1]);
        const bool c = arity(gate.kind) > 2 && w.test(gate.in[2]);
        bool v = false;
        switch (gate.kind) {
            case GateKind::And: v = a && b; break;
            case GateKind::Xor: v = a != b; break;
            case GateKind::Not: v = !a; break;
            case GateKind::Maj3: v = (a + b + c) >= 2; break;
            case GateKind::Mux: v = a ? b : c; break;
        }
        w.set(inputs.size() + g, v);
    }
    return w;
}

BitVec Circuit::simulate(const BitVec& input_values) const {
    const BitVec w = evaluate(input_values);
    BitVec out(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) out.set(i, w.test(outputs[i]));
    return out;
}

CircuitBuilder::CircuitBuilder(std::vector<std::string> input_names) { circuit_.inputs = std::move(input_names); }

std::uint32_t CircuitBuilder::add(GateKind kind, std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    circuit_.gates.push_back(Gate{kind, {a, b, c}});
    return static_cast<std::uint32_t>(circuit_.wire_count() - 1);
}

std::uint32_t CircuitBuilder::xor_all(const std::vector<std::uint32_t>& wires) {
    if (wires.empty()) throw std::invalid_argument("xor_all of no wires");
    std::uint32_t acc = wires[0];
    for (std::size_t i = 1; i < wires.size(); ++i) acc = xor_(acc, wires[i]);
    return acc;
}

std::uint32_t CircuitBuilder::and_all(const std::vector<std::uint32_t>& wires) {
    if (wires.empty()) throw std::invalid_argument("and_all of no wires");
    std::uint32_t acc = wires[0];
    for (std::size_t i = 1; i < wires.size(); ++i) acc = and_(acc, wires[i]);
    return acc;
}

Circuit CircuitBuilder::finish(std::optional<Cipher> cipher) {
    circuit_.cipher = cipher;
    circuit_.validate();
    return std::move(circuit_);
}

Circuit build_circuit(Cipher cipher, std::size_t keystream_len) {
    if (keystream_len == 0) throw std::invalid_argument("keystream length must be at least 1");
    switch (cipher) {
        case Cipher::A51:
            if (keystream_len > kA51BurstLength)
                throw std::invalid_argument("A5/1 keystream is limited to one burst of 114 bits");
            return a51_circuit(keystream_len);
        case Cipher::Bivium: return bivium_circuit(keystream_len);
        case Cipher::Grain: return grain_circuit(keystream_len);
    }
    return {};
}

std::vector<Var> InstanceMeta::free_starting_vars() const {
    const std::size_t keep = starting_vars.size() - std::min(weakened_k, starting_vars.size());
    return {starting_vars.begin(), starting_vars.begin() + static_cast<std::ptrdiff_t>(keep)};
}

Instance tseitin_encode(const Circuit& circuit, const BitVec& keystream_bits) {
    circuit.validate();
    if (keystream_bits.size() != circuit.outputs.size())
        throw std::invalid_argument("keystream has " + std::to_string(keystream_bits.size()) +
                                    " bits but the circuit has " + std::to_string(circuit.outputs.size()) +
                                    " outputs");
    Instance inst;
    Cnf& cnf = inst.cnf;
    cnf.var_count = static_cast<Var>(circuit.wire_count());
    auto var = [](std::uint32_t wire) { return static_cast<Lit>(wire) + 1; };

    for (std::size_t g = 0; g < circuit.gates.size(); ++g) {
        const auto& gate = circuit.gates[g];
        const Lit o = var(static_cast<std::uint32_t>(circuit.inputs.size() + g));
        const Lit a = var(gate.in[0]);
        const Lit b = var(gate.in[1]);
        const Lit c = var(gate.in[2]);
        switch (gate.kind) {
            case GateKind::And:
                cnf.clauses.push_back({-o, a});
                cnf.clauses.push_back({-o, b});
                cnf.clauses.push_back({o, -a, -b});
                break;
            case GateKind::Xor:
                cnf.clauses.push_back({-o, a, b});
                cnf.clauses.push_back({-o, -a, -b});
                cnf.clauses.push_back({o, -a, b});
                cnf.clauses.push_back({o, a, -b});
                break;
            case GateKind::Not:
                cnf.clauses.push_back({o, a});
                cnf.clauses.push_back({-o, -a});
                break;
            case GateKind::Maj3:
                cnf.clauses.push_back({-a, -b, o});
                cnf.clauses.push_back({-a, -c, o});
                cnf.clauses.push_back({-b, -c, o});
                cnf.clauses.push_back({a, b, -o});
                cnf.clauses.push_back({a, c, -o});
                cnf.clauses.push_back({b, c, -o});
                break;
            case GateKind::Mux:  // o = a ? b : c
                cnf.clauses.push_back({-a, -b, o});
                cnf.clauses.push_back({-a, b, -o});
                cnf.clauses.push_back({a, -c, o});
                cnf.clauses.push_back({a, c, -o});
                cnf.clauses.push_back({-b, -c, o});
                cnf.clauses.push_back({b, c, -o});
                break;
        }
    }
    InstanceMeta& meta = inst.meta;
    meta.cipher = circuit.cipher;
    for (std::size_t i = 0; i < circuit.inputs.size(); ++i) meta.starting_vars.push_back(static_cast<Var>(i) + 1);
    meta.keystream = keystream_bits;
    meta.keystream_len = keystream_bits.size();
    for (std::size_t i = 0; i < circuit.outputs.size(); ++i) {
        const Lit o = var(circuit.outputs[i]);
        meta.keystream_vars.push_back(o);
        cnf.clauses.push_back({keystream_bits.test(i) ? o : -o});
    }
    return inst;
}

Instance make_instance(Cipher cipher, std::size_t keystream_len, std::uint64_t seed) {
    Rng rng(derive_seed(seed, streams::kSecret));
    BitVec secret(state_width(cipher));
    for (std::size_t i = 0; i < secret.size(); ++i) secret.set(i, rng() >> 63);
    const BitVec keystream = keystream_oracle(cipher, secret, keystream_len);
    Instance inst = tseitin_encode(build_circuit(cipher, keystream_len), keystream);
    inst.meta.secret_witness = secret;
    return inst;
}

Instance weaken(const Instance& instance, std::size_t k) {
    const auto& meta = instance.meta;
    if (k == 0) return instance;
    if (!meta.cipher) throw std::invalid_argument("weakening needs a cipher instance");
    if (*meta.cipher == Cipher::A51) throw std::invalid_argument("weakening is defined for Bivium and Grain only");
    if (!meta.secret_witness) throw std::invalid_argument("weakening needs the secret witness");
    const std::size_t width = meta.starting_vars.size();
    if (k > width)
        throw std::out_of_range("K = " + std::to_string(k) + " exceeds the " + std::to_string(width) +
                                " starting variables");
    if (meta.weakened_k != 0 && meta.weakened_k != k)
        throw std::invalid_argument("instance is already weakened with K = " + std::to_string(meta.weakened_k));
    if (meta.weakened_k == k) return instance;

    Instance out = instance;
    for (std::size_t i = width - k; i < width; ++i) {
        const Var v = meta.starting_vars[i];
        out.cnf.clauses.push_back({meta.secret_witness->test(i) ? v : -v});
    }
    out.meta.weakened_k = k;
    return out;
}

// ---------------------------------------------------------------------------
// Meta comments

std::string format_var_ranges(const std::vector<Var>& vars) {
    std::string out;
    std::size_t i = 0;
    while (i < vars.size()) {
        std::size_t j = i;
        while (j + 1 < vars.size() && vars[j + 1] == vars[j] + 1) ++j;
        if (!out.empty()) out += ',';
        out += std::to_string(vars[i]);
        if (j > i) out += '-' + std::to_string(vars[j]);
        i = j + 1;
    }
    return out;
}

std::vector<Var> parse_var_ranges(std::string_view text) {
    std::vector<Var> out;
    auto parse_one = [&](std::string_view tok) {
        Var v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size() || v < 1)
            throw std::invalid_argument("bad variable '" + std::string(tok) + "' in range list");
        return v;
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        std::string_view part = text.substr(pos, comma - pos);
        while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
        while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
        if (!part.empty()) {
            const std::size_t dash = part.find('-');
            if (dash == std::string_view::npos) {
                out.push_back(parse_one(part));
            } else {
                const Var lo = parse_one(part.substr(0, dash));
                const Var hi = parse_one(part.substr(dash + 1));
                if (hi < lo) throw std::invalid_argument("descending range '" + std::string(part) + "'");
                for (Var v = lo; v <= hi; ++v) out.push_back(v);
            }
        }
        pos = comma + 1;
    }
    return out;
}

namespace {

constexpr std::string_view kMetaPrefix = "meta:";

}  // namespace

std::vector<std::string> meta_comment_lines(const InstanceMeta& meta, bool include_witness) {
    std::vector<std::string> lines;
    auto add = [&](const std::string& key, const std::string& value) {
        lines.push_back(std::string(kMetaPrefix) + " " + key + "=" + value);
    };
    if (meta.cipher) add("cipher", std::string(to_string(*meta.cipher)));
    add("keystream_len", std::to_string(meta.keystream_len));
    add("keystream", meta.keystream.to_hex());
    add("starting_vars", format_var_ranges(meta.starting_vars));
    add("keystream_vars", format_var_ranges(meta.keystream_vars));
    add("weakened_K", std::to_string(meta.weakened_k));
    if (include_witness && meta.secret_witness) add("witness", meta.secret_witness->to_hex());
    return lines;
}

std::optional<InstanceMeta> parse_meta_comments(const std::vector<std::string>& comments) {
    std::map<std::string, std::string> kv;
    for (const auto& line : comments) {
        std::string_view view(line);
        if (view.substr(0, kMetaPrefix.size()) != kMetaPrefix) continue;
        view.remove_prefix(kMetaPrefix.size());
        while (!view.empty() && view.front() == ' ') view.remove_prefix(1);
        const std::size_t eq = view.find('=');
        if (eq == std::string_view::npos) throw std::invalid_argument("meta line without '=': " + line);
        kv[std::string(view.substr(0, eq))] = std::string(view.substr(eq + 1));
    }
    if (kv.empty()) return std::nullopt;

    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::invalid_argument("meta is missing '" + key + "'");
        return it->second;
    };
    InstanceMeta meta;
    if (auto it = kv.find("cipher"); it != kv.end()) {
        meta.cipher = parse_cipher(it->second);
        if (!meta.cipher) throw std::invalid_argument("unknown cipher '" + it->second + "' in meta");
    }
    meta.keystream_len = std::stoul(need("keystream_len"));
    meta.keystream = BitVec::from_hex(need("keystream"), meta.keystream_len);
    meta.starting_vars = parse_var_ranges(need("starting_vars"));
    meta.keystream_vars = parse_var_ranges(need("keystream_vars"));
    meta.weakened_k = std::stoul(need("weakened_K"));
    if (auto it = kv.find("witness"); it != kv.end())
        meta.secret_witness = BitVec::from_hex(it->second, meta.starting_vars.size());
    if (meta.keystream_vars.size() != meta.keystream_len)
        throw std::invalid_argument("meta keystream_vars does not match keystream_len");
    if (meta.cipher && meta.starting_vars.size() != state_width(*meta.cipher))
        throw std::invalid_argument("meta starting_vars does not match the cipher state width");
    return meta;
}

Cnf with_meta_comments(Cnf cnf, const InstanceMeta& meta, bool include_witness) {
    std::erase_if(cnf.comments, [](const std::string& c) { return c.rfind(kMetaPrefix, 0) == 0; });
    for (auto& line : meta_comment_lines(meta, include_witness)) cnf.comments.push_back(std::move(line));
    return cnf;
}

bool model_reproduces_keystream(const InstanceMeta& meta, const BitVec& model) {
    if (!meta.cipher) throw std::invalid_argument("keystream check needs a cipher instance");
    BitVec state(meta.starting_vars.size());
    for (std::size_t i = 0; i < state.size(); ++i)
        state.set(i, model.test(static_cast<std::size_t>(meta.starting_vars[i] - 1)));
    return keystream_oracle(*meta.cipher, state, meta.keystream_len) == meta.keystream;
}

}  // namespace partsat
