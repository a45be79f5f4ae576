#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "shoenfield/machine.hpp"
#include "shoenfield/parser.hpp"
#include "shoenfield/random.hpp"
#include "shoenfield/rational.hpp"

namespace shoenfield {

// Random program and input generators for property-based testing. Both are
// pure functions of (params, seed): the draw order below is part of the
// contract, so a fixed seed reproduces the exact same program forever.

class InvalidParamsError : public std::invalid_argument {
public:
    explicit InvalidParamsError(const std::string& message) : std::invalid_argument(message) {}
};

struct GeneratorParams {
    std::uint64_t min_lines = 1;
    std::uint64_t max_lines = 8;
    std::uint64_t max_choices_per_line = 1;
    std::uint64_t register_span = 4;  // registers drawn from [0, register_span)
    // Jump targets are drawn from [0, line_count + jump_span): deliberate
    // overshoot, so a fixed fraction of random programs halt quickly.
    std::uint64_t jump_span = 4;
    ProgramMode mode = ProgramMode::Deterministic;
    std::uint64_t weight_denominator_bound = 12;  // raw weights drawn from [1, bound]
};

inline void validate_params(const GeneratorParams& params) {
    if (params.min_lines > params.max_lines)
        throw InvalidParamsError("min_lines exceeds max_lines");
    if (params.max_choices_per_line == 0)
        throw InvalidParamsError("max_choices_per_line must be at least 1");
    if (params.mode == ProgramMode::Deterministic && params.max_choices_per_line != 1)
        throw InvalidParamsError("deterministic mode requires max_choices_per_line = 1");
    if (params.register_span == 0)
        throw InvalidParamsError("register_span must be at least 1");
    if (params.mode == ProgramMode::Probabilistic && params.weight_denominator_bound == 0)
        throw InvalidParamsError("weight_denominator_bound must be at least 1");
}

inline Program generate_program(const GeneratorParams& params, std::uint64_t seed) {
    validate_params(params);
    std::mt19937_64 gen(seed);
    // Draw order: line count, then per line the choice count, then per
    // choice (kind, register, jump target), then the line's raw weights.
    std::uint64_t line_count = params.min_lines + uniform_u64(gen, params.max_lines - params.min_lines + 1);
    Program program;
    program.lines.reserve(line_count);
    for (std::uint64_t i = 0; i < line_count; ++i) {
        std::uint64_t choice_count =
            params.mode == ProgramMode::Deterministic ? 1 : 1 + uniform_u64(gen, params.max_choices_per_line);
        ProgramLine line;
        line.choices.reserve(choice_count);
        for (std::uint64_t j = 0; j < choice_count; ++j) {
            std::uint64_t reg = uniform_u64(gen, params.register_span);
            if (uniform_u64(gen, 2) == 0) {
                line.choices.push_back(Choice{Instruction::inc(reg), Rational(1)});
            } else {
                std::uint64_t target = uniform_u64(gen, line_count + params.jump_span);
                line.choices.push_back(Choice{Instruction::dec(reg, target), Rational(1)});
            }
        }
        if (params.mode == ProgramMode::Probabilistic) {
            // m positive integers normalized by their sum: exact rationals
            // summing to 1, with small denominators.
            std::vector<std::uint64_t> raw(choice_count);
            for (std::uint64_t& a : raw)
                a = 1 + uniform_u64(gen, params.weight_denominator_bound);
            std::uint64_t total = std::accumulate(raw.begin(), raw.end(), std::uint64_t{0});
            for (std::uint64_t j = 0; j < choice_count; ++j)
                line.choices[j].weight = make_rational(Integer(raw[j]), Integer(total));
        } else if (choice_count > 1) {
            for (Choice& choice : line.choices)
                choice.weight = make_rational(Integer(1), Integer(choice_count));
        }
        program.lines.push_back(std::move(line));
    }
    return program;
}

inline RegisterMap generate_inputs(std::uint64_t register_span, std::uint64_t value_bound, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    RegisterMap inputs;
    for (std::uint64_t r = 0; r < register_span; ++r) {
        std::uint64_t value = uniform_u64(gen, value_bound + 1);
        if (value > 0)
            inputs[r] = value;
    }
    return inputs;
}

}  // namespace shoenfield
