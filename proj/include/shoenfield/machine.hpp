#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "shoenfield/rational.hpp"

namespace shoenfield {

// A Shoenfield register machine holds natural numbers in registers and runs a
// fixed program of INC/DEC instructions. A line may carry several weighted
// instruction choices; the deterministic, non-deterministic and probabilistic
// machine variants differ only in how a choice is picked, so one Program type
// serves all three.

class ChoiceOutOfRangeError : public std::out_of_range {
public:
    explicit ChoiceOutOfRangeError(std::size_t choice, std::size_t available)
        : std::out_of_range("choice " + std::to_string(choice) + " out of range, line has " +
                            std::to_string(available) + " choice(s)") {}
};

class NotDeterministicError : public std::runtime_error {
public:
    NotDeterministicError() : std::runtime_error("program is not deterministic: some line has more than one choice") {}
};

struct Instruction {
    enum class Kind { Inc, Dec };

    Kind kind = Kind::Inc;
    std::uint64_t reg = 0;
    std::uint64_t target = 0;  // Dec only; may point past the end of the program

    static Instruction inc(std::uint64_t reg) { return Instruction{Kind::Inc, reg, 0}; }
    static Instruction dec(std::uint64_t reg, std::uint64_t target) { return Instruction{Kind::Dec, reg, target}; }

    bool operator==(const Instruction&) const = default;
};

inline std::string to_string(const Instruction& instr) {
    if (instr.kind == Instruction::Kind::Inc)
        return "INC " + std::to_string(instr.reg);
    return "DEC " + std::to_string(instr.reg) + "," + std::to_string(instr.target);
}

struct Choice {
    Instruction instruction;
    Rational weight;
};

inline bool operator==(const Choice& a, const Choice& b) {
    return a.instruction == b.instruction && a.weight == b.weight;
}

struct ProgramLine {
    std::vector<Choice> choices;  // non-empty for a valid program
};

inline bool operator==(const ProgramLine& a, const ProgramLine& b) {
    return a.choices == b.choices;
}

struct Program {
    std::vector<ProgramLine> lines;

    std::size_t line_count() const { return lines.size(); }
};

inline bool operator==(const Program& a, const Program& b) {
    return a.lines == b.lines;
}

using RegisterMap = std::map<std::uint64_t, std::uint64_t>;

// Register contents plus the instruction counter. Only non-zero registers are
// stored; an absent index reads as 0, which keeps equality structural.
struct Configuration {
    RegisterMap registers;
    std::uint64_t counter = 0;

    std::uint64_t reg(std::uint64_t index) const {
        auto it = registers.find(index);
        return it == registers.end() ? 0 : it->second;
    }

    void set_reg(std::uint64_t index, std::uint64_t value) {
        if (value == 0)
            registers.erase(index);
        else
            registers[index] = value;
    }

    bool operator==(const Configuration&) const = default;
};

struct ConfigurationHash {
    std::size_t operator()(const Configuration& c) const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ull;
        auto mix = [&h](std::uint64_t v) {
            h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        };
        mix(c.counter);
        for (const auto& [reg, val] : c.registers) {
            mix(reg);
            mix(val);
        }
        return static_cast<std::size_t>(h);
    }
};

inline Configuration make_configuration(const RegisterMap& inputs, std::uint64_t counter = 0) {
    Configuration c;
    c.counter = counter;
    for (const auto& [reg, val] : inputs)
        if (val != 0)
            c.registers.emplace(reg, val);
    return c;
}

struct StepOutcome {
    Configuration config;
    bool halted = false;
};

struct RunResult {
    Configuration config;
    std::uint64_t steps = 0;
    bool halted = false;  // false means the fuel budget ran out first
};

// Halted configurations accept iff the designated register is positive.
struct AcceptancePolicy {
    std::uint64_t accept_register = 0;

    bool accepts(const Configuration& halted_config) const { return halted_config.reg(accept_register) > 0; }
};

enum class Acceptance { Accept, Reject, NotHalted };

inline bool is_halted(const Program& program, const Configuration& config) {
    return config.counter >= program.line_count();
}

inline bool is_deterministic(const Program& program) {
    for (const auto& line : program.lines)
        if (line.choices.size() != 1)
            return false;
    return true;
}

inline Configuration apply_instruction(const Configuration& config, const Instruction& instr) {
    Configuration next = config;
    if (instr.kind == Instruction::Kind::Inc) {
        next.set_reg(instr.reg, next.reg(instr.reg) + 1);
        next.counter += 1;
    } else if (next.reg(instr.reg) > 0) {
        next.set_reg(instr.reg, next.reg(instr.reg) - 1);
        next.counter = instr.target;
    } else {
        next.counter += 1;
    }
    return next;
}

// Executes the addressed line's chosen instruction. A counter past the last
// line halts the machine and leaves the configuration untouched.
inline StepOutcome step(const Program& program, const Configuration& config, std::size_t choice) {
    if (is_halted(program, config))
        return StepOutcome{config, true};
    const ProgramLine& line = program.lines[config.counter];
    if (choice >= line.choices.size())
        throw ChoiceOutOfRangeError(choice, line.choices.size());
    return StepOutcome{apply_instruction(config, line.choices[choice].instruction), false};
}

inline RunResult run_deterministic(const Program& program, const RegisterMap& inputs, std::uint64_t fuel) {
    if (!is_deterministic(program))
        throw NotDeterministicError();
    Configuration config = make_configuration(inputs);
    std::uint64_t steps = 0;
    while (true) {
        if (is_halted(program, config))
            return RunResult{std::move(config), steps, true};
        if (steps == fuel)
            return RunResult{std::move(config), steps, false};
        config = apply_instruction(config, program.lines[config.counter].choices[0].instruction);
        ++steps;
    }
}

inline Acceptance evaluate_acceptance(const Configuration& config, const AcceptancePolicy& policy, bool halted) {
    if (!halted)
        return Acceptance::NotHalted;
    return policy.accepts(config) ? Acceptance::Accept : Acceptance::Reject;
}

}  // namespace shoenfield
