#pragma once

#include <initializer_list>
#include <vector>

#include "shoenfield/machine.hpp"
#include "shoenfield/prob.hpp"
#include "shoenfield/rational.hpp"

namespace shoenfield::testing {

// Single-choice program, every weight 1.
inline Program det_program(std::initializer_list<Instruction> instructions) {
    Program program;
    for (const Instruction& instruction : instructions)
        program.lines.push_back(ProgramLine{{Choice{instruction, Rational(1)}}});
    return program;
}

inline ProgramLine uniform_line(std::initializer_list<Instruction> instructions) {
    ProgramLine line;
    Rational weight = make_rational(1, static_cast<long>(instructions.size()));
    for (const Instruction& instruction : instructions)
        line.choices.push_back(Choice{instruction, weight});
    return line;
}

// Adds R1 into R0 via a scratch register; halts in 15 steps on {R0:2, R1:3}
// with final {R0:5} (hand-simulated before implementation).
inline Program add_program() {
    return det_program({
        Instruction::dec(1, 3),  // 0: move a unit of R1 to the loop body
        Instruction::inc(9),     // 1: R1 empty: set R9=1 so line 2 jumps out
        Instruction::dec(9, 6),  // 2: jump past the end (halt)
        Instruction::inc(0),     // 3: credit R0
        Instruction::inc(9),     // 4: R9=1 forces the loop-back jump
        Instruction::dec(9, 0),  // 5: back to line 0
    });
}

// Never halts: counter bounces 0 -> 1 -> 0 -> ... forever.
inline Program looping_program() {
    return det_program({Instruction::inc(9), Instruction::dec(9, 0)});
}

// One line, two branches of weight 1/2: INC 0 halts accepting, DEC 9,2 on
// zero R9 falls through to counter 1 and halts rejecting.
inline Program coin_program() {
    ProgramLine line;
    line.choices.push_back(Choice{Instruction::inc(0), make_rational(1, 2)});
    line.choices.push_back(Choice{Instruction::dec(9, 2), make_rational(1, 2)});
    Program program;
    program.lines.push_back(std::move(line));
    return program;
}

// Three branches of weight 1/3, two of which accept.
inline Program two_thirds_program() {
    ProgramLine line;
    line.choices.push_back(Choice{Instruction::inc(0), make_rational(1, 3)});
    line.choices.push_back(Choice{Instruction::inc(0), make_rational(1, 3)});
    line.choices.push_back(Choice{Instruction::dec(9, 2), make_rational(1, 3)});
    Program program;
    program.lines.push_back(std::move(line));
    return program;
}

// Accepts with probability 1/3, rejects with 2/3.
inline Program one_third_program() {
    ProgramLine line;
    line.choices.push_back(Choice{Instruction::inc(0), make_rational(1, 3)});
    line.choices.push_back(Choice{Instruction::dec(9, 2), make_rational(2, 3)});
    Program program;
    program.lines.push_back(std::move(line));
    return program;
}

}  // namespace shoenfield::testing
