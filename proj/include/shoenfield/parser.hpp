#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "shoenfield/machine.hpp"
#include "shoenfield/rational.hpp"

namespace shoenfield {

// Textual program format (.shm):
//
//   program  := (line NEWLINE)* ;
//   line     := INDEX ":" choice ("|" choice)* comment? ;
//   choice   := weight? instr ;
//   weight   := "[" INT ("/" INT)? "]" ;
//   instr    := "INC" INT | "DEC" INT "," INT ;
//   comment  := "#" <any chars to end of line> ;
//
// Whitespace between tokens is insignificant. Indices must run 0,1,2,... in
// order. Blank and comment-only lines are ignored. A line annotates either
// all of its choices or none; unannotated multi-choice lines get uniform
// weights 1/m.

enum class ProgramMode { Deterministic, NonDeterministic, Probabilistic };

inline const char* to_string(ProgramMode mode) {
    switch (mode) {
        case ProgramMode::Deterministic: return "deterministic";
        case ProgramMode::NonDeterministic: return "non-deterministic";
        default: return "probabilistic";
    }
}

class ParseError : public std::runtime_error {
public:
    enum class Kind { Syntax, WeightSum, MixedAnnotation, EmptyLine };

    ParseError(Kind kind, std::size_t line, std::size_t column, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(column) + ": " + message),
          kind_(kind),
          line_(line),
          column_(column) {}

    Kind kind() const { return kind_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    Kind kind_;
    std::size_t line_;
    std::size_t column_;
};

struct SourceProgram {
    std::string text;
    Program parsed;
    ProgramMode mode = ProgramMode::Deterministic;
};

namespace detail {

// Cursor over one physical source line, 1-based column reporting.
struct LineCursor {
    const std::string& text;
    std::size_t line_number;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(ParseError::Kind::Syntax, line_number, pos + 1, message);
    }

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\r'))
            ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    bool try_consume(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!try_consume(c))
            fail(std::string("expected '") + c + "' " + what);
    }

    Integer integer(const char* what) {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9')
            ++pos;
        if (pos == start)
            fail(std::string("expected ") + what);
        return Integer(text.substr(start, pos - start));
    }

    std::uint64_t natural(const char* what) {
        std::size_t at = pos;
        Integer value = integer(what);
        if (!value.fits_ulong_p()) {
            pos = at;
            fail(std::string(what) + " too large");
        }
        return value.get_ui();
    }

    bool try_keyword(const char* word) {
        skip_ws();
        std::size_t n = std::char_traits<char>::length(word);
        if (text.compare(pos, n, word) == 0) {
            pos += n;
            return true;
        }
        return false;
    }
};

}  // namespace detail

inline SourceProgram parse_program(const std::string& text) {
    SourceProgram source;
    source.text = text;
    bool any_annotation = false;

    std::size_t line_number = 0;
    std::size_t offset = 0;
    while (offset < text.size()) {
        std::size_t eol = text.find('\n', offset);
        if (eol == std::string::npos)
            eol = text.size();
        std::string raw = text.substr(offset, eol - offset);
        offset = eol + 1;
        ++line_number;

        if (std::size_t hash = raw.find('#'); hash != std::string::npos)
            raw.resize(hash);

        detail::LineCursor cur{raw, line_number};
        if (cur.at_end())
            continue;

        std::size_t index_col = cur.pos + 1;
        Integer index = cur.integer("line index");
        if (index != Integer(static_cast<unsigned long>(source.parsed.lines.size())))
            throw ParseError(ParseError::Kind::Syntax, line_number, index_col,
                             "expected line index " + std::to_string(source.parsed.lines.size()) + ", got " +
                                 index.get_str());
        cur.expect(':', "after line index");

        if (cur.at_end())
            throw ParseError(ParseError::Kind::EmptyLine, line_number, cur.pos + 1, "line has no instructions");

        ProgramLine line;
        std::vector<bool> annotated;
        do {
            Choice choice;
            bool has_weight = false;
            if (cur.try_consume('[')) {
                has_weight = true;
                Integer num = cur.integer("weight numerator");
                Integer den = 1;
                if (cur.try_consume('/')) {
                    std::size_t den_col = cur.pos + 1;
                    den = cur.integer("weight denominator");
                    if (den == 0)
                        throw ParseError(ParseError::Kind::Syntax, line_number, den_col, "weight denominator is zero");
                }
                cur.expect(']', "after weight");
                choice.weight = make_rational(num, den);
            }
            if (cur.try_keyword("INC")) {
                choice.instruction = Instruction::inc(cur.natural("register index"));
            } else if (cur.try_keyword("DEC")) {
                std::uint64_t reg = cur.natural("register index");
                cur.expect(',', "between DEC operands");
                choice.instruction = Instruction::dec(reg, cur.natural("jump target"));
            } else {
                cur.fail("expected INC or DEC");
            }
            annotated.push_back(has_weight);
            line.choices.push_back(std::move(choice));
        } while (cur.try_consume('|'));

        if (!cur.at_end())
            cur.fail("unexpected trailing input");

        std::size_t weighted = 0;
        for (bool a : annotated)
            weighted += a ? 1 : 0;
        if (weighted != 0 && weighted != line.choices.size())
            throw ParseError(ParseError::Kind::MixedAnnotation, line_number, 1,
                             "line annotates some but not all choices");
        if (weighted == line.choices.size()) {
            any_annotation = true;
            Rational sum(0);
            for (const Choice& c : line.choices)
                sum += c.weight;
            if (sum != 1)
                throw ParseError(ParseError::Kind::WeightSum, line_number, 1,
                                 "weights sum to " + weight_string(sum) + ", expected 1");
        } else {
            Rational uniform = make_rational(1, static_cast<long>(line.choices.size()));
            for (Choice& c : line.choices)
                c.weight = uniform;
        }
        source.parsed.lines.push_back(std::move(line));
    }

    if (any_annotation)
        source.mode = ProgramMode::Probabilistic;
    else if (is_deterministic(source.parsed))
        source.mode = ProgramMode::Deterministic;
    else
        source.mode = ProgramMode::NonDeterministic;
    return source;
}

// Canonical text form. Weights appear exactly when a line has more than one
// choice or a non-unit weight, so parse(format(p)).parsed == p for every
// valid program.
inline std::string format_program(const Program& program) {
    std::string out;
    for (std::size_t i = 0; i < program.lines.size(); ++i) {
        const ProgramLine& line = program.lines[i];
        out += std::to_string(i);
        out += ":";
        for (std::size_t j = 0; j < line.choices.size(); ++j) {
            const Choice& choice = line.choices[j];
            out += j == 0 ? " " : " | ";
            if (line.choices.size() > 1 || choice.weight != 1) {
                out += "[" + weight_string(choice.weight) + "] ";
            }
            out += to_string(choice.instruction);
        }
        out += "\n";
    }
    return out;
}

}  // namespace shoenfield
