#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "shoenfield/machine.hpp"
#include "shoenfield/random.hpp"
#include "shoenfield/rational.hpp"
#include "shoenfield/tree.hpp"

namespace shoenfield {

// Probabilistic runs follow a single path, drawing one choice per line from
// the line's weight distribution. Everything here is exact: path
// probabilities are rational products of the drawn weights, and acceptance
// probability is computed by exhausting the choice tree up to a fuel bound.
// Fuel cuts are never hidden; mass that could not be resolved within fuel is
// reported as a separate component, so the true acceptance probability lies
// in [accept_mass, accept_mass + unresolved_mass].

class WeightError : public std::runtime_error {
public:
    WeightError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class BudgetExceededError : public std::runtime_error {
public:
    explicit BudgetExceededError(std::size_t cap)
        : std::runtime_error("exploration exceeded the node cap of " + std::to_string(cap)), cap_(cap) {}

    std::size_t cap() const { return cap_; }

private:
    std::size_t cap_;
};

class EpsilonOutOfRangeError : public std::invalid_argument {
public:
    explicit EpsilonOutOfRangeError(const Rational& epsilon)
        : std::invalid_argument("epsilon must lie in (0, 1], got " + weight_string(epsilon)) {}
};

class EtaOutOfRangeError : public std::invalid_argument {
public:
    explicit EtaOutOfRangeError(const Rational& eta)
        : std::invalid_argument("eta must lie in (0, 1/2), got " + weight_string(eta)) {}
};

inline constexpr std::size_t kDefaultNodeCap = 10'000'000;

inline void check_weights(const Program& program) {
    for (std::size_t i = 0; i < program.lines.size(); ++i) {
        const ProgramLine& line = program.lines[i];
        if (line.choices.empty())
            throw WeightError(i, "line has no choices");
        Rational sum(0);
        for (const Choice& choice : line.choices) {
            if (choice.weight < 0)
                throw WeightError(i, "negative weight " + weight_string(choice.weight));
            sum += choice.weight;
        }
        if (sum != 1)
            throw WeightError(i, "weights sum to " + weight_string(sum) + ", expected exactly 1");
    }
}

// One choice index per executed step. Entry j is bounded by the choice count
// of the line addressed at step j, a mixed-radix generalization of a coin
// bitstring.
struct ChoiceSequence {
    std::vector<std::size_t> choices;
};

enum class PathOutcome { Accept, Reject, Unresolved };

inline const char* to_string(PathOutcome outcome) {
    switch (outcome) {
        case PathOutcome::Accept: return "accept";
        case PathOutcome::Reject: return "reject";
        default: return "unresolved";
    }
}

struct PathResult {
    PathOutcome outcome = PathOutcome::Unresolved;
    Trace trace;
    Rational path_probability;  // exact product of the drawn weights
    std::uint64_t steps = 0;
    std::uint64_t random_choices = 0;  // steps whose line offered >= 2 choices
    Configuration final_config;
};

struct ProbabilityInterval {
    Rational accept_mass;
    Rational reject_mass;
    Rational unresolved_mass;
};

inline bool operator==(const ProbabilityInterval& a, const ProbabilityInterval& b) {
    return a.accept_mass == b.accept_mass && a.reject_mass == b.reject_mass &&
           a.unresolved_mass == b.unresolved_mass;
}

struct EstimateReport {
    Rational estimate;  // accepts / sample_count
    std::uint64_t sample_count = 0;
    std::uint64_t accepts = 0;
    std::uint64_t rejects = 0;
    std::uint64_t unresolved = 0;
    Rational epsilon;
    std::uint64_t seed = 0;
};

enum class VerdictKind { Accept, Reject, Undetermined };
enum class UndeterminedReason { None, UnresolvedMass, EstimateInGap };
enum class DecideMode { Exact, Sampled };

inline const char* to_string(VerdictKind kind) {
    switch (kind) {
        case VerdictKind::Accept: return "accept";
        case VerdictKind::Reject: return "reject";
        default: return "undetermined";
    }
}

inline const char* to_string(UndeterminedReason reason) {
    switch (reason) {
        case UndeterminedReason::UnresolvedMass: return "unresolved-mass";
        case UndeterminedReason::EstimateInGap: return "estimate-in-gap";
        default: return "none";
    }
}

struct Verdict {
    VerdictKind kind = VerdictKind::Undetermined;
    UndeterminedReason reason = UndeterminedReason::None;
    std::optional<ProbabilityInterval> interval;  // Exact mode evidence
    std::optional<EstimateReport> estimate;       // Sampled mode evidence
};

// Deterministic programs embed into the probabilistic semantics by giving
// the single choice on every line weight exactly 1.
inline Program lift_deterministic(const Program& program) {
    if (!is_deterministic(program))
        throw NotDeterministicError();
    Program lifted = program;
    for (ProgramLine& line : lifted.lines)
        line.choices[0].weight = 1;
    return lifted;
}

namespace detail {

template <typename Chooser>
PathResult walk_path(const Program& program, const RegisterMap& inputs, std::uint64_t fuel, Chooser&& pick,
                     const AcceptancePolicy& policy) {
    PathResult result;
    result.path_probability = 1;
    Configuration config = make_configuration(inputs);
    while (true) {
        if (is_halted(program, config)) {
            result.outcome = policy.accepts(config) ? PathOutcome::Accept : PathOutcome::Reject;
            break;
        }
        if (result.steps == fuel) {
            result.outcome = PathOutcome::Unresolved;
            break;
        }
        const ProgramLine& line = program.lines[config.counter];
        std::size_t j = pick(line, result.steps);
        if (j >= line.choices.size())
            throw ChoiceOutOfRangeError(j, line.choices.size());
        if (line.choices.size() > 1)
            ++result.random_choices;
        result.trace.steps.push_back(TraceStep{config.counter, j, line.choices[j].instruction});
        result.path_probability *= line.choices[j].weight;
        config = apply_instruction(config, line.choices[j].instruction);
        ++result.steps;
    }
    result.final_config = std::move(config);
    return result;
}

}  // namespace detail

// Follows one random path. Single-choice lines consume no randomness; the
// outcome is Unresolved when fuel runs out before the machine halts.
inline PathResult sample_path(const Program& program, const RegisterMap& inputs, std::uint64_t fuel,
                              RandomSource& rng, const AcceptancePolicy& policy) {
    check_weights(program);
    return detail::walk_path(
        program, inputs, fuel, [&rng](const ProgramLine& line, std::uint64_t) { return rng.choose(line); }, policy);
}

// Replays a fixed choice sequence. The walk also stops once the sequence is
// exhausted, so a sequence shorter than the fuel bound acts as its own fuel.
inline PathResult follow_choices(const Program& program, const RegisterMap& inputs, std::uint64_t fuel,
                                 const ChoiceSequence& sequence, const AcceptancePolicy& policy) {
    std::uint64_t limit = std::min<std::uint64_t>(fuel, sequence.choices.size());
    return detail::walk_path(
        program, inputs, limit, [&sequence](const ProgramLine&, std::uint64_t at) { return sequence.choices[at]; },
        policy);
}

// Exhaustive enumeration of the choice tree to depth `fuel`, summing exact
// path probabilities by outcome. Every visited configuration counts against
// the node cap.
inline ProbabilityInterval exact_acceptance(const Program& program, const RegisterMap& inputs, std::uint64_t fuel,
                                            const AcceptancePolicy& policy, std::size_t node_cap = kDefaultNodeCap) {
    check_weights(program);
    struct Frame {
        Configuration config;
        Rational prob;
        std::uint64_t depth;
    };
    std::vector<Frame> stack;
    stack.push_back(Frame{make_configuration(inputs), Rational(1), 0});
    ProbabilityInterval interval{Rational(0), Rational(0), Rational(0)};
    std::size_t explored = 0;
    while (!stack.empty()) {
        Frame frame = std::move(stack.back());
        stack.pop_back();
        if (++explored > node_cap)
            throw BudgetExceededError(node_cap);
        if (is_halted(program, frame.config)) {
            if (policy.accepts(frame.config))
                interval.accept_mass += frame.prob;
            else
                interval.reject_mass += frame.prob;
            continue;
        }
        if (frame.depth == fuel) {
            interval.unresolved_mass += frame.prob;
            continue;
        }
        const ProgramLine& line = program.lines[frame.config.counter];
        for (std::size_t j = line.choices.size(); j-- > 0;)
            stack.push_back(Frame{apply_instruction(frame.config, line.choices[j].instruction),
                                  frame.prob * line.choices[j].weight, frame.depth + 1});
    }
    assert(interval.accept_mass + interval.reject_mass + interval.unresolved_mass == 1);
    return interval;
}

namespace detail {

struct MassTriple {
    Rational accept;
    Rational reject;
    Rational unresolved;
};

struct MemoKey {
    Configuration config;
    std::uint64_t fuel_left = 0;

    bool operator==(const MemoKey&) const = default;
};

struct MemoKeyHash {
    std::size_t operator()(const MemoKey& key) const noexcept {
        return ConfigurationHash{}(key.config) * 1099511628211ull ^ key.fuel_left;
    }
};

}  // namespace detail

// Same result as exact_acceptance on every input. The step distribution
// depends only on the current configuration, so mass flowing through equal
// (configuration, remaining fuel) states can be merged; the cap counts
// distinct such states instead of tree nodes.
inline ProbabilityInterval exact_acceptance_memoized(const Program& program, const RegisterMap& inputs,
                                                     std::uint64_t fuel, const AcceptancePolicy& policy,
                                                     std::size_t node_cap = kDefaultNodeCap) {
    check_weights(program);
    using detail::MassTriple;
    using detail::MemoKey;

    std::unordered_map<MemoKey, MassTriple, detail::MemoKeyHash> memo;
    struct Frame {
        MemoKey key;
        std::size_t next_child;
        MassTriple acc;
    };
    std::vector<Frame> stack;
    std::size_t explored = 0;

    auto enter_state = [&](MemoKey key) {
        if (++explored > node_cap)
            throw BudgetExceededError(node_cap);
        if (is_halted(program, key.config)) {
            bool accept = policy.accepts(key.config);
            memo.emplace(std::move(key), MassTriple{Rational(accept ? 1 : 0), Rational(accept ? 0 : 1), Rational(0)});
            return;
        }
        if (key.fuel_left == 0) {
            memo.emplace(std::move(key), MassTriple{Rational(0), Rational(0), Rational(1)});
            return;
        }
        stack.push_back(Frame{std::move(key), 0, MassTriple{Rational(0), Rational(0), Rational(0)}});
    };

    const MemoKey root{make_configuration(inputs), fuel};
    enter_state(root);
    while (!stack.empty()) {
        Frame& frame = stack.back();
        const ProgramLine& line = program.lines[frame.key.config.counter];
        if (frame.next_child == line.choices.size()) {
            memo.emplace(std::move(frame.key), std::move(frame.acc));
            stack.pop_back();
            continue;
        }
        const Choice& choice = line.choices[frame.next_child];
        MemoKey child{apply_instruction(frame.key.config, choice.instruction), frame.key.fuel_left - 1};
        auto it = memo.find(child);
        if (it == memo.end()) {
            enter_state(std::move(child));  // invalidates `frame`; the child is re-read from memo next round
            continue;
        }
        frame.acc.accept += choice.weight * it->second.accept;
        frame.acc.reject += choice.weight * it->second.reject;
        frame.acc.unresolved += choice.weight * it->second.unresolved;
        ++frame.next_child;
    }

    const MassTriple& total = memo.at(root);
    assert(total.accept + total.reject + total.unresolved == 1);
    return ProbabilityInterval{total.accept, total.reject, total.unresolved};
}

// Number of samples needed for an additive error of at most epsilon:
// ceil(ln(3) / epsilon^2). ln 3 is evaluated as 2*atanh(1/2) with a rational
// partial sum plus a tail bound, and the precision is raised until the two
// bounding ceilings agree, so the result is exact for every rational epsilon.
inline std::uint64_t sample_size(const Rational& epsilon) {
    if (epsilon <= 0 || epsilon > 1)
        throw EpsilonOutOfRangeError(epsilon);
    const Rational inv_eps_sq = Rational(1) / (epsilon * epsilon);
    const Rational quarter = make_rational(1, 4);
    for (std::size_t terms = 16;; terms *= 2) {
        Rational sum(0);
        Rational power = make_rational(1, 2);  // (1/2)^(2n+1)
        for (std::size_t n = 0; n < terms; ++n) {
            sum += power / Rational(static_cast<unsigned long>(2 * n + 1));
            power *= quarter;
        }
        // remaining terms are dominated by a geometric series with ratio 1/4
        Rational tail = power / Rational(static_cast<unsigned long>(2 * terms + 1)) * make_rational(4, 3);
        Integer lower = rational_ceil(inv_eps_sq * 2 * sum);
        Integer upper = rational_ceil(inv_eps_sq * 2 * (sum + tail));
        if (lower == upper) {
            if (!lower.fits_ulong_p())
                throw std::overflow_error("sample size does not fit in 64 bits");
            return lower.get_ui();
        }
    }
}

// Monte Carlo estimate of the acceptance probability from
// sample_size(epsilon) independent path samples on per-run derived streams.
// Deterministic given (program, inputs, epsilon, fuel, seed).
inline EstimateReport estimate_acceptance(const Program& program, const RegisterMap& inputs, const Rational& epsilon,
                                          std::uint64_t fuel, std::uint64_t seed, const AcceptancePolicy& policy) {
    check_weights(program);
    EstimateReport report;
    report.sample_count = sample_size(epsilon);
    report.epsilon = epsilon;
    report.seed = seed;
    for (std::uint64_t i = 0; i < report.sample_count; ++i) {
        RandomSource rng = RandomSource::derived(seed, i);
        switch (sample_path(program, inputs, fuel, rng, policy).outcome) {
            case PathOutcome::Accept: ++report.accepts; break;
            case PathOutcome::Reject: ++report.rejects; break;
            case PathOutcome::Unresolved: ++report.unresolved; break;
        }
    }
    report.estimate = make_rational(Integer(report.accepts), Integer(report.sample_count));
    return report;
}

// Bounded-error decision with acceptance gap eta around 1/2. Exact mode
// compares the enumerated interval against 1/2 and refuses to answer when
// unresolved mass straddles the threshold. Sampled mode estimates with
// epsilon = eta, counts unresolved samples as non-accepting, and degrades to
// Undetermined when those samples alone could flip the comparison.
inline Verdict decide_bounded_error(const Program& program, const RegisterMap& inputs, const Rational& eta,
                                    std::uint64_t fuel, DecideMode mode, std::uint64_t seed,
                                    const AcceptancePolicy& policy, std::size_t node_cap = kDefaultNodeCap) {
    if (eta <= 0 || eta >= make_rational(1, 2))
        throw EtaOutOfRangeError(eta);
    Verdict verdict;
    if (mode == DecideMode::Exact) {
        ProbabilityInterval interval = exact_acceptance_memoized(program, inputs, fuel, policy, node_cap);
        const Rational half = make_rational(1, 2);
        if (interval.accept_mass > half) {
            verdict.kind = VerdictKind::Accept;
        } else if (interval.accept_mass + interval.unresolved_mass <= half) {
            verdict.kind = VerdictKind::Reject;
        } else {
            verdict.kind = VerdictKind::Undetermined;
            verdict.reason = UndeterminedReason::UnresolvedMass;
        }
        verdict.interval = std::move(interval);
    } else {
        EstimateReport report = estimate_acceptance(program, inputs, eta, fuel, seed, policy);
        if (2 * report.accepts > report.sample_count) {
            verdict.kind = VerdictKind::Accept;
        } else if (2 * (report.accepts + report.unresolved) > report.sample_count) {
            verdict.kind = VerdictKind::Undetermined;
            verdict.reason = UndeterminedReason::EstimateInGap;
        } else {
            verdict.kind = VerdictKind::Reject;
        }
        verdict.estimate = std::move(report);
    }
    return verdict;
}

}  // namespace shoenfield
