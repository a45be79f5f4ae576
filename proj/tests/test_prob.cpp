#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "helpers.hpp"
#include "shoenfield/prob.hpp"
#include "shoenfield/random.hpp"

using namespace shoenfield;
using namespace shoenfield::testing;

namespace {

const AcceptancePolicy kPolicy;

// Geometric escape: branch 1 exits through line 1 and accepts after 2 steps;
// branch 0 walks the 2-cycle once and retries. Exact masses at fuel f:
// accept = sum of (1/2)^i for i = 1..floor(f/2), unresolved = the rest.
Program escape_program() {
    Program program;
    program.lines.push_back(uniform_line({Instruction::inc(9), Instruction::inc(0)}));
    program.lines.push_back(ProgramLine{{Choice{Instruction::dec(9, 0), Rational(1)}}});
    return program;
}

// Enumerates every fuel-complete ChoiceSequence via follow_choices and sums
// the path probabilities per outcome: an oracle independent of both
// enumeration engines.
ProbabilityInterval enumerate_by_sequences(const Program& program, const RegisterMap& inputs, std::uint64_t fuel) {
    ProbabilityInterval interval{Rational(0), Rational(0), Rational(0)};
    std::vector<std::size_t> prefix;
    auto recurse = [&](auto&& self) -> void {
        // walk the prefix; extend only when it ends unresolved short of fuel
        PathResult result = follow_choices(program, inputs, fuel, ChoiceSequence{prefix}, kPolicy);
        if (result.outcome == PathOutcome::Accept) {
            interval.accept_mass += result.path_probability;
            return;
        }
        if (result.outcome == PathOutcome::Reject) {
            interval.reject_mass += result.path_probability;
            return;
        }
        if (result.steps == fuel) {
            interval.unresolved_mass += result.path_probability;
            return;
        }
        std::size_t width = program.lines[result.final_config.counter].choices.size();
        for (std::size_t j = 0; j < width; ++j) {
            prefix.push_back(j);
            self(self);
            prefix.pop_back();
        }
    };
    recurse(recurse);
    return interval;
}

}  // namespace

TEST_CASE("lift_deterministic pins unit weights onto single choices", "[prob]") {
    Program lifted = lift_deterministic(det_program({Instruction::inc(1)}));
    REQUIRE(lifted.line_count() == 1);
    CHECK(lifted.lines[0].choices[0].weight == 1);

    CHECK(lift_deterministic(Program{}).line_count() == 0);
    CHECK_THROWS_AS(lift_deterministic(coin_program()), NotDeterministicError);
}

TEST_CASE("check_weights demands exact unit sums", "[prob]") {
    CHECK_NOTHROW(check_weights(coin_program()));
    CHECK_NOTHROW(check_weights(two_thirds_program()));

    SECTION("a deficient sum is reported with its line") {
        Program bad;
        bad.lines.push_back(ProgramLine{{Choice{Instruction::inc(0), make_rational(1, 2)}}});
        try {
            check_weights(bad);
            FAIL("expected WeightError");
        } catch (const WeightError& e) {
            CHECK(e.line() == 0);
            CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("1/2"));
        }
    }
    SECTION("negative weights are rejected even when the sum is 1") {
        Program bad;
        ProgramLine line;
        line.choices.push_back(Choice{Instruction::inc(0), make_rational(3, 2)});
        line.choices.push_back(Choice{Instruction::inc(0), make_rational(-1, 2)});
        bad.lines.push_back(std::move(line));
        CHECK_THROWS_AS(check_weights(bad), WeightError);
    }
    SECTION("a line with no choices is rejected") {
        Program bad;
        bad.lines.push_back(ProgramLine{});
        CHECK_THROWS_AS(check_weights(bad), WeightError);
    }
}

TEST_CASE("sample_path follows one weighted path exactly", "[prob]") {
    SECTION("the coin halts after one step with probability 1/2 on either side") {
        RandomSource rng(7);
        for (int i = 0; i < 20; ++i) {
            PathResult result = sample_path(coin_program(), {}, 10, rng, kPolicy);
            CHECK((result.outcome == PathOutcome::Accept || result.outcome == PathOutcome::Reject));
            CHECK(result.path_probability == make_rational(1, 2));
            CHECK(result.random_choices == 1);
            CHECK(result.steps == 1);
            REQUIRE(result.trace.steps.size() == 1);
            CHECK((result.outcome == PathOutcome::Accept) == (result.trace.steps[0].choice == 0));
        }
    }
    SECTION("a lifted deterministic run consumes no randomness") {
        RandomSource rng(1);
        PathResult result = sample_path(lift_deterministic(add_program()), {{0, 2}, {1, 3}}, 100, rng, kPolicy);
        CHECK(result.outcome == PathOutcome::Accept);
        CHECK(result.path_probability == 1);
        CHECK(result.random_choices == 0);
        CHECK(result.steps == 15);
        CHECK(result.final_config.registers == RegisterMap{{0, 5}});
    }
    SECTION("fuel exhaustion is unresolved, not an error") {
        RandomSource rng(1);
        PathResult result = sample_path(lift_deterministic(looping_program()), {}, 50, rng, kPolicy);
        CHECK(result.outcome == PathOutcome::Unresolved);
        CHECK(result.path_probability == 1);
        CHECK(result.steps == 50);
    }
    SECTION("single-choice steps do not count as random choices") {
        Program program;
        program.lines.push_back(ProgramLine{{Choice{Instruction::inc(9), Rational(1)}}});
        program.lines.push_back(uniform_line({Instruction::inc(0), Instruction::dec(9, 9)}));
        RandomSource rng(3);
        PathResult result = sample_path(program, {}, 10, rng, kPolicy);
        CHECK(result.steps == 2);
        CHECK(result.random_choices == 1);
    }
    SECTION("weight violations surface before any step") {
        Program bad;
        bad.lines.push_back(ProgramLine{{Choice{Instruction::inc(0), make_rational(1, 2)}}});
        RandomSource rng(0);
        CHECK_THROWS_AS(sample_path(bad, {}, 10, rng, kPolicy), WeightError);
    }
}

TEST_CASE("follow_choices replays feasible sequences and sums to one", "[prob]") {
    SECTION("the two coin sequences split the mass") {
        PathResult heads = follow_choices(coin_program(), {}, 10, ChoiceSequence{{0}}, kPolicy);
        CHECK(heads.outcome == PathOutcome::Accept);
        CHECK(heads.path_probability == make_rational(1, 2));
        PathResult tails = follow_choices(coin_program(), {}, 10, ChoiceSequence{{1}}, kPolicy);
        CHECK(tails.outcome == PathOutcome::Reject);
        CHECK(tails.path_probability == make_rational(1, 2));
    }
    SECTION("an out-of-range entry is an error") {
        CHECK_THROWS_AS(follow_choices(coin_program(), {}, 10, ChoiceSequence{{2}}, kPolicy), ChoiceOutOfRangeError);
    }
    SECTION("a short sequence leaves the path unresolved") {
        PathResult result = follow_choices(looping_program(), {}, 50, ChoiceSequence{{0, 0}}, kPolicy);
        CHECK(result.outcome == PathOutcome::Unresolved);
        CHECK(result.steps == 2);
    }
    SECTION("fuel-complete enumeration reproduces the exact interval") {
        for (std::uint64_t fuel : {1, 3, 6, 9}) {
            ProbabilityInterval by_sequences = enumerate_by_sequences(escape_program(), {}, fuel);
            ProbabilityInterval by_engine = exact_acceptance(escape_program(), {}, fuel, kPolicy);
            CHECK(by_sequences == by_engine);
            CHECK(by_sequences.accept_mass + by_sequences.reject_mass + by_sequences.unresolved_mass == 1);
        }
    }
}

TEST_CASE("exact_acceptance computes ground-truth intervals", "[prob]") {
    SECTION("coin: equal halves, nothing unresolved") {
        ProbabilityInterval interval = exact_acceptance(coin_program(), {}, 2, kPolicy);
        CHECK(interval.accept_mass == make_rational(1, 2));
        CHECK(interval.reject_mass == make_rational(1, 2));
        CHECK(interval.unresolved_mass == 0);
    }
    SECTION("two-thirds gadget") {
        ProbabilityInterval interval = exact_acceptance(two_thirds_program(), {}, 2, kPolicy);
        CHECK(interval.accept_mass == make_rational(2, 3));
        CHECK(interval.reject_mass == make_rational(1, 3));
        CHECK(interval.unresolved_mass == 0);
    }
    SECTION("looping lifted program is fully unresolved at every fuel") {
        Program looping = lift_deterministic(looping_program());
        for (std::uint64_t fuel : {1, 7, 50}) {
            ProbabilityInterval interval = exact_acceptance(looping, {}, fuel, kPolicy);
            CHECK(interval.accept_mass == 0);
            CHECK(interval.reject_mass == 0);
            CHECK(interval.unresolved_mass == 1);
        }
    }
    SECTION("escape program: hand-computed geometric masses") {
        // accept after 2, 4, 6 steps with weights 1/2, 1/4, 1/8
        ProbabilityInterval interval = exact_acceptance(escape_program(), {}, 6, kPolicy);
        CHECK(interval.accept_mass == make_rational(7, 8));
        CHECK(interval.reject_mass == 0);
        CHECK(interval.unresolved_mass == make_rational(1, 8));
    }
    SECTION("the node cap aborts oversized enumerations") {
        CHECK_THROWS_AS(exact_acceptance(coin_program(), {}, 2, kPolicy, 1), BudgetExceededError);
        try {
            exact_acceptance(escape_program(), {}, 40, kPolicy, 10);
            FAIL("expected BudgetExceededError");
        } catch (const BudgetExceededError& e) {
            CHECK(e.cap() == 10);
        }
    }
}

TEST_CASE("memoized enumeration matches the naive oracle", "[prob]") {
    SECTION("fixed gadgets") {
        for (std::uint64_t fuel : {0, 1, 2, 5}) {
            CHECK(exact_acceptance_memoized(coin_program(), {}, fuel, kPolicy) ==
                  exact_acceptance(coin_program(), {}, fuel, kPolicy));
            CHECK(exact_acceptance_memoized(two_thirds_program(), {}, fuel, kPolicy) ==
                  exact_acceptance(two_thirds_program(), {}, fuel, kPolicy));
            CHECK(exact_acceptance_memoized(escape_program(), {}, fuel, kPolicy) ==
                  exact_acceptance(escape_program(), {}, fuel, kPolicy));
        }
    }
    SECTION("reconverging branches merge without changing the result") {
        // four coin-flip lines, each bumping R0 or R1: 16 paths, but only
        // binomially many distinct configurations per depth
        Program program;
        for (int i = 0; i < 4; ++i)
            program.lines.push_back(uniform_line({Instruction::inc(0), Instruction::inc(1)}));
        ProbabilityInterval naive = exact_acceptance(program, {}, 10, kPolicy);
        ProbabilityInterval memo = exact_acceptance_memoized(program, {}, 10, kPolicy);
        CHECK(naive == memo);
        // only the all-INC-1 path leaves R0 at zero
        CHECK(naive.accept_mass == make_rational(15, 16));
        CHECK(naive.reject_mass == make_rational(1, 16));
    }
    SECTION("empty program rejects at the root") {
        ProbabilityInterval interval = exact_acceptance_memoized(Program{}, {}, 4, kPolicy);
        CHECK(interval.accept_mass == 0);
        CHECK(interval.reject_mass == 1);
        CHECK(interval.unresolved_mass == 0);
    }
    SECTION("the distinct-state cap also aborts") {
        CHECK_THROWS_AS(exact_acceptance_memoized(escape_program(), {}, 50, kPolicy, 3), BudgetExceededError);
    }
}

TEST_CASE("interval masses are monotone in fuel", "[prob]") {
    Program program = escape_program();
    ProbabilityInterval previous = exact_acceptance(program, {}, 0, kPolicy);
    for (std::uint64_t fuel : {2, 4, 8, 16}) {
        ProbabilityInterval next = exact_acceptance(program, {}, fuel, kPolicy);
        CHECK(next.accept_mass >= previous.accept_mass);
        CHECK(next.reject_mass >= previous.reject_mass);
        CHECK(next.unresolved_mass <= previous.unresolved_mass);
        previous = next;
    }
}

TEST_CASE("sample_size computes the exact ceiling", "[prob]") {
    CHECK(sample_size(make_rational(1)) == 2);
    CHECK(sample_size(make_rational(1, 10)) == 110);
    CHECK(sample_size(make_rational(1, 2)) == 5);
    // ln 3 = 1.0986...; scaling by 1/epsilon^2 = 10000 gives 10986.12...
    CHECK(sample_size(make_rational(1, 100)) == 10987);

    CHECK_THROWS_AS(sample_size(Rational(0)), EpsilonOutOfRangeError);
    CHECK_THROWS_AS(sample_size(make_rational(-1, 2)), EpsilonOutOfRangeError);
    CHECK_THROWS_AS(sample_size(make_rational(3, 2)), EpsilonOutOfRangeError);
}

TEST_CASE("estimate_acceptance is a deterministic Monte Carlo report", "[prob]") {
    SECTION("coin at epsilon 1/10: every sample halts in one step") {
        EstimateReport report = estimate_acceptance(coin_program(), {}, make_rational(1, 10), 10, 42, kPolicy);
        CHECK(report.sample_count == 110);
        CHECK(report.accepts + report.rejects == 110);
        CHECK(report.unresolved == 0);
        CHECK(report.estimate >= 0);
        CHECK(report.estimate <= 1);
        CHECK(report.estimate == make_rational(Integer(report.accepts), Integer(110)));
        CHECK(report.seed == 42);

        EstimateReport again = estimate_acceptance(coin_program(), {}, make_rational(1, 10), 10, 42, kPolicy);
        CHECK(again.accepts == report.accepts);
        CHECK(again.estimate == report.estimate);
    }
    SECTION("a lifted always-accepting program estimates exactly 1") {
        Program program = lift_deterministic(det_program({Instruction::inc(0)}));
        for (std::uint64_t seed : {0, 1, 99}) {
            EstimateReport report = estimate_acceptance(program, {}, make_rational(1, 2), 10, seed, kPolicy);
            CHECK(report.estimate == 1);
            CHECK(report.accepts == report.sample_count);
        }
    }
    SECTION("a looping program leaves every sample unresolved") {
        EstimateReport report =
            estimate_acceptance(lift_deterministic(looping_program()), {}, make_rational(1, 2), 30, 5, kPolicy);
        CHECK(report.unresolved == report.sample_count);
        CHECK(report.accepts == 0);
        CHECK(report.estimate == 0);
    }
    SECTION("epsilon is validated") {
        CHECK_THROWS_AS(estimate_acceptance(coin_program(), {}, Rational(2), 10, 0, kPolicy),
                        EpsilonOutOfRangeError);
    }
}

TEST_CASE("decide_bounded_error reaches verdicts with evidence", "[prob]") {
    const Rational eta = make_rational(1, 6);
    SECTION("exact mode accepts above one half") {
        Verdict verdict = decide_bounded_error(two_thirds_program(), {}, eta, 10, DecideMode::Exact, 0, kPolicy);
        CHECK(verdict.kind == VerdictKind::Accept);
        CHECK(verdict.reason == UndeterminedReason::None);
        REQUIRE(verdict.interval.has_value());
        CHECK(verdict.interval->accept_mass == make_rational(2, 3));
    }
    SECTION("exact mode rejects at or below one half") {
        Verdict verdict = decide_bounded_error(one_third_program(), {}, eta, 10, DecideMode::Exact, 0, kPolicy);
        CHECK(verdict.kind == VerdictKind::Reject);
        // a coin has accept mass exactly 1/2: not above the threshold
        Verdict coin = decide_bounded_error(coin_program(), {}, eta, 10, DecideMode::Exact, 0, kPolicy);
        CHECK(coin.kind == VerdictKind::Reject);
    }
    SECTION("exact mode refuses when unresolved mass straddles the threshold") {
        Verdict verdict =
            decide_bounded_error(lift_deterministic(looping_program()), {}, eta, 10, DecideMode::Exact, 0, kPolicy);
        CHECK(verdict.kind == VerdictKind::Undetermined);
        CHECK(verdict.reason == UndeterminedReason::UnresolvedMass);
        REQUIRE(verdict.interval.has_value());
        CHECK(verdict.interval->unresolved_mass == 1);
    }
    SECTION("sampled mode decides the gadgets and carries its estimate") {
        Verdict accept = decide_bounded_error(two_thirds_program(), {}, eta, 10, DecideMode::Sampled, 0, kPolicy);
        CHECK(accept.kind == VerdictKind::Accept);
        REQUIRE(accept.estimate.has_value());
        CHECK(accept.estimate->sample_count == sample_size(eta));

        Verdict reject = decide_bounded_error(one_third_program(), {}, eta, 10, DecideMode::Sampled, 0, kPolicy);
        CHECK(reject.kind == VerdictKind::Reject);
    }
    SECTION("sampled mode degrades when unresolved runs could flip it") {
        Verdict verdict = decide_bounded_error(lift_deterministic(looping_program()), {}, eta, 10, DecideMode::Sampled,
                                               0, kPolicy);
        CHECK(verdict.kind == VerdictKind::Undetermined);
        CHECK(verdict.reason == UndeterminedReason::EstimateInGap);
    }
    SECTION("eta is confined to the open gap interval") {
        CHECK_THROWS_AS(decide_bounded_error(coin_program(), {}, Rational(0), 10, DecideMode::Exact, 0, kPolicy),
                        EtaOutOfRangeError);
        CHECK_THROWS_AS(
            decide_bounded_error(coin_program(), {}, make_rational(1, 2), 10, DecideMode::Exact, 0, kPolicy),
            EtaOutOfRangeError);
        CHECK_THROWS_AS(
            decide_bounded_error(coin_program(), {}, make_rational(2, 3), 10, DecideMode::Exact, 0, kPolicy),
            EtaOutOfRangeError);
    }
}

TEST_CASE("random sources draw choices with the exact line distribution", "[prob]") {
    SECTION("identical seeds give identical streams") {
        RandomSource a(123), b(123);
        ProgramLine line = uniform_line({Instruction::inc(0), Instruction::inc(1), Instruction::inc(2)});
        for (int i = 0; i < 200; ++i)
            CHECK(a.choose(line) == b.choose(line));
    }
    SECTION("derived streams are deterministic in (seed, run index)") {
        RandomSource first = RandomSource::derived(9, 4);
        RandomSource second = RandomSource::derived(9, 4);
        RandomSource other = RandomSource::derived(9, 5);
        ProgramLine line = uniform_line({Instruction::inc(0), Instruction::inc(1)});
        bool all_equal = true, any_diff = false;
        for (int i = 0; i < 64; ++i) {
            std::size_t x = first.choose(line);
            std::size_t y = second.choose(line);
            std::size_t z = other.choose(line);
            all_equal = all_equal && x == y;
            any_diff = any_diff || x != z;
        }
        CHECK(all_equal);
        CHECK(any_diff);  // overwhelmingly likely; frozen by determinism
    }
    SECTION("single-choice lines consume no randomness") {
        RandomSource a(5), b(5);
        ProgramLine single{{Choice{Instruction::inc(0), Rational(1)}}};
        ProgramLine pair = uniform_line({Instruction::inc(0), Instruction::inc(1)});
        CHECK(a.choose(single) == 0);
        CHECK(a.choose(single) == 0);
        // the pair draw after two no-ops matches a fresh stream's first draw
        CHECK(a.choose(pair) == b.choose(pair));
    }
    SECTION("empirical frequencies track a skewed weight exactly specified") {
        ProgramLine line;
        line.choices.push_back(Choice{Instruction::inc(0), make_rational(1, 3)});
        line.choices.push_back(Choice{Instruction::inc(1), make_rational(2, 3)});
        RandomSource rng(2024);
        int first = 0;
        const int draws = 3000;
        for (int i = 0; i < draws; ++i)
            if (rng.choose(line) == 0)
                ++first;
        // deterministic given the fixed seed; loose envelope around 1/3
        CHECK(first > draws / 3 - 150);
        CHECK(first < draws / 3 + 150);
    }
}
