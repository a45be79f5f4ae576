#pragma once

#include <cstdint>
#include <random>

#include "shoenfield/machine.hpp"
#include "shoenfield/rational.hpp"

namespace shoenfield {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Uniform draw in [0, bound) by rejection. std::uniform_int_distribution is
// avoided throughout: its output is implementation-defined, while mt19937_64
// itself is pinned by the standard, so streams stay reproducible.
inline std::uint64_t uniform_u64(std::mt19937_64& gen, std::uint64_t bound) {
    if (bound <= 1)
        return 0;
    std::uint64_t limit = static_cast<std::uint64_t>(-1) - static_cast<std::uint64_t>(-1) % bound;
    while (true) {
        std::uint64_t x = gen();
        if (x < limit)
            return x % bound;
    }
}

// Seeded source of program-line choices. A line with weights (p1,...,pm) is
// sampled by drawing a uniform integer below the LCM of the weight
// denominators and selecting by cumulative comparison, so index i comes up
// with probability exactly pi.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    // Independent per-run stream for run `run_index` of a batch.
    static RandomSource derived(std::uint64_t seed, std::uint64_t run_index) {
        std::uint64_t state = seed + 0x9e3779b97f4a7c15ull * run_index;
        return RandomSource(splitmix64(state));
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    Integer uniform_below(const Integer& bound) {
        if (bound <= 1)
            return 0;
        std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
        std::size_t words = (bits + 63) / 64;
        Integer span = 1;
        span <<= 64 * words;
        Integer limit = span - span % bound;
        while (true) {
            Integer x = 0;
            for (std::size_t w = 0; w < words; ++w) {
                x <<= 64;
                x += gen_();
            }
            if (x < limit)
                return x % bound;
        }
    }

    // Single-choice lines consume no randomness.
    std::size_t choose(const ProgramLine& line) {
        if (line.choices.size() == 1)
            return 0;
        Integer scale = 1;
        for (const Choice& choice : line.choices)
            mpz_lcm(scale.get_mpz_t(), scale.get_mpz_t(), choice.weight.get_den().get_mpz_t());
        Integer draw = uniform_below(scale);
        Integer cumulative = 0;
        for (std::size_t j = 0; j + 1 < line.choices.size(); ++j) {
            const Rational& w = line.choices[j].weight;
            cumulative += w.get_num() * (scale / w.get_den());
            if (draw < cumulative)
                return j;
        }
        return line.choices.size() - 1;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace shoenfield
