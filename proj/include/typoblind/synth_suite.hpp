#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "typoblind/synth_lang.hpp"
#include "typoblind/wals.hpp"

namespace typoblind::synth {

/// Grammars, parallel corpora and typology profiles of one synthetic suite.
struct Suite {
    CorpusSpec spec;
    std::uint64_t seed = 0;
    std::vector<SyntheticGrammar> grammars;
    std::vector<TaggedCorpus> corpora;
    FeatureSet profiles;

    std::vector<std::string> languages() const {
        std::vector<std::string> out;
        for (const auto& g : grammars) out.push_back(g.language);
        return out;
    }
};

inline constexpr std::size_t kMinimumSuiteSize = 4;

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Typology assignment for `n` languages.
///
/// Languages come in consecutive pairs that share a word order; the number of
/// distinct orders is min(6, n/2), so each used order covers two languages.
/// Affixing alternates inside every pair. Adposition order is balanced against
/// both. The inert value cycles over a seeded permutation. Families follow
/// word order in the first half of the suite and cut across it in the second.
inline std::vector<SyntheticGrammar> suite_grammars(std::size_t n, std::uint64_t seed) {
    if (n < kMinimumSuiteSize) {
        throw ValidationError("generate_suite: " + std::to_string(n) + " languages cannot cover every feature value; " +
                              "the minimum is " + std::to_string(kMinimumSuiteSize));
    }
    const std::size_t orders = std::min<std::size_t>(6, n / 2);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(mix_seed(seed, 0));
    std::shuffle(perm.begin(), perm.end(), rng);

    const std::size_t half = n / 2;
    std::vector<SyntheticGrammar> out;
    for (std::size_t i = 0; i < n; ++i) {
        SyntheticGrammar g;
        g.language = "L" + std::to_string(i);
        g.word_order = kWordOrders[(i / 2) % orders];
        g.affixing = i % 2 == 0 ? Affixing::prefixing : Affixing::suffixing;
        g.adposition_order = ((i / 2) + (i % 2)) % 2 == 0 ? AdpositionOrder::pre : AdpositionOrder::post;
        g.inert = static_cast<InertValue>(perm[i] % 3);
        if (i < half) {
            g.family = "F" + std::to_string(i / 2 + 1);
        } else {
            g.family = "F" + std::to_string((half + 1) / 2 + (i - half) % 2 + 1);
        }
        g.vocabulary_seed = mix_seed(seed, 1000 + i);
        out.push_back(std::move(g));
    }
    return out;
}

/// Builds a suite of `n` languages with parallel corpora.
inline Suite generate_suite(std::size_t n, std::uint64_t seed, const CorpusSpec& spec = {}) {
    spec.validate();
    Suite s;
    s.spec = spec;
    s.seed = seed;
    s.grammars = suite_grammars(n, seed);
    const std::uint64_t clause_seed = mix_seed(seed, 1);
    std::set<std::string> taken; // keeps surface vocabularies disjoint
    for (const auto& g : s.grammars) s.corpora.push_back(generate_language(g, spec, clause_seed, &taken));
    s.profiles = wals::synthetic_profiles(s.grammars);
    return s;
}

} // namespace typoblind::synth
