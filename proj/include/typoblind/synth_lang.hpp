#pragma once

// Toy languages with controlled typology.
//
// A clause is sampled once as abstract concepts and then realized by each
// grammar: constituent order follows the grammar's word order, adposition
// phrases follow its adposition order, adjectives precede the noun exactly
// when the object precedes the verb, and verbal inflection is a separate
// affix token placed before (prefixing) or after (suffixing) the verb stem.
// The inert feature is never read during realization.
//
// Corpora generated from the same clause seed are parallel: sentence i of
// every language realizes the same clause.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "typoblind/errors.hpp"

namespace typoblind::synth {

enum class WordOrder { SOV, SVO, VSO, VOS, OVS, OSV };
enum class AdpositionOrder { pre, post };
enum class Affixing { prefixing, suffixing };
enum class InertValue { a, b, c };
enum class Tag { NOUN, VERB, ADJ, ADP, AFF };
enum class Relation { root, nsubj, obj, aff, amod, nmod, case_marker };

inline constexpr std::array kWordOrders{WordOrder::SOV, WordOrder::SVO, WordOrder::VSO,
                                        WordOrder::VOS, WordOrder::OVS, WordOrder::OSV};
inline constexpr std::array kTags{Tag::NOUN, Tag::VERB, Tag::ADJ, Tag::ADP, Tag::AFF};
inline constexpr std::size_t kTagCount = kTags.size();

inline std::string_view to_string(WordOrder w) {
    constexpr std::array<std::string_view, 6> names{"SOV", "SVO", "VSO", "VOS", "OVS", "OSV"};
    return names[static_cast<std::size_t>(w)];
}
inline std::string_view to_string(AdpositionOrder a) { return a == AdpositionOrder::pre ? "pre" : "post"; }
inline std::string_view to_string(Affixing a) { return a == Affixing::prefixing ? "prefixing" : "suffixing"; }
inline std::string_view to_string(InertValue v) {
    constexpr std::array<std::string_view, 3> names{"a", "b", "c"};
    return names[static_cast<std::size_t>(v)];
}
inline std::string_view to_string(Tag t) {
    constexpr std::array<std::string_view, 5> names{"NOUN", "VERB", "ADJ", "ADP", "AFF"};
    return names[static_cast<std::size_t>(t)];
}
inline std::string_view to_string(Relation r) {
    constexpr std::array<std::string_view, 7> names{"root", "nsubj", "obj", "aff", "amod", "nmod", "case"};
    return names[static_cast<std::size_t>(r)];
}

namespace detail {
template <typename E, std::size_t N>
E parse_enum(std::string_view s, const char* what, std::size_t count = N) {
    for (std::size_t i = 0; i < count; ++i) {
        if (to_string(static_cast<E>(i)) == s) return static_cast<E>(i);
    }
    throw ValidationError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}
} // namespace detail

inline WordOrder parse_word_order(std::string_view s) { return detail::parse_enum<WordOrder, 6>(s, "word order"); }
inline AdpositionOrder parse_adposition_order(std::string_view s) {
    return detail::parse_enum<AdpositionOrder, 2>(s, "adposition order");
}
inline Affixing parse_affixing(std::string_view s) { return detail::parse_enum<Affixing, 2>(s, "affixing"); }
inline InertValue parse_inert(std::string_view s) { return detail::parse_enum<InertValue, 3>(s, "inert value"); }
inline Tag parse_tag(std::string_view s) { return detail::parse_enum<Tag, 5>(s, "tag"); }
inline Relation parse_relation(std::string_view s) { return detail::parse_enum<Relation, 7>(s, "relation"); }

struct SyntheticGrammar {
    std::string language;
    WordOrder word_order = WordOrder::SVO;
    AdpositionOrder adposition_order = AdpositionOrder::pre;
    Affixing affixing = Affixing::suffixing;
    InertValue inert = InertValue::a;
    std::string family;
    std::uint64_t vocabulary_seed = 0;

    /// Object-before-verb grammars put adjectives before nouns.
    bool adjective_before_noun() const {
        return word_order == WordOrder::SOV || word_order == WordOrder::OSV || word_order == WordOrder::OVS;
    }

    friend bool operator==(const SyntheticGrammar&, const SyntheticGrammar&) = default;
};

struct CorpusSpec {
    std::size_t sentences_per_language = 1000;
    std::size_t max_clause_elements = 2; ///< optional adjectives + adposition phrases per clause
    std::size_t nouns = 60;
    std::size_t verbs = 40;
    std::size_t adjectives = 24;
    std::size_t adpositions = 6;
    std::size_t affixes = 4;
    double ambiguity = 0.4;       ///< fraction of verb stems spelled like a noun
    double adjective_probability = 0.35;
    double adposition_probability = 0.3;
    double affix_probability = 1.0; ///< verbs without an affix can only be told apart by position
    double zipf_exponent = 1.0;
    double train_fraction = 0.8;
    double dev_fraction = 0.1;
    double test_fraction = 0.1;

    void validate() const {
        if (sentences_per_language < 10) throw ValidationError("corpus spec: sentences per language must be >= 10");
        if (std::abs(train_fraction + dev_fraction + test_fraction - 1.0) > 1e-9) {
            throw ValidationError("corpus spec: split fractions must sum to 1");
        }
        if (train_fraction <= 0 || dev_fraction < 0 || test_fraction <= 0) {
            throw ValidationError("corpus spec: split fractions must be positive");
        }
        if (nouns < 2 || verbs < 1 || adjectives < 1 || adpositions < 1 || affixes < 1) {
            throw ValidationError("corpus spec: every vocabulary category needs entries (nouns >= 2)");
        }
        if (ambiguity < 0 || ambiguity > 1) throw ValidationError("corpus spec: ambiguity must lie in [0, 1]");
        if (adjective_probability < 0 || adjective_probability > 1 || adposition_probability < 0 ||
            adposition_probability > 1 || affix_probability < 0 || affix_probability > 1) {
            throw ValidationError("corpus spec: probabilities must lie in [0, 1]");
        }
    }

    friend bool operator==(const CorpusSpec&, const CorpusSpec&) = default;
};

/// Abstract clause: concept indices, independent of any grammar.
struct AdpositionPhrase {
    std::size_t adposition = 0;
    std::size_t noun = 0;
    std::optional<std::size_t> adjective;
    friend bool operator==(const AdpositionPhrase&, const AdpositionPhrase&) = default;
};

struct NounPhrase {
    std::size_t noun = 0;
    std::optional<std::size_t> adjective;
    std::optional<AdpositionPhrase> modifier;
    friend bool operator==(const NounPhrase&, const NounPhrase&) = default;
};

struct Clause {
    NounPhrase subject;
    std::size_t verb = 0;
    std::optional<std::size_t> affix; ///< absent for a bare verb stem
    NounPhrase object;
    friend bool operator==(const Clause&, const Clause&) = default;
};

/// Surface forms of one language, indexed by concept.
struct Lexicon {
    std::vector<std::string> nouns, verbs, adjectives, adpositions, affixes;

    /// Every distinct surface form, in a stable order.
    std::vector<std::string> surface_forms() const {
        std::vector<std::string> all;
        for (const auto* cat : {&nouns, &verbs, &adjectives, &adpositions, &affixes})
            for (const auto& w : *cat)
                if (std::find(all.begin(), all.end(), w) == all.end()) all.push_back(w);
        return all;
    }

    friend bool operator==(const Lexicon&, const Lexicon&) = default;
};

struct TaggedSentence {
    std::string language;
    std::vector<std::string> tokens;
    std::vector<Tag> tags;
    std::vector<Relation> relations; ///< empty when loaded from a two-field corpus file
    std::vector<int> heads;          ///< -1 for the root
    std::optional<Clause> clause;

    std::size_t size() const { return tokens.size(); }

    void validate() const {
        if (tokens.empty()) throw ValidationError("empty sentence");
        if (tags.size() != tokens.size()) throw ValidationError("sentence has unequal token and tag counts");
        if (!relations.empty() && (relations.size() != tokens.size() || heads.size() != tokens.size())) {
            throw ValidationError("sentence has unequal token and relation counts");
        }
    }

    friend bool operator==(const TaggedSentence&, const TaggedSentence&) = default;
};

struct TaggedCorpus {
    SyntheticGrammar grammar;
    Lexicon lexicon;
    std::vector<TaggedSentence> sentences;
    std::size_t train_end = 0;
    std::size_t dev_end = 0;

    std::span<const TaggedSentence> train() const { return {sentences.data(), train_end}; }
    std::span<const TaggedSentence> dev() const { return {sentences.data() + train_end, dev_end - train_end}; }
    std::span<const TaggedSentence> test() const {
        return {sentences.data() + dev_end, sentences.size() - dev_end};
    }
};

// ---------------------------------------------------------------------------

namespace detail {

inline std::string make_word(std::mt19937_64& rng, std::size_t syllables) {
    static constexpr std::string_view consonants = "ptkbdgmnlrsvzfh";
    static constexpr std::string_view vowels = "aeiou";
    std::uniform_int_distribution<std::size_t> c(0, consonants.size() - 1), v(0, vowels.size() - 1);
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
        w.push_back(consonants[c(rng)]);
        w.push_back(vowels[v(rng)]);
    }
    return w;
}

class ZipfSampler {
public:
    ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
        double total = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
            cdf_[r] = total;
        }
        for (auto& x : cdf_) x /= total;
    }
    std::size_t operator()(std::mt19937_64& rng) const {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    }

private:
    std::vector<double> cdf_;
};

inline bool bernoulli(std::mt19937_64& rng, double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

struct Unit {
    std::string token;
    Tag tag;
    Relation relation;
    int head; // index within the same constituent, or kToVerb
};
inline constexpr int kToVerb = -2;

inline void append_core(std::vector<Unit>& out, const Lexicon& lex, std::size_t noun,
                        const std::optional<std::size_t>& adjective, bool adjective_first, Relation noun_rel,
                        int noun_head, int& noun_pos) {
    const int base = static_cast<int>(out.size());
    if (adjective && adjective_first) {
        out.push_back({lex.adjectives[*adjective], Tag::ADJ, Relation::amod, base + 1});
        noun_pos = base + 1;
        out.push_back({lex.nouns[noun], Tag::NOUN, noun_rel, noun_head});
    } else {
        noun_pos = base;
        out.push_back({lex.nouns[noun], Tag::NOUN, noun_rel, noun_head});
        if (adjective) out.push_back({lex.adjectives[*adjective], Tag::ADJ, Relation::amod, base});
    }
}

/// Realizes an NP; the head noun attaches to the verb with `role`.
inline std::vector<Unit> realize_np(const NounPhrase& np, const SyntheticGrammar& g, const Lexicon& lex,
                                    Relation role) {
    const bool adj_first = g.adjective_before_noun();
    std::vector<Unit> core;
    int head_pos = 0;
    append_core(core, lex, np.noun, np.adjective, adj_first, role, kToVerb, head_pos);
    if (!np.modifier) return core;

    // The PP noun attaches to the NP head, the adposition to the PP noun.
    std::vector<Unit> pp;
    const auto& m = *np.modifier;
    int pp_noun = 0;
    const bool pre = g.adposition_order == AdpositionOrder::pre;
    if (pre) pp.push_back({lex.adpositions[m.adposition], Tag::ADP, Relation::case_marker, 0});
    append_core(pp, lex, m.noun, m.adjective, adj_first, Relation::nmod, 0, pp_noun);
    if (!pre) pp.push_back({lex.adpositions[m.adposition], Tag::ADP, Relation::case_marker, 0});
    for (auto& u : pp)
        if (u.relation == Relation::case_marker) u.head = pp_noun;

    std::vector<Unit> out;
    if (pre) {
        // NP = core PP
        out = core;
        const int off = static_cast<int>(out.size());
        for (auto u : pp) {
            if (u.relation == Relation::nmod) u.head = head_pos;
            else u.head += off;
            out.push_back(u);
        }
    } else {
        // NP = PP core
        out = pp;
        const int off = static_cast<int>(out.size());
        for (auto u : core) {
            if (u.head != kToVerb) u.head += off;
            out.push_back(u);
        }
        for (auto& u : out)
            if (u.relation == Relation::nmod) u.head = head_pos + off;
    }
    return out;
}

} // namespace detail

/// Deterministic lexicon from the grammar's vocabulary seed. The first
/// round(ambiguity · verbs) verb stems reuse noun spellings. Forms in
/// `reserved` are avoided, and the new forms are added to it.
inline Lexicon build_lexicon(const SyntheticGrammar& g, const CorpusSpec& spec,
                             std::set<std::string>* reserved = nullptr) {
    spec.validate();
    std::mt19937_64 rng(g.vocabulary_seed);
    std::set<std::string> used;
    // Falls back to longer words once a length looks exhausted.
    auto fresh = [&](std::size_t syllables, std::string_view suffix = "") {
        for (std::size_t tries = 0;; ++tries) {
            auto w = detail::make_word(rng, syllables + tries / 1000) + std::string(suffix);
            if (reserved && reserved->count(w)) continue;
            if (used.insert(w).second) return w;
        }
    };
    Lexicon lex;
    for (std::size_t i = 0; i < spec.nouns; ++i) lex.nouns.push_back(fresh(2));
    const auto ambiguous = static_cast<std::size_t>(std::lround(spec.ambiguity * static_cast<double>(spec.verbs)));
    for (std::size_t i = 0; i < spec.verbs; ++i) {
        if (i < ambiguous) lex.verbs.push_back(lex.nouns[(2 * i + 1) % spec.nouns]);
        else lex.verbs.push_back(fresh(2));
    }
    for (std::size_t i = 0; i < spec.adjectives; ++i) lex.adjectives.push_back(fresh(3));
    for (std::size_t i = 0; i < spec.adpositions; ++i) lex.adpositions.push_back(fresh(1));
    for (std::size_t i = 0; i < spec.affixes; ++i) lex.affixes.push_back(fresh(1, "-"));
    if (reserved) reserved->insert(used.begin(), used.end());
    return lex;
}

inline Clause sample_clause(std::mt19937_64& rng, const CorpusSpec& spec) {
    detail::ZipfSampler nouns(spec.nouns, spec.zipf_exponent), verbs(spec.verbs, spec.zipf_exponent),
        adjectives(spec.adjectives, spec.zipf_exponent);
    std::uniform_int_distribution<std::size_t> adp(0, spec.adpositions - 1), aff(0, spec.affixes - 1);
    std::size_t budget = spec.max_clause_elements;
    auto maybe_adjective = [&]() -> std::optional<std::size_t> {
        const bool take = detail::bernoulli(rng, spec.adjective_probability);
        const std::size_t which = adjectives(rng);
        if (take && budget > 0) {
            --budget;
            return which;
        }
        return std::nullopt;
    };
    auto sample_np = [&]() {
        NounPhrase np;
        np.noun = nouns(rng);
        np.adjective = maybe_adjective();
        const bool take_pp = detail::bernoulli(rng, spec.adposition_probability);
        AdpositionPhrase pp{adp(rng), nouns(rng), std::nullopt};
        if (take_pp && budget > 0) {
            --budget;
            pp.adjective = maybe_adjective();
            np.modifier = pp;
        }
        return np;
    };
    Clause c;
    c.subject = sample_np();
    c.verb = verbs(rng);
    c.affix = aff(rng);
    if (spec.affix_probability < 1.0 && !detail::bernoulli(rng, spec.affix_probability)) c.affix.reset();
    c.object = sample_np();
    return c;
}

/// Linearizes one clause under a grammar, with gold tags and dependencies.
inline TaggedSentence realize(const Clause& clause, const SyntheticGrammar& g, const Lexicon& lex) {
    using detail::Unit;
    auto subject = detail::realize_np(clause.subject, g, lex, Relation::nsubj);
    auto object = detail::realize_np(clause.object, g, lex, Relation::obj);
    std::vector<Unit> verb;
    const Unit stem{lex.verbs[clause.verb], Tag::VERB, Relation::root, -1};
    const bool prefixed = clause.affix && g.affixing == Affixing::prefixing;
    if (!clause.affix) {
        verb = {stem};
    } else {
        const Unit affix{lex.affixes[*clause.affix], Tag::AFF, Relation::aff, detail::kToVerb};
        if (prefixed) verb = {affix, stem};
        else verb = {stem, affix};
    }

    std::array<const std::vector<Unit>*, 3> order{};
    switch (g.word_order) {
    case WordOrder::SOV: order = {&subject, &object, &verb}; break;
    case WordOrder::SVO: order = {&subject, &verb, &object}; break;
    case WordOrder::VSO: order = {&verb, &subject, &object}; break;
    case WordOrder::VOS: order = {&verb, &object, &subject}; break;
    case WordOrder::OVS: order = {&object, &verb, &subject}; break;
    case WordOrder::OSV: order = {&object, &subject, &verb}; break;
    }

    int verb_pos = 0;
    {
        int off = 0;
        for (const auto* part : order) {
            if (part == &verb) verb_pos = off + (prefixed ? 1 : 0);
            off += static_cast<int>(part->size());
        }
    }
    TaggedSentence s;
    s.language = g.language;
    s.clause = clause;
    int off = 0;
    for (const auto* part : order) {
        for (const auto& u : *part) {
            s.tokens.push_back(u.token);
            s.tags.push_back(u.tag);
            s.relations.push_back(u.relation);
            if (u.relation == Relation::root) s.heads.push_back(-1);
            else if (u.head == detail::kToVerb) s.heads.push_back(verb_pos);
            else s.heads.push_back(u.head + off);
        }
        off += static_cast<int>(part->size());
    }
    return s;
}

/// Samples `spec.sentences_per_language` clauses from `seed` and realizes
/// them under `grammar`. The same seed gives parallel corpora across grammars.
inline TaggedCorpus generate_language(const SyntheticGrammar& grammar, const CorpusSpec& spec, std::uint64_t seed,
                                      std::set<std::string>* reserved = nullptr) {
    spec.validate();
    TaggedCorpus corpus;
    corpus.grammar = grammar;
    corpus.lexicon = build_lexicon(grammar, spec, reserved);
    std::mt19937_64 rng(seed);
    corpus.sentences.reserve(spec.sentences_per_language);
    for (std::size_t i = 0; i < spec.sentences_per_language; ++i) {
        corpus.sentences.push_back(realize(sample_clause(rng, spec), grammar, corpus.lexicon));
    }
    const auto n = static_cast<double>(spec.sentences_per_language);
    corpus.train_end = static_cast<std::size_t>(std::lround(spec.train_fraction * n));
    corpus.dev_end = static_cast<std::size_t>(std::lround((spec.train_fraction + spec.dev_fraction) * n));
    corpus.train_end = std::clamp<std::size_t>(corpus.train_end, 1, spec.sentences_per_language - 1);
    corpus.dev_end = std::clamp(corpus.dev_end, corpus.train_end, spec.sentences_per_language - 1);
    return corpus;
}

// ---------------------------------------------------------------------------
// Sentence-pair classification (paraphrase analog)

struct SentencePair {
    TaggedSentence first;
    TaggedSentence second;
    bool same_clause = false;
};

/// True when both sentences realize the same abstract clause.
inline bool same_clause(const TaggedSentence& a, const TaggedSentence& b) {
    if (!a.clause || !b.clause) throw ValidationError("sentence pair labeling needs clause annotations");
    return *a.clause == *b.clause;
}

inline Clause swap_roles(const Clause& c) {
    Clause s = c;
    std::swap(s.subject, s.object);
    return s;
}

/// Pairs a sentence of `a` with a realization in `b`'s grammar. Even
/// positions are positives (the same clause); odd positions are negatives,
/// half of them role swaps that only word order can tell apart. Labels are
/// recomputed from the clauses, then the list is shuffled.
inline std::vector<SentencePair> classification_task(const TaggedCorpus& a, const TaggedCorpus& b,
                                                     std::size_t n_pairs, std::uint64_t seed,
                                                     std::span<const TaggedSentence> source = {}) {
    if (source.empty()) source = a.sentences;
    if (source.size() < 2) throw ValidationError("classification_task needs at least two sentences");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, source.size() - 1);
    std::vector<SentencePair> pairs;
    pairs.reserve(n_pairs);
    for (std::size_t k = 0; k < n_pairs; ++k) {
        const TaggedSentence& first = source[pick(rng)];
        if (!first.clause) throw ValidationError("classification_task needs clause annotations");
        Clause other = *first.clause;
        if (k % 2 == 1) {
            const bool swap = detail::bernoulli(rng, 0.5);
            if (swap && swap_roles(other) != other) {
                other = swap_roles(other);
            } else {
                for (int tries = 0; tries < 1000 && other == *first.clause; ++tries) {
                    other = *source[pick(rng)].clause;
                }
                if (other == *first.clause) other = swap_roles(other);
            }
        }
        SentencePair p{first, realize(other, b.grammar, b.lexicon), false};
        p.same_clause = same_clause(p.first, p.second);
        pairs.push_back(std::move(p));
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    return pairs;
}

// ---------------------------------------------------------------------------
// Corpus files: one sentence per line, tab-separated units. A unit is
// token␟tag, optionally followed by ␟relation␟head.

inline constexpr std::string_view kUnitSeparator = "\xE2\x90\x9F"; // U+241F

inline void write_corpus(std::ostream& out, std::span<const TaggedSentence> sentences) {
    for (const auto& s : sentences) {
        s.validate();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) out << '\t';
            out << s.tokens[i] << kUnitSeparator << to_string(s.tags[i]);
            if (!s.relations.empty()) {
                out << kUnitSeparator << to_string(s.relations[i]) << kUnitSeparator << s.heads[i];
            }
        }
        out << '\n';
    }
}

inline std::vector<TaggedSentence> read_corpus(std::istream& in, const std::string& language) {
    std::vector<TaggedSentence> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        TaggedSentence s;
        s.language = language;
        std::size_t start = 0;
        while (start <= line.size()) {
            const auto tab = line.find('\t', start);
            const std::string unit = line.substr(start, tab == std::string::npos ? std::string::npos : tab - start);
            std::vector<std::string> fields;
            std::size_t f = 0;
            for (;;) {
                const auto sep = unit.find(kUnitSeparator, f);
                fields.push_back(unit.substr(f, sep == std::string::npos ? std::string::npos : sep - f));
                if (sep == std::string::npos) break;
                f = sep + kUnitSeparator.size();
            }
            if (fields.size() != 2 && fields.size() != 4) {
                throw ValidationError("corpus line " + std::to_string(lineno) + ": malformed unit '" + unit + "'");
            }
            if (fields[0].empty()) throw ValidationError("corpus line " + std::to_string(lineno) + ": empty token");
            s.tokens.push_back(fields[0]);
            s.tags.push_back(parse_tag(fields[1]));
            if (fields.size() == 4) {
                s.relations.push_back(parse_relation(fields[2]));
                s.heads.push_back(std::stoi(fields[3]));
            }
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (!s.relations.empty() && s.relations.size() != s.tokens.size()) {
            throw ValidationError("corpus line " + std::to_string(lineno) + ": mixed unit widths");
        }
        s.validate();
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace typoblind::synth
