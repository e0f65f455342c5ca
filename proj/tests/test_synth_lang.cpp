#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "typoblind/synth_suite.hpp"
#include "typoblind/wals.hpp"

using namespace typoblind;
using namespace typoblind::synth;

namespace {

CorpusSpec small_spec(std::size_t n = 200) {
    CorpusSpec s;
    s.sentences_per_language = n;
    return s;
}

SyntheticGrammar grammar(WordOrder w, Affixing a, AdpositionOrder p = AdpositionOrder::pre) {
    SyntheticGrammar g;
    g.language = "X";
    g.word_order = w;
    g.affixing = a;
    g.adposition_order = p;
    g.vocabulary_seed = 17;
    return g;
}

// Recovers the order of subject, object and verb heads by majority vote.
WordOrder oracle_word_order(const TaggedCorpus& c) {
    std::map<std::string, int> votes;
    for (const auto& s : c.sentences) {
        int subj = -1, obj = -1, verb = -1;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.relations[i] == Relation::nsubj) subj = static_cast<int>(i);
            if (s.relations[i] == Relation::obj) obj = static_cast<int>(i);
            if (s.relations[i] == Relation::root) verb = static_cast<int>(i);
        }
        std::vector<std::pair<int, char>> order{{subj, 'S'}, {obj, 'O'}, {verb, 'V'}};
        std::sort(order.begin(), order.end());
        std::string key;
        for (auto& [pos, ch] : order) key.push_back(ch);
        ++votes[key];
    }
    auto best = std::max_element(votes.begin(), votes.end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; });
    return parse_word_order(best->first);
}

// Affix position relative to the verb stem, read from tags only.
Affixing oracle_affixing(const TaggedCorpus& c) {
    int before = 0, after = 0;
    for (const auto& s : c.sentences)
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.tags[i] == Tag::AFF) {
                if (i + 1 < s.size() && s.tags[i + 1] == Tag::VERB) ++before;
                if (i > 0 && s.tags[i - 1] == Tag::VERB) ++after;
            }
    return before > after ? Affixing::prefixing : Affixing::suffixing;
}

} // namespace

TEST(Linearization, HandBuiltSvoClause) {
    Lexicon lex;
    lex.nouns = {"kira", "tesa"};
    lex.verbs = {"lomu"};
    lex.adjectives = {"bobobo"};
    lex.adpositions = {"pa"};
    lex.affixes = {"ti-"};
    Clause c;
    c.subject.noun = 0;
    c.verb = 0;
    c.affix = 0;
    c.object.noun = 1;
    auto suffixing = realize(c, grammar(WordOrder::SVO, Affixing::suffixing), lex);
    EXPECT_EQ(suffixing.tokens, (std::vector<std::string>{"kira", "lomu", "ti-", "tesa"}));
    EXPECT_EQ(suffixing.tags, (std::vector<Tag>{Tag::NOUN, Tag::VERB, Tag::AFF, Tag::NOUN}));
    EXPECT_EQ(suffixing.heads, (std::vector<int>{1, -1, 1, 1}));
    auto prefixing = realize(c, grammar(WordOrder::SVO, Affixing::prefixing), lex);
    EXPECT_EQ(prefixing.tokens, (std::vector<std::string>{"kira", "ti-", "lomu", "tesa"}));
    EXPECT_EQ(prefixing.heads, (std::vector<int>{2, 2, -1, 2}));
    c.affix.reset();
    auto bare = realize(c, grammar(WordOrder::SVO, Affixing::prefixing), lex);
    EXPECT_EQ(bare.tokens, (std::vector<std::string>{"kira", "lomu", "tesa"}));
    EXPECT_EQ(bare.heads, (std::vector<int>{1, -1, 1}));
}

TEST(Linearization, NounPhraseInternals) {
    Lexicon lex;
    lex.nouns = {"kira", "tesa", "muno"};
    lex.verbs = {"lomu"};
    lex.adjectives = {"bobobo"};
    lex.adpositions = {"pa"};
    lex.affixes = {"ti-"};
    Clause c;
    c.subject.noun = 0;
    c.subject.adjective = 0;
    c.subject.modifier = AdpositionPhrase{0, 2, std::nullopt};
    c.affix = 0;
    c.object.noun = 1;
    // SOV puts adjectives first; postpositions put the PP before the noun.
    auto s = realize(c, grammar(WordOrder::SOV, Affixing::suffixing, AdpositionOrder::post), lex);
    EXPECT_EQ(s.tokens, (std::vector<std::string>{"muno", "pa", "bobobo", "kira", "tesa", "lomu", "ti-"}));
    EXPECT_EQ(s.heads, (std::vector<int>{3, 0, 3, 5, 5, -1, 5}));
    auto v = realize(c, grammar(WordOrder::VSO, Affixing::prefixing, AdpositionOrder::pre), lex);
    EXPECT_EQ(v.tokens, (std::vector<std::string>{"ti-", "lomu", "kira", "bobobo", "pa", "muno", "tesa"}));
    EXPECT_EQ(v.heads, (std::vector<int>{1, -1, 1, 2, 5, 2, 1}));
}

TEST(Generation, InertFeatureNeverChangesTheCorpus) {
    auto g = grammar(WordOrder::VOS, Affixing::prefixing);
    auto base = generate_language(g, small_spec(), 5);
    for (auto v : {InertValue::b, InertValue::c}) {
        g.inert = v;
        auto other = generate_language(g, small_spec(), 5);
        EXPECT_EQ(other.sentences, base.sentences);
        EXPECT_EQ(other.lexicon, base.lexicon);
    }
}

TEST(Generation, SameSeedSameCorpus) {
    auto g = grammar(WordOrder::OVS, Affixing::suffixing);
    EXPECT_EQ(generate_language(g, small_spec(), 9).sentences, generate_language(g, small_spec(), 9).sentences);
    EXPECT_NE(generate_language(g, small_spec(), 9).sentences, generate_language(g, small_spec(), 10).sentences);
}

TEST(Generation, PrefixAffixDirectlyPrecedesItsVerb) {
    auto c = generate_language(grammar(WordOrder::SVO, Affixing::prefixing), small_spec(), 1);
    for (const auto& s : c.sentences)
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.tags[i] == Tag::AFF) {
                ASSERT_LT(i + 1, s.size());
                EXPECT_EQ(s.tags[i + 1], Tag::VERB);
                EXPECT_EQ(s.heads[i], static_cast<int>(i + 1));
            }
}

TEST(Generation, DependencyTreesAreWellFormed) {
    for (auto w : kWordOrders)
        for (auto a : {Affixing::prefixing, Affixing::suffixing})
            for (auto p : {AdpositionOrder::pre, AdpositionOrder::post}) {
                auto c = generate_language(grammar(w, a, p), small_spec(100), 3);
                for (const auto& s : c.sentences) {
                    int roots = 0;
                    for (std::size_t i = 0; i < s.size(); ++i) {
                        if (s.heads[i] == -1) {
                            ++roots;
                            continue;
                        }
                        ASSERT_GE(s.heads[i], 0);
                        ASSERT_LT(s.heads[i], static_cast<int>(s.size()));
                        // walking up always reaches the root
                        int h = static_cast<int>(i), steps = 0;
                        while (h != -1 && steps++ < 50) h = s.heads[static_cast<std::size_t>(h)];
                        EXPECT_EQ(h, -1);
                    }
                    EXPECT_EQ(roots, 1);
                }
            }
}

TEST(Generation, WordOrderAndAffixingAreRecoverable) {
    for (auto w : kWordOrders)
        for (auto a : {Affixing::prefixing, Affixing::suffixing}) {
            auto c = generate_language(grammar(w, a), small_spec(), 21);
            EXPECT_EQ(oracle_word_order(c), w) << to_string(w);
            EXPECT_EQ(oracle_affixing(c), a) << to_string(w);
        }
}

TEST(Generation, SomeVerbStemsAreSpelledLikeNouns) {
    auto lex = build_lexicon(grammar(WordOrder::SVO, Affixing::suffixing), CorpusSpec{});
    std::set<std::string> nouns(lex.nouns.begin(), lex.nouns.end());
    std::size_t shared = 0;
    for (const auto& v : lex.verbs) shared += nouns.count(v);
    EXPECT_EQ(shared, 16u);
}

TEST(Generation, AffixProbabilityControlsBareVerbs) {
    auto spec = small_spec(2000);
    spec.affix_probability = 0.3;
    auto c = generate_language(grammar(WordOrder::SOV, Affixing::suffixing), spec, 4);
    std::size_t affixed = 0;
    for (const auto& s : c.sentences) {
        const auto n = std::count(s.tags.begin(), s.tags.end(), Tag::AFF);
        ASSERT_LE(n, 1);
        affixed += static_cast<std::size_t>(n);
    }
    // binomial(2000, 0.3): sd is about 20
    EXPECT_NEAR(static_cast<double>(affixed), 600.0, 100.0);
    spec.affix_probability = 1.5;
    EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(Generation, SplitsPartitionTheCorpus) {
    auto c = generate_language(grammar(WordOrder::SVO, Affixing::suffixing), small_spec(200), 2);
    EXPECT_EQ(c.train().size(), 160u);
    EXPECT_EQ(c.dev().size(), 20u);
    EXPECT_EQ(c.test().size(), 20u);
}

TEST(Generation, SpecValidation) {
    auto s = small_spec();
    s.train_fraction = 0.9;
    EXPECT_THROW(s.validate(), ValidationError);
    s = small_spec(5);
    EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Suite, EightLanguagesAreBalanced) {
    auto grammars = suite_grammars(8, 3);
    std::map<Affixing, int> affixing;
    std::set<WordOrder> orders;
    std::map<AdpositionOrder, int> adpositions;
    std::set<std::string> families;
    std::set<InertValue> inert;
    for (const auto& g : grammars) {
        ++affixing[g.affixing];
        orders.insert(g.word_order);
        ++adpositions[g.adposition_order];
        families.insert(g.family);
        inert.insert(g.inert);
    }
    EXPECT_EQ(affixing[Affixing::prefixing], 4);
    EXPECT_EQ(affixing[Affixing::suffixing], 4);
    EXPECT_GE(orders.size(), 4u);
    EXPECT_EQ(adpositions[AdpositionOrder::pre], 4);
    EXPECT_EQ(inert.size(), 3u);
    EXPECT_GE(families.size(), 3u);
}

TEST(Suite, ProfilesPassTheFullCoverageFilter) {
    auto suite = generate_suite(8, 4, small_spec(50));
    auto records = wals::to_records(suite.profiles);
    auto langs = suite.languages();
    for (auto area : {FeatureArea::word_order, FeatureArea::morphology, FeatureArea::phonology}) {
        auto selected = wals::select_features(records, langs, area);
        EXPECT_FALSE(selected.features.empty()) << to_string(area);
        for (const auto& f : selected.features)
            for (const auto& l : langs) EXPECT_NO_THROW(selected.target(l, f));
    }
}

TEST(Suite, CorporaAreParallel) {
    auto suite = generate_suite(6, 8, small_spec(50));
    for (std::size_t i = 0; i < suite.corpora.front().sentences.size(); ++i) {
        for (const auto& c : suite.corpora) EXPECT_EQ(c.sentences[i].clause, suite.corpora.front().sentences[i].clause);
    }
}

TEST(Suite, TooFewLanguagesIsRejected) { EXPECT_THROW(suite_grammars(3, 0), ValidationError); }

TEST(Suite, VocabulariesAreDisjoint) {
    auto suite = generate_suite(8, 1, small_spec(20));
    std::map<std::string, std::size_t> owner;
    for (std::size_t l = 0; l < suite.corpora.size(); ++l)
        for (const auto& w : suite.corpora[l].lexicon.surface_forms()) {
            auto [it, fresh] = owner.emplace(w, l);
            EXPECT_TRUE(fresh || it->second == l) << w;
        }
}

TEST(PairTask, IdenticalSentenceIsPositive) {
    auto c = generate_language(grammar(WordOrder::SVO, Affixing::suffixing), small_spec(), 2);
    EXPECT_TRUE(same_clause(c.sentences[0], c.sentences[0]));
}

TEST(PairTask, DisjointVocabularyIsNegative) {
    Lexicon lex;
    lex.nouns = {"ka", "ke", "ki", "ko"};
    lex.verbs = {"pa", "pe"};
    lex.adjectives = {"ra"};
    lex.adpositions = {"sa"};
    lex.affixes = {"ta-"};
    auto g = grammar(WordOrder::SVO, Affixing::suffixing);
    Clause a, b;
    a.subject.noun = 0;
    a.object.noun = 1;
    b.subject.noun = 2;
    b.object.noun = 3;
    b.verb = 1;
    EXPECT_FALSE(same_clause(realize(a, g, lex), realize(b, g, lex)));
}

TEST(PairTask, HundredPairsAreBalanced) {
    auto c = generate_language(grammar(WordOrder::SOV, Affixing::prefixing), small_spec(), 2);
    auto pairs = classification_task(c, c, 100, 7);
    int positive = 0;
    for (const auto& p : pairs) {
        positive += p.same_clause;
        EXPECT_EQ(p.same_clause, same_clause(p.first, p.second));
    }
    EXPECT_GE(positive, 45);
    EXPECT_LE(positive, 55);
}

TEST(CorpusFile, RoundTripKeepsTokensTagsAndTrees) {
    auto c = generate_language(grammar(WordOrder::VSO, Affixing::prefixing), small_spec(30), 2);
    std::stringstream ss;
    write_corpus(ss, c.sentences);
    auto back = read_corpus(ss, "X");
    ASSERT_EQ(back.size(), c.sentences.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].tokens, c.sentences[i].tokens);
        EXPECT_EQ(back[i].tags, c.sentences[i].tags);
        EXPECT_EQ(back[i].relations, c.sentences[i].relations);
        EXPECT_EQ(back[i].heads, c.sentences[i].heads);
    }
}

TEST(CorpusFile, TwoFieldUnitsAreAccepted) {
    std::stringstream ss("kira\xE2\x90\x9FNOUN\tlomu\xE2\x90\x9FVERB\n");
    auto s = read_corpus(ss, "X");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].tags, (std::vector<Tag>{Tag::NOUN, Tag::VERB}));
    EXPECT_TRUE(s[0].relations.empty());
}

TEST(CorpusFile, MalformedLinesNameTheLine) {
    std::stringstream ss("kira\xE2\x90\x9FNOUN\nkira\n");
    try {
        read_corpus(ss, "X");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    std::stringstream bad_tag("kira\xE2\x90\x9FPRON\n");
    EXPECT_THROW(read_corpus(bad_tag, "X"), ValidationError);
}
