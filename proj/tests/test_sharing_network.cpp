#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "gradcheck.hpp"
#include "typoblind/sharing_network.hpp"

using namespace typoblind;
using namespace typoblind::net;
using typoblind::testing::random_tensor;

namespace {

Vocabulary toy_vocabulary(std::size_t languages, std::size_t words = 5) {
    std::vector<std::vector<std::string>> forms(languages);
    for (std::size_t l = 0; l < languages; ++l)
        for (std::size_t w = 0; w < words; ++w) forms[l].push_back("w" + std::to_string(w));
    return Vocabulary(std::move(forms));
}

SharingNetwork toy_model(std::size_t languages = 3, std::uint64_t seed = 1, std::size_t hidden = 6) {
    ModelConfig c;
    c.languages = languages;
    c.hidden = hidden;
    c.embedding = 4;
    c.language_embedding = 2;
    std::vector<std::string> names;
    for (std::size_t l = 0; l < languages; ++l) names.push_back("L" + std::to_string(l));
    return SharingNetwork(c, toy_vocabulary(languages), names, seed);
}

Batch toy_batch(const SharingNetwork& m, std::size_t language) {
    Batch b;
    std::vector<std::size_t> s1{m.vocabulary().id(language, "w1"), m.vocabulary().id(language, "w3"),
                                m.vocabulary().id(language, "w0")};
    std::vector<std::size_t> s2{m.vocabulary().id(language, "w4"), m.vocabulary().id(language, "w2")};
    b.add(s1);
    b.add(s2);
    return b;
}

Tensor logits_of(SharingNetwork& m, const Batch& b, std::size_t language, TaskKind task = TaskKind::tagging(5)) {
    Tape t;
    return m.forward(t, b, language, task).logits.value();
}

Tensor pooled_of(SharingNetwork& m, const Batch& b, std::size_t language) {
    Tape t;
    return m.pooled_representation(t, b, language).value();
}

Tensor alpha_matrix(std::size_t n, std::vector<double> v) { return Tensor({n, n}, std::move(v)); }

} // namespace

// ----------------------------------------------------------------------------
// alpha_mix

TEST(AlphaMix, IdentityLeavesActivationsUnchanged) {
    std::mt19937_64 rng(1);
    Tape t;
    std::vector<Var> acts;
    for (int i = 0; i < 3; ++i) acts.push_back(t.leaf(random_tensor(rng, {4, 2})));
    auto out = alpha_mix(acts, t.constant(alpha_matrix(3, {1, 0, 0, 0, 1, 0, 0, 0, 1})));
    for (int i = 0; i < 3; ++i) EXPECT_EQ(out[i].value(), acts[i].value());
}

TEST(AlphaMix, PermutationSwapsLanguages) {
    std::mt19937_64 rng(2);
    Tape t;
    std::vector<Var> acts{t.leaf(random_tensor(rng, {3, 2})), t.leaf(random_tensor(rng, {3, 2}))};
    auto out = alpha_mix(acts, t.constant(alpha_matrix(2, {0, 1, 1, 0})));
    EXPECT_EQ(out[0].value(), acts[1].value());
    EXPECT_EQ(out[1].value(), acts[0].value());
}

TEST(AlphaMix, MatchesWeightedSumOracle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Tape t;
        std::vector<Var> acts;
        for (int i = 0; i < 3; ++i) acts.push_back(t.leaf(random_tensor(rng, {5, 2})));
        auto alpha = random_tensor(rng, {3, 3});
        auto out = alpha_mix(acts, t.constant(alpha));
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t r = 0; r < 10; ++r) {
                double expect = 0;
                for (std::size_t j = 0; j < 3; ++j) expect += alpha.at(i, j) * acts[j].value()[r];
                EXPECT_NEAR(out[i].value()[r], expect, 1e-12);
            }
    }
}

TEST(AlphaMix, IsLinearInActivations) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        Tape t;
        auto alpha = t.constant(random_tensor(rng, {3, 3}));
        std::vector<Var> a, b, sum;
        for (int i = 0; i < 3; ++i) {
            a.push_back(t.leaf(random_tensor(rng, {2, 4})));
            b.push_back(t.leaf(random_tensor(rng, {2, 4})));
            sum.push_back(ad::add(a.back(), b.back()));
        }
        auto ma = alpha_mix(a, alpha), mb = alpha_mix(b, alpha), ms = alpha_mix(sum, alpha);
        for (int i = 0; i < 3; ++i)
            for (std::size_t k = 0; k < 8; ++k)
                EXPECT_NEAR(ms[i].value()[k], ma[i].value()[k] + mb[i].value()[k], 1e-12);
    }
}

TEST(AlphaMix, GradientsMatchFiniteDifferences) {
    std::mt19937_64 rng(5);
    ad::Parameter alpha("alpha", random_tensor(rng, {3, 3}));
    std::vector<ad::Parameter> acts;
    for (int i = 0; i < 3; ++i) acts.emplace_back("a" + std::to_string(i), random_tensor(rng, {2, 3}));
    auto weights = random_tensor(rng, {2, 3});
    std::vector<ad::Parameter*> params{&alpha, &acts[0], &acts[1], &acts[2]};
    auto build = [&](Tape& t) {
        std::vector<Var> in;
        for (auto& a : acts) in.push_back(t.param(a));
        auto out = alpha_mix(in, t.param(alpha));
        auto w = t.constant(weights);
        return ad::add(ad::sum(ad::tanh(ad::mul(out[0], w))), ad::sum(ad::mul(out[2], out[1])));
    };
    EXPECT_LT(typoblind::testing::max_gradient_error(params, build), 1e-6);
}

TEST(AlphaMix, DimensionMismatchIsRejected) {
    Tape t;
    std::vector<Var> acts{t.leaf(Tensor::zeros({1, 2})), t.leaf(Tensor::zeros({1, 2}))};
    EXPECT_THROW(alpha_mix(acts, t.constant(Tensor::zeros({3, 3}))), ShapeError);
}

// ----------------------------------------------------------------------------
// symmetrized_alpha

TEST(SymmetrizedAlpha, IdentityScoresZero) {
    AlphaSnapshot s{alpha_matrix(3, {1, 0, 0, 0, 1, 0, 0, 0, 1})};
    auto score = symmetrized_alpha(s);
    for (double v : score.values()) EXPECT_EQ(v, 0.0);
}

TEST(SymmetrizedAlpha, SymmetricInputIsAFixedPoint) {
    AlphaSnapshot s{alpha_matrix(2, {1, -0.3, -0.3, 1}), alpha_matrix(2, {1, 0.5, 0.5, 1})};
    auto score = symmetrized_alpha(s);
    EXPECT_DOUBLE_EQ(score.at(0, 1), 0.4);
    EXPECT_DOUBLE_EQ(score.at(1, 0), 0.4);
}

TEST(SymmetrizedAlpha, MatchesHandReduction) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        AlphaSnapshot s{random_tensor(rng, {3, 3}), random_tensor(rng, {3, 3})};
        auto score = symmetrized_alpha(s);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                double expect = 0;
                if (i != j) {
                    expect = (std::abs(s[0].at(i, j)) + std::abs(s[0].at(j, i)) + std::abs(s[1].at(i, j)) +
                              std::abs(s[1].at(j, i))) /
                             4.0;
                }
                EXPECT_NEAR(score.at(i, j), expect, 1e-12);
            }
    }
}

TEST(SymmetrizedAlpha, NonSquareIsRejected) {
    AlphaSnapshot s{Tensor::zeros({2, 3})};
    EXPECT_THROW(symmetrized_alpha(s), ShapeError);
}

// ----------------------------------------------------------------------------
// forward

TEST(Forward, TaggingLogitShape) {
    auto m = toy_model();
    Batch b;
    std::vector<std::size_t> s{m.vocabulary().id(1, "w2"), m.vocabulary().id(1, "w0")};
    b.add(s);
    EXPECT_EQ(logits_of(m, b, 1).shape(), (ad::Shape{2, 5}));
}

TEST(Forward, ClassificationLogitShape) {
    auto m = toy_model();
    auto b = toy_batch(m, 0);
    EXPECT_EQ(logits_of(m, b, 0, TaskKind::classification()).shape(), (ad::Shape{1, 2}));
    Batch odd;
    std::vector<std::size_t> s{0};
    odd.add(s);
    EXPECT_THROW(logits_of(m, odd, 0, TaskKind::classification()), ValidationError);
}

TEST(Forward, IdenticalSentencesGiveIdenticalLogits) {
    auto m = toy_model();
    Batch b;
    std::vector<std::size_t> s{m.vocabulary().id(2, "w2"), m.vocabulary().id(2, "w4"), m.vocabulary().id(2, "w1")};
    b.add(s);
    b.add(s);
    auto l = logits_of(m, b, 2);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(l.at(r, c), l.at(r + 3, c));
}

TEST(Forward, UnknownLanguageAndTokenAreRejected) {
    auto m = toy_model();
    auto b = toy_batch(m, 0);
    EXPECT_THROW(logits_of(m, b, 3), ValidationError);
    Batch bad;
    std::vector<std::size_t> s{999};
    bad.add(s);
    EXPECT_THROW(logits_of(m, bad, 0), ValidationError);
    std::vector<std::vector<std::string>> sentences{{"nope"}};
    EXPECT_THROW(m.encode(0, sentences), ValidationError);
}

TEST(Forward, IdentityAlphaIsolatesLanguages) {
    auto m = toy_model();
    for (std::size_t k = 0; k < m.config().layers; ++k) m.set_alpha(k, alpha_matrix(3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
    auto b = toy_batch(m, 0);
    const auto before = logits_of(m, b, 0);
    std::mt19937_64 rng(7);
    for (auto* p : m.column_parameters(1))
        for (auto& v : p->value.values()) v += std::normal_distribution<double>(0, 1)(rng);
    EXPECT_EQ(logits_of(m, b, 0), before);
    for (auto* p : m.column_parameters(0)) p->value.values()[0] += 0.5;
    EXPECT_NE(logits_of(m, b, 0), before);
}

TEST(Forward, SharedAlphaCouplesLanguages) {
    auto m = toy_model();
    auto b = toy_batch(m, 0);
    const auto before = logits_of(m, b, 0);
    for (auto* p : m.column_parameters(1)) p->value.values()[0] += 0.5;
    EXPECT_NE(logits_of(m, b, 0), before);
}

TEST(Forward, PermutationEquivariance) {
    // Relabel languages by P, conjugate α by P: outputs follow the relabeling.
    auto m = toy_model(3, 4);
    auto p = toy_model(3, 4);
    const std::size_t perm[3] = {2, 0, 1}; // old language i becomes perm[i]
    auto moved = [&](SharingNetwork& src, SharingNetwork& dst) {
        for (std::size_t i = 0; i < 3; ++i) {
            auto s = src.column_parameters(i), d = dst.column_parameters(perm[i]);
            for (std::size_t k = 0; k < s.size(); ++k) d[k]->value = s[k]->value;
        }
        for (std::size_t k = 0; k < src.config().layers; ++k) {
            const auto& a = src.alpha_parameter(k).value;
            Tensor b = Tensor::zeros({3, 3});
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) b.at(perm[i], perm[j]) = a.at(i, j);
            dst.set_alpha(k, b);
        }
        // language embedding rows follow the relabeling too
        auto& src_lang = src.encoder_parameters()[1]->value;
        auto& dst_lang = dst.encoder_parameters()[1]->value;
        const std::size_t e = src_lang.cols();
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t c = 0; c < e; ++c) dst_lang.at(perm[i], c) = src_lang.at(i, c);
        // token ids are per language; copy token embedding rows accordingly
        auto& src_tok = src.encoder_parameters()[0]->value;
        auto& dst_tok = dst.encoder_parameters()[0]->value;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t w = 0; w < 5; ++w) {
                const auto form = "w" + std::to_string(w);
                const auto from = src.vocabulary().id(i, form), to = dst.vocabulary().id(perm[i], form);
                for (std::size_t c = 0; c < src_tok.cols(); ++c) dst_tok.at(to, c) = src_tok.at(from, c);
            }
    };
    moved(m, p);
    for (std::size_t i = 0; i < 3; ++i) {
        auto bm = toy_batch(m, i);
        auto bp = toy_batch(p, perm[i]);
        const auto a = logits_of(m, bm, i), b = logits_of(p, bp, perm[i]);
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
    }
}

// ----------------------------------------------------------------------------
// pooled representation

TEST(Pooled, UnaffectedByAlpha) {
    auto m = toy_model();
    auto b = toy_batch(m, 1);
    const auto before = pooled_of(m, b, 1);
    std::mt19937_64 rng(8);
    for (std::size_t k = 0; k < m.config().layers; ++k) m.set_alpha(k, random_tensor(rng, {3, 3}));
    EXPECT_EQ(pooled_of(m, b, 1), before);
}

TEST(Pooled, SingleTokenEqualsItsEncoderState) {
    auto m = toy_model();
    Batch b;
    std::vector<std::size_t> s{m.vocabulary().id(0, "w3")};
    b.add(s);
    Tape t;
    EXPECT_EQ(m.pooled_representation(t, b, 0).value(), m.encoder_states(t, b, 0).value());
}

TEST(Pooled, TwoTokensGiveTheMeanOfTheirStates) {
    auto m = toy_model();
    Batch b;
    std::vector<std::size_t> s{m.vocabulary().id(0, "w3"), m.vocabulary().id(0, "w1")};
    b.add(s);
    Tape t;
    const auto states = m.encoder_states(t, b, 0).value();
    const auto pooled = m.pooled_representation(t, b, 0).value();
    for (std::size_t c = 0; c < states.cols(); ++c)
        EXPECT_NEAR(pooled.at(0, c), (states.at(0, c) + states.at(1, c)) / 2.0, 1e-12);
}

TEST(Pooled, BackwardNeverReachesAlpha) {
    auto m = toy_model();
    auto b = toy_batch(m, 2);
    m.zero_grad();
    Tape t;
    auto out = m.forward(t, b, 2, TaskKind::tagging(5));
    t.backward(ad::sum(ad::tanh(out.pooled)));
    for (std::size_t k = 0; k < m.config().layers; ++k) {
        for (double g : m.alpha_parameter(k).grad) EXPECT_EQ(g, 0.0);
    }
    bool encoder_moved = false;
    for (auto* p : m.encoder_parameters())
        for (double g : p->grad) encoder_moved |= g != 0.0;
    EXPECT_TRUE(encoder_moved);
}

// ----------------------------------------------------------------------------
// alpha snapshot and training

TEST(AlphaSnapshot, InitIsIdentityPlusBoundedNoise) {
    auto m = toy_model(4, 9);
    for (const auto& a : m.alpha_snapshot())
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                EXPECT_LE(std::abs(a.at(i, j) - (i == j ? 1.0 : 0.0)), 3 * m.config().alpha_noise);
}

TEST(AlphaSnapshot, ForwardWithoutBackwardChangesNothing) {
    auto m = toy_model();
    const auto before = m.alpha_snapshot();
    auto b = toy_batch(m, 0);
    logits_of(m, b, 0);
    EXPECT_EQ(m.alpha_snapshot(), before);
}

TEST(AlphaSnapshot, DescentStepOnSyntheticGradient) {
    auto m = toy_model();
    std::mt19937_64 rng(10);
    auto& alpha = m.alpha_parameter(0);
    const auto before = alpha.value;
    auto g = random_tensor(rng, {3, 3});
    alpha.grad = g.data();
    alpha.has_grad = true;
    std::vector<ad::Parameter*> params{&alpha};
    ad::OptimizerSettings sgd{ad::OptimizerKind::gradient_descent, 0.1};
    ad::optimizer_step(params, sgd);
    for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(m.alpha_snapshot()[0][k], before[k] - 0.1 * g[k]);
}

TEST(Training, FullModelGradientsMatchFiniteDifferences) {
    auto m = toy_model(2, 3, 3);
    auto b = toy_batch(m, 1);
    std::vector<std::size_t> tags{0, 1, 2, 3, 4};
    auto task = TaskKind::tagging(5);
    auto params = m.parameters(task);
    auto build = [&](Tape& t) { return ad::cross_entropy(m.forward(t, b, 1, task).logits, tags); };
    EXPECT_LT(typoblind::testing::max_gradient_error(params, build), 1e-5);
    auto cls = TaskKind::classification();
    auto cparams = m.parameters(cls);
    std::vector<std::size_t> label{1};
    auto cbuild = [&](Tape& t) { return ad::cross_entropy(m.forward(t, b, 1, cls).logits, label); };
    EXPECT_LT(typoblind::testing::max_gradient_error(cparams, cbuild), 1e-5);
}

// ----------------------------------------------------------------------------
// checkpoints

TEST(Checkpoint, RoundTripIsBitwise) {
    auto m = toy_model(3, 12);
    // move parameters off their initial values
    auto b = toy_batch(m, 1);
    std::vector<std::size_t> tags{0, 1, 2, 3, 4};
    auto task = TaskKind::tagging(5);
    for (int step = 0; step < 3; ++step) {
        Tape t;
        t.backward(ad::cross_entropy(m.forward(t, b, 1, task).logits, tags));
        ad::optimizer_step(m.parameters(task), {});
    }
    const auto path = std::filesystem::temp_directory_path() / "typoblind_checkpoint_test.json";
    m.save(path);
    auto back = SharingNetwork::load(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.config(), m.config());
    EXPECT_EQ(back.seed(), m.seed());
    EXPECT_EQ(back.alpha_snapshot(), m.alpha_snapshot());
    for (std::size_t l = 0; l < 3; ++l) {
        auto bl = toy_batch(m, l);
        EXPECT_EQ(logits_of(back, bl, l), logits_of(m, bl, l));
        EXPECT_EQ(logits_of(back, bl, l, TaskKind::classification()), logits_of(m, bl, l, TaskKind::classification()));
    }
}

TEST(Checkpoint, WrongFormatIsRejected) {
    EXPECT_THROW(SharingNetwork::from_json({{"format", "other"}}), ValidationError);
}
