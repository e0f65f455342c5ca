#pragma once

// Latent cross-lingual sharing network.
//
//   tokens ─┬─ token embedding ⊕ language embedding
//           └─ shared encoder: tanh(W · [x(t-1), x(t), x(t+1)] + b)   ── pooled representation
//                 │
//   column j, layer k:  h(j,k) = tanh(W(j,k) · h~(j,k-1) + b(j,k))      (one column per language)
//   mixing at layer k:  h~(i,k) = Σ_j α_k(i,j) · h(j,k)
//                 │
//   task head on h~(i,K) of the batch language i
//
// Every column runs on the batch, so language i's output draws on every
// column in proportion to its row of α. The pooled representation is taken
// from the encoder, before any mixing.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "typoblind/autodiff.hpp"
#include "typoblind/errors.hpp"

namespace typoblind::net {

using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;

enum class TaskKindTag { token_tagging, sentence_classification };

struct TaskKind {
    TaskKindTag kind = TaskKindTag::token_tagging;
    std::size_t labels = 5;

    void validate() const {
        if (labels < 2) throw ValidationError("task kind needs at least two labels");
    }
    static TaskKind tagging(std::size_t labels) { return {TaskKindTag::token_tagging, labels}; }
    static TaskKind classification(std::size_t labels = 2) { return {TaskKindTag::sentence_classification, labels}; }
};

struct ModelConfig {
    std::size_t languages = 8;
    std::size_t layers = 2;
    std::size_t hidden = 64;
    std::size_t vocabulary = 0;
    std::size_t embedding = 32;
    std::size_t language_embedding = 8;
    std::size_t tag_labels = 5;
    std::size_t classification_labels = 2;
    double alpha_noise = 0.05;

    void validate() const {
        if (languages == 0 || layers == 0 || hidden == 0 || vocabulary == 0 || embedding == 0) {
            throw ValidationError("model config: all sizes must be positive");
        }
        if (language_embedding < 2) throw ValidationError("model config: language embedding width must be >= 2");
        if (tag_labels < 2 || classification_labels < 2) throw ValidationError("model config: head sizes must be >= 2");
        if (alpha_noise < 0) throw ValidationError("model config: alpha noise must be nonnegative");
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline nlohmann::json to_json(const ModelConfig& c) {
    return {{"languages", c.languages},
            {"layers", c.layers},
            {"hidden", c.hidden},
            {"vocabulary", c.vocabulary},
            {"embedding", c.embedding},
            {"language_embedding", c.language_embedding},
            {"tag_labels", c.tag_labels},
            {"classification_labels", c.classification_labels},
            {"alpha_noise", c.alpha_noise}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.languages = j.at("languages").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.vocabulary = j.value("vocabulary", std::size_t{0});
    c.embedding = j.at("embedding").get<std::size_t>();
    c.language_embedding = j.at("language_embedding").get<std::size_t>();
    c.tag_labels = j.value("tag_labels", std::size_t{5});
    c.classification_labels = j.value("classification_labels", std::size_t{2});
    c.alpha_noise = j.value("alpha_noise", 0.05);
    return c;
}

/// One α matrix per layer, as plain row-major copies.
using AlphaMatrix = Tensor;
using AlphaSnapshot = std::vector<AlphaMatrix>;

/// Token inventory keyed by (language, surface form); languages never share ids.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::vector<std::string>> forms_by_language) : forms_(std::move(forms_by_language)) {
        std::size_t next = 0;
        index_.resize(forms_.size());
        for (std::size_t l = 0; l < forms_.size(); ++l)
            for (const auto& f : forms_[l])
                if (index_[l].emplace(f, next).second) ++next;
        size_ = next;
    }

    std::size_t size() const noexcept { return size_; }
    std::size_t languages() const noexcept { return forms_.size(); }
    const std::vector<std::vector<std::string>>& forms() const noexcept { return forms_; }

    std::size_t id(std::size_t language, const std::string& form) const {
        if (language >= index_.size()) throw ValidationError("unknown language index " + std::to_string(language));
        auto it = index_[language].find(form);
        if (it == index_[language].end()) {
            throw ValidationError("token '" + form + "' is not in the vocabulary of language " +
                                  std::to_string(language));
        }
        return it->second;
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.forms_ == b.forms_; }

private:
    std::vector<std::vector<std::string>> forms_;
    std::vector<std::map<std::string, std::size_t>> index_;
    std::size_t size_ = 0;
};

/// Monolingual batch in token-id form. For sentence classification the
/// sentences come in consecutive pairs.
struct Batch {
    std::vector<std::size_t> tokens;
    std::vector<std::size_t> lengths;

    std::size_t sentences() const { return lengths.size(); }
    void add(std::span<const std::size_t> sentence) {
        if (sentence.empty()) throw ValidationError("batch: empty sentence");
        tokens.insert(tokens.end(), sentence.begin(), sentence.end());
        lengths.push_back(sentence.size());
    }
};

// ---------------------------------------------------------------------------

/// Output i = Σ_j alpha(i,j) · activations[j] for every language i.
inline std::vector<Var> alpha_mix(std::span<const Var> activations, Var alpha) {
    const Tensor& a = alpha.value();
    if (a.rank() != 2 || a.rows() != a.cols() || a.rows() != activations.size()) {
        throw ShapeError("alpha_mix: " + std::to_string(activations.size()) + " activations for alpha " +
                         ad::shape_string(a.shape()));
    }
    std::vector<Var> out;
    for (std::size_t i = 0; i < activations.size(); ++i) out.push_back(ad::mix_row(alpha, i, activations));
    return out;
}

/// Pairwise sharing score: mean over layers of (|α_ij| + |α_ji|) / 2.
/// The diagonal carries no score and is left at zero.
inline Tensor symmetrized_alpha(std::span<const AlphaMatrix> snapshot) {
    if (snapshot.empty()) throw ValidationError("symmetrized_alpha: empty snapshot");
    const auto& first = snapshot.front();
    if (first.rank() != 2 || first.rows() != first.cols()) {
        throw ShapeError("symmetrized_alpha: alpha must be square, got " + ad::shape_string(first.shape()));
    }
    const std::size_t l = first.rows();
    Tensor score = Tensor::zeros({l, l});
    for (const auto& a : snapshot) {
        if (a.shape() != first.shape()) throw ShapeError("symmetrized_alpha: layers disagree in shape");
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t j = 0; j < l; ++j)
                if (i != j) score.at(i, j) += (std::abs(a.at(i, j)) + std::abs(a.at(j, i))) / 2.0;
    }
    for (auto& v : score.values()) v /= static_cast<double>(snapshot.size());
    return score;
}

// ---------------------------------------------------------------------------

class SharingNetwork {
public:
    SharingNetwork() = default;

    SharingNetwork(ModelConfig config, Vocabulary vocabulary, std::vector<std::string> language_names,
                   std::uint64_t seed)
        : config_(std::move(config)), vocabulary_(std::move(vocabulary)), names_(std::move(language_names)),
          seed_(seed) {
        config_.vocabulary = vocabulary_.size();
        config_.validate();
        if (names_.size() != config_.languages || vocabulary_.languages() != config_.languages) {
            throw ValidationError("model: language count disagrees with names or vocabulary");
        }
        initialize();
    }

    const ModelConfig& config() const noexcept { return config_; }
    const Vocabulary& vocabulary() const noexcept { return vocabulary_; }
    const std::vector<std::string>& language_names() const noexcept { return names_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::size_t language_index(const std::string& name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return i;
        throw ValidationError("unknown language '" + name + "'");
    }

    Batch encode(std::size_t language, std::span<const std::vector<std::string>> sentences) const {
        Batch b;
        for (const auto& s : sentences) {
            std::vector<std::size_t> ids;
            for (const auto& t : s) ids.push_back(vocabulary_.id(language, t));
            b.add(ids);
        }
        return b;
    }

    /// Encoder states [N×d] for a monolingual batch.
    Var encoder_states(Tape& tape, const Batch& batch, std::size_t language) {
        check_batch(batch, language);
        auto tok = ad::embedding_lookup(tape.param(token_embedding_), batch.tokens);
        std::vector<std::size_t> lang_ids(batch.tokens.size(), language);
        auto lang = ad::embedding_lookup(tape.param(language_embedding_), lang_ids);
        auto windows = ad::context_window(ad::concat({tok, lang}), batch.lengths);
        return ad::tanh(ad::add_bias(ad::matmul(windows, tape.param(encoder_weight_)), tape.param(encoder_bias_)));
    }

    /// Mean-pooled encoder state per sentence, taken before any mixing.
    Var pooled_representation(Tape& tape, const Batch& batch, std::size_t language) {
        return ad::mean_pool(encoder_states(tape, batch, language), batch.lengths);
    }

    struct Output {
        Var logits;
        Var pooled;
    };

    /// Runs the columns on the encoder states and returns the mixed final
    /// state of `language` [N×d].
    Var final_states(Tape& tape, Var encoded, std::size_t language) {
        const std::size_t l = config_.languages;
        std::vector<Var> mixed(l, encoded);
        for (std::size_t k = 0; k < config_.layers; ++k) {
            std::vector<Var> h;
            h.reserve(l);
            for (std::size_t j = 0; j < l; ++j) {
                auto& w = column_weight_[k][j];
                auto& b = column_bias_[k][j];
                h.push_back(ad::tanh(ad::add_bias(ad::matmul(mixed[j], tape.param(w)), tape.param(b))));
            }
            auto alpha = tape.param(alpha_[k]);
            if (k + 1 == config_.layers) return ad::mix_row(alpha, language, h);
            mixed = alpha_mix(h, alpha);
        }
        return encoded; // unreachable: layers >= 1
    }

    /// Task logits plus the pooled representation of the same batch.
    Output forward(Tape& tape, const Batch& batch, std::size_t language, const TaskKind& task) {
        task.validate();
        auto encoded = encoder_states(tape, batch, language);
        auto pooled = ad::mean_pool(encoded, batch.lengths);
        auto final = final_states(tape, encoded, language);
        if (task.kind == TaskKindTag::token_tagging) {
            if (task.labels != config_.tag_labels) throw ValidationError("tagging task label count disagrees with model");
            auto logits = ad::add_bias(ad::matmul(final, tape.param(tag_weight_)), tape.param(tag_bias_));
            return {logits, pooled};
        }
        if (task.labels != config_.classification_labels) {
            throw ValidationError("classification task label count disagrees with model");
        }
        if (batch.sentences() % 2 != 0) throw ValidationError("sentence classification needs sentence pairs");
        auto sent = ad::mean_pool(final, batch.lengths);
        const std::size_t pairs = batch.sentences() / 2, d = config_.hidden;
        std::vector<std::size_t> firsts, seconds;
        for (std::size_t p = 0; p < pairs; ++p) {
            firsts.push_back(2 * p);
            seconds.push_back(2 * p + 1);
        }
        auto u = ad::embedding_lookup(sent, firsts);
        auto v = ad::embedding_lookup(sent, seconds);
        auto diff = ad::sub(u, v);
        auto features = ad::concat({u, v, ad::mul(diff, diff)});
        (void)d;
        auto logits = ad::add_bias(ad::matmul(features, tape.param(pair_weight_)), tape.param(pair_bias_));
        return {logits, pooled};
    }

    // ------------------------------------------------------------------
    // α access

    AlphaSnapshot alpha_snapshot() const {
        AlphaSnapshot out;
        for (const auto& a : alpha_) out.push_back(a.value);
        return out;
    }

    Parameter& alpha_parameter(std::size_t layer) { return alpha_.at(layer); }

    void set_alpha(std::size_t layer, const Tensor& value) {
        if (value.shape() != alpha_.at(layer).value.shape()) throw ShapeError("set_alpha: shape mismatch");
        alpha_[layer].value = value;
        alpha_[layer].value.set_requires_grad(true);
    }

    /// Learned language-identity embeddings [l × e].
    const Tensor& language_embeddings() const { return language_embedding_.value; }

    // ------------------------------------------------------------------
    // Parameters

    std::vector<Parameter*> parameters(const TaskKind& task) {
        std::vector<Parameter*> out{&token_embedding_, &language_embedding_, &encoder_weight_, &encoder_bias_};
        for (std::size_t k = 0; k < config_.layers; ++k) {
            for (std::size_t j = 0; j < config_.languages; ++j) {
                out.push_back(&column_weight_[k][j]);
                out.push_back(&column_bias_[k][j]);
            }
            out.push_back(&alpha_[k]);
        }
        if (task.kind == TaskKindTag::token_tagging) {
            out.push_back(&tag_weight_);
            out.push_back(&tag_bias_);
        } else {
            out.push_back(&pair_weight_);
            out.push_back(&pair_bias_);
        }
        return out;
    }

    /// Encoder-side parameters: everything the pooled representation depends on.
    std::vector<Parameter*> encoder_parameters() {
        return {&token_embedding_, &language_embedding_, &encoder_weight_, &encoder_bias_};
    }

    std::vector<Parameter*> column_parameters(std::size_t language) {
        std::vector<Parameter*> out;
        for (std::size_t k = 0; k < config_.layers; ++k) {
            out.push_back(&column_weight_[k].at(language));
            out.push_back(&column_bias_[k].at(language));
        }
        return out;
    }

    std::vector<const Parameter*> all_parameters() const {
        auto* self = const_cast<SharingNetwork*>(this);
        std::vector<const Parameter*> out;
        for (auto* p : self->parameters(TaskKind::tagging(config_.tag_labels))) out.push_back(p);
        out.push_back(&pair_weight_);
        out.push_back(&pair_bias_);
        return out;
    }

    void zero_grad() {
        auto* self = this;
        for (auto* p : self->parameters(TaskKind::tagging(config_.tag_labels))) p->zero_grad();
        pair_weight_.zero_grad();
        pair_bias_.zero_grad();
    }

    // ------------------------------------------------------------------
    // Checkpoints

    nlohmann::json to_json() const {
        nlohmann::json params = nlohmann::json::object();
        for (const auto* p : all_parameters()) {
            params[p->name] = {{"shape", p->value.shape()}, {"values", p->value.data()}};
        }
        return {{"format", "typoblind-checkpoint"},
                {"schema_version", 1},
                {"seed", seed_},
                {"config", net::to_json(config_)},
                {"languages", names_},
                {"vocabulary", vocabulary_.forms()},
                {"parameters", params}};
    }

    static SharingNetwork from_json(const nlohmann::json& j) {
        if (j.value("format", "") != "typoblind-checkpoint" || j.value("schema_version", 0) != 1) {
            throw ValidationError("not a supported checkpoint (format/schema_version)");
        }
        SharingNetwork m(model_config_from_json(j.at("config")),
                         Vocabulary(j.at("vocabulary").get<std::vector<std::vector<std::string>>>()),
                         j.at("languages").get<std::vector<std::string>>(), j.at("seed").get<std::uint64_t>());
        const auto& params = j.at("parameters");
        auto* self = &m;
        std::vector<Parameter*> all;
        for (const auto* p : self->all_parameters()) all.push_back(const_cast<Parameter*>(p));
        for (auto* p : all) {
            if (!params.contains(p->name)) throw ValidationError("checkpoint lacks parameter " + p->name);
            const auto& e = params.at(p->name);
            Tensor t(e.at("shape").get<ad::Shape>(), e.at("values").get<std::vector<double>>(), true);
            if (t.shape() != p->value.shape()) throw ValidationError("checkpoint parameter " + p->name + " has wrong shape");
            p->value = std::move(t);
        }
        return m;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw ValidationError("cannot write checkpoint " + path.string());
        out << to_json().dump();
    }

    static SharingNetwork load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot read checkpoint " + path.string());
        return from_json(nlohmann::json::parse(in));
    }

private:
    void check_batch(const Batch& batch, std::size_t language) const {
        if (language >= config_.languages) throw ValidationError("unknown language index " + std::to_string(language));
        if (batch.lengths.empty()) throw ValidationError("empty batch");
        for (auto t : batch.tokens)
            if (t >= config_.vocabulary) throw ValidationError("token id " + std::to_string(t) + " outside vocabulary");
    }

    static Tensor uniform(std::mt19937_64& rng, ad::Shape shape, double limit) {
        std::uniform_real_distribution<double> dist(-limit, limit);
        std::vector<double> v(ad::shape_size(shape));
        for (auto& x : v) x = dist(rng);
        return Tensor(std::move(shape), std::move(v));
    }

    static double glorot(std::size_t fan_in, std::size_t fan_out) {
        return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    }

    void initialize() {
        std::mt19937_64 rng(seed_);
        const auto& c = config_;
        const std::size_t in = 3 * (c.embedding + c.language_embedding);
        token_embedding_ = Parameter("token_embedding", uniform(rng, {c.vocabulary, c.embedding}, 0.5));
        language_embedding_ = Parameter("language_embedding", uniform(rng, {c.languages, c.language_embedding}, 0.5));
        encoder_weight_ = Parameter("encoder_weight", uniform(rng, {in, c.hidden}, glorot(in, c.hidden)));
        encoder_bias_ = Parameter("encoder_bias", Tensor::zeros({c.hidden}));
        column_weight_.assign(c.layers, {});
        column_bias_.assign(c.layers, {});
        alpha_.clear();
        for (std::size_t k = 0; k < c.layers; ++k) {
            for (std::size_t j = 0; j < c.languages; ++j) {
                const auto tag = std::to_string(k) + "_" + std::to_string(j);
                column_weight_[k].emplace_back("column_weight_" + tag,
                                               uniform(rng, {c.hidden, c.hidden}, glorot(c.hidden, c.hidden)));
                column_bias_[k].emplace_back("column_bias_" + tag, Tensor::zeros({c.hidden}));
            }
            Tensor a = uniform(rng, {c.languages, c.languages}, c.alpha_noise);
            for (std::size_t i = 0; i < c.languages; ++i) a.at(i, i) += 1.0;
            alpha_.emplace_back("alpha_" + std::to_string(k), std::move(a));
        }
        tag_weight_ = Parameter("tag_weight", uniform(rng, {c.hidden, c.tag_labels}, glorot(c.hidden, c.tag_labels)));
        tag_bias_ = Parameter("tag_bias", Tensor::zeros({c.tag_labels}));
        pair_weight_ = Parameter("pair_weight", uniform(rng, {3 * c.hidden, c.classification_labels},
                                                        glorot(3 * c.hidden, c.classification_labels)));
        pair_bias_ = Parameter("pair_bias", Tensor::zeros({c.classification_labels}));
    }

    ModelConfig config_;
    Vocabulary vocabulary_;
    std::vector<std::string> names_;
    std::uint64_t seed_ = 0;

    Parameter token_embedding_, language_embedding_, encoder_weight_, encoder_bias_;
    std::vector<std::vector<Parameter>> column_weight_, column_bias_;
    std::vector<Parameter> alpha_;
    Parameter tag_weight_, tag_bias_, pair_weight_, pair_bias_;
};

} // namespace typoblind::net
