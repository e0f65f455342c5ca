#pragma once

// Experiment orchestration: conditions, multi-seed training, evaluation,
// significance tests, correlation tables and report persistence.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "typoblind/autodiff.hpp"
#include "typoblind/checksum.hpp"
#include "typoblind/errors.hpp"
#include "typoblind/sharing_network.hpp"
#include "typoblind/similarity.hpp"
#include "typoblind/synth_suite.hpp"
#include "typoblind/typology_heads.hpp"
#include "typoblind/wals.hpp"

#ifndef TYPOBLIND_CODE_DIGEST
#define TYPOBLIND_CODE_DIGEST "unversioned"
#endif

namespace typoblind::harness {

using nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kSuiteSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Conditions

enum class ConditionMode { baseline, blind, expose };

inline std::string_view to_string(ConditionMode m) {
    switch (m) {
    case ConditionMode::baseline: return "baseline";
    case ConditionMode::blind: return "blind";
    case ConditionMode::expose: return "expose";
    }
    return "?";
}

inline ConditionMode parse_condition_mode(std::string_view s) {
    if (s == "baseline") return ConditionMode::baseline;
    if (s == "blind") return ConditionMode::blind;
    if (s == "expose") return ConditionMode::expose;
    throw ValidationError("unknown condition mode '" + std::string(s) + "'");
}

struct Condition {
    ConditionMode mode = ConditionMode::baseline;
    std::optional<FeatureArea> area;
    double lambda = 1.0;
    double w_typ = 0.1;

    static Condition baseline() { return {}; }
    static Condition blind(FeatureArea a, double lambda = 1.0, double w = 0.1) {
        return {ConditionMode::blind, a, lambda, w};
    }
    static Condition expose(FeatureArea a, double w = 0.1) { return {ConditionMode::expose, a, 1.0, w}; }

    void validate() const {
        if (mode == ConditionMode::baseline && area) throw ValidationError("condition: baseline carries no area");
        if (mode != ConditionMode::baseline && !area) throw ValidationError("condition: blind/expose need an area");
        if (mode == ConditionMode::blind && !(lambda > 0.0 && std::isfinite(lambda))) {
            throw ValidationError("condition: blind needs lambda > 0");
        }
        heads::TypologyLossWeight{w_typ};
    }

    heads::HeadMode head_mode() const {
        switch (mode) {
        case ConditionMode::baseline: return heads::HeadMode::off();
        case ConditionMode::blind: return heads::HeadMode::blind(lambda);
        case ConditionMode::expose: return heads::HeadMode::expose();
        }
        return {};
    }

    /// "baseline", "blind:word_order", "expose:morphology", ...
    std::string label() const {
        if (!area) return std::string(to_string(mode));
        return std::string(to_string(mode)) + ":" + std::string(typoblind::to_string(*area));
    }

    friend bool operator==(const Condition&, const Condition&) = default;
};

inline constexpr FeatureArea kGridAreas[] = {FeatureArea::word_order, FeatureArea::morphology, FeatureArea::phonology,
                                             FeatureArea::genealogy};

/// Baseline, then blind and expose for every area: nine conditions.
inline std::vector<Condition> condition_grid(double lambda = 1.0, double w_typ = 0.1) {
    std::vector<Condition> out{Condition::baseline()};
    for (auto a : kGridAreas) out.push_back(Condition::blind(a, lambda, w_typ));
    for (auto a : kGridAreas) out.push_back(Condition::expose(a, w_typ));
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

enum class Task { token_tagging, sentence_classification };

inline std::string_view to_string(Task t) {
    return t == Task::token_tagging ? "token_tagging" : "sentence_classification";
}

inline Task parse_task(std::string_view s) {
    if (s == "token_tagging") return Task::token_tagging;
    if (s == "sentence_classification") return Task::sentence_classification;
    throw ValidationError("unknown task '" + std::string(s) + "'");
}

struct SuiteConfig {
    std::size_t languages = 8;
    std::uint64_t data_seed = 0;
    synth::CorpusSpec corpus;
    std::string data_dir; ///< when set, corpora come from a generated data directory

    friend bool operator==(const SuiteConfig&, const SuiteConfig&) = default;
};

struct ModelSettings {
    std::size_t layers = 2;
    std::size_t hidden = 64;
    std::size_t embedding = 32;
    std::size_t language_embedding = 8;
    double alpha_noise = 0.05;

    friend bool operator==(const ModelSettings&, const ModelSettings&) = default;
};

struct RunConfig {
    SuiteConfig suite;
    ModelSettings model;
    Task task = Task::token_tagging;
    std::string source_language = "L0"; ///< classification: the only language with task-head training
    std::size_t pairs_per_language = 400;
    Condition condition;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    ad::OptimizerKind optimizer = ad::OptimizerKind::adam;
    double threshold = 0.01;

    void validate() const {
        if (seeds.empty()) throw ValidationError("config: at least one seed is required");
        if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
            throw ValidationError("config: seeds must be distinct");
        }
        if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("config: threshold must lie in (0, 1)");
        if (epochs == 0 || batch_size == 0) throw ValidationError("config: epochs and batch_size must be positive");
        if (!(learning_rate > 0.0 && std::isfinite(learning_rate))) {
            throw ValidationError("config: learning_rate must be positive");
        }
        if (task == Task::sentence_classification && pairs_per_language < 2) {
            throw ValidationError("config: pairs_per_language must be >= 2");
        }
        if (suite.data_dir.empty()) suite.corpus.validate();
        condition.validate();
    }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

/// Reads `key` into `out` when present; rejects keys not listed in `allowed`.
inline void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw ValidationError("config: " + std::string(where) + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ValidationError("config: unknown key '" + it.key() + "' in " + std::string(where));
        }
    }
}

template <class T>
void read(const json& j, std::string_view key, T& out) {
    const std::string k(key);
    if (!j.contains(k)) return;
    try {
        out = j.at(k).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError("config: bad value for '" + k + "': " + e.what());
    }
}

} // namespace detail

inline json to_json(const synth::CorpusSpec& s) {
    return {{"sentences_per_language", s.sentences_per_language},
            {"max_clause_elements", s.max_clause_elements},
            {"nouns", s.nouns},
            {"verbs", s.verbs},
            {"adjectives", s.adjectives},
            {"adpositions", s.adpositions},
            {"affixes", s.affixes},
            {"ambiguity", s.ambiguity},
            {"adjective_probability", s.adjective_probability},
            {"adposition_probability", s.adposition_probability},
            {"affix_probability", s.affix_probability},
            {"zipf_exponent", s.zipf_exponent},
            {"train_fraction", s.train_fraction},
            {"dev_fraction", s.dev_fraction},
            {"test_fraction", s.test_fraction}};
}

inline synth::CorpusSpec corpus_spec_from_json(const json& j) {
    detail::reject_unknown(j,
                           {"sentences_per_language", "max_clause_elements", "nouns", "verbs", "adjectives",
                            "adpositions", "affixes", "ambiguity", "adjective_probability", "adposition_probability",
                            "affix_probability", "zipf_exponent", "train_fraction", "dev_fraction", "test_fraction"},
                           "suite.corpus");
    synth::CorpusSpec s;
    detail::read(j, "sentences_per_language", s.sentences_per_language);
    detail::read(j, "max_clause_elements", s.max_clause_elements);
    detail::read(j, "nouns", s.nouns);
    detail::read(j, "verbs", s.verbs);
    detail::read(j, "adjectives", s.adjectives);
    detail::read(j, "adpositions", s.adpositions);
    detail::read(j, "affixes", s.affixes);
    detail::read(j, "ambiguity", s.ambiguity);
    detail::read(j, "adjective_probability", s.adjective_probability);
    detail::read(j, "adposition_probability", s.adposition_probability);
    detail::read(j, "affix_probability", s.affix_probability);
    detail::read(j, "zipf_exponent", s.zipf_exponent);
    detail::read(j, "train_fraction", s.train_fraction);
    detail::read(j, "dev_fraction", s.dev_fraction);
    detail::read(j, "test_fraction", s.test_fraction);
    return s;
}

inline json to_json(const Condition& c) {
    json j{{"mode", to_string(c.mode)}, {"lambda", c.lambda}, {"w_typ", c.w_typ}};
    j["area"] = c.area ? json(typoblind::to_string(*c.area)) : json(nullptr);
    return j;
}

inline Condition condition_from_json(const json& j) {
    detail::reject_unknown(j, {"mode", "area", "lambda", "w_typ"}, "condition");
    Condition c;
    std::string mode = "baseline";
    detail::read(j, "mode", mode);
    c.mode = parse_condition_mode(mode);
    if (j.contains("area") && !j.at("area").is_null()) c.area = parse_area(j.at("area").get<std::string>());
    detail::read(j, "lambda", c.lambda);
    detail::read(j, "w_typ", c.w_typ);
    return c;
}

inline json to_json(const RunConfig& c) {
    return {{"suite",
             {{"languages", c.suite.languages},
              {"data_seed", c.suite.data_seed},
              {"corpus", to_json(c.suite.corpus)},
              {"data_dir", c.suite.data_dir}}},
            {"model",
             {{"layers", c.model.layers},
              {"hidden", c.model.hidden},
              {"embedding", c.model.embedding},
              {"language_embedding", c.model.language_embedding},
              {"alpha_noise", c.model.alpha_noise}}},
            {"task", to_string(c.task)},
            {"source_language", c.source_language},
            {"pairs_per_language", c.pairs_per_language},
            {"condition", to_json(c.condition)},
            {"seeds", c.seeds},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"optimizer", c.optimizer == ad::OptimizerKind::adam ? "adam" : "gradient_descent"},
            {"threshold", c.threshold}};
}

inline RunConfig run_config_from_json(const json& j) {
    detail::reject_unknown(j,
                           {"suite", "model", "task", "source_language", "pairs_per_language", "condition", "seeds",
                            "epochs", "batch_size", "learning_rate", "optimizer", "threshold"},
                           "config");
    RunConfig c;
    if (j.contains("suite")) {
        const auto& s = j.at("suite");
        detail::reject_unknown(s, {"languages", "data_seed", "corpus", "data_dir"}, "suite");
        detail::read(s, "languages", c.suite.languages);
        detail::read(s, "data_seed", c.suite.data_seed);
        detail::read(s, "data_dir", c.suite.data_dir);
        if (s.contains("corpus")) c.suite.corpus = corpus_spec_from_json(s.at("corpus"));
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        detail::reject_unknown(m, {"layers", "hidden", "embedding", "language_embedding", "alpha_noise"}, "model");
        detail::read(m, "layers", c.model.layers);
        detail::read(m, "hidden", c.model.hidden);
        detail::read(m, "embedding", c.model.embedding);
        detail::read(m, "language_embedding", c.model.language_embedding);
        detail::read(m, "alpha_noise", c.model.alpha_noise);
    }
    std::string task = "token_tagging", optimizer = "adam";
    detail::read(j, "task", task);
    c.task = parse_task(task);
    detail::read(j, "source_language", c.source_language);
    detail::read(j, "pairs_per_language", c.pairs_per_language);
    if (j.contains("condition")) c.condition = condition_from_json(j.at("condition"));
    detail::read(j, "seeds", c.seeds);
    detail::read(j, "epochs", c.epochs);
    detail::read(j, "batch_size", c.batch_size);
    detail::read(j, "learning_rate", c.learning_rate);
    detail::read(j, "optimizer", optimizer);
    if (optimizer == "adam") c.optimizer = ad::OptimizerKind::adam;
    else if (optimizer == "gradient_descent") c.optimizer = ad::OptimizerKind::gradient_descent;
    else throw ValidationError("config: unknown optimizer '" + optimizer + "'");
    detail::read(j, "threshold", c.threshold);
    c.validate();
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config " + path.string());
    try {
        return run_config_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Data

/// Corpora, typology profiles and families of one experiment.
struct Dataset {
    std::vector<synth::TaggedCorpus> corpora;
    FeatureSet profiles;
    std::string checksum; ///< SHA-256 over the serialized corpora

    std::vector<std::string> languages() const {
        std::vector<std::string> out;
        for (const auto& c : corpora) out.push_back(c.grammar.language);
        return out;
    }

    std::map<std::string, std::string> families() const {
        std::map<std::string, std::string> out;
        for (const auto& c : corpora) out[c.grammar.language] = c.grammar.family;
        return out;
    }
};

inline std::string corpus_text(const synth::TaggedCorpus& c) {
    std::ostringstream out;
    synth::write_corpus(out, c.sentences);
    return out.str();
}

inline std::string data_checksum(const std::vector<synth::TaggedCorpus>& corpora) {
    Sha256 h;
    for (const auto& c : corpora) h.update(c.grammar.language).update("\n").update(corpus_text(c));
    return h.hex();
}

inline json to_json(const synth::SyntheticGrammar& g) {
    return {{"language", g.language},
            {"word_order", synth::to_string(g.word_order)},
            {"adposition_order", synth::to_string(g.adposition_order)},
            {"affixing", synth::to_string(g.affixing)},
            {"inert", synth::to_string(g.inert)},
            {"family", g.family},
            {"vocabulary_seed", g.vocabulary_seed}};
}

inline synth::SyntheticGrammar grammar_from_json(const json& j) {
    synth::SyntheticGrammar g;
    g.language = j.at("language").get<std::string>();
    g.word_order = synth::parse_word_order(j.at("word_order").get<std::string>());
    g.adposition_order = synth::parse_adposition_order(j.at("adposition_order").get<std::string>());
    g.affixing = synth::parse_affixing(j.at("affixing").get<std::string>());
    g.inert = synth::parse_inert(j.at("inert").get<std::string>());
    g.family = j.at("family").get<std::string>();
    g.vocabulary_seed = j.at("vocabulary_seed").get<std::uint64_t>();
    return g;
}

/// Writes temp-then-rename so readers never see a partial file.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw ValidationError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Layout: suite.json, typology.json, corpora/<language>.txt
inline void write_dataset(const std::filesystem::path& dir, const synth::Suite& suite) {
    std::filesystem::create_directories(dir / "corpora");
    json langs = json::array();
    for (const auto& c : suite.corpora) {
        const auto text = corpus_text(c);
        write_atomically(dir / "corpora" / (c.grammar.language + ".txt"), text);
        langs.push_back({{"grammar", to_json(c.grammar)},
                         {"train_end", c.train_end},
                         {"dev_end", c.dev_end},
                         {"sha256", sha256_hex(text)}});
    }
    json meta{{"schema_version", kSuiteSchemaVersion},
              {"seed", suite.seed},
              {"corpus", to_json(suite.spec)},
              {"languages", langs},
              {"data_checksum", data_checksum(suite.corpora)}};
    write_atomically(dir / "suite.json", meta.dump(2) + "\n");
    write_atomically(dir / "typology.json", manifest_to_json(suite.profiles).dump(2) + "\n");
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
    const auto meta = json::parse(read_file(dir / "suite.json"));
    if (meta.value("schema_version", 0) != kSuiteSchemaVersion) {
        throw ValidationError("data directory " + dir.string() + " has an unsupported schema_version");
    }
    Dataset d;
    for (const auto& l : meta.at("languages")) {
        synth::TaggedCorpus c;
        c.grammar = grammar_from_json(l.at("grammar"));
        const auto text = read_file(dir / "corpora" / (c.grammar.language + ".txt"));
        if (sha256_hex(text) != l.at("sha256").get<std::string>()) {
            throw ValidationError("corpus for " + c.grammar.language + " fails its checksum");
        }
        std::istringstream in(text);
        c.sentences = synth::read_corpus(in, c.grammar.language);
        c.train_end = l.at("train_end").get<std::size_t>();
        c.dev_end = l.at("dev_end").get<std::size_t>();
        if (!(c.train_end > 0 && c.train_end <= c.dev_end && c.dev_end < c.sentences.size())) {
            throw ValidationError("corpus for " + c.grammar.language + " has inconsistent split boundaries");
        }
        d.corpora.push_back(std::move(c));
    }
    d.profiles = manifest_from_json(json::parse(read_file(dir / "typology.json")));
    d.checksum = data_checksum(d.corpora);
    return d;
}

inline Dataset make_dataset(const SuiteConfig& s) {
    if (!s.data_dir.empty()) return read_dataset(s.data_dir);
    auto suite = synth::generate_suite(s.languages, s.data_seed, s.corpus);
    Dataset d{std::move(suite.corpora), std::move(suite.profiles), {}};
    d.checksum = data_checksum(d.corpora);
    return d;
}

/// Features of one area, filtered to the dataset's languages.
inline std::vector<TypologyFeature> area_features(const Dataset& d, FeatureArea area) {
    const auto langs = d.languages();
    return wals::select_features(wals::to_records(d.profiles), langs, area).features;
}

// ---------------------------------------------------------------------------
// Reports

struct Accuracy {
    double dev = 0;
    double test = 0;
    friend bool operator==(const Accuracy&, const Accuracy&) = default;
};

struct SeedResult {
    std::uint64_t seed = 0;
    bool diverged = false;
    std::string note;
    std::map<std::string, Accuracy> accuracy;
    net::AlphaSnapshot alpha;
    ad::Tensor language_embeddings;
    double final_loss = 0;
};

struct Correlations {
    std::vector<std::optional<double>> structural; ///< one per converged seed
    std::vector<std::optional<double>> embedding;
    std::optional<double> structural_pooled;       ///< mean of the per-seed values
    std::optional<double> embedding_pooled;
};

struct RunReport {
    RunConfig config;
    std::vector<std::string> languages;
    std::map<std::string, std::string> families;
    std::vector<SeedResult> per_seed;
    std::map<std::string, double> mean_test_accuracy; ///< per language, over converged seeds
    double overall_test_accuracy = 0;                 ///< macro average over languages
    ad::Tensor alpha_scores;                          ///< symmetrized α, averaged over converged seeds
    sim::SimilarityMatrix structural_similarity;
    Correlations correlations;
    json comparison_to_baseline = nullptr;
    double wall_clock_seconds = 0;
    std::string code_checksum = TYPOBLIND_CODE_DIGEST;
    std::string data_checksum;

    std::size_t diverged_seeds() const {
        return static_cast<std::size_t>(
            std::count_if(per_seed.begin(), per_seed.end(), [](const SeedResult& s) { return s.diverged; }));
    }
    bool failed() const { return 2 * diverged_seeds() > per_seed.size(); }

    /// Macro-averaged test accuracy of each converged seed.
    std::vector<double> seed_means() const {
        std::vector<double> out;
        for (const auto& s : per_seed) {
            if (s.diverged) continue;
            double sum = 0;
            for (const auto& l : languages) sum += s.accuracy.at(l).test;
            out.push_back(sum / static_cast<double>(languages.size()));
        }
        return out;
    }

    /// Test accuracies of one language over converged seeds.
    std::vector<double> language_accuracies(const std::string& language) const {
        std::vector<double> out;
        for (const auto& s : per_seed)
            if (!s.diverged) out.push_back(s.accuracy.at(language).test);
        return out;
    }
};

namespace detail {

inline json tensor_json(const ad::Tensor& t) { return {{"shape", t.shape()}, {"values", t.data()}}; }

inline ad::Tensor tensor_from_json(const json& j) {
    return ad::Tensor(j.at("shape").get<ad::Shape>(), j.at("values").get<std::vector<double>>());
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> optional_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

inline json similarity_json(const sim::SimilarityMatrix& m) {
    return {{"languages", m.languages}, {"values", tensor_json(m.values)}, {"warnings", m.warnings}};
}

inline sim::SimilarityMatrix similarity_from_json(const json& j) {
    return {j.at("languages").get<std::vector<std::string>>(), tensor_from_json(j.at("values")),
            j.at("warnings").get<std::vector<std::string>>()};
}

inline json body_json(const RunReport& r) {
    json seeds = json::array();
    for (const auto& s : r.per_seed) {
        json acc = json::object();
        for (const auto& [l, a] : s.accuracy) acc[l] = {{"dev", a.dev}, {"test", a.test}};
        json alpha = json::array();
        for (const auto& a : s.alpha) alpha.push_back(tensor_json(a));
        seeds.push_back({{"seed", s.seed},
                         {"diverged", s.diverged},
                         {"note", s.note},
                         {"accuracy", acc},
                         {"alpha", alpha},
                         {"language_embeddings", tensor_json(s.language_embeddings)},
                         {"final_loss", s.final_loss}});
    }
    json corr{{"structural_per_seed", json::array()},
              {"embedding_per_seed", json::array()},
              {"structural_pooled", optional_json(r.correlations.structural_pooled)},
              {"embedding_pooled", optional_json(r.correlations.embedding_pooled)}};
    for (const auto& v : r.correlations.structural) corr["structural_per_seed"].push_back(optional_json(v));
    for (const auto& v : r.correlations.embedding) corr["embedding_per_seed"].push_back(optional_json(v));
    json aggregate{{"condition", r.config.condition.label()},
                   {"languages", r.languages},
                   {"families", r.families},
                   {"mean_test_accuracy", r.mean_test_accuracy},
                   {"overall_test_accuracy", r.overall_test_accuracy},
                   {"seed_means", r.seed_means()},
                   {"diverged_seeds", r.diverged_seeds()},
                   {"alpha_scores", tensor_json(r.alpha_scores)},
                   {"structural_similarity", similarity_json(r.structural_similarity)},
                   {"structural_statistics", {{"version", sim::kStatisticsVersion}, {"names", sim::kStatistics}}},
                   {"correlations", corr},
                   {"comparison_to_baseline", r.comparison_to_baseline},
                   {"wall_clock_seconds", r.wall_clock_seconds}};
    return {{"schema_version", kReportSchemaVersion},
            {"config", harness::to_json(r.config)},
            {"per_seed", seeds},
            {"aggregate", aggregate}};
}

inline std::string report_digest(const json& body, const json& checksums) {
    json copy = body;
    copy["checksums"] = {{"code", checksums.at("code")}, {"data", checksums.at("data")}};
    return sha256_hex(copy.dump());
}

} // namespace detail

inline json to_json(const RunReport& r) {
    json j = detail::body_json(r);
    json checksums{{"code", r.code_checksum}, {"data", r.data_checksum}};
    checksums["report"] = detail::report_digest(j, checksums);
    j["checksums"] = checksums;
    return j;
}

inline RunReport report_from_json(const json& j) {
    if (!j.is_object() || !j.contains("schema_version")) throw ValidationError("report: missing schema_version");
    const int version = j.at("schema_version").get<int>();
    if (version != kReportSchemaVersion) {
        throw ValidationError("report: unsupported schema_version " + std::to_string(version) + " (this build reads " +
                              std::to_string(kReportSchemaVersion) + "; no migration is available)");
    }
    for (auto key : {"config", "per_seed", "aggregate", "checksums"}) {
        if (!j.contains(key)) throw ValidationError(std::string("report: missing top-level key '") + key + "'");
    }
    const auto& checksums = j.at("checksums");
    json body = j;
    body.erase("checksums");
    if (detail::report_digest(body, checksums) != checksums.at("report").get<std::string>()) {
        throw ValidationError("report: checksum mismatch; the file was modified or corrupted");
    }
    RunReport r;
    r.config = run_config_from_json(j.at("config"));
    r.code_checksum = checksums.at("code").get<std::string>();
    r.data_checksum = checksums.at("data").get<std::string>();
    for (const auto& s : j.at("per_seed")) {
        SeedResult sr;
        sr.seed = s.at("seed").get<std::uint64_t>();
        sr.diverged = s.at("diverged").get<bool>();
        sr.note = s.at("note").get<std::string>();
        for (auto it = s.at("accuracy").begin(); it != s.at("accuracy").end(); ++it) {
            sr.accuracy[it.key()] = {it.value().at("dev").get<double>(), it.value().at("test").get<double>()};
        }
        for (const auto& a : s.at("alpha")) sr.alpha.push_back(detail::tensor_from_json(a));
        sr.language_embeddings = detail::tensor_from_json(s.at("language_embeddings"));
        sr.final_loss = s.at("final_loss").get<double>();
        r.per_seed.push_back(std::move(sr));
    }
    const auto& a = j.at("aggregate");
    r.languages = a.at("languages").get<std::vector<std::string>>();
    r.families = a.at("families").get<std::map<std::string, std::string>>();
    r.mean_test_accuracy = a.at("mean_test_accuracy").get<std::map<std::string, double>>();
    r.overall_test_accuracy = a.at("overall_test_accuracy").get<double>();
    r.alpha_scores = detail::tensor_from_json(a.at("alpha_scores"));
    r.structural_similarity = detail::similarity_from_json(a.at("structural_similarity"));
    const auto& c = a.at("correlations");
    for (const auto& v : c.at("structural_per_seed")) r.correlations.structural.push_back(detail::optional_from_json(v));
    for (const auto& v : c.at("embedding_per_seed")) r.correlations.embedding.push_back(detail::optional_from_json(v));
    r.correlations.structural_pooled = detail::optional_from_json(c.at("structural_pooled"));
    r.correlations.embedding_pooled = detail::optional_from_json(c.at("embedding_pooled"));
    r.comparison_to_baseline = a.at("comparison_to_baseline");
    r.wall_clock_seconds = a.at("wall_clock_seconds").get<double>();
    return r;
}

inline void persist(const RunReport& r, const std::filesystem::path& path) {
    write_atomically(path, to_json(r).dump(1) + "\n");
}

inline RunReport load_report(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ValidationError("report " + path.string() + " is not valid JSON: " + e.what());
    }
    return report_from_json(j);
}

/// Serialized report without the wall-clock field, for determinism checks.
inline std::string deterministic_fingerprint(const RunReport& r) {
    json j = detail::body_json(r);
    j["aggregate"].erase("wall_clock_seconds");
    j["checksums"] = {{"code", r.code_checksum}, {"data", r.data_checksum}};
    return j.dump();
}

// ---------------------------------------------------------------------------
// Training

namespace detail {

struct EncodedSentence {
    std::vector<std::size_t> tokens;
    std::vector<std::size_t> tags;
};

struct EncodedPair {
    EncodedSentence first, second;
    std::size_t label = 0;
};

inline net::Vocabulary corpus_vocabulary(const std::vector<synth::TaggedCorpus>& corpora) {
    std::vector<std::vector<std::string>> forms;
    for (const auto& c : corpora) {
        std::vector<std::string> seen;
        std::set<std::string> have;
        for (const auto& s : c.sentences)
            for (const auto& t : s.tokens)
                if (have.insert(t).second) seen.push_back(t);
        forms.push_back(std::move(seen));
    }
    return net::Vocabulary(std::move(forms));
}

inline EncodedSentence encode(const net::Vocabulary& v, std::size_t language, const synth::TaggedSentence& s) {
    EncodedSentence e;
    for (std::size_t i = 0; i < s.size(); ++i) {
        e.tokens.push_back(v.id(language, s.tokens[i]));
        e.tags.push_back(static_cast<std::size_t>(s.tags[i]));
    }
    return e;
}

inline std::vector<EncodedSentence> encode_all(const net::Vocabulary& v, std::size_t language,
                                               std::span<const synth::TaggedSentence> sentences) {
    std::vector<EncodedSentence> out;
    for (const auto& s : sentences) out.push_back(encode(v, language, s));
    return out;
}

/// Pairs whose second sentence is rendered in the same language.
inline std::vector<EncodedPair> encode_pairs(const net::Vocabulary& v, std::size_t language,
                                             const synth::TaggedCorpus& c, std::size_t n, std::uint64_t seed,
                                             std::span<const synth::TaggedSentence> source) {
    std::vector<EncodedPair> out;
    for (const auto& p : synth::classification_task(c, c, n, seed, source)) {
        out.push_back({encode(v, language, p.first), encode(v, language, p.second), p.same_clause ? 1u : 0u});
    }
    return out;
}

struct Step {
    std::size_t language;
    bool pair_task;
    std::vector<std::size_t> items;
};

inline double token_accuracy(net::SharingNetwork& model, std::size_t language,
                             const std::vector<EncodedSentence>& sentences) {
    if (sentences.empty()) return 0.0;
    net::Batch b;
    std::vector<std::size_t> gold;
    for (const auto& s : sentences) {
        b.add(s.tokens);
        gold.insert(gold.end(), s.tags.begin(), s.tags.end());
    }
    ad::Tape tape;
    const auto logits = model.forward(tape, b, language, net::TaskKind::tagging(synth::kTagCount)).logits.value();
    std::size_t correct = 0;
    const std::size_t k = logits.cols();
    for (std::size_t r = 0; r < gold.size(); ++r) {
        const auto row = logits.values().subspan(r * k, k);
        correct += static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()) == gold[r];
    }
    return static_cast<double>(correct) / static_cast<double>(gold.size());
}

inline net::Batch pair_batch(const std::vector<EncodedPair>& pairs, std::span<const std::size_t> items,
                             std::vector<std::size_t>& labels) {
    net::Batch b;
    labels.clear();
    for (auto i : items) {
        b.add(pairs[i].first.tokens);
        b.add(pairs[i].second.tokens);
        labels.push_back(pairs[i].label);
    }
    return b;
}

inline double pair_accuracy(net::SharingNetwork& model, std::size_t language, const std::vector<EncodedPair>& pairs) {
    if (pairs.empty()) return 0.0;
    std::vector<std::size_t> items(pairs.size()), labels;
    std::iota(items.begin(), items.end(), 0);
    auto b = pair_batch(pairs, items, labels);
    ad::Tape tape;
    const auto logits = model.forward(tape, b, language, net::TaskKind::classification()).logits.value();
    std::size_t correct = 0;
    for (std::size_t r = 0; r < labels.size(); ++r) correct += (logits.at(r, 1) > logits.at(r, 0)) == (labels[r] == 1);
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

} // namespace detail

/// Everything one seed's training produced, including the trained model.
struct TrainedSeed {
    SeedResult result;
    net::SharingNetwork model;
    heads::TypologyHeads heads;
    std::vector<TypologyFeature> features;
};

/// Trains and evaluates one seed. Deterministic in (config, dataset, seed).
inline TrainedSeed train_seed(const RunConfig& cfg, const Dataset& data, std::uint64_t seed,
                              const std::function<void(const std::string&)>& log = {}) {
    const auto langs = data.languages();
    const std::size_t l = langs.size();
    const auto vocab = detail::corpus_vocabulary(data.corpora);

    net::ModelConfig mc;
    mc.languages = l;
    mc.layers = cfg.model.layers;
    mc.hidden = cfg.model.hidden;
    mc.embedding = cfg.model.embedding;
    mc.language_embedding = cfg.model.language_embedding;
    mc.alpha_noise = cfg.model.alpha_noise;
    mc.tag_labels = synth::kTagCount;

    TrainedSeed out{{}, net::SharingNetwork(mc, vocab, langs, synth::mix_seed(seed, 2)), {}, {}};
    out.result.seed = seed;
    auto& model = out.model;
    const auto mode = cfg.condition.head_mode();
    if (mode.active()) {
        out.features = area_features(data, *cfg.condition.area);
        out.heads = heads::TypologyHeads(mc.hidden, out.features, synth::mix_seed(seed, 3));
    }
    const heads::TypologyLossWeight weight(cfg.condition.w_typ);
    const ad::OptimizerSettings opt{cfg.optimizer, cfg.learning_rate};

    std::vector<std::vector<detail::EncodedSentence>> train(l), dev(l), test(l);
    for (std::size_t i = 0; i < l; ++i) {
        train[i] = detail::encode_all(vocab, i, data.corpora[i].train());
        dev[i] = detail::encode_all(vocab, i, data.corpora[i].dev());
        test[i] = detail::encode_all(vocab, i, data.corpora[i].test());
    }

    const bool classify = cfg.task == Task::sentence_classification;
    std::size_t source = 0;
    std::vector<detail::EncodedPair> source_pairs;
    std::vector<std::vector<detail::EncodedPair>> dev_pairs(l), test_pairs(l);
    if (classify) {
        if (!data.corpora.front().sentences.front().clause) {
            throw ValidationError("sentence classification needs a generated suite (clause annotations)");
        }
        source = model.language_index(cfg.source_language);
        source_pairs = detail::encode_pairs(vocab, source, data.corpora[source], cfg.pairs_per_language,
                                            synth::mix_seed(cfg.suite.data_seed, 50), data.corpora[source].train());
        const std::size_t eval_pairs = std::max<std::size_t>(2, cfg.pairs_per_language / 4);
        for (std::size_t i = 0; i < l; ++i) {
            dev_pairs[i] = detail::encode_pairs(vocab, i, data.corpora[i], eval_pairs,
                                                synth::mix_seed(cfg.suite.data_seed, 60 + i), data.corpora[i].dev());
            test_pairs[i] = detail::encode_pairs(vocab, i, data.corpora[i], eval_pairs,
                                                 synth::mix_seed(cfg.suite.data_seed, 160 + i), data.corpora[i].test());
        }
    }

    auto tag_task = net::TaskKind::tagging(synth::kTagCount);
    auto pair_task = net::TaskKind::classification();
    std::vector<ad::Parameter*> tag_params = model.parameters(tag_task), pair_params = model.parameters(pair_task);
    for (auto* p : out.heads.parameters()) {
        tag_params.push_back(p);
        pair_params.push_back(p);
    }

    std::mt19937_64 rng(synth::mix_seed(seed, 4));
    double last_loss = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Round-robin over languages, one monolingual batch per turn.
        std::vector<std::vector<detail::Step>> queues(l + 1);
        auto chunk = [&](std::size_t n, std::size_t language, bool pair) {
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            std::vector<detail::Step> steps;
            for (std::size_t s = 0; s < n; s += cfg.batch_size) {
                steps.push_back({language, pair,
                                 {order.begin() + static_cast<std::ptrdiff_t>(s),
                                  order.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + cfg.batch_size))}});
            }
            return steps;
        };
        for (std::size_t i = 0; i < l; ++i) queues[i] = chunk(train[i].size(), i, false);
        if (classify) queues[l] = chunk(source_pairs.size(), source, true);
        std::size_t longest = 0;
        for (const auto& q : queues) longest = std::max(longest, q.size());

        double epoch_loss = 0;
        std::size_t steps = 0;
        for (std::size_t b = 0; b < longest; ++b) {
            for (const auto& q : queues) {
                if (b >= q.size()) continue;
                const auto& step = q[b];
                ad::Tape tape;
                net::Batch batch;
                std::vector<std::size_t> targets;
                if (step.pair_task) {
                    batch = detail::pair_batch(source_pairs, step.items, targets);
                } else {
                    for (auto i : step.items) {
                        batch.add(train[step.language][i].tokens);
                        const auto& tags = train[step.language][i].tags;
                        targets.insert(targets.end(), tags.begin(), tags.end());
                    }
                }
                auto outp = model.forward(tape, batch, step.language, step.pair_task ? pair_task : tag_task);
                auto loss = ad::cross_entropy(outp.logits, targets);
                if (mode.active()) {
                    auto typ = out.heads.typology_loss(outp.pooled, langs[step.language], data.profiles, out.features,
                                                       mode);
                    loss = heads::combined_loss(loss, typ, weight);
                }
                const double value = loss.value().item();
                if (!std::isfinite(value)) {
                    out.result.diverged = true;
                    out.result.note = "non-finite loss in epoch " + std::to_string(epoch + 1);
                    if (log) log("seed " + std::to_string(seed) + ": " + out.result.note);
                    return out;
                }
                tape.backward(loss);
                ad::optimizer_step(step.pair_task ? pair_params : tag_params, opt);
                epoch_loss += value;
                ++steps;
            }
        }
        last_loss = epoch_loss / static_cast<double>(std::max<std::size_t>(1, steps));
        if (log) log("seed " + std::to_string(seed) + " epoch " + std::to_string(epoch + 1) + " loss " + std::to_string(last_loss));
    }

    for (std::size_t i = 0; i < l; ++i) {
        Accuracy a;
        if (classify) {
            a.dev = detail::pair_accuracy(model, i, dev_pairs[i]);
            a.test = detail::pair_accuracy(model, i, test_pairs[i]);
        } else {
            a.dev = detail::token_accuracy(model, i, dev[i]);
            a.test = detail::token_accuracy(model, i, test[i]);
        }
        out.result.accuracy[langs[i]] = a;
    }
    out.result.alpha = model.alpha_snapshot();
    out.result.language_embeddings = model.language_embeddings();
    out.result.final_loss = last_loss;
    return out;
}

inline std::optional<double> safe_correlation(const ad::Tensor& a, const ad::Tensor& s) {
    try {
        return sim::correlate_alpha(a, s);
    } catch (const sim::UndefinedCorrelation&) {
        return std::nullopt;
    }
}

inline std::optional<double> mean_of(const std::vector<std::optional<double>>& v) {
    double sum = 0;
    for (const auto& x : v) {
        if (!x) return std::nullopt;
        sum += *x;
    }
    if (v.empty()) return std::nullopt;
    return sum / static_cast<double>(v.size());
}

/// Fills the aggregate fields from per_seed results.
inline void aggregate(RunReport& r) {
    const std::size_t l = r.languages.size();
    r.mean_test_accuracy.clear();
    r.alpha_scores = ad::Tensor::zeros({l, l});
    r.correlations = {};
    std::size_t converged = 0;
    for (const auto& s : r.per_seed) {
        if (s.diverged) continue;
        ++converged;
        for (const auto& lang : r.languages) r.mean_test_accuracy[lang] += s.accuracy.at(lang).test;
        const auto scores = net::symmetrized_alpha(s.alpha);
        for (std::size_t k = 0; k < scores.size(); ++k) r.alpha_scores[k] += scores[k];
        r.correlations.structural.push_back(safe_correlation(scores, r.structural_similarity.values));
        const auto emb = sim::embedding_similarity(r.languages, s.language_embeddings);
        r.correlations.embedding.push_back(safe_correlation(scores, emb.values));
    }
    r.overall_test_accuracy = 0;
    if (converged > 0) {
        for (auto& [lang, v] : r.mean_test_accuracy) {
            v /= static_cast<double>(converged);
            r.overall_test_accuracy += v / static_cast<double>(l);
        }
        for (auto& v : r.alpha_scores.values()) v /= static_cast<double>(converged);
    }
    r.correlations.structural_pooled = mean_of(r.correlations.structural);
    r.correlations.embedding_pooled = mean_of(r.correlations.embedding);
}

/// Trains every seed of `cfg` and aggregates. Divergent seeds are recorded
/// and skipped; check `failed()` for the majority-divergence rule.
inline RunReport run_condition(const RunConfig& cfg, const Dataset& data,
                               const std::function<void(const std::string&)>& log = {}) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    RunReport r;
    r.config = cfg;
    r.languages = data.languages();
    if (r.languages.size() < 3) throw ValidationError("run_condition: needs at least 3 languages");
    r.families = data.families();
    r.data_checksum = data.checksum;
    const auto vectors = sim::structural_vectors(data.corpora);
    r.structural_similarity = sim::similarity_from_vectors(vectors);
    for (auto seed : cfg.seeds) r.per_seed.push_back(train_seed(cfg, data, seed, log).result);
    aggregate(r);
    r.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline RunReport run_condition(const RunConfig& cfg, const std::function<void(const std::string&)>& log = {}) {
    return run_condition(cfg, make_dataset(cfg.suite), log);
}

// ---------------------------------------------------------------------------
// Comparison

struct LanguageComparison {
    std::string language;
    double mean_a = 0;
    double mean_b = 0;
    std::optional<double> p_worse;  ///< one-tailed p for mean(b) < mean(a)
    std::optional<double> p_better; ///< one-tailed p for mean(b) > mean(a)
    std::string verdict;            ///< "+", "−" or "·" for b relative to a
};

struct ComparisonResult {
    std::vector<LanguageComparison> languages;
    LanguageComparison pooled; ///< over per-seed macro averages
    double threshold = 0.01;
};

namespace detail {

inline LanguageComparison compare_samples(std::string name, std::span<const double> a, std::span<const double> b,
                                          double threshold) {
    LanguageComparison c;
    c.language = std::move(name);
    c.mean_a = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    c.mean_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
    try {
        c.p_worse = sim::one_tailed_t_test(a, b, sim::Tail::less);
        c.p_better = sim::one_tailed_t_test(a, b, sim::Tail::greater);
    } catch (const ValidationError&) {
        // no spread in either sample: no test is possible
    }
    c.verdict = "·";
    if (c.p_worse && *c.p_worse < threshold) c.verdict = "−";
    if (c.p_better && *c.p_better < threshold) c.verdict = "+";
    return c;
}

} // namespace detail

/// Significance of `b` relative to `a` at `threshold`.
inline ComparisonResult compare(const RunReport& a, const RunReport& b, double threshold) {
    if (a.languages != b.languages) throw ValidationError("compare: reports cover different language sets");
    if (a.per_seed.size() != b.per_seed.size()) throw ValidationError("compare: reports have different seed counts");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("compare: threshold must lie in (0, 1)");
    ComparisonResult out;
    out.threshold = threshold;
    for (const auto& l : a.languages) {
        out.languages.push_back(
            detail::compare_samples(l, a.language_accuracies(l), b.language_accuracies(l), out.threshold));
    }
    out.pooled = detail::compare_samples("pooled", a.seed_means(), b.seed_means(), out.threshold);
    return out;
}

/// Uses the threshold of `a`'s config.
inline ComparisonResult compare(const RunReport& a, const RunReport& b) { return compare(a, b, a.config.threshold); }

inline json to_json(const ComparisonResult& c) {
    auto row = [](const LanguageComparison& l) {
        return json{{"language", l.language},
                    {"mean_a", l.mean_a},
                    {"mean_b", l.mean_b},
                    {"p_worse", detail::optional_json(l.p_worse)},
                    {"p_better", detail::optional_json(l.p_better)},
                    {"verdict", l.verdict}};
    };
    json langs = json::array();
    for (const auto& l : c.languages) langs.push_back(row(l));
    return {{"threshold", c.threshold}, {"languages", langs}, {"pooled", row(c.pooled)}};
}

inline std::string comparison_csv(const ComparisonResult& c) {
    std::ostringstream out;
    out.precision(10);
    out << "language,mean_a,mean_b,p_worse,p_better,verdict\n";
    auto opt = [](const std::optional<double>& v) {
        std::ostringstream s;
        s.precision(10);
        if (v) s << *v;
        return s.str();
    };
    for (const auto* row : [&] {
             std::vector<const LanguageComparison*> rows;
             for (const auto& l : c.languages) rows.push_back(&l);
             rows.push_back(&c.pooled);
             return rows;
         }()) {
        out << row->language << ',' << row->mean_a << ',' << row->mean_b << ',' << opt(row->p_worse) << ','
            << opt(row->p_better) << ',' << row->verdict << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Correlation and family tables

struct CorrelationTable {
    std::vector<std::string> rows;                     ///< "seed <n>" ..., then "pooled"
    std::vector<std::optional<double>> structural;
    std::vector<std::optional<double>> embedding;
};

inline CorrelationTable correlate(const RunReport& r) {
    if (r.languages.size() < 3) throw ValidationError("correlate: needs at least 3 languages");
    CorrelationTable t;
    std::size_t k = 0;
    for (const auto& s : r.per_seed) {
        if (s.diverged) continue;
        t.rows.push_back("seed " + std::to_string(s.seed));
        t.structural.push_back(r.correlations.structural.at(k));
        t.embedding.push_back(r.correlations.embedding.at(k));
        ++k;
    }
    t.rows.push_back("pooled");
    t.structural.push_back(r.correlations.structural_pooled);
    t.embedding.push_back(r.correlations.embedding_pooled);
    return t;
}

inline std::string correlation_csv(const CorrelationTable& t, const std::string& condition) {
    std::ostringstream out;
    out.precision(10);
    out << "condition,row,structural,embedding\n";
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        out << condition << ',' << t.rows[i] << ',';
        if (t.structural[i]) out << *t.structural[i];
        out << ',';
        if (t.embedding[i]) out << *t.embedding[i];
        out << '\n';
    }
    return out.str();
}

struct FamilyTable {
    std::vector<std::string> conditions;
    std::vector<std::string> families;
    std::vector<std::vector<double>> mean_accuracy; ///< [family][condition]
};

inline FamilyTable family_breakdown(std::span<const RunReport> reports) {
    if (reports.empty()) throw ValidationError("family_breakdown: no reports");
    FamilyTable t;
    const auto& langs = reports.front().languages;
    std::map<std::string, std::vector<std::string>> members;
    for (const auto& l : langs) {
        auto it = reports.front().families.find(l);
        if (it == reports.front().families.end() || it->second.empty()) {
            throw ValidationError("family_breakdown: no family for language '" + l + "'");
        }
        members[it->second].push_back(l);
    }
    for (const auto& [f, _] : members) t.families.push_back(f);
    for (const auto& r : reports) {
        if (r.languages != langs) throw ValidationError("family_breakdown: reports cover different language sets");
        t.conditions.push_back(r.config.condition.label());
    }
    for (const auto& f : t.families) {
        std::vector<double> row;
        for (const auto& r : reports) {
            double sum = 0;
            for (const auto& l : members[f]) sum += r.mean_test_accuracy.at(l);
            row.push_back(sum / static_cast<double>(members[f].size()));
        }
        t.mean_accuracy.push_back(std::move(row));
    }
    return t;
}

inline std::string family_csv(const FamilyTable& t) {
    std::ostringstream out;
    out.precision(10);
    out << "family";
    for (const auto& c : t.conditions) out << ',' << c;
    out << '\n';
    for (std::size_t f = 0; f < t.families.size(); ++f) {
        out << t.families[f];
        for (double v : t.mean_accuracy[f]) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

inline json family_plot_json(const FamilyTable& t) {
    json series = json::array();
    for (std::size_t c = 0; c < t.conditions.size(); ++c) {
        json points = json::array();
        for (std::size_t f = 0; f < t.families.size(); ++f)
            points.push_back({{"family", t.families[f]}, {"accuracy", t.mean_accuracy[f][c]}});
        series.push_back({{"condition", t.conditions[c]}, {"points", points}});
    }
    return {{"kind", "grouped_bar"}, {"x", "family"}, {"y", "accuracy"}, {"series", series}};
}

// ---------------------------------------------------------------------------
// Full grid

/// Runs the nine-condition grid over `base` (its condition is ignored) and
/// fills each non-baseline report's comparison against the baseline.
inline std::vector<RunReport> run_grid(const RunConfig& base, const std::function<void(const std::string&)>& log = {}) {
    const auto data = make_dataset(base.suite);
    std::vector<RunReport> out;
    for (const auto& c : condition_grid(base.condition.lambda, base.condition.w_typ)) {
        auto cfg = base;
        cfg.condition = c;
        if (log) log("condition " + c.label());
        out.push_back(run_condition(cfg, data, log));
    }
    for (std::size_t i = 1; i < out.size(); ++i) out[i].comparison_to_baseline = to_json(compare(out[0], out[i]));
    return out;
}

} // namespace typoblind::harness
