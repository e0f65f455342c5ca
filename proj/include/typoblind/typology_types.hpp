#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "typoblind/errors.hpp"

namespace typoblind {

enum class FeatureArea { word_order, morphology, phonology, genealogy };

inline constexpr std::string_view to_string(FeatureArea area) {
    switch (area) {
    case FeatureArea::word_order: return "word_order";
    case FeatureArea::morphology: return "morphology";
    case FeatureArea::phonology: return "phonology";
    case FeatureArea::genealogy: return "genealogy";
    }
    return "?";
}

inline FeatureArea parse_area(std::string_view s) {
    if (s == "word_order") return FeatureArea::word_order;
    if (s == "morphology") return FeatureArea::morphology;
    if (s == "phonology") return FeatureArea::phonology;
    if (s == "genealogy") return FeatureArea::genealogy;
    throw ValidationError("unknown feature area '" + std::string(s) + "'");
}

inline constexpr FeatureArea kAllAreas[] = {FeatureArea::word_order, FeatureArea::morphology, FeatureArea::phonology,
                                            FeatureArea::genealogy};

/// A categorical typological feature with its ordered value set.
struct TypologyFeature {
    std::string id;
    std::string name;
    FeatureArea area = FeatureArea::word_order;
    std::vector<std::string> values;

    std::optional<std::size_t> value_index(std::string_view v) const {
        auto it = std::find(values.begin(), values.end(), v);
        if (it == values.end()) return std::nullopt;
        return static_cast<std::size_t>(it - values.begin());
    }

    void validate() const {
        if (values.empty()) throw ValidationError("feature " + id + " has an empty value set");
        auto sorted = values;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw ValidationError("feature " + id + " has duplicate values");
        }
    }

    friend bool operator==(const TypologyFeature&, const TypologyFeature&) = default;
};

/// One language's assignment: feature id -> index into TypologyFeature::values.
struct LanguageProfile {
    std::string language;
    std::map<std::string, std::size_t> values;

    friend bool operator==(const LanguageProfile&, const LanguageProfile&) = default;
};

/// Features of one selection together with the profiles of every language.
struct FeatureSet {
    std::vector<TypologyFeature> features;
    std::vector<LanguageProfile> profiles;

    const LanguageProfile& profile(std::string_view language) const {
        for (const auto& p : profiles)
            if (p.language == language) return p;
        throw ValidationError("no typology profile for language '" + std::string(language) + "'");
    }

    /// Value index of `feature` for `language`, with a diagnostic on absence.
    std::size_t target(std::string_view language, const TypologyFeature& feature) const {
        const auto& p = profile(language);
        auto it = p.values.find(feature.id);
        if (it == p.values.end()) {
            throw ValidationError("profile of language '" + std::string(language) + "' has no value for feature " +
                                  feature.id);
        }
        if (it->second >= feature.values.size()) {
            throw ValidationError("profile of language '" + std::string(language) + "' has out-of-range value for " +
                                  feature.id);
        }
        return it->second;
    }

    friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

// Feature-set manifest JSON, shared by the ingest step and checkpoints.
inline nlohmann::json manifest_to_json(const FeatureSet& set) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& f : set.features) {
        features.push_back({{"id", f.id}, {"name", f.name}, {"area", to_string(f.area)}, {"values", f.values}});
    }
    nlohmann::json assignments = nlohmann::json::object();
    for (const auto& p : set.profiles) {
        nlohmann::json row = nlohmann::json::object();
        for (const auto& f : set.features) {
            auto it = p.values.find(f.id);
            if (it != p.values.end()) row[f.id] = f.values.at(it->second);
        }
        assignments[p.language] = row;
    }
    nlohmann::json languages = nlohmann::json::array();
    for (const auto& p : set.profiles) languages.push_back(p.language);
    return {{"schema_version", 1}, {"languages", languages}, {"features", features}, {"assignments", assignments}};
}

inline FeatureSet manifest_from_json(const nlohmann::json& j) {
    if (j.value("schema_version", 0) != 1) throw ValidationError("unsupported feature manifest schema_version");
    FeatureSet set;
    for (const auto& f : j.at("features")) {
        TypologyFeature feat{f.at("id").get<std::string>(), f.at("name").get<std::string>(),
                             parse_area(f.at("area").get<std::string>()),
                             f.at("values").get<std::vector<std::string>>()};
        feat.validate();
        set.features.push_back(std::move(feat));
    }
    for (const auto& lang : j.at("languages")) {
        LanguageProfile p{lang.get<std::string>(), {}};
        const auto& row = j.at("assignments").at(p.language);
        for (const auto& f : set.features) {
            if (!row.contains(f.id)) continue;
            auto idx = f.value_index(row.at(f.id).get<std::string>());
            if (!idx) throw ValidationError("manifest assigns unknown value to " + f.id + " for " + p.language);
            p.values[f.id] = *idx;
        }
        set.profiles.push_back(std::move(p));
    }
    return set;
}

} // namespace typoblind
