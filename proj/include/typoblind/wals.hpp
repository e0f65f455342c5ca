#pragma once

// WALS-style feature tables: CSV parsing, feature selection per area, and
// the bridge from synthetic grammars to the same schema.

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "typoblind/errors.hpp"
#include "typoblind/synth_lang.hpp"
#include "typoblind/typology_types.hpp"

namespace typoblind::wals {

struct WalsRecord {
    std::string language;
    std::string feature_id;
    std::string feature_name;
    std::size_t value_index = 0;
    std::string value_name;
    FeatureArea area = FeatureArea::word_order;

    friend bool operator==(const WalsRecord&, const WalsRecord&) = default;
};

/// Raised when no feature of an area survives the coverage filter.
class EmptySelectionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// The 40 languages of the cross-lingual benchmark, ISO 639-1.
inline constexpr std::array<std::string_view, 40> kBenchmarkLanguages{
    "af", "ar", "bg", "bn", "de", "el", "en", "es", "et", "eu", "fa", "fi", "fr", "he",
    "hi", "hu", "id", "it", "ja", "jv", "ka", "kk", "ko", "ml", "mr", "ms", "my", "nl",
    "pt", "ru", "sw", "ta", "te", "th", "tl", "tr", "ur", "vi", "yo", "zh"};

inline std::vector<std::string> benchmark_languages() {
    return {kBenchmarkLanguages.begin(), kBenchmarkLanguages.end()};
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

/// Splits one CSV record. Handles quoted fields with doubled quotes; a quoted
/// field may not span lines.
inline std::optional<std::vector<std::string>> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            if (!cur.empty() || was_quoted) return std::nullopt;
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else {
            if (was_quoted) return std::nullopt;
            cur.push_back(c);
        }
    }
    if (quoted) return std::nullopt;
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

} // namespace detail

inline constexpr std::array<std::string_view, 6> kCsvColumns{"language",   "feature_id", "feature_name",
                                                             "value_index", "value_name", "area"};

/// Parses a WALS CSV. Any malformed row aborts the parse; the error lists
/// every offending line number.
inline std::vector<WalsRecord> parse_wals_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("WALS CSV: missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    auto header = detail::split_csv_line(line);
    if (!header) throw ValidationError("WALS CSV: malformed header row");
    std::array<std::size_t, kCsvColumns.size()> col{};
    for (std::size_t k = 0; k < kCsvColumns.size(); ++k) {
        auto it = std::find(header->begin(), header->end(), kCsvColumns[k]);
        if (it == header->end()) throw ValidationError("WALS CSV: missing column '" + std::string(kCsvColumns[k]) + "'");
        col[k] = static_cast<std::size_t>(it - header->begin());
    }

    std::vector<WalsRecord> records;
    std::vector<std::string> problems;
    std::set<std::pair<std::string, std::string>> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (!fields || fields->size() != header->size()) {
            problems.push_back("line " + std::to_string(lineno) + ": wrong field count or bad quoting");
            continue;
        }
        const auto& f = *fields;
        WalsRecord r;
        r.language = f[col[0]];
        r.feature_id = f[col[1]];
        r.feature_name = f[col[2]];
        r.value_name = f[col[4]];
        try {
            std::size_t used = 0;
            r.value_index = std::stoul(f[col[3]], &used);
            if (used != f[col[3]].size()) throw std::invalid_argument("trailing");
            r.area = parse_area(f[col[5]]);
        } catch (const std::exception&) {
            problems.push_back("line " + std::to_string(lineno) + ": bad value_index or area");
            continue;
        }
        if (r.language.empty() || r.feature_id.empty() || r.value_name.empty()) {
            problems.push_back("line " + std::to_string(lineno) + ": empty language, feature or value");
            continue;
        }
        if (!seen.emplace(r.language, r.feature_id).second) {
            problems.push_back("line " + std::to_string(lineno) + ": duplicate (" + r.language + ", " + r.feature_id +
                               ")");
            continue;
        }
        records.push_back(std::move(r));
    }
    if (!problems.empty()) {
        std::string msg = "WALS CSV rejected:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ValidationError(msg);
    }
    return records;
}

inline std::vector<WalsRecord> parse_wals_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open WALS CSV " + path.string());
    return parse_wals_csv(in);
}

inline void write_wals_csv(std::ostream& out, std::span<const WalsRecord> records) {
    for (std::size_t k = 0; k < kCsvColumns.size(); ++k) out << (k ? "," : "") << kCsvColumns[k];
    out << '\n';
    for (const auto& r : records) {
        out << detail::csv_field(r.language) << ',' << detail::csv_field(r.feature_id) << ','
            << detail::csv_field(r.feature_name) << ',' << r.value_index << ',' << detail::csv_field(r.value_name)
            << ',' << to_string(r.area) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Selection

inline constexpr std::string_view kFamilyFeature = "family";

/// Single categorical family feature over `languages`; values are the
/// occurring families in sorted order. Isolates are ordinary singleton values.
inline FeatureSet genealogy_feature(const std::map<std::string, std::string>& family_of,
                                    std::span<const std::string> languages) {
    if (languages.empty()) throw ValidationError("genealogy_feature: empty language set");
    std::set<std::string> families;
    for (const auto& l : languages) {
        auto it = family_of.find(l);
        if (it == family_of.end() || it->second.empty()) {
            throw ValidationError("genealogy_feature: no family recorded for language '" + l + "'");
        }
        families.insert(it->second);
    }
    TypologyFeature f{std::string(kFamilyFeature), "Language family", FeatureArea::genealogy,
                      {families.begin(), families.end()}};
    FeatureSet set;
    for (const auto& l : languages) set.profiles.push_back({l, {{f.id, *f.value_index(family_of.at(l))}}});
    set.features.push_back(std::move(f));
    return set;
}

inline FeatureSet genealogy_feature(std::span<const WalsRecord> records, std::span<const std::string> languages) {
    std::map<std::string, std::string> family_of;
    for (const auto& r : records)
        if (r.feature_id == kFamilyFeature) family_of[r.language] = r.value_name;
    return genealogy_feature(family_of, languages);
}

/// Features of `area` annotated for every language in `languages`, each value
/// set reduced to the values that occur among them. Value order follows the
/// source value index.
inline FeatureSet select_features(std::span<const WalsRecord> records, std::span<const std::string> languages,
                                  FeatureArea area) {
    if (languages.empty()) throw ValidationError("select_features: empty language set");
    if (area == FeatureArea::genealogy) return genealogy_feature(records, languages);

    const std::set<std::string> wanted(languages.begin(), languages.end());
    struct Acc {
        std::string name;
        std::map<std::string, std::pair<std::size_t, std::string>> by_language;
    };
    std::map<std::string, Acc> features; // ordered by id for stable output
    for (const auto& r : records) {
        if (r.area != area || !wanted.count(r.language)) continue;
        auto& acc = features[r.feature_id];
        acc.name = r.feature_name;
        acc.by_language[r.language] = {r.value_index, r.value_name};
    }

    FeatureSet set;
    for (const auto& l : languages) set.profiles.push_back({l, {}});
    for (const auto& [id, acc] : features) {
        if (acc.by_language.size() != wanted.size()) continue;
        std::map<std::size_t, std::string> occurring;
        for (const auto& [lang, v] : acc.by_language) occurring[v.first] = v.second;
        TypologyFeature f{id, acc.name, area, {}};
        std::map<std::size_t, std::size_t> reindex;
        for (const auto& [idx, name] : occurring) {
            reindex[idx] = f.values.size();
            f.values.push_back(name);
        }
        f.validate();
        for (auto& p : set.profiles) p.values[id] = reindex.at(acc.by_language.at(p.language).first);
        set.features.push_back(std::move(f));
    }
    if (set.features.empty()) {
        throw EmptySelectionError("select_features: no " + std::string(to_string(area)) +
                                  " feature is annotated for all " + std::to_string(wanted.size()) + " languages");
    }
    return set;
}

/// Records equivalent to a selection, with value indices renumbered to the
/// reduced value sets.
inline std::vector<WalsRecord> to_records(const FeatureSet& set) {
    std::vector<WalsRecord> out;
    for (const auto& p : set.profiles)
        for (const auto& f : set.features) {
            auto it = p.values.find(f.id);
            if (it == p.values.end()) continue;
            out.push_back({p.language, f.id, f.name, it->second, f.values.at(it->second), f.area});
        }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic grammars in the WALS schema

namespace detail {
struct SyntheticFeatureDef {
    std::string_view id;
    std::string_view name;
    FeatureArea area;
};
inline constexpr std::array<SyntheticFeatureDef, 5> kSyntheticFeatures{{
    {"81A", "Order of Subject, Object and Verb", FeatureArea::word_order},
    {"85A", "Order of Adposition and Noun Phrase", FeatureArea::word_order},
    {"87A", "Order of Adjective and Noun", FeatureArea::word_order},
    {"26A", "Prefixing vs. Suffixing in Inflectional Morphology", FeatureArea::morphology},
    {"1A", "Inert control (no surface realization)", FeatureArea::phonology},
}};
} // namespace detail

/// Full value sets of the synthetic analog features, in source index order.
inline std::vector<TypologyFeature> synthetic_feature_inventory(std::span<const synth::SyntheticGrammar> grammars) {
    std::vector<TypologyFeature> out;
    for (const auto& d : detail::kSyntheticFeatures) {
        TypologyFeature f{std::string(d.id), std::string(d.name), d.area, {}};
        if (d.id == "81A") {
            for (auto w : synth::kWordOrders) f.values.emplace_back(synth::to_string(w));
        } else if (d.id == "85A") {
            f.values = {"Prepositions", "Postpositions"};
        } else if (d.id == "87A") {
            f.values = {"Adjective-Noun", "Noun-Adjective"};
        } else if (d.id == "26A") {
            f.values = {"prefixing", "suffixing"};
        } else {
            f.values = {"a", "b", "c"};
        }
        out.push_back(std::move(f));
    }
    std::set<std::string> families;
    for (const auto& g : grammars) families.insert(g.family);
    out.push_back({std::string(kFamilyFeature), "Language family", FeatureArea::genealogy,
                   {families.begin(), families.end()}});
    return out;
}

inline std::string synthetic_value(const synth::SyntheticGrammar& g, std::string_view feature_id) {
    if (feature_id == "81A") return std::string(synth::to_string(g.word_order));
    if (feature_id == "85A") return g.adposition_order == synth::AdpositionOrder::pre ? "Prepositions" : "Postpositions";
    if (feature_id == "87A") return g.adjective_before_noun() ? "Adjective-Noun" : "Noun-Adjective";
    if (feature_id == "26A") return std::string(synth::to_string(g.affixing));
    if (feature_id == "1A") return std::string(synth::to_string(g.inert));
    if (feature_id == kFamilyFeature) return g.family;
    throw ValidationError("no synthetic analog for feature " + std::string(feature_id));
}

/// WALS-schema records for a set of grammars (every feature covered).
inline std::vector<WalsRecord> synthetic_records(std::span<const synth::SyntheticGrammar> grammars) {
    const auto inventory = synthetic_feature_inventory(grammars);
    std::vector<WalsRecord> out;
    for (const auto& g : grammars)
        for (const auto& f : inventory) {
            const auto v = synthetic_value(g, f.id);
            out.push_back({g.language, f.id, f.name, *f.value_index(v), v, f.area});
        }
    return out;
}

/// Profiles over the full synthetic inventory, one per grammar.
inline FeatureSet synthetic_profiles(std::span<const synth::SyntheticGrammar> grammars) {
    FeatureSet set;
    set.features = synthetic_feature_inventory(grammars);
    for (const auto& g : grammars) {
        LanguageProfile p{g.language, {}};
        for (const auto& f : set.features) p.values[f.id] = *f.value_index(synthetic_value(g, f.id));
        set.profiles.push_back(std::move(p));
    }
    return set;
}

} // namespace typoblind::wals
