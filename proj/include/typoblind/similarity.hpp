#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "typoblind/autodiff.hpp"
#include "typoblind/errors.hpp"
#include "typoblind/synth_lang.hpp"

namespace typoblind::sim {

/// Raised when a correlation has no defined value (zero variance).
class UndefinedCorrelation : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// ---------------------------------------------------------------------------
// Structural vectors

inline constexpr std::string_view kStatisticsVersion = "structural-stats-v1";

/// Each statistic is the fraction of dependents of one relation that sit on
/// the named side of their head. subject_before_object instead
/// compares the two arguments of each clause.
inline constexpr std::array<std::string_view, 7> kStatistics{
    "verb_before_object",    "subject_before_verb",   "subject_before_object", "adposition_before_noun",
    "affix_before_stem",     "adjective_before_noun", "nmod_before_head"};

namespace detail {
struct Statistic {
    synth::Relation relation;
    bool dependent_first;
};
inline constexpr std::array<Statistic, 7> kStatisticDefs{{{synth::Relation::obj, false},
                                                          {synth::Relation::nsubj, true},
                                                          {synth::Relation::root, true}, // unused slot
                                                          {synth::Relation::case_marker, true},
                                                          {synth::Relation::aff, true},
                                                          {synth::Relation::amod, true},
                                                          {synth::Relation::nmod, true}}};
inline constexpr std::size_t kArgumentOrder = 2;
} // namespace detail

struct StructuralVector {
    std::string language;
    std::vector<double> values; ///< ordered as kStatistics; 0.5 when a relation never occurs
};

inline StructuralVector structural_vector(std::string language, std::span<const synth::TaggedSentence> corpus) {
    using synth::Relation;
    if (corpus.empty()) throw ValidationError("structural_vector: empty corpus for language '" + language + "'");
    std::array<double, kStatistics.size()> hits{}, total{};
    for (const auto& s : corpus) {
        if (s.relations.empty()) {
            throw ValidationError("structural_vector: language '" + language + "' lacks dependency annotations");
        }
        int subj = -1, obj = -1;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto r = s.relations[i];
            if (r == Relation::nsubj) subj = static_cast<int>(i);
            if (r == Relation::obj) obj = static_cast<int>(i);
            const bool dependent_first = s.heads[i] > static_cast<int>(i);
            for (std::size_t k = 0; k < kStatistics.size(); ++k) {
                if (k == detail::kArgumentOrder || detail::kStatisticDefs[k].relation != r) continue;
                ++total[k];
                hits[k] += dependent_first == detail::kStatisticDefs[k].dependent_first;
            }
        }
        if (subj >= 0 && obj >= 0) {
            ++total[detail::kArgumentOrder];
            hits[detail::kArgumentOrder] += subj < obj;
        }
    }
    StructuralVector v{std::move(language), {}};
    for (std::size_t k = 0; k < kStatistics.size(); ++k) v.values.push_back(total[k] > 0 ? hits[k] / total[k] : 0.5);
    return v;
}

inline std::vector<StructuralVector> structural_vectors(std::span<const synth::TaggedCorpus> corpora) {
    std::vector<StructuralVector> out;
    for (const auto& c : corpora) out.push_back(structural_vector(c.grammar.language, c.sentences));
    return out;
}

// ---------------------------------------------------------------------------
// Similarity matrices

struct SimilarityMatrix {
    std::vector<std::string> languages;
    ad::Tensor values; ///< l×l, symmetric, unit diagonal
    std::vector<std::string> warnings;

    double operator()(std::size_t i, std::size_t j) const { return values.at(i, j); }
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline SimilarityMatrix cosine_matrix(std::vector<std::string> languages, std::vector<std::vector<double>> rows,
                                      std::string_view what) {
    const std::size_t l = rows.size();
    if (l < 2) throw ValidationError(std::string(what) + ": needs at least two languages");
    SimilarityMatrix m{std::move(languages), ad::Tensor::zeros({l, l}), {}};
    std::vector<double> norm(l);
    for (std::size_t i = 0; i < l; ++i) {
        if (rows[i].size() != rows[0].size()) throw ShapeError(std::string(what) + ": vectors differ in length");
        norm[i] = std::sqrt(dot(rows[i], rows[i]));
        if (norm[i] == 0.0) {
            m.warnings.push_back(std::string(what) + ": language '" + m.languages[i] +
                                 "' has a degenerate vector; its similarities are set to 0");
        }
    }
    for (std::size_t i = 0; i < l; ++i) {
        m.values.at(i, i) = 1.0;
        for (std::size_t j = i + 1; j < l; ++j) {
            const double s = norm[i] == 0.0 || norm[j] == 0.0 ? 0.0 : dot(rows[i], rows[j]) / (norm[i] * norm[j]);
            m.values.at(i, j) = m.values.at(j, i) = s;
        }
    }
    return m;
}

} // namespace detail

/// Cosine similarity of mean-centered vectors.
inline SimilarityMatrix similarity_from_vectors(std::span<const StructuralVector> vectors) {
    std::vector<std::string> langs;
    std::vector<std::vector<double>> rows;
    for (const auto& v : vectors) {
        langs.push_back(v.language);
        auto row = v.values;
        if (row.empty()) throw ValidationError("similarity_from_vectors: empty vector for '" + v.language + "'");
        const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
        for (auto& x : row) x -= mean;
        rows.push_back(std::move(row));
    }
    return detail::cosine_matrix(std::move(langs), std::move(rows), "similarity_from_vectors");
}

/// Cosine similarity of the rows of a language-embedding table.
inline SimilarityMatrix embedding_similarity(std::vector<std::string> languages, const ad::Tensor& embeddings) {
    if (embeddings.rank() != 2 || embeddings.rows() != languages.size()) {
        throw ShapeError("embedding_similarity: embedding table does not match the language list");
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < embeddings.rows(); ++i) {
        const auto v = embeddings.values().subspan(i * embeddings.cols(), embeddings.cols());
        rows.emplace_back(v.begin(), v.end());
    }
    return detail::cosine_matrix(std::move(languages), std::move(rows), "embedding_similarity");
}

inline void write_matrix_csv(std::ostream& out, const SimilarityMatrix& m) {
    out << "language";
    for (const auto& l : m.languages) out << ',' << l;
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < m.languages.size(); ++i) {
        out << m.languages[i];
        for (std::size_t j = 0; j < m.languages.size(); ++j) out << ',' << m(i, j);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Statistics

/// Sample Pearson correlation.
inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeError("pearson: inputs differ in length");
    if (x.size() < 3) throw ValidationError("pearson: needs at least 3 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("pearson: correlation undefined for zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Strict upper triangle, row-major.
inline std::vector<double> upper_triangle(const ad::Tensor& m) {
    if (m.rank() != 2 || m.rows() != m.cols()) throw ShapeError("upper_triangle: matrix must be square");
    std::vector<double> out;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j) out.push_back(m.at(i, j));
    return out;
}

/// Pearson over the strict upper triangles of two l×l matrices.
inline double correlate_alpha(const ad::Tensor& alpha_scores, const ad::Tensor& similarity) {
    if (alpha_scores.shape() != similarity.shape()) throw ShapeError("correlate_alpha: matrices differ in shape");
    if (alpha_scores.rank() != 2 || alpha_scores.rows() < 3) {
        throw ValidationError("correlate_alpha: needs square matrices over at least 3 languages");
    }
    const auto a = upper_triangle(alpha_scores), s = upper_triangle(similarity);
    return pearson(a, s);
}

enum class Tail {
    less,    ///< alternative: mean(b) < mean(a)
    greater, ///< alternative: mean(b) > mean(a)
};

struct TTestResult {
    double t = 0;
    double df = 0;
    double p = 0;
};

/// Welch's unequal-variance t-test, one-tailed.
inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b, Tail tail = Tail::less) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("t-test: each sample needs at least 2 entries");
    auto moments = [](std::span<const double> x) {
        const double n = static_cast<double>(x.size());
        const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
        double ss = 0;
        for (double v : x) ss += (v - m) * (v - m);
        return std::pair{m, ss / (n - 1)};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double qa = va / static_cast<double>(a.size()), qb = vb / static_cast<double>(b.size());
    if (!(qa + qb > 0.0)) throw ValidationError("t-test: degenerate (zero) variance in both samples");
    TTestResult r;
    r.t = (ma - mb) / std::sqrt(qa + qb);
    r.df = (qa + qb) * (qa + qb) /
           (qa * qa / static_cast<double>(a.size() - 1) + qb * qb / static_cast<double>(b.size() - 1));
    const boost::math::students_t dist(r.df);
    r.p = tail == Tail::less ? boost::math::cdf(boost::math::complement(dist, r.t)) : boost::math::cdf(dist, r.t);
    return r;
}

inline double one_tailed_t_test(std::span<const double> a, std::span<const double> b, Tail tail = Tail::less) {
    return welch_t_test(a, b, tail).p;
}

} // namespace typoblind::sim
