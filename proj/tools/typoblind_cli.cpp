// typoblind: command-line front end to the experiment harness.
//
// Exit codes: 0 success, 2 validation error, 3 divergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "typoblind/harness.hpp"

namespace fs = std::filesystem;
using namespace typoblind;
using namespace typoblind::harness;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;

struct Common {
    std::string config;
    std::vector<std::uint64_t> seeds;
    std::string out = ".";
    bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c, bool seeds = true) {
    cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
    if (seeds) cmd->add_option("--seeds,--seed", c.seeds, "seed list, overrides the config")->delimiter(',');
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_flag("-v,--verbose", c.verbose, "log training progress to stderr");
}

RunConfig resolve_config(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
    if (!c.seeds.empty()) cfg.seeds = c.seeds;
    cfg.validate();
    return cfg;
}

std::function<void(const std::string&)> logger(const Common& c) {
    if (!c.verbose) return {};
    return [](const std::string& line) { std::cerr << line << '\n'; };
}

void write_text(const fs::path& path, const std::string& text) {
    write_atomically(path, text);
    std::cout << "wrote " << path.string() << '\n';
}

std::string report_name(const Condition& c) {
    auto label = c.label();
    std::replace(label.begin(), label.end(), ':', '_');
    return "report_" + label + ".json";
}

std::vector<RunReport> load_reports(const std::vector<std::string>& paths) {
    std::vector<RunReport> out;
    for (const auto& p : paths) out.push_back(load_report(p));
    return out;
}

std::string correlation_tables(std::span<const RunReport> reports) {
    std::string csv;
    for (const auto& r : reports) {
        auto table = correlation_csv(correlate(r), r.config.condition.label());
        if (!csv.empty()) table.erase(0, table.find('\n') + 1);
        csv += table;
    }
    return csv;
}

int cmd_generate_data(const Common& c, std::uint64_t data_seed, bool seed_given) {
    auto cfg = resolve_config(c);
    if (seed_given) cfg.suite.data_seed = data_seed;
    const auto suite = synth::generate_suite(cfg.suite.languages, cfg.suite.data_seed, cfg.suite.corpus);
    write_dataset(c.out, suite);
    std::cout << "generated " << suite.corpora.size() << " languages into " << c.out << '\n';
    return 0;
}

int cmd_ingest_wals(const Common& c, const std::string& csv, std::vector<std::string> languages) {
    const auto records = wals::parse_wals_csv(fs::path(csv));
    if (languages.empty()) languages = wals::benchmark_languages();
    json summary{{"source", csv}, {"sha256", sha256_file(csv)}, {"languages", languages}, {"areas", json::object()}};
    for (auto area : kAllAreas) {
        const std::string name(to_string(area));
        try {
            const auto set = wals::select_features(records, languages, area);
            write_text(fs::path(c.out) / ("features_" + name + ".json"), manifest_to_json(set).dump(2) + "\n");
            summary["areas"][name] = set.features.size();
            std::cout << name << ": " << set.features.size() << " features\n";
        } catch (const wals::EmptySelectionError& e) {
            summary["areas"][name] = 0;
            std::cerr << "warning: " << e.what() << '\n';
        }
    }
    write_text(fs::path(c.out) / "selection.json", summary.dump(2) + "\n");
    return 0;
}

int cmd_train(const Common& c, const std::string& condition, double lambda, double w_typ) {
    auto cfg = resolve_config(c);
    if (!condition.empty()) {
        const auto colon = condition.find(':');
        Condition cond;
        cond.mode = parse_condition_mode(condition.substr(0, colon));
        if (colon != std::string::npos) cond.area = parse_area(condition.substr(colon + 1));
        cond.lambda = lambda > 0 ? lambda : cfg.condition.lambda;
        cond.w_typ = w_typ >= 0 ? w_typ : cfg.condition.w_typ;
        cfg.condition = cond;
        cfg.validate();
    }
    const auto report = run_condition(cfg, logger(c));
    const auto path = fs::path(c.out) / report_name(cfg.condition);
    persist(report, path);
    std::cout << "wrote " << path.string() << '\n'
              << cfg.condition.label() << ": mean test accuracy " << report.overall_test_accuracy << '\n';
    if (report.failed()) {
        std::cerr << "error: " << report.diverged_seeds() << " of " << report.per_seed.size()
                  << " seeds diverged\n";
        return kExitDivergence;
    }
    return 0;
}

int cmd_compare(const Common& c, const std::string& a, const std::string& b) {
    const auto ra = load_report(a), rb = load_report(b);
    const double threshold = c.config.empty() ? ra.config.threshold : resolve_config(c).threshold;
    const auto result = compare(ra, rb, threshold);
    write_text(fs::path(c.out) / "comparison.json", to_json(result).dump(2) + "\n");
    write_text(fs::path(c.out) / "comparison.csv", comparison_csv(result));
    std::cout << rb.config.condition.label() << " vs " << ra.config.condition.label() << ": pooled "
              << result.pooled.verdict << '\n';
    return 0;
}

int cmd_correlate(const Common& c, const std::vector<std::string>& paths) {
    const auto reports = load_reports(paths);
    write_text(fs::path(c.out) / "correlations.csv", correlation_tables(reports));
    return 0;
}

int cmd_family_breakdown(const Common& c, const std::vector<std::string>& paths) {
    const auto reports = load_reports(paths);
    const auto table = family_breakdown(reports);
    write_text(fs::path(c.out) / "families.csv", family_csv(table));
    write_text(fs::path(c.out) / "families_plot.json", family_plot_json(table).dump(2) + "\n");
    return 0;
}

int cmd_report(const Common& c) {
    const auto cfg = resolve_config(c);
    const auto reports = run_grid(cfg, logger(c));
    const fs::path out(c.out);
    bool diverged = false;
    json summary = json::array();
    for (const auto& r : reports) {
        persist(r, out / report_name(r.config.condition));
        diverged = diverged || r.failed();
        json row{{"condition", r.config.condition.label()},
                 {"mean_test_accuracy", r.overall_test_accuracy},
                 {"r_structural", detail::optional_json(r.correlations.structural_pooled)},
                 {"r_embedding", detail::optional_json(r.correlations.embedding_pooled)},
                 {"diverged_seeds", r.diverged_seeds()}};
        row["pooled_verdict"] =
            r.comparison_to_baseline.is_null() ? json(nullptr) : r.comparison_to_baseline["pooled"]["verdict"];
        summary.push_back(row);
        std::cout << r.config.condition.label() << ": " << r.overall_test_accuracy << '\n';
    }
    write_text(out / "summary.json", summary.dump(2) + "\n");
    write_text(out / "correlations.csv", correlation_tables(reports));
    const auto families = family_breakdown(reports);
    write_text(out / "families.csv", family_csv(families));
    write_text(out / "families_plot.json", family_plot_json(families).dump(2) + "\n");
    return diverged ? kExitDivergence : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"typoblind: typology blinding and exposure experiments"};
    app.require_subcommand(1);

    Common gen_c, wals_c, train_c, cmp_c, corr_c, fam_c, rep_c;

    auto* gen = app.add_subcommand("generate-data", "generate a synthetic language suite");
    add_common(gen, gen_c, false);
    std::uint64_t data_seed = 0;
    auto* seed_opt = gen->add_option("--seed", data_seed, "data seed, overrides suite.data_seed");

    auto* ingest = app.add_subcommand("ingest-wals", "select features from a WALS CSV");
    add_common(ingest, wals_c);
    std::string wals_csv;
    std::vector<std::string> wals_langs;
    ingest->add_option("--wals", wals_csv, "WALS CSV file")->required()->check(CLI::ExistingFile);
    ingest->add_option("--languages", wals_langs, "language codes (default: the 40-language set)")->delimiter(',');

    auto* train = app.add_subcommand("train", "train one condition over all seeds");
    add_common(train, train_c);
    std::string condition;
    double lambda = -1, w_typ = -1;
    train->add_option("--condition", condition, "baseline | blind:<area> | expose:<area>");
    train->add_option("--lambda", lambda, "gradient reversal strength");
    train->add_option("--w-typ", w_typ, "typology loss weight");

    auto* cmp = app.add_subcommand("compare", "per-language significance of report B against report A");
    add_common(cmp, cmp_c);
    std::string report_a, report_b;
    cmp->add_option("--a", report_a, "reference report")->required()->check(CLI::ExistingFile);
    cmp->add_option("--b", report_b, "compared report")->required()->check(CLI::ExistingFile);

    auto* corr = app.add_subcommand("correlate", "alpha vs similarity correlations");
    add_common(corr, corr_c);
    std::vector<std::string> corr_reports;
    corr->add_option("--reports", corr_reports, "report files")->required()->check(CLI::ExistingFile);

    auto* fam = app.add_subcommand("family-breakdown", "mean accuracy per family and condition");
    add_common(fam, fam_c);
    std::vector<std::string> fam_reports;
    fam->add_option("--reports", fam_reports, "report files")->required()->check(CLI::ExistingFile);

    auto* rep = app.add_subcommand("report", "run the nine-condition grid and write every table");
    add_common(rep, rep_c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*gen) return cmd_generate_data(gen_c, data_seed, seed_opt->count() > 0);
        if (*ingest) return cmd_ingest_wals(wals_c, wals_csv, wals_langs);
        if (*train) return cmd_train(train_c, condition, lambda, w_typ);
        if (*cmp) return cmd_compare(cmp_c, report_a, report_b);
        if (*corr) return cmd_correlate(corr_c, corr_reports);
        if (*fam) return cmd_family_breakdown(fam_c, fam_reports);
        if (*rep) return cmd_report(rep_c);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
