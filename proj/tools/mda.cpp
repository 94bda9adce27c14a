#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mda/bench.hpp"
#include "mda/config.hpp"
#include "mda/csv.hpp"
#include "mda/oracle.hpp"

namespace fs = std::filesystem;
using namespace mda;

namespace {

ExperimentConfig config_or_default(const std::string& path) {
    return path.empty() ? default_config() : load_config(path);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << text << '\n';
}

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg = config_or_default(config_path);
    cfg.validate();
    fs::create_directories(out_dir);
    const RepData rd = prepare_rep(cfg, 0);
    write_dataset_csv((fs::path(out_dir) / "data.csv").string(), rd.data);
    Rng test_rng = make_stream(cfg.seed, 0, "test");
    const TestGroup marginal = build_marginal_testset(cfg, rd.mechanism, test_rng);
    write_dataset_csv((fs::path(out_dir) / "test_marginal.csv").string(), marginal.data);
    for (const auto& g : build_conditional_testset(cfg, rd.mechanism, test_rng)) {
        write_dataset_csv((fs::path(out_dir) / ("test_" + g.key_kind + "_" + g.key + ".csv")).string(), g.data);
    }
    std::ofstream split(fs::path(out_dir) / "split.csv");
    split << "row,part\n";
    for (std::size_t i : rd.split.train_ids) split << i << ",train\n";
    for (std::size_t i : rd.split.cal_ids) split << i << ",cal\n";
    write_text(fs::path(out_dir) / "manifest.json", run_manifest_json(cfg));
    std::cout << "wrote " << rd.data.size() << " rows to " << out_dir << '\n';
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out, long reps, long long seed, long workers) {
    ExperimentConfig cfg = config_or_default(config_path);
    if (reps >= 0) cfg.reps = static_cast<std::size_t>(reps);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (workers >= 0) cfg.workers = static_cast<std::size_t>(workers);
    cfg.validate();
    const ExperimentResult res = run_experiment(cfg);
    write_results_csv(out, res.rows);
    fs::path manifest = fs::path(out);
    manifest.replace_extension(".manifest.json");
    write_text(manifest, run_manifest_json(cfg));
    std::cerr << "reps=" << cfg.reps << " rows=" << res.rows.size() << " failures=" << res.failures;
    if (res.inclusion_checks > 0)
        std::cerr << " inclusion_violations=" << res.inclusion_violations << "/" << res.inclusion_checks;
    std::cerr << '\n';
    return res.failures == cfg.reps ? 3 : 0;
}

int cmd_report(const std::string& in, const std::string& out) {
    const auto rows = read_results_csv(in);
    if (rows.empty()) throw ConfigError("results file " + in + " has no rows");
    std::ofstream os(out);
    if (!os) throw ConfigError("cannot open " + out + " for writing");
    write_summary_csv(os, summarize(rows));
    return 0;
}

int check_psd() {
    bool ok = true;
    std::cout << "d,phi,min_eigenvalue\n";
    for (std::size_t d : {2, 3, 5, 10}) {
        for (double phi : {0.0, 0.2, 0.5, 0.8, 0.95}) {
            const double ev = min_eigenvalue(equicorrelated_cov(d, phi));
            std::cout << d << ',' << phi << ',' << std::setprecision(12) << ev << '\n';
            ok &= ev > 0.0 && std::abs(ev - (1.0 - phi)) < 1e-10;
        }
    }
    std::cout << (ok ? "psd: ok" : "psd: FAILED") << '\n';
    return ok ? 0 : 3;
}

int check_delta() {
    bool ok = true;
    std::cout << "rho,n,delta,loose,delta_y_ind_m,loose_y_ind_m\n";
    for (double rho : {0.01, 0.05, 0.1, 0.2, 0.5}) {
        for (std::size_t n : {10, 100, 1000}) {
            const HardnessBound g = hardness_delta(rho, n);
            const HardnessBound y = hardness_delta(rho, n, HardnessVariant::YIndependentOfM);
            std::cout << rho << ',' << n << ',' << std::setprecision(12) << g.delta << ',' << g.loose << ','
                      << y.delta << ',' << y.loose << '\n';
            ok &= g.delta >= 0.0 && g.delta <= g.loose + 1e-12;
        }
    }
    std::cout << (ok ? "delta: ok" : "delta: FAILED") << '\n';
    return ok ? 0 : 3;
}

int check_glm() {
    const ExperimentConfig cfg = default_config();
    const Eigen::VectorXd mu = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cfg.d));
    const GaussianLinearModel glm(cfg.beta, cfg.noise_var, mu, equicorrelated_cov(cfg.d, cfg.phi));
    const double p = std::get<Mcar>(cfg.mechanism.kind).p;
    const Eigen::VectorXd probs = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg.d), p);
    std::cout << "mcar_bayes_risk," << std::setprecision(12) << mcar_bayes_risk(glm, probs) << '\n';
    std::cout << "missing_count,oracle_length\n";
    bool ok = true;
    double prev = 0.0;
    for (std::size_t s = 0; s < cfg.d; ++s) {
        Mask m(cfg.d, (std::uint64_t{1} << s) - 1);
        const Eigen::VectorXd x_obs = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cfg.d - s));
        const double len = oracle_interval(glm, x_obs, m, cfg.alpha).length();
        std::cout << s << ',' << len << '\n';
        ok &= len >= prev - 1e-9;
        prev = len;
    }
    std::cout << (ok ? "glm: ok" : "glm: FAILED") << '\n';
    return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformal prediction with missing covariates: benchmark harness"};
    app.require_subcommand(1);

    std::string gen_config, gen_out;
    auto* gen = app.add_subcommand("generate", "Write repetition-0 data, test sets and the seed manifest");
    gen->add_option("--config", gen_config, "YAML config (defaults when omitted)")->check(CLI::ExistingFile);
    gen->add_option("--out", gen_out, "output directory")->required();

    std::string run_config, run_out;
    long run_reps = -1, run_workers = -1;
    long long run_seed = -1;
    auto* run = app.add_subcommand("run", "Run all repetitions and write per-repetition results");
    run->add_option("--config", run_config, "YAML config (defaults when omitted)")->check(CLI::ExistingFile);
    run->add_option("--out", run_out, "results CSV")->required();
    run->add_option("--reps", run_reps, "override repetitions")->check(CLI::PositiveNumber);
    run->add_option("--seed", run_seed, "override master seed")->check(CLI::NonNegativeNumber);
    run->add_option("--workers", run_workers, "worker threads")->check(CLI::PositiveNumber);

    std::string rep_in, rep_out;
    auto* report = app.add_subcommand("report", "Aggregate a results CSV across repetitions");
    report->add_option("--in", rep_in, "results CSV")->required()->check(CLI::ExistingFile);
    report->add_option("--out", rep_out, "summary CSV")->required();

    std::string check;
    auto* oracle = app.add_subcommand("oracle", "Print analytic oracle checks");
    oracle->add_option("--check", check, "which check")->required()->check(CLI::IsMember({"psd", "delta", "glm"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen) return cmd_generate(gen_config, gen_out);
        if (*run) return cmd_run(run_config, run_out, run_reps, run_seed, run_workers);
        if (*report) return cmd_report(rep_in, rep_out);
        if (check == "psd") return check_psd();
        if (check == "delta") return check_delta();
        return check_glm();
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
