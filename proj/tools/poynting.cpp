#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poynting/cli.hpp"
#include "poynting/error.hpp"
#include "poynting/parallel.hpp"
#include "poynting/steklov.hpp"

namespace {

// exit codes: 0 all enabled checks pass, 1 a check failed, 2 invalid input or runtime error
constexpr int kFailed = 1;
constexpr int kError = 2;

void print_checks(const poynting::Report& r) {
    for (const auto& [name, ok] : r.checks()) {
        std::printf("%-28s %s\n", name.c_str(), ok ? "PASS" : "FAIL");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-conserving staggered-grid Maxwell solver with weak-solution audits"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool deterministic_flag = false;
    int threads = 0;

    auto* run = app.add_subcommand("run", "run a configured scenario and write the energy CSV and report");
    run->add_option("config,--config", config_path, "config file")->check(CLI::ExistingFile);
    run->add_option("--out-dir", out_dir, "output directory (overrides output.dir)");
    run->add_flag("--deterministic", deterministic_flag, "fixed-order reductions");
    run->add_option("--threads", threads, "worker threads (fallback: POYNTING_THREADS)")->check(CLI::NonNegativeNumber);

    std::string trace_path;
    bool weakform = false;
    bool steklov = false;
    bool gauss = false;
    std::size_t bank_size = 5;
    std::vector<double> lambdas;
    std::uint64_t seed = 1;
    auto* verify = app.add_subcommand("verify", "audit a stored trace file");
    verify->add_option("trace,--trace", trace_path, "trace file")->check(CLI::ExistingFile);
    verify->add_option("--config", config_path, "config supplying verify.* options")->check(CLI::ExistingFile);
    verify->add_option("--out-dir", out_dir, "directory for report.json");
    verify->add_flag("--weakform", weakform, "weak-form residual audit");
    verify->add_flag("--steklov", steklov, "Steklov-regularized identities");
    verify->add_flag("--gauss", gauss, "Gauss-law diagnostics");
    verify->add_option("--bank-size", bank_size, "test pairs in the weak-form bank")->check(CLI::PositiveNumber);
    verify->add_option("--lambda", lambdas, "Steklov parameters");
    verify->add_option("--seed", seed, "test bank seed");
    verify->add_flag("--deterministic", deterministic_flag, "fixed-order reductions");
    verify->add_option("--threads", threads, "worker threads (fallback: POYNTING_THREADS)")
        ->check(CLI::NonNegativeNumber);

    int trials = 200;
    auto* selftest = app.add_subcommand("steklov-selftest", "randomized Steklov property suite");
    selftest->add_option("--trials", trials, "trials per property")->check(CLI::PositiveNumber);
    selftest->add_option("--seed", seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (config_path.empty()) {
                std::fprintf(stderr, "error: run needs a config file\n");
                return kError;
            }
            poynting::SimConfig cfg = poynting::load_config(config_path);
            if (!out_dir.empty()) {
                cfg.output.dir = out_dir;
            }
            if (deterministic_flag) {
                cfg.deterministic = true;
            }
            if (threads > 0) {
                cfg.threads = threads;
            }
            poynting::parallel::set_deterministic(cfg.deterministic);
            poynting::parallel::set_thread_count(poynting::parallel::resolve_thread_count(cfg.threads));
            const poynting::ScenarioResult result = poynting::run_scenario(cfg);
            poynting::emit_outputs(result, cfg);
            print_checks(result.report);
            return result.report.passed() ? 0 : kFailed;
        }

        if (verify->parsed()) {
            if (trace_path.empty()) {
                std::fprintf(stderr, "error: verify needs a trace file\n");
                return kError;
            }
            poynting::VerifyOptions opts;
            if (!config_path.empty()) {
                const poynting::SimConfig cfg = poynting::load_config(config_path);
                opts = cfg.verify;
                seed = cfg.seed;
            }
            opts.weakform = opts.weakform || weakform;
            opts.steklov = opts.steklov || steklov;
            opts.gauss = opts.gauss || gauss;
            if (!opts.weakform && !opts.steklov && !opts.gauss) {
                opts.weakform = opts.steklov = opts.gauss = true;
            }
            if (verify->count("--bank-size") > 0) {
                opts.bank_size = bank_size;
            }
            if (!lambdas.empty()) {
                opts.lambda = lambdas;
            }
            poynting::parallel::set_deterministic(true);
            poynting::parallel::set_thread_count(poynting::parallel::resolve_thread_count(threads));
            const poynting::SolutionTrace tr = poynting::read_trace(trace_path);
            poynting::Report report;
            report.note("trace", trace_path);
            verify_trace(tr, opts, seed, report);
            const std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
            std::filesystem::create_directories(dir);
            std::ofstream(dir / "report.json") << report.to_json();
            print_checks(report);
            return report.passed() ? 0 : kFailed;
        }

        if (selftest->parsed()) {
            bool all = true;
            for (const poynting::PropertyTally& t : poynting::steklov_property_suite(trials, seed)) {
                std::printf("%-18s %s  trials=%d failures=%d worst=%.3e\n", t.name.c_str(),
                            t.passed() ? "PASS" : "FAIL", t.trials, t.failures, t.worst);
                all = all && t.passed();
            }
            return all ? 0 : kFailed;
        }
    } catch (const poynting::ParseError& e) {
        std::fprintf(stderr, "error [%s]: %s\n", e.key().c_str(), e.what());
        return kError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kError;
    }
    return kError;
}
