// noisy-ood: command-line front end over the C API.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noisy_ood/noisy_ood.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRun = 3;

int exit_code(noisy_ood_status st) {
    switch (st) {
        case NOISY_OOD_OK: return kExitOk;
        case NOISY_OOD_INVALID_ARGUMENT:
        case NOISY_OOD_CONFIG_ERROR: return kExitConfig;
        default: return kExitRun;
    }
}

int report_error(noisy_ood_status st) {
    std::cerr << "error: " << noisy_ood_last_error() << "\n";
    return exit_code(st);
}

// RAII holder for a config handle.
struct Config {
    noisy_ood_config* ptr = nullptr;
    ~Config() { noisy_ood_config_free(ptr); }
};

noisy_ood_status open_config(const std::string& path, Config& cfg) {
    if (path.empty()) return noisy_ood_config_default(&cfg.ptr);
    return noisy_ood_config_load(path.c_str(), &cfg.ptr);
}

bool parse_seeds(const std::string& text, std::vector<uint64_t>& out) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) return false;
        try {
            out.push_back(std::stoull(item));
        } catch (const std::exception&) {
            return false;
        }
    }
    return !out.empty();
}

std::string fetch(noisy_ood_status (*fn)(const noisy_ood_report*, char*, size_t, size_t*),
                  const noisy_ood_report* r) {
    size_t need = 0;
    fn(r, nullptr, 0, &need);
    std::string s(need, '\0');
    fn(r, s.data(), s.size(), &need);
    s.resize(need - 1);
    return s;
}

struct RunOpts {
    std::string config, seeds, out, condition, format = "both";
    int threads = 0;
};

int cmd_run(const RunOpts& o) {
    Config cfg;
    if (auto st = open_config(o.config, cfg); st != NOISY_OOD_OK) return report_error(st);
    if (!o.seeds.empty()) {
        std::vector<uint64_t> seeds;
        if (!parse_seeds(o.seeds, seeds)) {
            std::cerr << "error: --seeds expects comma-separated non-negative integers, got '" << o.seeds << "'\n";
            return kExitConfig;
        }
        if (auto st = noisy_ood_config_set_seeds(cfg.ptr, seeds.data(), seeds.size()); st != NOISY_OOD_OK) {
            return report_error(st);
        }
    }
    if (!o.condition.empty()) {
        if (auto st = noisy_ood_config_set_condition(cfg.ptr, o.condition.c_str()); st != NOISY_OOD_OK) {
            return report_error(st);
        }
    }
    if (!o.out.empty()) noisy_ood_config_set_output_dir(cfg.ptr, o.out.c_str());
    const noisy_ood_format fmt = o.format == "csv"        ? NOISY_OOD_FORMAT_CSV
                                 : o.format == "markdown" ? NOISY_OOD_FORMAT_MARKDOWN
                                                          : NOISY_OOD_FORMAT_BOTH;

    noisy_ood_report* report = nullptr;
    if (auto st = noisy_ood_run(cfg.ptr, o.threads, &report); st != NOISY_OOD_OK) return report_error(st);
    const auto st = noisy_ood_report_write(report, nullptr, fmt);
    if (st == NOISY_OOD_OK) {
        size_t need = 0;
        noisy_ood_config_output_dir(cfg.ptr, nullptr, 0, &need);
        std::string dir(need, '\0');
        noisy_ood_config_output_dir(cfg.ptr, dir.data(), dir.size(), &need);
        dir.resize(need - 1);
        std::cout << fetch(noisy_ood_report_markdown, report);
        std::cerr << noisy_ood_report_run_count(report) << " runs written to " << dir << "\n";
    }
    noisy_ood_report_free(report);
    return st == NOISY_OOD_OK ? kExitOk : report_error(st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noise-injection OOD experiments on synthetic shortcut data", "noisy-ood"};
    app.require_subcommand(1);

    RunOpts run;
    auto* sub_run = app.add_subcommand("run", "Run the full condition x seed experiment and write reports");
    sub_run->add_option("--config", run.config, "JSON config (defaults when omitted)")->check(CLI::ExistingFile);
    sub_run->add_option("--seeds", run.seeds, "Comma-separated seed list overriding the config");
    sub_run->add_option("--out", run.out, "Output directory overriding the config");
    sub_run->add_option("--condition", run.condition, "Run only this condition")
        ->check(CLI::IsMember({"baseline", "noise_augmented"}));
    sub_run->add_option("--format", run.format, "Report format")->check(CLI::IsMember({"csv", "markdown", "both"}));
    sub_run->add_option("--threads", run.threads, "Worker threads (0 = NOISY_OOD_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);

    std::string gen_config, gen_out;
    uint64_t gen_seed = 73;
    auto* sub_gen = app.add_subcommand("gen-data", "Write one seed's synthetic splits as PGM files and manifests");
    sub_gen->add_option("--config", gen_config, "JSON config")->check(CLI::ExistingFile);
    sub_gen->add_option("--seed", gen_seed, "Seed whose split is dumped");
    sub_gen->add_option("--out", gen_out, "Output directory")->required();

    std::string eval_config, eval_manifest, eval_checkpoint;
    auto* sub_eval = app.add_subcommand("eval", "Score a manifest with a saved checkpoint");
    sub_eval->add_option("--config", eval_config, "JSON config (feature bank and threshold)")
        ->check(CLI::ExistingFile);
    sub_eval->add_option("--manifest", eval_manifest, "CSV manifest: path,label,source_id")->required();
    sub_eval->add_option("--checkpoint", eval_checkpoint, "checkpoint.bin from a run")->required();

    std::string nd_kind, nd_in, nd_out;
    double nd_density = -1.0, nd_variance = -1.0, nd_scale = -1.0;
    uint64_t nd_seed = 0;
    auto* sub_noise = app.add_subcommand("noise-demo", "Apply one noise operator to a PGM image");
    sub_noise->add_option("--kind", nd_kind, "gaussian, speckle, poisson or salt_pepper")->required();
    sub_noise->add_option("--density", nd_density, "Salt-and-pepper density");
    sub_noise->add_option("--variance", nd_variance, "Gaussian or speckle variance");
    sub_noise->add_option("--scale", nd_scale, "Poisson photon scale");
    sub_noise->add_option("--seed", nd_seed, "Noise seed");
    sub_noise->add_option("--in", nd_in, "Input 8-bit PGM")->required()->check(CLI::ExistingFile);
    sub_noise->add_option("--out", nd_out, "Output PGM")->required();

    std::string md_in;
    auto* sub_md = app.add_subcommand("render", "Render report.md from a report.csv");
    sub_md->add_option("--in", md_in, "report.csv")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const CLI::App* failing = &app;
        for (auto* s : app.get_subcommands()) failing = s;
        std::cerr << failing->help();
        return kExitConfig;
    }

    if (sub_run->parsed()) return cmd_run(run);

    if (sub_gen->parsed()) {
        Config cfg;
        if (auto st = open_config(gen_config, cfg); st != NOISY_OOD_OK) return report_error(st);
        if (auto st = noisy_ood_generate_dataset(cfg.ptr, gen_seed, gen_out.c_str()); st != NOISY_OOD_OK) {
            return report_error(st);
        }
        std::cerr << "wrote train, validation, id_test, ood_test manifests to " << gen_out << "\n";
        return kExitOk;
    }

    if (sub_eval->parsed()) {
        Config cfg;
        if (auto st = open_config(eval_config, cfg); st != NOISY_OOD_OK) return report_error(st);
        noisy_ood_metrics m{};
        const auto st = noisy_ood_evaluate_manifest(cfg.ptr, eval_manifest.c_str(), eval_checkpoint.c_str(), &m);
        if (st != NOISY_OOD_OK) return report_error(st);
        std::printf("n,auc,f1,acc,rec,spec\n%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(m.n_samples),
                    m.auc, m.f1, m.accuracy, m.recall, m.specificity);
        return kExitOk;
    }

    if (sub_noise->parsed()) {
        double param = -1.0;
        if (nd_kind == "salt_pepper") param = nd_density;
        if (nd_kind == "gaussian" || nd_kind == "speckle") param = nd_variance;
        if (nd_kind == "poisson") param = nd_scale;
        const auto st = noisy_ood_noise_demo(nd_kind.c_str(), param, nd_seed, nd_in.c_str(), nd_out.c_str());
        return st == NOISY_OOD_OK ? kExitOk : report_error(st);
    }

    if (sub_md->parsed()) {
        size_t need = 0;
        if (auto st = noisy_ood_markdown_from_csv(md_in.c_str(), nullptr, 0, &need); st != NOISY_OOD_OK) {
            return report_error(st);
        }
        std::string s(need, '\0');
        noisy_ood_markdown_from_csv(md_in.c_str(), s.data(), s.size(), &need);
        s.resize(need - 1);
        std::cout << s;
        return kExitOk;
    }
    return kExitConfig;
}
