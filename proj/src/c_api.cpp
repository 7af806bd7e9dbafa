#include "noisy_ood/noisy_ood.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "noisy_ood/error.hpp"
#include "noisy_ood/experiment.hpp"
#include "noisy_ood/pgm.hpp"
#include "noisy_ood/report.hpp"

struct noisy_ood_config {
    noisy_ood::ExperimentConfig cfg;
};

struct noisy_ood_report {
    noisy_ood::ExperimentConfig cfg;
    noisy_ood::Report report;
};

namespace {

thread_local std::string g_last_error;

noisy_ood_status fail(noisy_ood_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

noisy_ood_status status_of(const noisy_ood::Error& e) {
    switch (e.kind()) {
        case noisy_ood::ErrorKind::InvalidArgument: return NOISY_OOD_INVALID_ARGUMENT;
        case noisy_ood::ErrorKind::Config: return NOISY_OOD_CONFIG_ERROR;
        case noisy_ood::ErrorKind::Io: return NOISY_OOD_IO_ERROR;
        case noisy_ood::ErrorKind::Run: return NOISY_OOD_RUN_ERROR;
    }
    return NOISY_OOD_RUN_ERROR;
}

template <class F>
noisy_ood_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return NOISY_OOD_OK;
    } catch (const noisy_ood::Error& e) {
        return fail(status_of(e), e.what());
    } catch (const std::bad_alloc&) {
        return fail(NOISY_OOD_RUN_ERROR, "out of memory");
    } catch (const std::exception& e) {
        return fail(NOISY_OOD_RUN_ERROR, e.what());
    }
}

noisy_ood_status copy_out(const std::string& text, char* buf, size_t cap, size_t* needed) {
    if (needed) *needed = text.size() + 1;
    if (!buf || cap == 0) return NOISY_OOD_OK;
    const size_t n = std::min(cap - 1, text.size());
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
    return NOISY_OOD_OK;
}

#define REQUIRE_ARG(cond, what) \
    if (!(cond)) return fail(NOISY_OOD_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* noisy_ood_last_error(void) { return g_last_error.c_str(); }

const char* noisy_ood_version(void) { return "1.0.0"; }

noisy_ood_status noisy_ood_config_default(noisy_ood_config** out) {
    REQUIRE_ARG(out, "out must not be NULL");
    return guarded([&] { *out = new noisy_ood_config{noisy_ood::default_config()}; });
}

noisy_ood_status noisy_ood_config_load(const char* path, noisy_ood_config** out) {
    REQUIRE_ARG(path && out, "path and out must not be NULL");
    return guarded([&] { *out = new noisy_ood_config{noisy_ood::load_config(path)}; });
}

noisy_ood_status noisy_ood_config_from_json(const char* json_text, noisy_ood_config** out) {
    REQUIRE_ARG(json_text && out, "json_text and out must not be NULL");
    return guarded([&] { *out = new noisy_ood_config{noisy_ood::config_from_json(json_text)}; });
}

noisy_ood_status noisy_ood_config_set_seeds(noisy_ood_config* cfg, const uint64_t* seeds, size_t n) {
    REQUIRE_ARG(cfg && (seeds || n == 0), "cfg and seeds must not be NULL");
    return guarded([&] {
        auto copy = cfg->cfg;
        copy.seeds.assign(seeds, seeds + n);
        copy.validate();
        cfg->cfg = std::move(copy);
    });
}

noisy_ood_status noisy_ood_config_set_condition(noisy_ood_config* cfg, const char* condition) {
    REQUIRE_ARG(cfg && condition, "cfg and condition must not be NULL");
    const auto parsed = noisy_ood::parse_condition(condition);
    if (!parsed) {
        return fail(NOISY_OOD_CONFIG_ERROR,
                    std::string("unknown condition '") + condition + "' (expected baseline or noise_augmented)");
    }
    cfg->cfg.conditions = {*parsed};
    return NOISY_OOD_OK;
}

noisy_ood_status noisy_ood_config_set_output_dir(noisy_ood_config* cfg, const char* dir) {
    REQUIRE_ARG(cfg && dir && *dir, "cfg and a non-empty dir are required");
    cfg->cfg.output_dir = dir;
    return NOISY_OOD_OK;
}

noisy_ood_status noisy_ood_config_output_dir(const noisy_ood_config* cfg, char* buf, size_t cap, size_t* needed) {
    REQUIRE_ARG(cfg, "cfg must not be NULL");
    return copy_out(cfg->cfg.output_dir, buf, cap, needed);
}

noisy_ood_status noisy_ood_config_to_json(const noisy_ood_config* cfg, char* buf, size_t cap, size_t* needed) {
    REQUIRE_ARG(cfg, "cfg must not be NULL");
    return copy_out(noisy_ood::config_to_json(cfg->cfg), buf, cap, needed);
}

void noisy_ood_config_free(noisy_ood_config* cfg) { delete cfg; }

noisy_ood_status noisy_ood_run(const noisy_ood_config* cfg, int threads, noisy_ood_report** out) {
    REQUIRE_ARG(cfg && out, "cfg and out must not be NULL");
    return guarded([&] {
        auto* r = new noisy_ood_report{cfg->cfg, {}};
        try {
            r->report = noisy_ood::run_experiment(cfg->cfg, threads);
        } catch (...) {
            delete r;
            throw;
        }
        *out = r;
    });
}

noisy_ood_status noisy_ood_report_write(const noisy_ood_report* report, const char* dir, noisy_ood_format format) {
    REQUIRE_ARG(report, "report must not be NULL");
    noisy_ood::ReportFormat f;
    switch (format) {
        case NOISY_OOD_FORMAT_CSV: f = noisy_ood::ReportFormat::Csv; break;
        case NOISY_OOD_FORMAT_MARKDOWN: f = noisy_ood::ReportFormat::Markdown; break;
        case NOISY_OOD_FORMAT_BOTH: f = noisy_ood::ReportFormat::Both; break;
        default: return fail(NOISY_OOD_INVALID_ARGUMENT, "unknown report format");
    }
    return guarded([&] {
        noisy_ood::write_report(report->report, report->cfg, dir ? std::string(dir) : report->cfg.output_dir, f);
    });
}

noisy_ood_status noisy_ood_report_csv(const noisy_ood_report* report, char* buf, size_t cap, size_t* needed) {
    REQUIRE_ARG(report, "report must not be NULL");
    return copy_out(noisy_ood::format_report_csv(report->report.tables), buf, cap, needed);
}

noisy_ood_status noisy_ood_report_markdown(const noisy_ood_report* report, char* buf, size_t cap, size_t* needed) {
    REQUIRE_ARG(report, "report must not be NULL");
    return copy_out(noisy_ood::format_report_markdown(report->report.tables), buf, cap, needed);
}

size_t noisy_ood_report_run_count(const noisy_ood_report* report) { return report ? report->report.runs.size() : 0; }

noisy_ood_status noisy_ood_report_stat(const noisy_ood_report* report, const char* table, const char* condition,
                                       int metric, int stat, double* mean, double* std) {
    REQUIRE_ARG(report && condition && mean, "report, condition and mean must not be NULL");
    REQUIRE_ARG(metric >= 0 && metric < static_cast<int>(noisy_ood::kMetrics.size()), "metric index out of range");
    REQUIRE_ARG(stat >= NOISY_OOD_STAT_ID && stat <= NOISY_OOD_STAT_ABS_DIFF, "stat selector out of range");
    const auto cond = noisy_ood::parse_condition(condition);
    if (!cond) return fail(NOISY_OOD_INVALID_ARGUMENT, std::string("unknown condition '") + condition + "'");
    const std::string name = table ? table : report->cfg.main.name;
    const auto* row = report->report.row(name, *cond);
    if (!row) return fail(NOISY_OOD_INVALID_ARGUMENT, "no row for table '" + name + "', condition " + condition);
    const auto& agg = row->aggregate[noisy_ood::kMetrics[static_cast<size_t>(metric)]];
    const noisy_ood::SummaryStats& s = stat == NOISY_OOD_STAT_ID     ? agg.id
                                       : stat == NOISY_OOD_STAT_OOD  ? agg.ood
                                       : stat == NOISY_OOD_STAT_DIFF ? agg.diff
                                                                     : agg.abs_diff;
    *mean = s.mean;
    if (std) *std = s.std;
    return NOISY_OOD_OK;
}

void noisy_ood_report_free(noisy_ood_report* report) { delete report; }

noisy_ood_status noisy_ood_markdown_from_csv(const char* csv_path, char* buf, size_t cap, size_t* needed) {
    REQUIRE_ARG(csv_path, "csv_path must not be NULL");
    std::string text;
    const auto st = guarded([&] { text = noisy_ood::format_report_markdown(noisy_ood::read_report_csv(csv_path)); });
    if (st != NOISY_OOD_OK) return st;
    return copy_out(text, buf, cap, needed);
}

noisy_ood_status noisy_ood_generate_dataset(const noisy_ood_config* cfg, uint64_t seed, const char* dir) {
    REQUIRE_ARG(cfg && dir, "cfg and dir must not be NULL");
    return guarded([&] {
        const auto data = noisy_ood::build_data(cfg->cfg, cfg->cfg.main, seed);
        noisy_ood::write_manifest(dir, "train", data.train);
        noisy_ood::write_manifest(dir, "validation", data.validation);
        noisy_ood::write_manifest(dir, "id_test", data.id_test);
        noisy_ood::write_manifest(dir, "ood_test", data.ood_test);
    });
}

noisy_ood_status noisy_ood_evaluate_manifest(const noisy_ood_config* cfg, const char* manifest_path,
                                             const char* checkpoint_path, noisy_ood_metrics* out) {
    REQUIRE_ARG(cfg && manifest_path && checkpoint_path && out, "arguments must not be NULL");
    return guarded([&] {
        noisy_ood::Dataset data = noisy_ood::load_manifest(manifest_path);
        noisy_ood::preprocess_dataset(data, cfg->cfg.target_size);
        const noisy_ood::FeatureBank bank(cfg->cfg.bank_seed, cfg->cfg.bank);
        const auto model = noisy_ood::load_checkpoint(checkpoint_path);
        if (model.head.weights.size() != static_cast<size_t>(bank.feature_dim())) {
            noisy_ood::throw_config("checkpoint has " + std::to_string(model.head.weights.size()) +
                                    " weights but the configured feature bank produces " +
                                    std::to_string(bank.feature_dim()));
        }
        const auto m = noisy_ood::evaluate(model, bank, data, cfg->cfg.threshold);
        *out = noisy_ood_metrics{m.auc, m.f1, m.accuracy, m.recall, m.specificity, m.n_samples};
    });
}

noisy_ood_status noisy_ood_noise_demo(const char* kind, double param, uint64_t seed, const char* in_path,
                                      const char* out_path) {
    REQUIRE_ARG(kind && in_path && out_path, "kind, in_path and out_path must not be NULL");
    const auto parsed = noisy_ood::parse_noise_kind(kind);
    if (!parsed) {
        return fail(NOISY_OOD_CONFIG_ERROR,
                    std::string("unknown noise kind '") + kind + "' (expected gaussian, speckle, poisson, salt_pepper)");
    }
    return guarded([&] {
        noisy_ood::NoisePolicy policy;
        if (param >= 0.0) {
            switch (*parsed) {
                case noisy_ood::NoiseKind::Gaussian: policy.gaussian_variance = param; break;
                case noisy_ood::NoiseKind::Speckle: policy.speckle_variance = param; break;
                case noisy_ood::NoiseKind::Poisson: policy.poisson_scale = param; break;
                case noisy_ood::NoiseKind::SaltPepper: policy.sp_density = param; break;
            }
        }
        try {
            policy.validate();
        } catch (const noisy_ood::Error& e) {
            noisy_ood::throw_config(e.what());
        }
        const noisy_ood::Image img = noisy_ood::read_pgm(std::filesystem::path(in_path));
        noisy_ood::RngStream rng(seed ^ noisy_ood::kNoiseStreamTag);
        noisy_ood::write_pgm(std::filesystem::path(out_path), noisy_ood::apply_noise(img, *parsed, policy, rng));
    });
}

}  // extern "C"
