#include "noisy_ood/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "noisy_ood/error.hpp"
#include "noisy_ood/rng.hpp"

namespace noisy_ood {

std::string_view to_string(Condition c) {
    return c == Condition::Baseline ? "baseline" : "noise_augmented";
}

std::optional<Condition> parse_condition(std::string_view name) {
    if (name == "baseline") return Condition::Baseline;
    if (name == "noise_augmented") return Condition::NoiseAugmented;
    return std::nullopt;
}

std::string_view condition_title(Condition c) {
    return c == Condition::Baseline ? "Baseline" : "Noise Augment.";
}

ExperimentData build_data(const ExperimentConfig& cfg, const Composition& comp, std::uint64_t seed) {
    const std::uint64_t split = cfg.fixed_splits ? cfg.split_seed : (seed ^ kDataStreamTag);
    return make_splits(comp.id_sources, comp.ood_sources, comp.counts, split, cfg.synth, cfg.target_size);
}

TrainConfig train_config_for(const ExperimentConfig& cfg, Condition condition, std::uint64_t seed) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    if (condition == Condition::NoiseAugmented) {
        tc.noise_policy = cfg.noise;
    } else {
        tc.noise_policy.reset();
    }
    return tc;
}

RunResult run_condition(const ExperimentConfig& cfg, const ExperimentData& data, const FeatureBank& bank,
                        std::string table, Condition condition, std::uint64_t seed) {
    RunResult r;
    r.table = std::move(table);
    r.condition = condition;
    r.seed = seed;
    r.model = train(data, bank, train_config_for(cfg, condition, seed));
    r.id_metrics = evaluate(r.model, bank, data.id_test, cfg.threshold);
    r.ood_metrics = evaluate(r.model, bank, data.ood_test, cfg.threshold);
    r.gap = make_gap(r.id_metrics, r.ood_metrics);
    return r;
}

RunResult run_condition(const ExperimentConfig& cfg, Condition condition, std::uint64_t seed) {
    cfg.validate();
    const FeatureBank bank(cfg.bank_seed, cfg.bank);
    const ExperimentData data = build_data(cfg, cfg.main, seed);
    return run_condition(cfg, data, bank, cfg.main.name, condition, seed);
}

const TableReport* Report::table(std::string_view name) const {
    for (const auto& t : tables) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

const ConditionSummary* Report::row(std::string_view table_name, Condition c) const {
    const TableReport* t = table(table_name);
    if (!t) return nullptr;
    for (const auto& r : t->rows) {
        if (r.condition == c) return &r;
    }
    return nullptr;
}

int resolve_threads(int override_threads) {
    if (override_threads > 0) return override_threads;
    if (const char* env = std::getenv("NOISY_OOD_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, 1024));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

Report assemble_report(const ExperimentConfig& cfg, std::vector<RunResult> runs) {
    Report report;
    std::vector<const Composition*> comps{&cfg.main};
    for (const auto& a : cfg.ablations) comps.push_back(&a);
    for (const Composition* comp : comps) {
        TableReport t;
        t.name = comp->name;
        for (Condition c : cfg.conditions) {
            std::vector<GapRecord> gaps;
            std::vector<std::uint64_t> seeds;
            for (const auto& r : runs) {
                if (r.table == comp->name && r.condition == c) {
                    gaps.push_back(r.gap);
                    seeds.push_back(r.seed);
                }
            }
            if (gaps.empty()) continue;
            t.rows.push_back(ConditionSummary{c, aggregate(gaps, seeds)});
        }
        if (!t.rows.empty()) report.tables.push_back(std::move(t));
    }
    report.runs = std::move(runs);
    return report;
}

Report run_experiment(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    const FeatureBank bank(cfg.bank_seed, cfg.bank);

    struct Job {
        const Composition* comp;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::uint64_t s : cfg.seeds) jobs.push_back({&cfg.main, s});
    for (const auto& a : cfg.ablations) {
        for (std::uint64_t s : cfg.seeds) jobs.push_back({&a, s});
    }

    const std::size_t n_cond = cfg.conditions.size();
    std::vector<std::optional<RunResult>> slots(jobs.size() * n_cond);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::size_t error_job = jobs.size();
    std::string error_text;

    auto worker = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size() || failed.load()) return;
            const Job& job = jobs[j];
            std::size_t c = 0;
            try {
                const ExperimentData data = build_data(cfg, *job.comp, job.seed);
                for (; c < n_cond; ++c) {
                    slots[j * n_cond + c] =
                        run_condition(cfg, data, bank, job.comp->name, cfg.conditions[c], job.seed);
                }
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mutex);
                failed = true;
                // Keep the earliest failing cell so the message does not depend on scheduling.
                if (j < error_job) {
                    error_job = j;
                    const Condition cond = cfg.conditions[std::min(c, n_cond - 1)];
                    error_text = "run failed (table " + job.comp->name + ", condition " + std::string(to_string(cond)) +
                                 ", seed " + std::to_string(job.seed) + "): " + e.what();
                }
                return;
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(resolve_threads(threads), static_cast<int>(jobs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }
    if (failed) throw Error(ErrorKind::Run, error_text);

    std::vector<RunResult> runs;
    runs.reserve(slots.size());
    for (auto& s : slots) runs.push_back(std::move(*s));
    return assemble_report(cfg, std::move(runs));
}

}  // namespace noisy_ood
