#include "noisy_ood/report.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "noisy_ood/error.hpp"

namespace noisy_ood {

namespace {

constexpr std::array<const char*, 4> kParts = {"id", "ood", "diff", "absdiff"};

std::string full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string two_decimals(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

const SummaryStats& part(const MetricAggregate& a, std::size_t i) {
    switch (i) {
        case 0: return a.id;
        case 1: return a.ood;
        case 2: return a.diff;
        default: return a.abs_diff;
    }
}

SummaryStats& part(MetricAggregate& a, std::size_t i) {
    return const_cast<SummaryStats&>(part(static_cast<const MetricAggregate&>(a), i));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t row) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw_invalid("report.csv row " + std::to_string(row) + ": bad number '" + s + "'");
    }
    return v;
}

std::filesystem::path run_dir(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunResult& r) {
    std::filesystem::path base = dir;
    if (r.table != cfg.main.name) base = base / "ablations" / r.table;
    return base / std::string(to_string(r.condition)) / std::to_string(r.seed);
}

}  // namespace

std::string format_report_csv(const std::vector<TableReport>& tables) {
    std::string out = "table,condition,n_runs";
    for (Metric m : kMetrics) {
        for (const char* p : kParts) {
            out += ",";
            out += metric_key(m);
            out += "_";
            out += p;
            out += "_mean,";
            out += metric_key(m);
            out += "_";
            out += p;
            out += "_std";
        }
    }
    out += "\n";
    for (const auto& t : tables) {
        for (const auto& row : t.rows) {
            out += t.name + "," + std::string(to_string(row.condition)) + "," +
                   std::to_string(row.aggregate.seeds.size());
            for (Metric m : kMetrics) {
                for (std::size_t i = 0; i < kParts.size(); ++i) {
                    const SummaryStats& s = part(row.aggregate[m], i);
                    out += "," + full(s.mean) + "," + full(s.std);
                }
            }
            out += "\n";
        }
    }
    return out;
}

std::string format_runs_csv(const std::vector<RunResult>& runs) {
    std::string out = "table,condition,seed,best_epoch,stopped_epoch";
    for (Metric m : kMetrics) {
        out += ",";
        out += metric_key(m);
        out += "_id,";
        out += metric_key(m);
        out += "_ood,";
        out += metric_key(m);
        out += "_diff";
    }
    out += "\n";
    for (const auto& r : runs) {
        out += r.table + "," + std::string(to_string(r.condition)) + "," + std::to_string(r.seed) + "," +
               std::to_string(r.model.best_epoch) + "," + std::to_string(r.model.stopped_epoch);
        for (Metric m : kMetrics) out += "," + full(r.gap[m].id) + "," + full(r.gap[m].ood) + "," + full(r.gap[m].diff);
        out += "\n";
    }
    return out;
}

std::string format_report_markdown(const std::vector<TableReport>& tables) {
    std::string out;
    for (const auto& t : tables) {
        if (!out.empty()) out += "\n";
        out += "### " + t.name + "\n\n| |";
        for (Metric m : kMetrics) {
            const std::string title(metric_title(m));
            out += " " + title + " ID | " + title + " OOD | " + title + " Diff. |";
        }
        out += "\n|---|";
        for (std::size_t i = 0; i < kMetrics.size() * 3; ++i) out += "---|";
        out += "\n";
        for (Condition c : {Condition::NoiseAugmented, Condition::Baseline}) {
            for (const auto& row : t.rows) {
                if (row.condition != c) continue;
                out += "| " + std::string(condition_title(c)) + " |";
                for (Metric m : kMetrics) {
                    const auto& a = row.aggregate[m];
                    out += " " + two_decimals(a.id.mean) + " | " + two_decimals(a.ood.mean) + " | " +
                           two_decimals(a.diff.mean) + " |";
                }
                out += "\n";
            }
        }
    }
    return out;
}

std::vector<TableReport> parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw_invalid("report.csv is empty");
    const std::size_t expected = 3 + kMetrics.size() * kParts.size() * 2;
    if (split_csv(line).size() != expected) throw_invalid("report.csv header has the wrong column count");
    std::vector<TableReport> tables;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != expected) {
            throw_invalid("report.csv row " + std::to_string(row_no) + ": expected " + std::to_string(expected) +
                          " columns, got " + std::to_string(cells.size()));
        }
        const auto cond = parse_condition(cells[1]);
        if (!cond) throw_invalid("report.csv row " + std::to_string(row_no) + ": unknown condition '" + cells[1] + "'");
        if (tables.empty() || tables.back().name != cells[0]) tables.push_back(TableReport{cells[0], {}});
        ConditionSummary row;
        row.condition = *cond;
        std::size_t k = 3;
        for (Metric m : kMetrics) {
            for (std::size_t i = 0; i < kParts.size(); ++i) {
                SummaryStats& s = part(row.aggregate.metrics[static_cast<std::size_t>(m)], i);
                s.mean = parse_double(cells[k++], row_no);
                s.std = parse_double(cells[k++], row_no);
            }
        }
        tables.back().rows.push_back(std::move(row));
    }
    return tables;
}

std::vector<TableReport> read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_report_csv(buf.str());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_io("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw_io("write failed: " + path.string());
}

void write_report(const Report& report, const ExperimentConfig& cfg, const std::filesystem::path& dir,
                  ReportFormat format) {
    if (report.tables.empty()) throw_invalid("write_report: empty report");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw_io("cannot create output directory " + dir.string());

    if (format != ReportFormat::Markdown) write_text_file(dir / "report.csv", format_report_csv(report.tables));
    if (format != ReportFormat::Csv) write_text_file(dir / "report.md", format_report_markdown(report.tables));
    write_text_file(dir / "runs.csv", format_runs_csv(report.runs));
    write_text_file(dir / "config.resolved.json", config_to_json(cfg));
    for (const auto& r : report.runs) {
        const auto rd = run_dir(dir, cfg, r);
        std::filesystem::create_directories(rd, ec);
        if (ec) throw_io("cannot create " + rd.string());
        write_history_csv(rd / "history.csv", r.model.history);
        save_checkpoint(rd / "checkpoint.bin", r.model);
    }
}

}  // namespace noisy_ood
