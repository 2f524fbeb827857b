//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "winforge/harness.hpp"
#include "winforge/error.hpp"
#include "winforge/seed.hpp"
#include "winforge/svg.hpp"

#include "json.hpp"

#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace winforge {

using nlohmann::json;

namespace {

std::string imitation_csv(const ImitationRecord& rec) {
    std::string out = "block,loss,chosen,candidates\n";
    for (std::size_t i = 0; i < rec.losses.size(); ++i)
        out += std::to_string(i + 1) + "," + format_double(rec.losses[i]) + "," + std::to_string(rec.chosen[i]) + "," +
               std::to_string(rec.candidate_losses[i].size()) + "\n";
    return out;
}

json summary_json(const WinSummary& s) {
    return {{"teacher_test_rmse", s.teacher_test_rmse}, {"student_test_rmse", s.student_test_rmse},
            {"discrepancy", s.discrepancy},             {"teacher_train_loss", s.teacher_train_loss},
            {"student_train_loss", s.student_train_loss}, {"ell_b", s.ell_b},
            {"triangle_holds", s.triangle_holds}};
}

std::string cell_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu", index);
    return buf;
}

} // namespace

fs::path cell_dir(const fs::path& out, std::size_t index) { return out / "cells" / cell_name(index); }

WinSummary run_win_job(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir, bool compact) {
    cfg.validate();
    fs::create_directories(dir);
    const auto split = gen_dataset(cfg.data);
    std::string events;
    const EventSink sink = [&](const std::string& line) { events += line + "\n"; };
    const auto art = win_run(cfg.thin(), split.train, cfg.win, seed, sink);

    const Provenance prov{seed, config_hash(cfg), std::string(tool_version())};
    RunManifest manifest;
    manifest.master_seed = seed;
    manifest.config = dump_run_config(cfg);
    manifest.config_hash = prov.config_hash;
    manifest.tool_version = prov.tool_version;
    auto emit = [&](const std::string& name, const std::string& file, const std::string& bytes) {
        write_atomic(dir / file, bytes);
        manifest.add(name, dir, file);
    };
    auto emit_model = [&](const std::string& name, const Network& net) {
        const bool binary = net.parameter_count() > kBinaryModelThreshold;
        const std::string file = name + (binary ? ".wfm" : ".json");
        emit(name, file, binary ? encode_model_binary(net, prov) : encode_model_json(net, prov));
    };

    if (!compact) {
        emit_model("teacher", art.teacher);
        emit_model("warmed", art.warmed);
    }
    emit_model("merged", art.merged);
    emit("plan", "plan.json", encode_plan_json(art.plan));
    emit("teacher_trace", "teacher_trace.csv", encode_trace_csv(art.teacher_trace));
    emit("finetune_trace", "finetune_trace.csv", encode_trace_csv(art.finetune_info.trace));
    emit("imitation", "imitation.csv", imitation_csv(art.imitation));

    const ReportContext ctx{cfg.depth, cfg.width, cfg.width * cfg.win.widen_factor, seed};
    const auto lip = suffix_lipschitz(art.teacher, split.test, cfg.estimator, cfg.probes, cfg.jacobian);
    emit("lipschitz", "lipschitz.csv", render_report(lip, ctx, ReportFormat::Csv));
    if (cfg.win.mode == WinMode::Theory)
        emit("hybrid", "hybrid.csv", render_report(hybrid_scan(art.teacher, art.merged, split.test), ctx, ReportFormat::Csv));

    WinSummary s;
    s.teacher_test_rmse = rmse(art.teacher, split.test);
    s.student_test_rmse = rmse(art.merged, split.test);
    s.discrepancy = discrepancy(art.merged, art.teacher, split.test);
    s.teacher_train_loss = art.teacher_trace.final_loss;
    s.student_train_loss = dataset_loss(art.merged, split.train);
    s.ell_b = lip.ell_b;
    s.triangle_holds = art.triangle.holds;
    emit("summary", "summary.json", summary_json(s).dump(2) + "\n");
    emit("events", "events.jsonl", events);

    // The manifest goes last: its presence marks the job complete.
    save_manifest(manifest, dir / "manifest.json");
    return s;
}

bool job_complete(const fs::path& dir, const RunConfig& cfg, std::uint64_t seed) {
    const fs::path path = dir / "manifest.json";
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) return false;
    try {
        const auto m = load_manifest(path);
        return m.master_seed == seed && m.config_hash == config_hash(cfg) && verify_manifest(m, dir).ok();
    } catch (const Error&) {
        return false;
    }
}

WinSummary read_summary(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
        WinSummary s;
        s.teacher_test_rmse = j.at("teacher_test_rmse").get<double>();
        s.student_test_rmse = j.at("student_test_rmse").get<double>();
        s.discrepancy = j.at("discrepancy").get<double>();
        s.teacher_train_loss = j.at("teacher_train_loss").get<double>();
        s.student_train_loss = j.at("student_train_loss").get<double>();
        s.ell_b = j.at("ell_b").get<double>();
        s.triangle_holds = j.at("triangle_holds").get<bool>();
        return s;
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

SweepOutcome run_sweep(const SweepConfig& cfg, const fs::path& out, const SweepOptions& options) {
    cfg.validate();
    const auto cells = cfg.cells();
    fs::create_directories(out);
    write_atomic(out / "sweep.json", dump_sweep_config(cfg) + "\n");

    SweepOutcome outcome;
    std::vector<std::optional<WinSummary>> results(cells.size());
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    auto log = [&](const json& j) {
        if (!options.log) return;
        std::lock_guard lock(mu);
        *options.log << j.dump() << "\n" << std::flush;
    };

    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const auto& cell = cells[i];
            const fs::path dir = cell_dir(out, cell.index);
            try {
                if (job_complete(dir, cell.config, cell.seed)) {
                    results[i] = read_summary(dir / "summary.json");
                    std::lock_guard lock(mu);
                    ++outcome.skipped;
                } else {
                    std::error_code ec;
                    fs::remove(dir / "error.json", ec);
                    results[i] = run_win_job(cell.config, cell.seed, dir, options.compact);
                    std::lock_guard lock(mu);
                    ++outcome.ran;
                }
                log({{"event", "cell_done"}, {"cell", cell.index}, {"discrepancy", results[i]->discrepancy}});
            } catch (const std::exception& e) {
                const auto* err = dynamic_cast<const Error*>(&e);
                const json j = {{"error", err ? std::string(to_string(err->kind())) : "internal"}, {"message", e.what()}};
                try {
                    write_atomic(dir / "error.json", j.dump() + "\n");
                } catch (const Error&) {
                }
                log({{"event", "cell_failed"}, {"cell", cell.index}, {"message", e.what()}});
                std::lock_guard lock(mu);
                outcome.failures.push_back("cell " + std::to_string(cell.index) + ": " + e.what());
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, cells.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    std::sort(outcome.failures.begin(), outcome.failures.end());

    std::string cells_csv = "index,n,m,M,replicate,seed,discrepancy,ell_hat,test_rmse,status\n";
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> group;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        cells_csv += std::to_string(c.index) + "," + std::to_string(c.n) + "," + std::to_string(c.m) + "," +
                     std::to_string(c.big_m) + "," + std::to_string(c.replicate) + "," + std::to_string(c.seed) + ",";
        if (!results[i]) {
            cells_csv += ",,,failed\n";
            continue;
        }
        const auto& s = *results[i];
        cells_csv += format_double(s.discrepancy) + "," + format_double(s.ell_b) + "," +
                     format_double(s.student_test_rmse) + ",ok\n";
        const auto key = std::make_tuple(c.n, c.m, c.big_m);
        auto it = group.find(key);
        if (it == group.end()) {
            it = group.emplace(key, outcome.rows.size()).first;
            outcome.rows.push_back({c.n, c.m, c.big_m, 0, 0.0, 0.0});
        }
        auto& row = outcome.rows[it->second];
        ++row.seeds;
        row.discrepancy += s.discrepancy;
        row.ell_hat += s.ell_b;
    }
    for (auto& row : outcome.rows) {
        row.discrepancy /= static_cast<double>(row.seeds);
        row.ell_hat /= static_cast<double>(row.seeds);
    }
    write_atomic(out / "cells.csv", cells_csv);

    std::set<std::size_t> ns, ms;
    for (const auto& r : outcome.rows) {
        ns.insert(r.n);
        ms.insert(r.m);
    }
    if (ns.size() >= 3 && ms.size() >= 3) {
        outcome.report = bound_report(outcome.rows);
        write_report(*outcome.report, out / "bound_report.csv", ReportFormat::Csv);
        write_report(*outcome.report, out / "bound_report.json", ReportFormat::Json);
        std::vector<Series> series;
        for (std::size_t n : ns) {
            Series s{"n=" + std::to_string(n), {}, {}};
            for (const auto& r : outcome.rows)
                if (r.n == n) {
                    s.x.push_back(static_cast<double>(r.m));
                    s.y.push_back(r.discrepancy);
                }
            series.push_back(std::move(s));
        }
        write_atomic(out / "width_scaling.svg",
                     render_line_chart(series, {"D[S, B] against width", "m", "D", true, true, 640, 400}));
    }
    return outcome;
}

} // namespace winforge
