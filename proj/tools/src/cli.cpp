//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "winforge/cli.hpp"
#include "winforge/error.hpp"
#include "winforge/harness.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <optional>

namespace winforge {

using nlohmann::json;

namespace {

struct GlobalFlags {
    std::uint64_t seed = 0;
    std::string config;
    std::size_t threads = 1;
    std::string out;
};

struct Context {
    GlobalFlags flags;
    bool seed_given = false;
    std::ostream& out;
    std::ostream& err;

    fs::path out_dir(const char* fallback) const {
        if (const char* env = std::getenv("WINFORGE_OUT"); env && *env) return env;
        return flags.out.empty() ? fs::path(fallback) : fs::path(flags.out);
    }
    bool has_out() const {
        const char* env = std::getenv("WINFORGE_OUT");
        return (env && *env) || !flags.out.empty();
    }
    RunConfig run_config() const {
        return flags.config.empty() ? RunConfig{} : parse_run_config(read_file(flags.config));
    }
};

void write_error(std::ostream& err, std::string_view command, std::string_view kind, std::string_view message) {
    err << json{{"error", kind}, {"message", message}, {"command", command}}.dump() << "\n";
}

Provenance provenance(const RunConfig& cfg, std::uint64_t seed) {
    return {seed, config_hash(cfg), std::string(tool_version())};
}

RunManifest start_manifest(const std::string& config_json, const std::string& hash, std::uint64_t seed) {
    RunManifest m;
    m.master_seed = seed;
    m.config = config_json;
    m.config_hash = hash;
    m.tool_version = std::string(tool_version());
    return m;
}

int cmd_gen_data(Context& ctx, const std::string& format) {
    GeneratorSpec spec;
    if (!ctx.flags.config.empty()) {
        const auto text = read_file(ctx.flags.config);
        try {
            spec = parse_run_config(text).data;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InvalidConfig) throw;
            spec = parse_generator_spec(text);
        }
    }
    if (ctx.seed_given) spec.seed = ctx.flags.seed;
    const auto split = gen_dataset(spec);
    const fs::path dir = ctx.out_dir("data");
    const std::string ext = format == "csv" ? ".csv" : ".wfd";
    save_dataset(split.train, dir / ("train" + ext));
    save_dataset(split.test, dir / ("test" + ext));
    const auto snapshot = dump_generator_spec(spec);
    auto m = start_manifest(snapshot, sha256_hex(snapshot), spec.seed);
    m.add("train", dir, "train" + ext);
    m.add("test", dir, "test" + ext);
    save_manifest(m, dir / "manifest.json");
    ctx.out << json{{"train", (dir / ("train" + ext)).string()}, {"test", (dir / ("test" + ext)).string()}}.dump()
            << "\n";
    return kExitOk;
}

int cmd_train_teacher(Context& ctx) {
    const auto cfg = ctx.run_config();
    const auto split = gen_dataset(cfg.data);
    const auto res = train_teacher(cfg.thin(), split.train, cfg.win, ctx.flags.seed);
    const fs::path dir = ctx.out_dir("teacher");
    const bool binary = res.net.parameter_count() > kBinaryModelThreshold;
    const std::string file = binary ? "teacher.wfm" : "teacher.json";
    save_model(res.net, dir / file, provenance(cfg, ctx.flags.seed));
    save_trace(res.trace, dir / "teacher_trace.csv");
    auto m = start_manifest(dump_run_config(cfg), config_hash(cfg), ctx.flags.seed);
    m.add("teacher", dir, file);
    m.add("teacher_trace", dir, "teacher_trace.csv");
    save_manifest(m, dir / "manifest.json");
    ctx.out << json{{"model", (dir / file).string()},
                    {"train_loss", res.trace.final_loss},
                    {"test_rmse", rmse(res.net, split.test)}}
                   .dump()
            << "\n";
    return kExitOk;
}

int cmd_win(Context& ctx, bool compact) {
    const auto cfg = ctx.run_config();
    const fs::path dir = ctx.out_dir("win");
    const auto s = run_win_job(cfg, ctx.flags.seed, dir, compact);
    ctx.out << json{{"dir", dir.string()},
                    {"student_test_rmse", s.student_test_rmse},
                    {"teacher_test_rmse", s.teacher_test_rmse},
                    {"discrepancy", s.discrepancy},
                    {"ell_b", s.ell_b}}
                   .dump()
            << "\n";
    return kExitOk;
}

int cmd_scratch(Context& ctx) {
    const auto cfg = ctx.run_config();
    const auto split = gen_dataset(cfg.data);
    const auto res = train_scratch(cfg.thin(), split.train, cfg.scratch_init, cfg.scratch_train(), ctx.flags.seed);
    const fs::path dir = ctx.out_dir("scratch");
    save_model(res.net, dir / "scratch.json", provenance(cfg, ctx.flags.seed));
    save_trace(res.trace, dir / "scratch_trace.csv");
    const json summary = {{"test_rmse", rmse(res.net, split.test)},
                          {"train_loss", res.trace.final_loss},
                          {"steps", cfg.scratch_train().steps}};
    write_atomic(dir / "summary.json", summary.dump(2) + "\n");
    auto m = start_manifest(dump_run_config(cfg), config_hash(cfg), ctx.flags.seed);
    m.add("scratch", dir, "scratch.json");
    m.add("scratch_trace", dir, "scratch_trace.csv");
    m.add("summary", dir, "summary.json");
    save_manifest(m, dir / "manifest.json");
    ctx.out << summary.dump() << "\n";
    return kExitOk;
}

int cmd_eval(Context& ctx, const std::string& model, const std::string& data, const std::string& against) {
    const auto net = load_model(model);
    const auto ds = load_dataset(data);
    json j = {{"rmse", rmse(net, ds)}};
    if (!against.empty()) j["discrepancy"] = discrepancy(net, load_model(against), ds);
    ctx.out << j.dump() << "\n";
    return kExitOk;
}

void emit_report(Context& ctx, const std::string& stem, const std::string& format, const std::string& text) {
    if (ctx.has_out()) {
        const fs::path path = ctx.out_dir(".") / (stem + "." + format);
        write_atomic(path, text);
        ctx.out << json{{"report", path.string()}}.dump() << "\n";
    } else {
        ctx.out << text;
    }
}

ReportContext report_context(const Network& teacher, std::uint64_t seed) {
    const auto& first = std::get<MeanFieldLayer>(teacher.block(0));
    return {teacher.size(), 0, first.width(), seed};
}

int cmd_hybrid(Context& ctx, const std::string& teacher_path, const std::string& student_path,
               const std::string& data, const std::string& format) {
    const auto teacher = load_model(teacher_path);
    const auto student = load_model(student_path);
    const auto scan = hybrid_scan(teacher, student, load_dataset(data));
    auto rc = report_context(teacher, ctx.flags.seed);
    if (const auto* s = std::get_if<MeanFieldLayer>(&student.block(0))) rc.m = s->width();
    emit_report(ctx, "hybrid", format, render_report(scan, rc, parse_report_format(format)));
    return kExitOk;
}

int cmd_lipschitz(Context& ctx, const std::string& teacher_path, const std::string& data, const std::string& estimator,
                  const std::string& format) {
    const auto cfg = ctx.run_config();
    const auto teacher = load_model(teacher_path);
    auto probes = cfg.probes;
    if (ctx.seed_given) probes.seed = ctx.flags.seed;
    const auto rep =
        suffix_lipschitz(teacher, load_dataset(data), parse_estimator_kind(estimator), probes, cfg.jacobian);
    emit_report(ctx, "lipschitz", format, render_report(rep, report_context(teacher, ctx.flags.seed),
                                                        parse_report_format(format)));
    return kExitOk;
}

int cmd_sweep(Context& ctx, bool compact) {
    require(!ctx.flags.config.empty(), ErrorKind::InvalidConfig, "sweep needs --config");
    auto cfg = parse_sweep_config(read_file(ctx.flags.config));
    if (ctx.seed_given) cfg.master_seed = ctx.flags.seed;
    const fs::path dir = ctx.has_out() ? ctx.out_dir(".") : fs::path(cfg.output);
    SweepOptions opt;
    opt.threads = ctx.flags.threads;
    opt.compact = compact;
    opt.log = &ctx.err;
    const auto res = run_sweep(cfg, dir, opt);
    json j = {{"dir", dir.string()}, {"ran", res.ran}, {"skipped", res.skipped}, {"failed", res.failures}};
    if (res.report)
        j["bound"] = {{"constant", res.report->constant},
                      {"width_slope", res.report->width_slope},
                      {"depth_slope", res.report->depth_slope}};
    ctx.out << j.dump() << "\n";
    if (!res.failures.empty()) {
        write_error(ctx.err, "sweep", "job_failed",
                    std::to_string(res.failures.size()) + " cell(s) failed; first: " + res.failures.front());
        return kExitJobFailed;
    }
    return kExitOk;
}

int cmd_verify(Context& ctx, const std::string& target) {
    fs::path path = target.empty() ? ctx.out_dir(".") : fs::path(target);
    if (fs::is_directory(path)) path /= "manifest.json";
    const auto m = load_manifest(path);
    const auto check = verify_manifest(m, path.parent_path());
    ctx.out << json{{"ok", check.ok()}, {"artifacts", m.artifacts.size()}, {"mismatched", check.mismatched}}.dump()
            << "\n";
    return check.ok() ? kExitOk : kExitJobFailed;
}

} // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"winforge: wide-then-narrow training for mean-field networks", "winforge"};
    app.require_subcommand(1);
    Context ctx{{}, false, out, err};
    auto* seed_opt = app.add_option("--seed", ctx.flags.seed, "Master seed");
    app.add_option("--config", ctx.flags.config, "JSON config file");
    app.add_option("--threads", ctx.flags.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--out", ctx.flags.out, "Output directory (WINFORGE_OUT overrides)");

    std::string format = "wfd", model, data, against, teacher, student, estimator = "pairs", report_format = "csv",
                manifest;
    bool compact = false;
    std::function<int()> run;

    auto* gen = app.add_subcommand("gen-data", "Generate train/test splits");
    gen->add_option("--format", format, "csv or wfd")->check(CLI::IsMember({"csv", "wfd"}));
    gen->callback([&] { run = [&] { return cmd_gen_data(ctx, format); }; });

    app.add_subcommand("train-teacher", "Train the wide network only")->callback([&] {
        run = [&] { return cmd_train_teacher(ctx); };
    });

    auto* win = app.add_subcommand("win", "Full wide-then-narrow pipeline");
    win->add_flag("--compact", compact, "Skip teacher and warmed model files");
    win->callback([&] { run = [&] { return cmd_win(ctx, compact); }; });

    app.add_subcommand("scratch", "Train the thin network directly")->callback([&] {
        run = [&] { return cmd_scratch(ctx); };
    });

    auto* eval = app.add_subcommand("eval", "RMSE and discrepancy of a model");
    eval->add_option("--model", model)->required();
    eval->add_option("--data", data)->required();
    eval->add_option("--against", against, "Reference model for the discrepancy");
    eval->callback([&] { run = [&] { return cmd_eval(ctx, model, data, against); }; });

    auto* hyb = app.add_subcommand("hybrid-scan", "Telescoping terms of student against teacher");
    hyb->add_option("--teacher", teacher)->required();
    hyb->add_option("--student", student)->required();
    hyb->add_option("--data", data)->required();
    hyb->add_option("--format", report_format)->check(CLI::IsMember({"csv", "json"}));
    hyb->callback([&] { run = [&] { return cmd_hybrid(ctx, teacher, student, data, report_format); }; });

    auto* lip = app.add_subcommand("lipschitz", "Suffix Lipschitz estimates of a teacher");
    lip->add_option("--teacher", teacher)->required();
    lip->add_option("--data", data)->required();
    lip->add_option("--estimator", estimator)->check(CLI::IsMember({"pairs", "jacobian"}));
    lip->add_option("--format", report_format)->check(CLI::IsMember({"csv", "json"}));
    lip->callback([&] { run = [&] { return cmd_lipschitz(ctx, teacher, data, estimator, report_format); }; });

    auto* sweep = app.add_subcommand("sweep", "Run a grid of win jobs");
    sweep->add_flag("--compact", compact, "Skip teacher and warmed model files");
    sweep->callback([&] { run = [&] { return cmd_sweep(ctx, compact); }; });

    auto* verify = app.add_subcommand("verify", "Check manifest hashes");
    verify->add_option("--manifest", manifest, "manifest.json or its directory");
    verify->callback([&] { run = [&] { return cmd_verify(ctx, manifest); }; });

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    std::string command = "winforge";
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << app.help();
        write_error(err, command, "usage", e.what());
        return kExitUsage;
    }
    ctx.seed_given = seed_opt->count() > 0;
    for (auto* sub : app.get_subcommands()) command = sub->get_name();

    try {
        return run();
    } catch (const Error& e) {
        write_error(err, command, to_string(e.kind()), e.what());
    } catch (const std::exception& e) {
        write_error(err, command, "internal", e.what());
    }
    return kExitJobFailed;
}

} // namespace winforge
