//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "winforge/config.hpp"
#include "winforge/error.hpp"
#include "winforge/io.hpp"
#include "winforge/seed.hpp"

#include "json.hpp"

#include <set>

namespace winforge {

using nlohmann::json;

namespace {

// Reads an object field by field and rejects keys nobody asked for.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        require(j_.is_object(), ErrorKind::InvalidConfig, where() + " must be an object");
    }
    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (const auto& [key, value] : j_.items())
            require(seen_.count(key) > 0, ErrorKind::InvalidConfig, "unknown key '" + key + "' in " + where());
    }
    Reader(const Reader&) = delete;
    Reader& operator=(const Reader&) = delete;

    template <class T>
    void get(const char* key, T& out) {
        if (const auto* v = find(key)) {
            try {
                out = v->get<T>();
            } catch (const json::exception& e) {
                fail(ErrorKind::InvalidConfig, where(key) + ": " + e.what());
            }
        }
    }
    template <class F>
    void with(const char* key, F&& f) {
        if (const auto* v = find(key)) f(*v, where(key));
    }
    template <class E, class P>
    void get_enum(const char* key, E& out, P parse) {
        std::string name;
        get(key, name);
        if (!name.empty()) out = parse(name);
    }

private:
    const json* find(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    std::string where(const char* key = nullptr) const {
        const std::string p = path_.empty() ? "config" : path_;
        return key ? p + "." + key : p;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json to_json(const Distribution& d) {
    if (d.kind == Distribution::Kind::Uniform) return {{"kind", "uniform"}, {"lo", d.p0}, {"hi", d.p1}};
    return {{"kind", "truncated_normal"}, {"sigma", d.p0}, {"clip", d.p1}};
}

Distribution distribution_from(const json& j, const std::string& path) {
    Reader r(j, path);
    std::string kind = "uniform";
    r.get("kind", kind);
    Distribution d;
    if (kind == "uniform") {
        d.kind = Distribution::Kind::Uniform;
        r.get("lo", d.p0);
        r.get("hi", d.p1);
    } else if (kind == "truncated_normal") {
        d = Distribution::truncated_normal(1.0, 2.0);
        r.get("sigma", d.p0);
        r.get("clip", d.p1);
    } else {
        fail(ErrorKind::InvalidConfig, path + ".kind: unknown distribution '" + kind + "'");
    }
    return d;
}

json to_json(const LayerInit& l) { return {{"dist", to_json(l.dist)}, {"coupling", l.coupling}}; }

LayerInit layer_init_from(const json& j, const std::string& path) {
    Reader r(j, path);
    LayerInit l;
    r.with("dist", [&](const json& v, const std::string& p) { l.dist = distribution_from(v, p); });
    r.get("coupling", l.coupling);
    return l;
}

json to_json(const InitSpec& s) {
    json per = json::object();
    for (const auto& [k, v] : s.per_layer) per[std::to_string(k)] = to_json(v);
    return {{"base", to_json(s.base)}, {"per_layer", std::move(per)}};
}

InitSpec init_from(const json& j, const std::string& path) {
    Reader r(j, path);
    InitSpec s;
    r.with("base", [&](const json& v, const std::string& p) { s.base = layer_init_from(v, p); });
    r.with("per_layer", [&](const json& v, const std::string& p) {
        require(v.is_object(), ErrorKind::InvalidConfig, p + " must be an object");
        for (const auto& [key, value] : v.items()) {
            std::size_t idx = 0;
            try {
                std::size_t used = 0;
                idx = std::stoul(key, &used);
                require(used == key.size(), ErrorKind::InvalidConfig, "");
            } catch (const std::exception&) {
                fail(ErrorKind::InvalidConfig, p + ": layer key '" + key + "' is not an index");
            }
            s.per_layer[idx] = layer_init_from(value, p + "." + key);
        }
    });
    return s;
}

json to_json(const TrainConfig& c) {
    return {{"eta", c.eta},
            {"steps", c.steps},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"schedule", c.schedule == Schedule::Cosine ? "cosine" : "constant"},
            {"eta_final", c.eta_final},
            {"param_bound", c.param_bound ? json(*c.param_bound) : json(nullptr)},
            {"log_every", c.log_every},
            {"width_scaled_lr", c.width_scaled_lr}};
}

TrainConfig train_from(const json& j, const std::string& path) {
    Reader r(j, path);
    TrainConfig c;
    r.get("eta", c.eta);
    r.get("steps", c.steps);
    r.get("batch_size", c.batch_size);
    r.get("seed", c.seed);
    r.get_enum("schedule", c.schedule, [&](const std::string& s) {
        if (s == "constant") return Schedule::Constant;
        if (s == "cosine") return Schedule::Cosine;
        fail(ErrorKind::InvalidConfig, path + ".schedule: unknown schedule '" + s + "'");
    });
    r.get("eta_final", c.eta_final);
    r.with("param_bound", [&](const json& v, const std::string& p) {
        if (v.is_null()) return;
        require(v.is_number(), ErrorKind::InvalidConfig, p + " must be a number or null");
        c.param_bound = v.get<double>();
    });
    r.get("log_every", c.log_every);
    r.get("width_scaled_lr", c.width_scaled_lr);
    return c;
}

json to_json(const WinConfig& w) {
    return {{"widen_factor", w.widen_factor},
            {"wide_dim", w.wide_dim},
            {"mode", std::string(to_string(w.mode))},
            {"subsample", std::string(to_string(w.subsample))},
            {"imitation_base_steps", w.imitation_base_steps},
            {"restarts", w.restarts},
            {"finetune_restarts", w.finetune_restarts},
            {"imitate_in_theory", w.imitate_in_theory},
            {"freeze_previous", w.freeze_previous},
            {"init", to_json(w.init)},
            {"pair_init", {{"identity", w.pair_init.identity}, {"noise", to_json(w.pair_init.noise)}}},
            {"teacher_train", to_json(w.teacher_train)},
            {"imitate_train", to_json(w.imitate_train)},
            {"finetune", to_json(w.finetune)}};
}

WinConfig win_from(const json& j, const std::string& path) {
    Reader r(j, path);
    WinConfig w;
    r.get("widen_factor", w.widen_factor);
    r.get("wide_dim", w.wide_dim);
    r.get_enum("mode", w.mode, parse_win_mode);
    r.get_enum("subsample", w.subsample, parse_subsample_mode);
    r.get("imitation_base_steps", w.imitation_base_steps);
    r.get("restarts", w.restarts);
    r.get("finetune_restarts", w.finetune_restarts);
    r.get("imitate_in_theory", w.imitate_in_theory);
    r.get("freeze_previous", w.freeze_previous);
    r.with("init", [&](const json& v, const std::string& p) { w.init = init_from(v, p); });
    r.with("pair_init", [&](const json& v, const std::string& p) {
        Reader pr(v, p);
        pr.get("identity", w.pair_init.identity);
        pr.with("noise", [&](const json& n, const std::string& q) { w.pair_init.noise = distribution_from(n, q); });
    });
    r.with("teacher_train", [&](const json& v, const std::string& p) { w.teacher_train = train_from(v, p); });
    r.with("imitate_train", [&](const json& v, const std::string& p) { w.imitate_train = train_from(v, p); });
    r.with("finetune", [&](const json& v, const std::string& p) { w.finetune = train_from(v, p); });
    return w;
}

json to_json(const GeneratorSpec& g) {
    return {{"kind", std::string(to_string(g.kind))},
            {"dim", g.dim},
            {"teacher_depth", g.teacher_depth},
            {"teacher_width", g.teacher_width},
            {"teacher_seed", g.teacher_seed},
            {"teacher_activation", std::string(to_string(g.teacher_activation))},
            {"target_rms", g.target_rms},
            {"noise_sigma", g.noise_sigma},
            {"n_train", g.n_train},
            {"n_test", g.n_test},
            {"c", g.c},
            {"seed", g.seed}};
}

GeneratorSpec generator_from(const json& j, const std::string& path) {
    Reader r(j, path);
    GeneratorSpec g;
    r.get_enum("kind", g.kind, parse_generator_kind);
    r.get("dim", g.dim);
    r.get("teacher_depth", g.teacher_depth);
    r.get("teacher_width", g.teacher_width);
    r.get("teacher_seed", g.teacher_seed);
    r.get_enum("teacher_activation", g.teacher_activation, parse_activation);
    r.get("target_rms", g.target_rms);
    r.get("noise_sigma", g.noise_sigma);
    r.get("n_train", g.n_train);
    r.get("n_test", g.n_test);
    r.get("c", g.c);
    r.get("seed", g.seed);
    return g;
}

json to_json(const RunConfig& c) {
    return {{"data", to_json(c.data)},
            {"depth", c.depth},
            {"width", c.width},
            {"activation", std::string(to_string(c.activation))},
            {"win", to_json(c.win)},
            {"scratch", to_json(c.scratch)},
            {"scratch_init", to_json(c.scratch_init)},
            {"estimator", std::string(to_string(c.estimator))},
            {"probes",
             {{"max_data_pairs", c.probes.max_data_pairs},
              {"max_local_points", c.probes.max_local_points},
              {"random_directions", c.probes.random_directions},
              {"axis_aligned", c.probes.axis_aligned},
              {"delta", c.probes.delta},
              {"seed", c.probes.seed},
              {"data_pairs", c.probes.data_pairs}}},
            {"jacobian",
             {{"max_iterations", c.jacobian.max_iterations},
              {"tolerance", c.jacobian.tolerance},
              {"seed", c.jacobian.seed}}}};
}

RunConfig run_from(const json& j, const std::string& path) {
    Reader r(j, path);
    RunConfig c;
    r.with("data", [&](const json& v, const std::string& p) { c.data = generator_from(v, p); });
    r.get("depth", c.depth);
    r.get("width", c.width);
    r.get_enum("activation", c.activation, parse_activation);
    r.with("win", [&](const json& v, const std::string& p) { c.win = win_from(v, p); });
    r.with("scratch", [&](const json& v, const std::string& p) { c.scratch = train_from(v, p); });
    r.with("scratch_init", [&](const json& v, const std::string& p) { c.scratch_init = init_from(v, p); });
    r.get_enum("estimator", c.estimator, parse_estimator_kind);
    r.with("probes", [&](const json& v, const std::string& p) {
        Reader pr(v, p);
        pr.get("max_data_pairs", c.probes.max_data_pairs);
        pr.get("max_local_points", c.probes.max_local_points);
        pr.get("random_directions", c.probes.random_directions);
        pr.get("axis_aligned", c.probes.axis_aligned);
        pr.get("delta", c.probes.delta);
        pr.get("seed", c.probes.seed);
        pr.get("data_pairs", c.probes.data_pairs);
    });
    r.with("jacobian", [&](const json& v, const std::string& p) {
        Reader jr(v, p);
        jr.get("max_iterations", c.jacobian.max_iterations);
        jr.get("tolerance", c.jacobian.tolerance);
        jr.get("seed", c.jacobian.seed);
    });
    return c;
}

json parse_text(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("config: ") + e.what());
    }
}

} // namespace

TrainConfig RunConfig::scratch_train() const {
    TrainConfig t = scratch;
    if (t.steps == 0) t.steps = win_total_steps(win, depth);
    return t;
}

void RunConfig::validate() const {
    data.validate();
    require(depth >= 1 && width >= 1, ErrorKind::InvalidConfig, "depth and width must be positive");
    win.validate(thin());
    scratch.validate();
    scratch_init.validate();
    require(probes.delta > 0.0, ErrorKind::InvalidConfig, "probes.delta must be positive");
}

bool RunConfig::operator==(const RunConfig& other) const { return to_json(*this) == to_json(other); }

RunConfig parse_run_config(std::string_view json_text) {
    RunConfig c = run_from(parse_text(json_text), "");
    c.validate();
    return c;
}

std::string dump_run_config(const RunConfig& cfg) { return to_json(cfg).dump(); }

std::string config_hash(const RunConfig& cfg) { return sha256_hex(dump_run_config(cfg)); }

GeneratorSpec parse_generator_spec(std::string_view json_text) {
    GeneratorSpec g = generator_from(parse_text(json_text), "data");
    g.validate();
    return g;
}

std::string dump_generator_spec(const GeneratorSpec& spec) { return to_json(spec).dump(); }

std::vector<SweepCell> SweepConfig::cells() const {
    std::vector<SweepCell> out;
    const auto& teachers = big_ms.empty() ? widen_factors : big_ms;
    for (std::size_t n : depths)
        for (std::size_t m : widths)
            for (std::size_t t : teachers)
                for (std::uint64_t replicate : seeds) {
                    SweepCell cell;
                    cell.index = out.size();
                    cell.n = n;
                    cell.m = m;
                    cell.replicate = replicate;
                    cell.seed = derive_seed(master_seed, {tag::kCell, cell.index});
                    cell.config = base;
                    cell.config.depth = n;
                    cell.config.width = m;
                    if (mode) cell.config.win.mode = *mode;
                    cell.config.win.widen_factor = big_ms.empty() ? t : t / m;
                    cell.big_m = cell.config.win.widen_factor * m;
                    out.push_back(std::move(cell));
                }
    return out;
}

void SweepConfig::validate() const {
    require(!depths.empty() && !widths.empty() && !seeds.empty(), ErrorKind::InvalidConfig,
            "sweep grid needs depths, widths and seeds");
    require(big_ms.empty() != widen_factors.empty(), ErrorKind::InvalidConfig,
            "sweep grid needs exactly one of big_m or widen_factor");
    for (std::size_t big_m : big_ms)
        for (std::size_t m : widths)
            require(m > 0 && big_m % m == 0 && big_m >= m, ErrorKind::InvalidConfig,
                    "teacher width " + std::to_string(big_m) + " is not a multiple of m = " + std::to_string(m));
    for (const auto& cell : cells()) cell.config.validate();
}

SweepConfig parse_sweep_config(std::string_view json_text) {
    const json j = parse_text(json_text);
    SweepConfig s;
    {
        Reader r(j, "");
        r.with("base", [&](const json& v, const std::string& p) { s.base = run_from(v, p); });
        r.with("grid", [&](const json& v, const std::string& p) {
            Reader g(v, p);
            g.get("n", s.depths);
            g.get("m", s.widths);
            g.get("M", s.big_ms);
            g.get("widen_factor", s.widen_factors);
        });
        r.get("seeds", s.seeds);
        r.with("mode", [&](const json& v, const std::string& p) {
            if (v.is_null()) return;
            require(v.is_string(), ErrorKind::InvalidConfig, p + " must be a string");
            s.mode = parse_win_mode(v.get<std::string>());
        });
        r.get("master_seed", s.master_seed);
        r.get("output", s.output);
    }
    s.validate();
    return s;
}

std::string dump_sweep_config(const SweepConfig& cfg) {
    json j = {{"base", to_json(cfg.base)},
              {"grid", {{"n", cfg.depths}, {"m", cfg.widths}, {"M", cfg.big_ms}, {"widen_factor", cfg.widen_factors}}},
              {"seeds", cfg.seeds},
              {"mode", cfg.mode ? json(std::string(to_string(*cfg.mode))) : json(nullptr)},
              {"master_seed", cfg.master_seed},
              {"output", cfg.output}};
    return j.dump();
}

} // namespace winforge
