//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "winforge/metrics.hpp"
#include "winforge/error.hpp"
#include "winforge/seed.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace winforge {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double l2(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

std::vector<std::vector<double>> inputs_of(const Dataset& data) {
    std::vector<std::vector<double>> pts;
    pts.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) pts.emplace_back(data.x(i).begin(), data.x(i).end());
    return pts;
}

void require_teacher_shape(const Network& teacher) {
    require(teacher.mean_field_count() == teacher.size(), ErrorKind::PatternMismatch,
            "teacher must consist of mean-field layers only");
}

std::vector<double> random_unit(Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    double n = 0.0;
    while (n == 0.0) {
        for (double& x : v) x = rng.normal();
        n = l2(v);
    }
    for (double& x : v) x /= n;
    return v;
}

} // namespace

// --- discrepancy -----------------------------------------------------------

double discrepancy(const VectorMap& f, const VectorMap& g, const Dataset& eval) {
    require(eval.size() > 0, ErrorKind::InvalidArgument, "discrepancy over an empty evaluation set");
    double total = 0.0;
    for (std::size_t i = 0; i < eval.size(); ++i) {
        const auto a = f(eval.x(i));
        const auto b = g(eval.x(i));
        require(a.size() == b.size(), ErrorKind::DimensionMismatch, "discrepancy: output dims differ");
        total += sq_dist(a, b);
    }
    return std::sqrt(total / static_cast<double>(eval.size()));
}

double discrepancy(const Network& f, const Network& g, const Dataset& eval) {
    require(f.input_dim() == g.input_dim(), ErrorKind::DimensionMismatch, "discrepancy: input dims differ");
    require(f.output_dim() == g.output_dim(), ErrorKind::DimensionMismatch, "discrepancy: output dims differ");
    return discrepancy([&](std::span<const double> x) { return network_eval(f, x); },
                       [&](std::span<const double> x) { return network_eval(g, x); }, eval);
}

double rmse(const Network& net, const Dataset& data) {
    require(data.size() > 0, ErrorKind::InvalidArgument, "rmse over an empty dataset");
    require(net.output_dim() == 1, ErrorKind::DimensionMismatch, "rmse needs a scalar-output network");
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double r = network_eval(net, data.x(i))[0] - data.y(i);
        total += r * r;
    }
    return std::sqrt(total / static_cast<double>(data.size()));
}

// --- hybrid networks --------------------------------------------------------

StudentLayout student_layout(const Network& student) {
    StudentLayout layout;
    const std::size_t count = student.size();
    if (student.mean_field_count() == count) {
        layout.depth = count;
        layout.handoff_end.resize(count + 1);
        for (std::size_t k = 1; k <= count; ++k) layout.handoff_end[k] = k;
        return layout;
    }
    require(count % 3 == 1, ErrorKind::PatternMismatch,
            "student with " + std::to_string(count) + " blocks is neither thin nor a paired network");
    for (std::size_t b = 0; b < count; ++b) {
        const bool want_layer = b % 3 == 0;
        require(is_mean_field(student.block(b)) == want_layer, ErrorKind::PatternMismatch,
                "unexpected block pattern at position " + std::to_string(b));
    }
    layout.depth = (count + 2) / 3;
    layout.has_pairs = true;
    layout.handoff_end.resize(layout.depth + 1);
    for (std::size_t k = 1; k < layout.depth; ++k) layout.handoff_end[k] = 3 * (k - 1) + 2;
    layout.handoff_end[layout.depth] = count;
    return layout;
}

Network build_hybrid(const Network& teacher, const Network& student, std::size_t k) {
    require_teacher_shape(teacher);
    const auto layout = student_layout(student);
    const std::size_t n = teacher.size();
    require(layout.depth == n, ErrorKind::DimensionMismatch,
            "student depth " + std::to_string(layout.depth) + " != teacher depth " + std::to_string(n));
    require(k <= n, ErrorKind::InvalidArgument, "hybrid index k out of range");
    require(teacher.activation() == student.activation(), ErrorKind::InvalidArgument,
            "teacher and student use different activations");
    if (k == 0) return teacher;
    if (k == n) return student;
    std::vector<Block> blocks(student.blocks().begin(),
                              student.blocks().begin() + static_cast<std::ptrdiff_t>(layout.handoff_end[k]));
    const std::size_t handoff = block_out_dim(blocks.back());
    const std::size_t expected = block_in_dim(teacher.block(k));
    require(handoff == expected, ErrorKind::DimensionMismatch,
            "misaligned handoff at layer " + std::to_string(k) + ": student provides " + std::to_string(handoff) +
                ", teacher expects " + std::to_string(expected));
    for (std::size_t b = k; b < n; ++b) blocks.push_back(teacher.block(b));
    return Network(teacher.activation(), std::move(blocks));
}

double HybridScan::term_sum() const {
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

HybridScan hybrid_scan(const Network& teacher, const Network& student, const Dataset& eval) {
    require(eval.size() > 0, ErrorKind::InvalidArgument, "hybrid scan over an empty evaluation set");
    const std::size_t n = teacher.size();
    for (std::size_t k = 1; k < n; ++k) build_hybrid(teacher, student, k);  // shape checks only
    if (n == 1) build_hybrid(teacher, student, 1);
    const auto layout = student_layout(student);

    HybridScan scan;
    scan.samples = eval.size();
    scan.terms.assign(n, 0.0);
    scan.amplification.assign(n, 0.0);
    scan.handoff.assign(n, 0.0);
    scan.skipped.assign(n, 0);
    std::vector<double> term_sq(n, 0.0);
    std::vector<double> handoff_sq(n, 0.0);
    double total_sq = 0.0;

    ForwardCache student_cache;
    std::vector<std::vector<double>> u(n + 1);  // teacher-space layer-k student features, u[0] = x
    std::vector<std::vector<double>> f(n + 1);  // F_k(x)
    std::vector<std::vector<double>> v(n + 1);  // B_k(u[k-1])
    for (std::size_t i = 0; i < eval.size(); ++i) {
        const auto x = eval.x(i);
        forward_range(student, 0, student.size(), x, student_cache);
        u[0].assign(x.begin(), x.end());
        for (std::size_t k = 1; k <= n; ++k) {
            const std::size_t end = layout.handoff_end[k];
            u[k] = end < student.size() ? student_cache.inputs[end] : student_cache.output;
        }
        // F_{k-1}(x) = B_{[k+1:n]}(v_k): evaluated through v_k so that the
        // pair (F_k, F_{k-1}) is exactly the suffix applied to (u_k, v_k).
        for (std::size_t k = 1; k <= n; ++k) {
            v[k] = eval_range(teacher, k - 1, k, u[k - 1]);
            f[k - 1] = k < n ? eval_range(teacher, k, n, v[k]) : v[k];
        }
        f[n] = u[n];

        for (std::size_t k = 1; k <= n; ++k) {
            const double dterm = sq_dist(f[k], f[k - 1]);
            const double dhand = sq_dist(u[k], v[k]);
            term_sq[k - 1] += dterm;
            handoff_sq[k - 1] += dhand;
            if (dhand > 0.0) {
                scan.amplification[k - 1] = std::max(scan.amplification[k - 1], std::sqrt(dterm) / std::sqrt(dhand));
            } else {
                ++scan.skipped[k - 1];
            }
        }
        total_sq += sq_dist(f[n], f[0]);
    }
    const double count = static_cast<double>(eval.size());
    for (std::size_t k = 0; k < n; ++k) {
        scan.terms[k] = std::sqrt(term_sq[k] / count);
        scan.handoff[k] = std::sqrt(handoff_sq[k] / count);
    }
    scan.total = std::sqrt(total_sq / count);
    return scan;
}

// --- Lipschitz estimation ---------------------------------------------------

LipschitzEstimate lipschitz_pairs(const VectorMap& f, std::span<const std::vector<double>> points,
                                  const ProbeConfig& cfg) {
    require(points.size() >= 2, ErrorKind::InvalidArgument, "lipschitz_pairs needs at least two samples");
    require(cfg.delta > 0.0 && std::isfinite(cfg.delta), ErrorKind::InvalidConfig, "probe delta must be positive");
    LipschitzEstimate est;
    auto probe = [&](std::span<const double> a, std::span<const double> fa, std::span<const double> b) {
        const double dx = std::sqrt(sq_dist(a, b));
        if (dx == 0.0) {
            ++est.skipped;
            return;
        }
        const auto fb = f(b);
        ++est.probes;
        est.value = std::max(est.value, std::sqrt(sq_dist(fa, fb)) / dx);
    };

    const std::size_t n = points.size();
    if (cfg.data_pairs) {
        const std::size_t pairs = std::min(cfg.max_data_pairs, n);
        for (std::size_t i = 0; i < pairs; ++i) {
            const auto& a = points[i];
            probe(a, f(a), points[(i + 1) % n]);
        }
    }
    const std::size_t local = std::min(cfg.max_local_points, n);
    std::vector<double> xp;
    for (std::size_t i = 0; i < local; ++i) {
        const auto& x = points[i];
        const auto fx = f(x);
        Rng rng(derive_seed(cfg.seed, {tag::kProbe, i}));
        auto along = [&](std::span<const double> dir) {
            xp.assign(x.begin(), x.end());
            for (std::size_t j = 0; j < xp.size(); ++j) xp[j] += cfg.delta * dir[j];
            probe(x, fx, xp);
        };
        for (std::size_t r = 0; r < cfg.random_directions; ++r) along(random_unit(rng, x.size()));
        if (cfg.axis_aligned) {
            std::vector<double> e(x.size(), 0.0);
            for (std::size_t j = 0; j < x.size(); ++j) {
                e[j] = 1.0;
                along(e);
                e[j] = 0.0;
            }
        }
    }
    require(est.probes > 0, ErrorKind::InvalidArgument,
            "all " + std::to_string(est.skipped) + " Lipschitz probes were degenerate (x == x')");
    return est;
}

LipschitzEstimate lipschitz_pairs(const VectorMap& f, const Dataset& eval, const ProbeConfig& cfg) {
    const auto pts = inputs_of(eval);
    return lipschitz_pairs(f, pts, cfg);
}

LipschitzEstimate lipschitz_jacobian(const Network& net, std::size_t first, std::size_t last,
                                     std::span<const std::vector<double>> points, const JacobianConfig& cfg) {
    require(!points.empty(), ErrorKind::InvalidArgument, "lipschitz_jacobian needs at least one sample");
    require(cfg.max_iterations > 0 && cfg.tolerance > 0.0, ErrorKind::InvalidConfig, "bad power-iteration config");
    LipschitzEstimate est;
    ForwardCache cache;
    for (std::size_t i = 0; i < points.size(); ++i) {
        forward_range(net, first, last, points[i], cache);
        Rng rng(derive_seed(cfg.seed, {tag::kProbe, i}));
        auto v = random_unit(rng, points[i].size());
        double sigma = -1.0;
        double residual = 0.0;
        bool converged = false;
        for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
            const auto jv = range_jvp(net, cache, v);
            const double next_sigma = l2(jv);
            if (next_sigma == 0.0) {
                sigma = 0.0;
                converged = true;
                break;
            }
            auto w = range_vjp(net, cache, jv);
            const double wn = l2(w);
            if (wn == 0.0) {
                sigma = next_sigma;
                converged = true;
                break;
            }
            for (std::size_t j = 0; j < w.size(); ++j) v[j] = w[j] / wn;
            residual = std::abs(next_sigma - sigma);
            sigma = next_sigma;
            if (residual <= cfg.tolerance * sigma) {
                converged = true;
                break;
            }
        }
        if (!converged)
            fail(ErrorKind::NotConverged, "power iteration did not converge at sample " + std::to_string(i) +
                                              " (residual " + std::to_string(residual) + ")");
        ++est.probes;
        est.value = std::max(est.value, sigma);
    }
    return est;
}

std::string_view to_string(EstimatorKind kind) { return kind == EstimatorKind::Pairs ? "pairs" : "jacobian"; }

EstimatorKind parse_estimator_kind(std::string_view name) {
    if (name == "pairs") return EstimatorKind::Pairs;
    if (name == "jacobian") return EstimatorKind::Jacobian;
    fail(ErrorKind::InvalidConfig, "unknown estimator '" + std::string(name) + "'");
}

LipschitzReport suffix_lipschitz(const Network& teacher, const Dataset& eval, EstimatorKind kind,
                                 const ProbeConfig& probes, const JacobianConfig& jac) {
    require_teacher_shape(teacher);
    const std::size_t n = teacher.size();
    LipschitzReport rep;
    rep.kind = kind;
    rep.suffix.assign(n, 1.0);
    rep.probes.assign(n, 0);
    rep.skipped.assign(n, 0);
    std::vector<std::vector<double>> features = inputs_of(eval);
    for (std::size_t k = 1; k < n; ++k) {
        for (auto& z : features) z = eval_range(teacher, k - 1, k, z);
        LipschitzEstimate est;
        if (kind == EstimatorKind::Pairs) {
            est = lipschitz_pairs([&](std::span<const double> z) { return eval_range(teacher, k, n, z); }, features,
                                  probes);
        } else {
            est = lipschitz_jacobian(teacher, k, n, features, jac);
        }
        rep.suffix[k - 1] = est.value;
        rep.probes[k - 1] = est.probes;
        rep.skipped[k - 1] = est.skipped;
    }
    rep.ell_b = *std::max_element(rep.suffix.begin(), rep.suffix.end());
    return rep;
}

// --- per-neuron difference quotients -----------------------------------------

std::vector<double> q_ratio(const MeanFieldLayer& neurons, std::span<const double> x, std::span<const double> xp,
                            Activation act) {
    require(x.size() == neurons.d_in() && xp.size() == neurons.d_in(), ErrorKind::DimensionMismatch,
            "q_ratio: input dims differ from neuron d_in");
    const double dx = std::sqrt(sq_dist(x, xp));
    require(dx > 0.0, ErrorKind::InvalidArgument, "q_ratio requires x != x'");
    std::vector<double> q(neurons.width() * neurons.d_out());
    for (std::size_t j = 0; j < neurons.width(); ++j) {
        const auto t0 = neurons.theta0(j);
        double s = 0.0;
        double sp = 0.0;
        for (std::size_t i = 0; i < t0.size(); ++i) {
            s += t0[i] * x[i];
            sp += t0[i] * xp[i];
        }
        const double diff = activate(act, s) - activate(act, sp);
        const auto t1 = neurons.theta1(j);
        for (std::size_t k = 0; k < t1.size(); ++k) q[j * t1.size() + k] = t1[k] * diff / dx;
    }
    return q;
}

double q_param_ratio(const NeuronParams& a, const NeuronParams& b, std::span<const double> x,
                     std::span<const double> xp, Activation act) {
    require(a.theta0.size() == b.theta0.size() && a.theta1.size() == b.theta1.size(), ErrorKind::DimensionMismatch,
            "q_param_ratio: neuron shapes differ");
    const double dtheta = std::sqrt(sq_dist(a.theta0, b.theta0) + sq_dist(a.theta1, b.theta1));
    require(dtheta > 0.0, ErrorKind::InvalidArgument, "q_param_ratio requires theta != theta'");
    const NeuronParams pair[2] = {a, b};
    const auto q = q_ratio(MeanFieldLayer::from_neurons(pair), x, xp, act);
    const std::size_t d = a.theta1.size();
    return std::sqrt(sq_dist({q.data(), d}, {q.data() + d, d})) / dtheta;
}

double q_lipschitz_sweep(const QSweepConfig& cfg) {
    require(cfg.d_in > 0 && cfg.d_out > 0 && cfg.probes > 0, ErrorKind::InvalidConfig, "bad q sweep config");
    Rng rng(derive_seed(cfg.seed, {tag::kProbe}));
    double best = 0.0;
    for (std::size_t p = 0; p < cfg.probes; ++p) {
        const auto x = sample_ball(rng, cfg.d_in, cfg.radius);
        const auto xp = sample_ball(rng, cfg.d_in, cfg.radius);
        if (sq_dist(x, xp) == 0.0) continue;
        const auto theta = sample_ball(rng, cfg.d_in + cfg.d_out, cfg.radius);
        const auto dir = random_unit(rng, cfg.d_in + cfg.d_out);
        NeuronParams a{{theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(cfg.d_in)},
                       {theta.begin() + static_cast<std::ptrdiff_t>(cfg.d_in), theta.end()}};
        NeuronParams b = a;
        for (std::size_t i = 0; i < cfg.d_in; ++i) b.theta0[i] += cfg.theta_delta * dir[i];
        for (std::size_t k = 0; k < cfg.d_out; ++k) b.theta1[k] += cfg.theta_delta * dir[cfg.d_in + k];
        best = std::max(best, q_param_ratio(a, b, x, xp, cfg.activation));
    }
    return best;
}

double layer_lipschitz_gap(const MeanFieldLayer& wide, const MeanFieldLayer& thin, Activation act,
                           std::span<const std::vector<double>> points, const ProbeConfig& cfg) {
    require(wide.d_in() == thin.d_in() && wide.d_out() == thin.d_out(), ErrorKind::DimensionMismatch,
            "layer_lipschitz_gap: layers have different dims");
    const auto lw = lipschitz_pairs([&](std::span<const double> z) { return layer_forward(wide, z, act); }, points, cfg);
    const auto lt = lipschitz_pairs([&](std::span<const double> z) { return layer_forward(thin, z, act); }, points, cfg);
    return std::abs(lt.value - lw.value);
}

// --- bound report -------------------------------------------------------------

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorKind::InvalidArgument, "slope needs >= 2 points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0.0 && y[i] > 0.0, ErrorKind::InvalidArgument, "log-log slope needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    require(sxx > 0.0, ErrorKind::InvalidArgument, "log-log slope needs distinct x values");
    return sxy / sxx;
}

namespace {

// Slope of log D against log(key) with a separate intercept per group.
double pooled_slope(std::span<const GridRow> rows, std::size_t GridRow::*group, std::size_t GridRow::*key) {
    std::map<std::size_t, std::vector<const GridRow*>> groups;
    for (const auto& r : rows) groups[r.*group].push_back(&r);
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& [g, members] : groups) {
        if (members.size() < 2) continue;
        double mx = 0.0;
        double my = 0.0;
        for (const auto* r : members) {
            mx += std::log(static_cast<double>(r->*key));
            my += std::log(r->discrepancy);
        }
        mx /= static_cast<double>(members.size());
        my /= static_cast<double>(members.size());
        for (const auto* r : members) {
            const double dx = std::log(static_cast<double>(r->*key)) - mx;
            sxy += dx * (std::log(r->discrepancy) - my);
            sxx += dx * dx;
        }
    }
    require(sxx > 0.0, ErrorKind::InvalidArgument, "grid has no group with two distinct values");
    return sxy / sxx;
}

} // namespace

BoundReport bound_report(std::span<const GridRow> rows) {
    std::set<std::size_t> ms;
    std::set<std::size_t> ns;
    for (const auto& r : rows) {
        require(r.n > 0 && r.m > 0, ErrorKind::InvalidArgument, "grid row with zero n or m");
        require(r.discrepancy > 0.0 && r.ell_hat > 0.0, ErrorKind::InvalidArgument,
                "grid rows need positive discrepancy and ell_hat");
        ms.insert(r.m);
        ns.insert(r.n);
    }
    require(ms.size() >= 3 && ns.size() >= 3, ErrorKind::InvalidArgument,
            "bound report needs >= 3 distinct m and n values (got " + std::to_string(ms.size()) + " and " +
                std::to_string(ns.size()) + ")");

    BoundReport rep;
    double log_c = 0.0;
    for (const auto& r : rows) {
        const double pred = r.ell_hat * static_cast<double>(r.n) / std::sqrt(static_cast<double>(r.m));
        rep.rows.push_back({r, pred, 0.0});
        log_c += std::log(r.discrepancy) - std::log(pred);
    }
    log_c /= static_cast<double>(rows.size());
    rep.constant = std::exp(log_c);
    for (auto& row : rep.rows) row.residual = std::log(row.grid.discrepancy) - std::log(row.predictor) - log_c;
    rep.width_slope = pooled_slope(rows, &GridRow::n, &GridRow::m);
    rep.depth_slope = pooled_slope(rows, &GridRow::m, &GridRow::n);
    return rep;
}

} // namespace winforge
