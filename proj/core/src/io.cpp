//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "winforge/io.hpp"
#include "winforge/error.hpp"

#include "json.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <system_error>

#ifndef WINFORGE_VERSION
#define WINFORGE_VERSION "0.0.0"
#endif

namespace winforge {

using nlohmann::json;

namespace {

constexpr std::string_view kModelMagic = "WFM1";
constexpr std::string_view kDataMagic = "WFD1";
constexpr std::string_view kCsvTag = "#winforge-dataset";

// Little-endian byte writer/reader for the binary containers.
class ByteWriter {
public:
    void raw(std::string_view s) { out_.append(s); }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        u64(s.size());
        raw(s);
    }
    void f64s(std::span<const double> v) {
        for (double x : v) f64(x);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}
    std::string_view raw(std::size_t n) {
        require(n <= bytes_.size() - pos_, ErrorKind::Parse,
                "unexpected end of file at byte " + std::to_string(pos_) + " (need " + std::to_string(n) + " more)");
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint64_t u64() {
        const auto s = raw(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t size() {
        const auto v = u64();
        require(v <= bytes_.size(), ErrorKind::Parse, "implausible length " + std::to_string(v));
        return static_cast<std::size_t>(v);
    }
    std::string str() { return std::string(raw(size())); }
    std::vector<double> f64s(std::size_t n) {
        require(n <= (bytes_.size() - pos_) / 8, ErrorKind::Parse,
                "unexpected end of file: " + std::to_string(n) + " values declared");
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::size_t checked_product(std::size_t a, std::size_t b) {
    require(b == 0 || a <= SIZE_MAX / b, ErrorKind::MalformedArray, "declared dimensions overflow");
    return a * b;
}

json parse_json(std::string_view bytes, std::string_view what) {
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string(what) + ": " + e.what());
    }
}

// Typed field access mapping every schema violation to a Parse error.
template <class T>
T field(const json& j, const char* key) {
    require(j.is_object() && j.contains(key), ErrorKind::Parse, std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("field '") + key + "': " + e.what());
    }
}

std::vector<double> double_array(const json& j, const char* key) {
    const auto& a = j.contains(key) ? j.at(key) : json();
    require(a.is_array(), ErrorKind::Parse, std::string("field '") + key + "' must be an array");
    std::vector<double> out;
    out.reserve(a.size());
    for (const auto& v : a) {
        require(v.is_number(), ErrorKind::Parse, std::string("field '") + key + "' holds a non-number");
        out.push_back(v.get<double>());
    }
    return out;
}

void check_version(std::uint64_t found, int supported, std::string_view what) {
    require(found == static_cast<std::uint64_t>(supported), ErrorKind::VersionMismatch,
            std::string(what) + " format_version " + std::to_string(found) + " is not supported (expected " +
                std::to_string(supported) + ")");
}

void check_length(std::size_t found, std::size_t expected, std::string_view what) {
    require(found == expected, ErrorKind::MalformedArray,
            std::string(what) + " has " + std::to_string(found) + " values, expected " + std::to_string(expected));
}

Network finish(Activation act, std::vector<Block> blocks) {
    require(!blocks.empty(), ErrorKind::MalformedArray, "model has no blocks");
    Network net(act, std::move(blocks));
    net.validate();
    return net;
}

LoadedModel decode_model_json(std::string_view bytes) {
    const json j = parse_json(bytes, "model file");
    require(j.is_object(), ErrorKind::Parse, "model file must be a JSON object");
    check_version(field<std::uint64_t>(j, "format_version"), kModelFormatVersion, "model");
    const Activation act = parse_activation(field<std::string>(j, "activation"));
    require(j.contains("blocks") && j["blocks"].is_array(), ErrorKind::Parse, "field 'blocks' must be an array");
    std::vector<Block> blocks;
    for (const auto& b : j["blocks"]) {
        const auto kind = field<std::string>(b, "kind");
        if (kind == "meanfield") {
            const auto d_in = field<std::size_t>(b, "d_in");
            const auto d_out = field<std::size_t>(b, "d_out");
            const auto m = field<std::size_t>(b, "m");
            require(d_in > 0 && d_out > 0 && m > 0, ErrorKind::MalformedArray, "mean-field dims must be positive");
            auto t0 = double_array(b, "theta0");
            auto t1 = double_array(b, "theta1");
            check_length(t0.size(), checked_product(m, d_in), "theta0");
            check_length(t1.size(), checked_product(m, d_out), "theta1");
            blocks.emplace_back(MeanFieldLayer(d_in, d_out, std::move(t0), std::move(t1)));
        } else if (kind == "linear") {
            const auto rows = field<std::size_t>(b, "rows");
            const auto cols = field<std::size_t>(b, "cols");
            require(rows > 0 && cols > 0, ErrorKind::MalformedArray, "linear dims must be positive");
            auto a = double_array(b, "a");
            check_length(a.size(), checked_product(rows, cols), "linear map");
            blocks.emplace_back(LinearMap(rows, cols, std::move(a)));
        } else {
            fail(ErrorKind::Parse, "unknown block kind '" + kind + "'");
        }
    }
    Provenance prov;
    if (j.contains("provenance")) {
        const auto& p = j["provenance"];
        prov.seed = field<std::uint64_t>(p, "seed");
        prov.config_hash = field<std::string>(p, "config_hash");
        prov.tool_version = field<std::string>(p, "tool_version");
    }
    return {finish(act, std::move(blocks)), prov};
}

LoadedModel decode_model_binary(std::string_view bytes) {
    ByteReader r(bytes);
    r.raw(kModelMagic.size());
    check_version(r.u64(), kModelFormatVersion, "model");
    const Activation act = parse_activation(r.str());
    Provenance prov;
    prov.seed = r.u64();
    prov.config_hash = r.str();
    prov.tool_version = r.str();
    const std::size_t count = r.size();
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < count; ++i) {
        const auto kind = r.u64();
        if (kind == 0) {
            const std::size_t d_in = r.size();
            const std::size_t d_out = r.size();
            const std::size_t m = r.size();
            require(d_in > 0 && d_out > 0 && m > 0, ErrorKind::MalformedArray, "mean-field dims must be positive");
            auto t0 = r.f64s(checked_product(m, d_in));
            auto t1 = r.f64s(checked_product(m, d_out));
            blocks.emplace_back(MeanFieldLayer(d_in, d_out, std::move(t0), std::move(t1)));
        } else if (kind == 1) {
            const std::size_t rows = r.size();
            const std::size_t cols = r.size();
            require(rows > 0 && cols > 0, ErrorKind::MalformedArray, "linear dims must be positive");
            auto a = r.f64s(checked_product(rows, cols));
            blocks.emplace_back(LinearMap(rows, cols, std::move(a)));
        } else {
            fail(ErrorKind::Parse, "unknown block kind " + std::to_string(kind));
        }
    }
    require(r.done(), ErrorKind::Parse, "trailing bytes after model");
    return {finish(act, std::move(blocks)), prov};
}

Dataset finish(Dataset d) {
    d.validate();
    return d;
}

Dataset decode_dataset_binary(std::string_view bytes) {
    ByteReader r(bytes);
    r.raw(kDataMagic.size());
    check_version(r.u64(), kDatasetFormatVersion, "dataset");
    Dataset d;
    d.dim = r.size();
    const std::size_t n = r.size();
    d.bound = r.f64();
    d.descriptor = r.str();
    d.xs = r.f64s(checked_product(n, d.dim));
    d.ys = r.f64s(n);
    require(r.done(), ErrorKind::Parse, "trailing bytes after dataset");
    return finish(std::move(d));
}

std::optional<std::string_view> header_value(std::string_view header, std::string_view key) {
    const std::string needle = "," + std::string(key) + "=";
    const auto pos = header.find(needle);
    if (pos == std::string_view::npos) return std::nullopt;
    const auto start = pos + needle.size();
    if (key == "descriptor") return header.substr(start);
    const auto end = header.find(',', start);
    return header.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
}

std::size_t parse_size(std::string_view text, std::string_view what) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require(ec == std::errc() && ptr == text.data() + text.size(), ErrorKind::Parse,
            std::string(what) + ": expected an integer, got '" + std::string(text) + "'");
    return v;
}

Dataset decode_dataset_csv(std::string_view bytes) {
    std::size_t pos = 0;
    auto next_line = [&]() -> std::optional<std::string_view> {
        if (pos >= bytes.size()) return std::nullopt;
        auto end = bytes.find('\n', pos);
        if (end == std::string_view::npos) end = bytes.size();
        auto line = bytes.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        return line;
    };
    const auto header = next_line();
    require(header && header->starts_with(kCsvTag), ErrorKind::Parse, "dataset CSV must start with " + std::string(kCsvTag));
    auto get = [&](std::string_view key) {
        const auto v = header_value(*header, key);
        require(v.has_value(), ErrorKind::Parse, "dataset header lacks '" + std::string(key) + "'");
        return *v;
    };
    const auto version = header_value(*header, "format_version");
    if (version) check_version(parse_size(*version, "format_version"), kDatasetFormatVersion, "dataset");
    Dataset d;
    d.dim = parse_size(get("d"), "d");
    const std::size_t n = parse_size(get("N"), "N");
    d.bound = parse_double(get("c"));
    d.descriptor = std::string(get("descriptor"));
    require(d.dim > 0, ErrorKind::MalformedArray, "dataset dim must be positive");
    d.xs.reserve(checked_product(n, d.dim));
    d.ys.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto line = next_line();
        require(line.has_value(), ErrorKind::Parse,
                "dataset declares " + std::to_string(n) + " rows, found " + std::to_string(i));
        std::size_t start = 0;
        std::size_t cols = 0;
        while (true) {
            const auto comma = line->find(',', start);
            const auto cell = line->substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            const double v = parse_double(cell);
            if (cols < d.dim) d.xs.push_back(v);
            else d.ys.push_back(v);
            ++cols;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        check_length(cols, d.dim + 1, "dataset row " + std::to_string(i));
    }
    while (const auto line = next_line())
        require(line->empty(), ErrorKind::Parse, "trailing rows after the declared " + std::to_string(n));
    return finish(std::move(d));
}

struct ReportRow {
    std::optional<std::uint64_t> n, m, big_m, seed, k;
    std::optional<double> term, total, ell_hat, predictor, residual;
};

std::array<std::string, 10> row_cells(const ReportRow& r) {
    auto i = [](const std::optional<std::uint64_t>& v) { return v ? std::to_string(*v) : std::string(); };
    auto d = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    return {i(r.n), i(r.m), i(r.big_m), i(r.seed), i(r.k), d(r.term), d(r.total), d(r.ell_hat), d(r.predictor),
            d(r.residual)};
}

json row_json(const ReportRow& r) {
    auto i = [](const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); };
    auto d = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return {{"n", i(r.n)},         {"m", i(r.m)},         {"M", i(r.big_m)},         {"seed", i(r.seed)},
            {"k", i(r.k)},         {"term", d(r.term)},   {"total", d(r.total)},     {"ell_hat", d(r.ell_hat)},
            {"predictor", d(r.predictor)}, {"residual", d(r.residual)}};
}

std::string render_rows(const std::vector<ReportRow>& rows, ReportFormat format, json extra) {
    if (format == ReportFormat::Csv) {
        std::string out;
        for (std::size_t c = 0; c < std::size(kReportColumns); ++c) {
            if (c) out += ',';
            out += kReportColumns[c];
        }
        out += '\n';
        for (const auto& row : rows) {
            const auto cells = row_cells(row);
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (c) out += ',';
                out += cells[c];
            }
            out += '\n';
        }
        return out;
    }
    json arr = json::array();
    for (const auto& row : rows) arr.push_back(row_json(row));
    extra["rows"] = std::move(arr);
    return extra.dump(2) + "\n";
}

ReportRow context_row(const ReportContext& ctx) {
    ReportRow r;
    r.n = ctx.n;
    r.m = ctx.m;
    r.big_m = ctx.big_m;
    r.seed = ctx.seed;
    return r;
}

} // namespace

std::string_view tool_version() { return WINFORGE_VERSION; }

void write_atomic(const fs::path& path, std::string_view bytes) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        require(static_cast<bool>(out), ErrorKind::Io, "write to " + tmp.string() + " failed");
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorKind::Io, "cannot rename into " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    require(!in.bad(), ErrorKind::Io, "read from " + path.string() + " failed");
    return ss.str();
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    require(EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) == 1,
            ErrorKind::Integrity, "SHA-256 failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xf];
    }
    return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

std::string format_double(double v) {
    require(std::isfinite(v), ErrorKind::NonFinite, "cannot format a non-finite value");
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require(ec == std::errc() && ptr == text.data() + text.size() && !text.empty(), ErrorKind::Parse,
            "expected a number, got '" + std::string(text) + "'");
    require(std::isfinite(v), ErrorKind::NonFinite, "non-finite number '" + std::string(text) + "'");
    return v;
}

std::string encode_model_json(const Network& net, const Provenance& prov) {
    json blocks = json::array();
    for (const auto& b : net.blocks()) {
        if (const auto* l = std::get_if<MeanFieldLayer>(&b)) {
            const auto t0 = l->theta0_flat();
            const auto t1 = l->theta1_flat();
            blocks.push_back({{"kind", "meanfield"},
                              {"d_in", l->d_in()},
                              {"d_out", l->d_out()},
                              {"m", l->width()},
                              {"theta0", std::vector<double>(t0.begin(), t0.end())},
                              {"theta1", std::vector<double>(t1.begin(), t1.end())}});
        } else {
            const auto& lin = std::get<LinearMap>(b);
            const auto a = lin.data();
            blocks.push_back({{"kind", "linear"},
                              {"rows", lin.rows()},
                              {"cols", lin.cols()},
                              {"a", std::vector<double>(a.begin(), a.end())}});
        }
    }
    json j = {{"format_version", kModelFormatVersion},
              {"activation", std::string(to_string(net.activation()))},
              {"blocks", std::move(blocks)},
              {"provenance",
               {{"seed", prov.seed}, {"config_hash", prov.config_hash}, {"tool_version", prov.tool_version}}}};
    return j.dump() + "\n";
}

std::string encode_model_binary(const Network& net, const Provenance& prov) {
    ByteWriter w;
    w.raw(kModelMagic);
    w.u64(kModelFormatVersion);
    w.str(to_string(net.activation()));
    w.u64(prov.seed);
    w.str(prov.config_hash);
    w.str(prov.tool_version);
    w.u64(net.size());
    for (const auto& b : net.blocks()) {
        if (const auto* l = std::get_if<MeanFieldLayer>(&b)) {
            w.u64(0);
            w.u64(l->d_in());
            w.u64(l->d_out());
            w.u64(l->width());
            w.f64s(l->theta0_flat());
            w.f64s(l->theta1_flat());
        } else {
            const auto& lin = std::get<LinearMap>(b);
            w.u64(1);
            w.u64(lin.rows());
            w.u64(lin.cols());
            w.f64s(lin.data());
        }
    }
    return w.take();
}

LoadedModel decode_model(std::string_view bytes) {
    if (bytes.starts_with(kModelMagic)) return decode_model_binary(bytes);
    return decode_model_json(bytes);
}

void save_model(const Network& net, const fs::path& path, const Provenance& prov, ModelFormat format) {
    net.validate();
    if (format == ModelFormat::Auto)
        format = net.parameter_count() > kBinaryModelThreshold ? ModelFormat::Binary : ModelFormat::Json;
    write_atomic(path, format == ModelFormat::Binary ? encode_model_binary(net, prov) : encode_model_json(net, prov));
}

LoadedModel load_model_full(const fs::path& path) { return decode_model(read_file(path)); }

Network load_model(const fs::path& path) { return load_model_full(path).net; }

std::string encode_dataset_csv(const Dataset& data) {
    data.validate();
    std::string out(kCsvTag);
    out += ",format_version=" + std::to_string(kDatasetFormatVersion) + ",d=" + std::to_string(data.dim) +
           ",N=" + std::to_string(data.size()) + ",c=" + format_double(data.bound) + ",descriptor=" + data.descriptor +
           "\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.x(i)) {
            out += format_double(v);
            out += ',';
        }
        out += format_double(data.y(i));
        out += '\n';
    }
    return out;
}

std::string encode_dataset_binary(const Dataset& data) {
    data.validate();
    ByteWriter w;
    w.raw(kDataMagic);
    w.u64(kDatasetFormatVersion);
    w.u64(data.dim);
    w.u64(data.size());
    w.f64(data.bound);
    w.str(data.descriptor);
    w.f64s(data.xs);
    w.f64s(data.ys);
    return w.take();
}

Dataset decode_dataset(std::string_view bytes) {
    if (bytes.starts_with(kDataMagic)) return decode_dataset_binary(bytes);
    return decode_dataset_csv(bytes);
}

void save_dataset(const Dataset& data, const fs::path& path, DataFormat format) {
    require(data.descriptor.find('\n') == std::string::npos, ErrorKind::InvalidArgument,
            "dataset descriptor must be a single line");
    if (format == DataFormat::Auto) format = path.extension() == ".wfd" ? DataFormat::Binary : DataFormat::Csv;
    write_atomic(path, format == DataFormat::Binary ? encode_dataset_binary(data) : encode_dataset_csv(data));
}

Dataset load_dataset(const fs::path& path) { return decode_dataset(read_file(path)); }

std::string encode_trace_csv(const TrainTrace& trace) {
    std::string out = "step,loss,eta\n";
    for (const auto& e : trace.entries)
        out += std::to_string(e.step) + "," + format_double(e.loss) + "," + format_double(e.eta) + "\n";
    return out;
}

void save_trace(const TrainTrace& trace, const fs::path& path) { write_atomic(path, encode_trace_csv(trace)); }

ReportFormat parse_report_format(std::string_view name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    fail(ErrorKind::InvalidArgument, "unknown report format '" + std::string(name) + "'");
}

std::string render_report(const HybridScan& scan, const ReportContext& ctx, ReportFormat format) {
    std::vector<ReportRow> rows;
    for (std::size_t k = 1; k <= scan.terms.size(); ++k) {
        auto r = context_row(ctx);
        r.k = k;
        r.term = scan.terms[k - 1];
        r.total = scan.total;
        r.ell_hat = scan.amplification[k - 1];
        rows.push_back(r);
    }
    json extra = {{"report", "hybrid_scan"},
                  {"total", scan.total},
                  {"term_sum", scan.term_sum()},
                  {"handoff", scan.handoff},
                  {"skipped", scan.skipped},
                  {"samples", scan.samples}};
    return render_rows(rows, format, std::move(extra));
}

std::string render_report(const LipschitzReport& report, const ReportContext& ctx, ReportFormat format) {
    std::vector<ReportRow> rows;
    for (std::size_t k = 1; k <= report.suffix.size(); ++k) {
        auto r = context_row(ctx);
        r.k = k;
        r.ell_hat = report.suffix[k - 1];
        rows.push_back(r);
    }
    json extra = {{"report", "lipschitz"},
                  {"estimator", std::string(to_string(report.kind))},
                  {"ell_b", report.ell_b},
                  {"probes", report.probes},
                  {"skipped", report.skipped}};
    return render_rows(rows, format, std::move(extra));
}

std::string render_report(const BoundReport& report, ReportFormat format) {
    std::vector<ReportRow> rows;
    for (const auto& b : report.rows) {
        ReportRow r;
        r.n = b.grid.n;
        r.m = b.grid.m;
        r.big_m = b.grid.big_m;
        r.seed = b.grid.seeds;
        r.total = b.grid.discrepancy;
        r.ell_hat = b.grid.ell_hat;
        r.predictor = b.predictor;
        r.residual = b.residual;
        rows.push_back(r);
    }
    json extra = {{"report", "bound"},
                  {"constant", report.constant},
                  {"width_slope", report.width_slope},
                  {"depth_slope", report.depth_slope}};
    return render_rows(rows, format, std::move(extra));
}

void write_report(const HybridScan& scan, const ReportContext& ctx, const fs::path& path, ReportFormat format) {
    write_atomic(path, render_report(scan, ctx, format));
}

void write_report(const LipschitzReport& report, const ReportContext& ctx, const fs::path& path,
                  ReportFormat format) {
    write_atomic(path, render_report(report, ctx, format));
}

void write_report(const BoundReport& report, const fs::path& path, ReportFormat format) {
    write_atomic(path, render_report(report, format));
}

std::string encode_plan_json(const MergePlan& plan) {
    json steps = json::array();
    for (const auto& s : plan.steps)
        steps.push_back({{"kind", std::string(to_string(s.kind))}, {"first", s.first}, {"second", s.second}});
    return json{{"format_version", 1}, {"steps", std::move(steps)}}.dump(2) + "\n";
}

MergePlan decode_plan_json(std::string_view bytes) {
    const json j = parse_json(bytes, "merge plan");
    check_version(field<std::uint64_t>(j, "format_version"), 1, "merge plan");
    require(j.contains("steps") && j["steps"].is_array(), ErrorKind::Parse, "field 'steps' must be an array");
    MergePlan plan;
    for (const auto& s : j["steps"]) {
        const auto kind = field<std::string>(s, "kind");
        MergeStep step{MergeStep::Kind::Fuse, field<std::size_t>(s, "first"), field<std::size_t>(s, "second")};
        if (kind == "absorb_pre") step.kind = MergeStep::Kind::AbsorbPre;
        else if (kind == "absorb_post") step.kind = MergeStep::Kind::AbsorbPost;
        else require(kind == "fuse", ErrorKind::Parse, "unknown merge step '" + kind + "'");
        plan.steps.push_back(step);
    }
    return plan;
}

void RunManifest::add(const std::string& name, const fs::path& dir, const std::string& relative) {
    artifacts.push_back({name, relative, sha256_file(dir / relative)});
}

std::string encode_manifest(const RunManifest& manifest) {
    json artifacts = json::array();
    for (const auto& a : manifest.artifacts)
        artifacts.push_back({{"name", a.name}, {"path", a.path}, {"sha256", a.sha256}});
    json config = manifest.config.empty() ? json::object() : parse_json(manifest.config, "manifest config");
    json j = {{"format_version", kManifestFormatVersion},
              {"master_seed", manifest.master_seed},
              {"config", std::move(config)},
              {"config_hash", manifest.config_hash},
              {"tool_version", manifest.tool_version},
              {"artifacts", std::move(artifacts)}};
    return j.dump(2) + "\n";
}

RunManifest decode_manifest(std::string_view bytes) {
    const json j = parse_json(bytes, "manifest");
    check_version(field<std::uint64_t>(j, "format_version"), kManifestFormatVersion, "manifest");
    RunManifest m;
    m.master_seed = field<std::uint64_t>(j, "master_seed");
    require(j.contains("config") && j["config"].is_object(), ErrorKind::Parse, "manifest config must be an object");
    m.config = j["config"].dump();
    m.config_hash = field<std::string>(j, "config_hash");
    m.tool_version = field<std::string>(j, "tool_version");
    require(j.contains("artifacts") && j["artifacts"].is_array(), ErrorKind::Parse, "manifest artifacts must be an array");
    for (const auto& a : j["artifacts"])
        m.artifacts.push_back({field<std::string>(a, "name"), field<std::string>(a, "path"), field<std::string>(a, "sha256")});
    return m;
}

void save_manifest(const RunManifest& manifest, const fs::path& path) { write_atomic(path, encode_manifest(manifest)); }

RunManifest load_manifest(const fs::path& path) { return decode_manifest(read_file(path)); }

ManifestCheck verify_manifest(const RunManifest& manifest, const fs::path& dir) {
    ManifestCheck check;
    for (const auto& a : manifest.artifacts) {
        const fs::path p = dir / a.path;
        std::error_code ec;
        if (!fs::is_regular_file(p, ec) || sha256_file(p) != a.sha256) check.mismatched.push_back(a.name);
    }
    return check;
}

} // namespace winforge
