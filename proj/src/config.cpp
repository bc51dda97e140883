#include "obmimo/errors.hpp"
#include "obmimo/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace obmimo {

const char* experiment_name(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::covariance:
        return "cov";
    case ExperimentKind::channel:
        return "chan";
    case ExperimentKind::sumrate:
        return "rate";
    }
    return "?";
}

const char* estimator_name(EstimatorKind e) {
    switch (e) {
    case EstimatorKind::unquantized:
        return "unquantized";
    case EstimatorKind::nondithered:
        return "nondithered";
    case EstimatorKind::dithered:
        return "dithered";
    case EstimatorKind::true_cov:
        return "true_cov";
    }
    return "?";
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep))
        out.push_back(trim(tok));
    if (!s.empty() && s.back() == sep)
        out.push_back("");
    return out;
}

[[noreturn]] void fail(const std::string& where, int line, const std::string& msg) {
    throw ConfigError(where + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& where, int line, const std::string& tok) {
    if (tok.empty())
        fail(where, line, "empty number");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(v))
        fail(where, line, "bad number '" + tok + "'");
    return v;
}

long long parse_int(const std::string& where, int line, const std::string& tok) {
    if (tok.empty())
        fail(where, line, "empty integer");
    char* end = nullptr;
    const long long v = std::strtoll(tok.c_str(), &end, 10);
    if (end != tok.c_str() + tok.size())
        fail(where, line, "bad integer '" + tok + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& where, int line, const std::string& tok) {
    if (tok.empty() || tok[0] == '-')
        fail(where, line, "bad seed '" + tok + "'");
    char* end = nullptr;
    const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
    if (end != tok.c_str() + tok.size())
        fail(where, line, "bad seed '" + tok + "'");
    return v;
}

// "lo:hi" pair of doubles.
void parse_range(const std::string& where, int line, const std::string& tok,
                 double& lo, double& hi) {
    const std::size_t colon = tok.find(':');
    if (colon == std::string::npos)
        fail(where, line, "expected 'min:max', got '" + tok + "'");
    lo = parse_double(where, line, trim(tok.substr(0, colon)));
    hi = parse_double(where, line, trim(tok.substr(colon + 1)));
}

// Antenna sets, 1-based inclusive in the file, 0-based in memory.
// "1:8" or "1:4,7,9:12".
std::vector<int> parse_mask(const std::string& where, int line, const std::string& tok) {
    std::vector<int> mask;
    for (const std::string& part : split(tok, ',')) {
        const std::size_t colon = part.find(':');
        long long lo, hi;
        if (colon == std::string::npos) {
            lo = hi = parse_int(where, line, part);
        } else {
            lo = parse_int(where, line, trim(part.substr(0, colon)));
            hi = parse_int(where, line, trim(part.substr(colon + 1)));
        }
        if (lo < 1 || hi < lo)
            fail(where, line, "bad antenna range '" + part + "'");
        for (long long m = lo; m <= hi; ++m)
            mask.push_back(int(m - 1));
    }
    std::sort(mask.begin(), mask.end());
    mask.erase(std::unique(mask.begin(), mask.end()), mask.end());
    return mask;
}

std::string emit_mask(const std::vector<int>& mask) {
    std::string out;
    std::size_t i = 0;
    while (i < mask.size()) {
        std::size_t j = i;
        while (j + 1 < mask.size() && mask[j + 1] == mask[j] + 1)
            ++j;
        if (!out.empty())
            out += ',';
        out += std::to_string(mask[i] + 1);
        if (j > i)
            out += ':' + std::to_string(mask[j] + 1);
        i = j + 1;
    }
    return out;
}

EstimatorKind parse_estimator(const std::string& where, int line, const std::string& tok) {
    if (tok == "unquantized")
        return EstimatorKind::unquantized;
    if (tok == "nondithered")
        return EstimatorKind::nondithered;
    if (tok == "dithered")
        return EstimatorKind::dithered;
    if (tok == "true_cov")
        return EstimatorKind::true_cov;
    fail(where, line, "unknown estimator '" + tok + "'");
}

ReceiverMethod parse_receiver(const std::string& where, int line, const std::string& tok) {
    if (tok == "mrc")
        return ReceiverMethod::mrc;
    if (tok == "zf")
        return ReceiverMethod::zf;
    if (tok == "blmmse")
        return ReceiverMethod::blmmse;
    fail(where, line, "unknown receiver '" + tok + "'");
}

} // namespace

ExperimentConfig desk_preset() {
    ExperimentConfig c;
    c.geometry.num_antennas = 32;
    c.geometry.common_paths = 3;
    c.geometry.common_power = 0.3;
    c.geometry.common_aoa_min_deg = -60.0;
    c.geometry.common_aoa_max_deg = 60.0;
    LocalClusterSpec l1;
    l1.num_paths = 3;
    l1.total_power = 0.7;
    l1.aoa_min_deg = -60.0;
    l1.aoa_max_deg = 0.0;
    l1.antenna_mask.resize(8);
    for (int i = 0; i < 8; ++i)
        l1.antenna_mask[std::size_t(i)] = i;
    LocalClusterSpec l2;
    l2.num_paths = 3;
    l2.total_power = 0.5;
    l2.aoa_min_deg = 0.0;
    l2.aoa_max_deg = 60.0;
    l2.antenna_mask.resize(8);
    for (int i = 0; i < 8; ++i)
        l2.antenna_mask[std::size_t(i)] = 24 + i;
    c.geometry.locals = {l1, l2};
    c.noise_power = 0.1;
    c.lambdas = {1.0, 1.5};
    c.sample_counts = {250, 1000, 4000};
    c.grid_size = 0;
    c.num_users = 4;
    c.num_geometries = 2;
    c.num_groups = 3;
    c.num_channel_draws = 50;
    c.estimators = {EstimatorKind::unquantized, EstimatorKind::nondithered,
                    EstimatorKind::dithered};
    c.receivers = {ReceiverMethod::mrc, ReceiverMethod::zf, ReceiverMethod::blmmse};
    c.seed = 1;
    return c;
}

ExperimentConfig paper_preset() {
    ExperimentConfig c = desk_preset();
    c.geometry.num_antennas = 256;
    c.geometry.locals[0].antenna_mask.resize(64);
    c.geometry.locals[1].antenna_mask.resize(64);
    for (int i = 0; i < 64; ++i) {
        c.geometry.locals[0].antenna_mask[std::size_t(i)] = i;
        c.geometry.locals[1].antenna_mask[std::size_t(i)] = 192 + i;
    }
    c.lambdas = {0.6, 1.0, 1.5, 2.0};
    c.sample_counts = {50, 100, 200, 500, 1000, 2000};
    c.num_geometries = 10;
    c.num_groups = 20;
    c.num_channel_draws = 100;
    return c;
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source_name,
                                   const ExperimentConfig& base) {
    ExperimentConfig cfg = base;
    std::map<std::string, std::pair<std::string, int>> kv;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos)
            raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(source_name, lineno, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            fail(source_name, lineno, "empty key");
        if (kv.count(key))
            fail(source_name, lineno, "duplicate key '" + key + "'");
        kv[key] = {value, lineno};
    }

    auto take = [&kv](const std::string& key) -> const std::pair<std::string, int>* {
        auto it = kv.find(key);
        if (it == kv.end())
            return nullptr;
        return &it->second;
    };
    auto consume = [&kv](const std::string& key) { kv.erase(key); };

    const std::string& where = source_name;
    if (const auto* v = take("m")) {
        cfg.geometry.num_antennas = int(parse_int(where, v->second, v->first));
        consume("m");
    }
    if (const auto* v = take("common_paths")) {
        cfg.geometry.common_paths = int(parse_int(where, v->second, v->first));
        consume("common_paths");
    }
    if (const auto* v = take("common_power")) {
        cfg.geometry.common_power = parse_double(where, v->second, v->first);
        consume("common_power");
    }
    if (const auto* v = take("common_aoa")) {
        parse_range(where, v->second, v->first, cfg.geometry.common_aoa_min_deg,
                    cfg.geometry.common_aoa_max_deg);
        consume("common_aoa");
    }
    if (const auto* v = take("local_clusters")) {
        const long long n = parse_int(where, v->second, v->first);
        if (n < 0 || n > 1024)
            fail(where, v->second, "bad local cluster count");
        cfg.geometry.locals.resize(std::size_t(n));
        consume("local_clusters");
    }
    for (std::size_t i = 0; i < cfg.geometry.locals.size(); ++i) {
        const std::string idx = std::to_string(i + 1);
        LocalClusterSpec& l = cfg.geometry.locals[i];
        if (const auto* v = take("local_paths_" + idx)) {
            l.num_paths = int(parse_int(where, v->second, v->first));
            consume("local_paths_" + idx);
        }
        if (const auto* v = take("local_power_" + idx)) {
            l.total_power = parse_double(where, v->second, v->first);
            consume("local_power_" + idx);
        }
        if (const auto* v = take("local_aoa_" + idx)) {
            parse_range(where, v->second, v->first, l.aoa_min_deg, l.aoa_max_deg);
            consume("local_aoa_" + idx);
        }
        if (const auto* v = take("local_mask_" + idx)) {
            l.antenna_mask = parse_mask(where, v->second, v->first);
            consume("local_mask_" + idx);
        }
    }
    if (const auto* v = take("snr_db")) {
        if (take("n0"))
            fail(where, v->second, "give either snr_db or n0, not both");
        cfg.noise_power = std::pow(10.0, -parse_double(where, v->second, v->first) / 10.0);
        consume("snr_db");
    }
    if (const auto* v = take("n0")) {
        cfg.noise_power = parse_double(where, v->second, v->first);
        consume("n0");
    }
    if (const auto* v = take("lambdas")) {
        cfg.lambdas.clear();
        for (const std::string& tok : split(v->first, ','))
            cfg.lambdas.push_back(parse_double(where, v->second, tok));
        consume("lambdas");
    }
    if (const auto* v = take("samples")) {
        cfg.sample_counts.clear();
        for (const std::string& tok : split(v->first, ','))
            cfg.sample_counts.push_back(parse_int(where, v->second, tok));
        consume("samples");
    }
    if (const auto* v = take("grid_size")) {
        cfg.grid_size = int(parse_int(where, v->second, v->first));
        consume("grid_size");
    }
    if (const auto* v = take("grid_spacing")) {
        if (v->first == "angle")
            cfg.grid_spacing = GridSpacing::uniform_angle;
        else if (v->first == "sine")
            cfg.grid_spacing = GridSpacing::uniform_sine;
        else
            fail(where, v->second, "grid_spacing must be 'angle' or 'sine'");
        consume("grid_spacing");
    }
    if (const auto* v = take("users")) {
        cfg.num_users = int(parse_int(where, v->second, v->first));
        consume("users");
    }
    if (const auto* v = take("geometries")) {
        cfg.num_geometries = int(parse_int(where, v->second, v->first));
        consume("geometries");
    }
    if (const auto* v = take("groups")) {
        cfg.num_groups = int(parse_int(where, v->second, v->first));
        consume("groups");
    }
    if (const auto* v = take("channel_draws")) {
        cfg.num_channel_draws = int(parse_int(where, v->second, v->first));
        consume("channel_draws");
    }
    if (const auto* v = take("estimators")) {
        cfg.estimators.clear();
        for (const std::string& tok : split(v->first, ','))
            cfg.estimators.push_back(parse_estimator(where, v->second, tok));
        consume("estimators");
    }
    if (const auto* v = take("receivers")) {
        cfg.receivers.clear();
        for (const std::string& tok : split(v->first, ','))
            cfg.receivers.push_back(parse_receiver(where, v->second, tok));
        consume("receivers");
    }
    if (const auto* v = take("seed")) {
        cfg.seed = parse_u64(where, v->second, v->first);
        consume("seed");
    }

    if (!kv.empty()) {
        const auto& first = *kv.begin();
        fail(where, first.second.second, "unknown key '" + first.first + "'");
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path, const ExperimentConfig& base) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path, base);
}

std::string emit_config(const ExperimentConfig& cfg) {
    std::string out;
    auto line = [&out](const std::string& key, const std::string& value) {
        out += key + " = " + value + "\n";
    };
    auto join_doubles = [](const std::vector<double>& v) {
        std::string s;
        for (double x : v) {
            if (!s.empty())
                s += ',';
            s += format_double(x);
        }
        return s;
    };

    line("m", std::to_string(cfg.geometry.num_antennas));
    line("common_paths", std::to_string(cfg.geometry.common_paths));
    line("common_power", format_double(cfg.geometry.common_power));
    line("common_aoa", format_double(cfg.geometry.common_aoa_min_deg) + ":" +
                           format_double(cfg.geometry.common_aoa_max_deg));
    line("local_clusters", std::to_string(cfg.geometry.locals.size()));
    for (std::size_t i = 0; i < cfg.geometry.locals.size(); ++i) {
        const std::string idx = std::to_string(i + 1);
        const LocalClusterSpec& l = cfg.geometry.locals[i];
        line("local_paths_" + idx, std::to_string(l.num_paths));
        line("local_power_" + idx, format_double(l.total_power));
        line("local_aoa_" + idx,
             format_double(l.aoa_min_deg) + ":" + format_double(l.aoa_max_deg));
        line("local_mask_" + idx, emit_mask(l.antenna_mask));
    }
    line("n0", format_double(cfg.noise_power));
    line("lambdas", join_doubles(cfg.lambdas));
    {
        std::string s;
        for (long long n : cfg.sample_counts) {
            if (!s.empty())
                s += ',';
            s += std::to_string(n);
        }
        line("samples", s);
    }
    line("grid_size", std::to_string(cfg.grid_size));
    line("grid_spacing",
         cfg.grid_spacing == GridSpacing::uniform_angle ? "angle" : "sine");
    line("users", std::to_string(cfg.num_users));
    line("geometries", std::to_string(cfg.num_geometries));
    line("groups", std::to_string(cfg.num_groups));
    line("channel_draws", std::to_string(cfg.num_channel_draws));
    {
        std::string s;
        for (EstimatorKind e : cfg.estimators) {
            if (!s.empty())
                s += ',';
            s += estimator_name(e);
        }
        line("estimators", s);
    }
    {
        std::string s;
        for (ReceiverMethod r : cfg.receivers) {
            if (!s.empty())
                s += ',';
            s += receiver_name(r);
        }
        line("receivers", s);
    }
    line("seed", std::to_string(cfg.seed));
    return out;
}

void validate_config(const ExperimentConfig& cfg, ExperimentKind kind) {
    try {
        cfg.geometry.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (!(cfg.noise_power >= 0.0) || !std::isfinite(cfg.noise_power))
        throw ConfigError("noise power must be finite and >= 0");
    if (cfg.sample_counts.empty())
        throw ConfigError("at least one sample count is required");
    for (long long n : cfg.sample_counts)
        if (n < 1)
            throw ConfigError("sample counts must be >= 1");
    if (cfg.num_geometries < 1 || cfg.num_groups < 1)
        throw ConfigError("geometries and groups must be >= 1");
    if (cfg.grid_size < 0)
        throw ConfigError("grid_size must be >= 0");
    if (cfg.estimators.empty())
        throw ConfigError("at least one estimator is required");
    const bool has_dithered =
        std::find(cfg.estimators.begin(), cfg.estimators.end(),
                  EstimatorKind::dithered) != cfg.estimators.end();
    if (has_dithered) {
        if (cfg.lambdas.empty())
            throw ConfigError("dithered estimator requires at least one lambda");
        for (double l : cfg.lambdas)
            if (!(l > 0.0) || !std::isfinite(l))
                throw ConfigError("lambdas must be positive");
    }
    for (EstimatorKind e : cfg.estimators) {
        if (e == EstimatorKind::true_cov && kind != ExperimentKind::sumrate)
            throw ConfigError("true_cov is only meaningful for rate-exp "
                              "(chan-exp always records the oracle row)");
    }
    if (kind != ExperimentKind::covariance && cfg.num_channel_draws < 1)
        throw ConfigError("channel_draws must be >= 1");
    if (kind == ExperimentKind::sumrate) {
        if (cfg.num_users < 1)
            throw ConfigError("rate-exp needs users >= 1");
        if (cfg.num_users > cfg.geometry.num_antennas)
            throw ConfigError("rate-exp needs users <= antennas");
        if (cfg.receivers.empty())
            throw ConfigError("rate-exp needs at least one receiver");
    }
}

} // namespace obmimo
