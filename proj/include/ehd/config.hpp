// Run configuration: key = value sections in plain text, aggregated
// validation with line-anchored messages, documented defaults for every
// omitted field.

#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ehd/bifurcation.hpp"
#include "ehd/params.hpp"

namespace ehd {

struct RunConfig {
    WaveParams physics{};

    struct Numerics {
        int M = 64;
        int N = 48;
        double newton_tol = 1e-10;
        int modes = 0;          // retained cosine modes K; 0 means M/2 - 1
        double ds0 = 1e-3;
        double max_step = 4e-3;
        double smax = 1.5e-2;
        int kmax = 8;
    } numerics;

    struct Job {
        int k = 1;
        char sign = '+';
        int l = 1;                   // partner mode for secondary hunts
        double delta = 1e-2;         // relative detuning of E0^2 off the resonance
        double direction = 1.0;
        double mode_threshold = 1e-4;
        double lambda_min = 0.0;
        double lambda_max = 2.0;
        int lambda_count = 101;
        double gamma_min = 0.5;
        double gamma_max = 4.0;
        int gamma_count = 8;
        std::uint64_t seed = 12345;
        int samples = 50;            // uniqueness-probe starts
    } job;

    std::string outdir = "out";

    ContinuationOptions continuation() const {
        ContinuationOptions opts;
        opts.tol = numerics.newton_tol;
        opts.ds0 = numerics.ds0;
        opts.ds_max = numerics.max_step;
        opts.smax = numerics.smax;
        opts.mode_count = numerics.modes;
        opts.direction = job.direction;
        return opts;
    }
};

struct ConfigIssue {
    int line = 0;  ///< 1-based; 0 when not tied to a line
    bool error = true;
    std::string message;
};

struct ConfigParse {
    std::optional<RunConfig> config;
    std::vector<ConfigIssue> issues;

    bool ok() const { return config.has_value(); }
    std::string render() const {
        std::ostringstream os;
        for (const auto& issue : issues) {
            os << (issue.error ? "error" : "warning");
            if (issue.line > 0)
                os << " (line " << issue.line << ")";
            os << ": " << issue.message << "\n";
        }
        return os.str();
    }
};

namespace detail {

inline std::string config_trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

}  // namespace detail

/// Parse and validate a configuration text.  Errors are aggregated, not
/// fail-fast; unknown keys warn for forward compatibility.
inline ConfigParse validate_config(const std::string& text) {
    ConfigParse out;
    RunConfig cfg;
    std::vector<ConfigIssue>& issues = out.issues;

    std::map<std::string, std::map<std::string, std::pair<std::string, int>>> raw;
    {
        std::istringstream is(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line = line.substr(0, hash);
            line = detail::config_trim(line);
            if (line.empty())
                continue;
            if (line.front() == '[') {
                if (line.back() != ']') {
                    issues.push_back({lineno, true, "unterminated section header"});
                    continue;
                }
                section = detail::config_trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                issues.push_back({lineno, true, "expected key = value"});
                continue;
            }
            const std::string key = detail::config_trim(line.substr(0, eq));
            const std::string value = detail::config_trim(line.substr(eq + 1));
            if (key.empty()) {
                issues.push_back({lineno, true, "empty key"});
                continue;
            }
            if (section.empty()) {
                issues.push_back({lineno, true, "key '" + key + "' appears before any [section]"});
                continue;
            }
            raw[section][key] = {value, lineno};
        }
    }

    auto take = [&](const std::string& section, const std::string& key) -> std::optional<std::pair<std::string, int>> {
        auto sit = raw.find(section);
        if (sit == raw.end())
            return std::nullopt;
        auto kit = sit->second.find(key);
        if (kit == sit->second.end())
            return std::nullopt;
        auto val = kit->second;
        sit->second.erase(kit);
        return val;
    };

    auto num = [&](const std::string& sec, const std::string& key, double& slot) {
        if (auto v = take(sec, key)) {
            try {
                size_t pos = 0;
                slot = std::stod(v->first, &pos);
                if (pos != v->first.size())
                    issues.push_back({v->second, true, sec + "." + key + ": trailing characters in number"});
            } catch (const std::exception&) {
                issues.push_back({v->second, true, sec + "." + key + ": not a number: '" + v->first + "'"});
            }
        }
    };
    auto integer = [&](const std::string& sec, const std::string& key, int& slot) {
        double d = slot;
        const size_t before = issues.size();
        num(sec, key, d);
        if (issues.size() == before) {
            if (d != static_cast<int>(d))
                issues.push_back({0, true, sec + "." + key + ": expected an integer"});
            else
                slot = static_cast<int>(d);
        }
    };

    num("physics", "g", cfg.physics.g);
    num("physics", "sigma", cfg.physics.sigma);
    num("physics", "gamma", cfg.physics.gamma);
    num("physics", "eps0", cfg.physics.eps0);
    num("physics", "e0", cfg.physics.e0);

    integer("numerics", "M", cfg.numerics.M);
    integer("numerics", "N", cfg.numerics.N);
    num("numerics", "newton_tol", cfg.numerics.newton_tol);
    integer("numerics", "modes", cfg.numerics.modes);
    num("numerics", "ds0", cfg.numerics.ds0);
    num("numerics", "max_step", cfg.numerics.max_step);
    num("numerics", "smax", cfg.numerics.smax);
    integer("numerics", "kmax", cfg.numerics.kmax);

    integer("job", "k", cfg.job.k);
    if (auto v = take("job", "sign")) {
        if (v->first == "+" || v->first == "plus")
            cfg.job.sign = '+';
        else if (v->first == "-" || v->first == "minus")
            cfg.job.sign = '-';
        else
            issues.push_back({v->second, true, "job.sign: expected '+' or '-', got '" + v->first + "'"});
    }
    integer("job", "l", cfg.job.l);
    num("job", "delta", cfg.job.delta);
    num("job", "direction", cfg.job.direction);
    num("job", "mode_threshold", cfg.job.mode_threshold);
    num("job", "lambda_min", cfg.job.lambda_min);
    num("job", "lambda_max", cfg.job.lambda_max);
    integer("job", "lambda_count", cfg.job.lambda_count);
    num("job", "gamma_min", cfg.job.gamma_min);
    num("job", "gamma_max", cfg.job.gamma_max);
    integer("job", "gamma_count", cfg.job.gamma_count);
    if (auto v = take("job", "seed")) {
        try {
            cfg.job.seed = std::stoull(v->first);
        } catch (const std::exception&) {
            issues.push_back({v->second, true, "job.seed: not an unsigned integer"});
        }
    }
    integer("job", "samples", cfg.job.samples);

    if (auto v = take("output", "dir")) {
        if (v->first.empty())
            issues.push_back({v->second, true, "output.dir: empty path"});
        else
            cfg.outdir = v->first;
    }

    // whatever remains was not consumed: warn, do not fail
    for (const auto& [section, keys] : raw)
        for (const auto& [key, val] : keys)
            issues.push_back({val.second, false, "unknown key '" + section + "." + key + "' ignored"});

    auto constraint = [&](bool okflag, const std::string& message) {
        if (!okflag)
            issues.push_back({0, true, message});
    };
    constraint(std::isfinite(cfg.physics.g) && cfg.physics.g > 0.0, "physics.g: must be finite and > 0");
    constraint(std::isfinite(cfg.physics.sigma) && cfg.physics.sigma >= 0.0,
               "physics.sigma: must be finite and >= 0");
    constraint(std::isfinite(cfg.physics.eps0) && cfg.physics.eps0 > 0.0, "physics.eps0: must be finite and > 0");
    constraint(std::isfinite(cfg.physics.gamma), "physics.gamma: must be finite");
    constraint(std::isfinite(cfg.physics.e0), "physics.e0: must be finite");
    constraint(cfg.numerics.M >= 8 && cfg.numerics.M % 2 == 0, "numerics.M: must be even and >= 8");
    constraint(cfg.numerics.N >= 8, "numerics.N: must be >= 8");
    constraint(cfg.numerics.newton_tol > 0.0 && cfg.numerics.newton_tol <= 1e-4,
               "numerics.newton_tol: must lie in (0, 1e-4]");
    constraint(cfg.numerics.modes >= 0 && cfg.numerics.modes <= cfg.numerics.M / 2 - 1,
               "numerics.modes: must lie in [0, M/2 - 1]");
    constraint(cfg.numerics.ds0 > 0.0, "numerics.ds0: must be > 0");
    constraint(cfg.numerics.max_step >= cfg.numerics.ds0 / 256.0, "numerics.max_step: too small against ds0");
    constraint(cfg.numerics.smax >= 0.0, "numerics.smax: must be >= 0");
    constraint(cfg.numerics.kmax >= 0, "numerics.kmax: must be >= 0");
    constraint(cfg.job.k >= 1, "job.k: must be >= 1");
    constraint(cfg.job.l >= 1, "job.l: must be >= 1");
    constraint(cfg.job.lambda_count >= 0, "job.lambda_count: must be >= 0");
    constraint(cfg.job.gamma_count >= 1, "job.gamma_count: must be >= 1");
    constraint(cfg.job.samples >= 1, "job.samples: must be >= 1");
    constraint(std::abs(cfg.job.delta) < 1.0, "job.delta: |delta| must be < 1");

    bool any_error = false;
    for (const auto& issue : issues)
        any_error = any_error || issue.error;
    if (!any_error)
        out.config = cfg;
    return out;
}

}  // namespace ehd
