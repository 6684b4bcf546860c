// Persistent datasets: branch CSV files with commented headers, JSON
// sidecars, and the canonical config hash that keys a run directory.
// Floats carry 17 significant digits so a written dataset reloads to the
// exact in-memory values.

#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ehd/bifurcation.hpp"
#include "ehd/config.hpp"
#include "ehd/version.hpp"

namespace ehd {

inline std::string format_float(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

/// Canonical hash of everything that determines a run's numbers.
inline std::string config_hash_hex(const RunConfig& cfg) {
    std::ostringstream os;
    os << format_float(cfg.physics.g) << '|' << format_float(cfg.physics.sigma) << '|'
       << format_float(cfg.physics.gamma) << '|' << format_float(cfg.physics.eps0) << '|'
       << format_float(cfg.physics.e0) << '|' << cfg.numerics.M << '|' << cfg.numerics.N << '|'
       << format_float(cfg.numerics.newton_tol) << '|' << cfg.numerics.modes << '|'
       << format_float(cfg.numerics.ds0) << '|' << format_float(cfg.numerics.max_step) << '|'
       << format_float(cfg.numerics.smax) << '|' << cfg.numerics.kmax << '|' << cfg.job.k << '|' << cfg.job.sign
       << '|' << cfg.job.l << '|' << format_float(cfg.job.delta) << '|' << format_float(cfg.job.direction) << '|'
       << format_float(cfg.job.mode_threshold) << '|' << format_float(cfg.job.lambda_min) << '|'
       << format_float(cfg.job.lambda_max) << '|' << cfg.job.lambda_count << '|'
       << format_float(cfg.job.gamma_min) << '|' << format_float(cfg.job.gamma_max) << '|' << cfg.job.gamma_count
       << '|' << cfg.job.seed << '|' << cfg.job.samples;
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(detail::fnv1a(os.str())));
    return buf;
}

inline std::string timestamp_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

struct BranchDatasetHeader {
    std::string version_string = version;
    std::string config_hash;
    std::string created;  ///< the only field exempt from determinism
    std::string kind = "primary";
    int k = 1;
    char sign = '+';
    int modes = 0;
};

struct BranchDataset {
    BranchDatasetHeader header;
    std::vector<BranchPoint> rows;
};

inline void write_branch_dataset(const std::filesystem::path& path, const Branch& branch, int modes,
                                 BranchDatasetHeader header) {
    header.modes = modes;
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open for writing: " + path.string());
    os << "# ehdlab branch dataset\n";
    os << "# version: " << header.version_string << "\n";
    os << "# config_hash: " << header.config_hash << "\n";
    os << "# created: " << header.created << "\n";
    os << "# kind: " << header.kind << "\n";
    os << "# k: " << header.k << "\n";
    os << "# sign: " << header.sign << "\n";
    os << "# modes: " << header.modes << "\n";
    os << "s,lambda,q0,residual_norm,tracked_eigenvalue";
    for (int n = 1; n <= modes; ++n)
        os << ",eta_" << n;
    os << "\n";
    for (const auto& pt : branch.points) {
        os << format_float(pt.s) << ',' << format_float(pt.state.lambda) << ',' << format_float(pt.state.q0)
           << ',' << format_float(pt.residual_norm) << ',' << format_float(pt.tracked_eigenvalue);
        const Vec a = pt.state.eta.modes(modes);
        for (int n = 0; n < modes; ++n)
            os << ',' << format_float(a[n]);
        os << "\n";
    }
    if (!os)
        throw std::runtime_error("write failed: " + path.string());
}

inline BranchDataset read_branch_dataset(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot open for reading: " + path.string());
    BranchDataset ds;
    std::string line;
    bool seen_columns = false;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        if (line.front() == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos)
                continue;
            const std::string key = line.substr(2, colon - 2);
            const std::string value = line.substr(colon + 2);
            if (key == "version")
                ds.header.version_string = value;
            else if (key == "config_hash")
                ds.header.config_hash = value;
            else if (key == "created")
                ds.header.created = value;
            else if (key == "kind")
                ds.header.kind = value;
            else if (key == "k")
                ds.header.k = std::stoi(value);
            else if (key == "sign")
                ds.header.sign = value.empty() ? '+' : value[0];
            else if (key == "modes")
                ds.header.modes = std::stoi(value);
            continue;
        }
        if (!seen_columns) {
            seen_columns = true;  // column header row
            continue;
        }
        std::vector<double> fields;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ','))
            fields.push_back(std::stod(cell));
        if (static_cast<int>(fields.size()) != 5 + ds.header.modes)
            throw std::runtime_error("malformed dataset row in " + path.string());
        BranchPoint pt;
        pt.s = fields[0];
        pt.state.lambda = fields[1];
        pt.state.q0 = fields[2];
        pt.residual_norm = fields[3];
        pt.tracked_eigenvalue = fields[4];
        Vec a(ds.header.modes);
        for (int n = 0; n < ds.header.modes; ++n)
            a[n] = fields[5 + n];
        pt.state.eta = SurfaceProfile::from_modes(a);
        ds.rows.push_back(pt);
    }
    return ds;
}

/// Rebuild a continuable Branch from a dataset (for resumed runs).
inline Branch branch_from_dataset(const BranchDataset& ds, const BifurcationPoint& origin) {
    Branch branch;
    branch.origin = origin;
    branch.kind = ds.header.kind == "secondary" ? BranchKind::secondary : BranchKind::primary;
    branch.points = ds.rows;
    return branch;
}

}  // namespace ehd
