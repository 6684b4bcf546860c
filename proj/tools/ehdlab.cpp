// ehdlab: command-line laboratory for periodic traveling
// electrohydrodynamic capillary-gravity waves with constant vorticity.
//
// Subcommands write one dataset directory per run, keyed by the config
// hash: CSV tables for sweeps and branches, JSON sidecars for scalars.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 no secondary event found.

#include <CLI11.hpp>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <thread>

#include "ehd/ehd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ehd;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config_error = 2;
constexpr int exit_numerical_failure = 3;
constexpr int exit_no_event = 4;

struct RunContext {
    RunConfig cfg;
    std::string hash;
    fs::path dir;  ///< <outdir>/<subcommand>-<hash8>
};

RunContext make_context(const RunConfig& cfg, const std::string& subcommand) {
    RunContext ctx;
    ctx.cfg = cfg;
    ctx.hash = config_hash_hex(cfg);
    ctx.dir = fs::path(cfg.outdir) / (subcommand + "-" + ctx.hash.substr(0, 8));
    fs::create_directories(ctx.dir);
    return ctx;
}

json physics_json(const WaveParams& p) {
    return json{{"g", p.g}, {"sigma", p.sigma}, {"gamma", p.gamma}, {"eps0", p.eps0}, {"e0", p.e0}};
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open for writing: " + path.string());
    os << j.dump(2) << "\n";
}

json sidecar_base(const RunContext& ctx) {
    return json{{"version", version},
                {"config_hash", ctx.hash},
                {"created", timestamp_now()},
                {"physics", physics_json(ctx.cfg.physics)}};
}

BranchDatasetHeader dataset_header(const RunContext& ctx, const std::string& kind, int k, char sign, int modes) {
    BranchDatasetHeader h;
    h.config_hash = ctx.hash;
    h.created = timestamp_now();
    h.kind = kind;
    h.k = k;
    h.sign = sign;
    h.modes = modes;
    return h;
}

const BifurcationPoint* select_point(const std::vector<BifurcationPoint>& pts, int k, char sign) {
    for (const auto& bp : pts)
        if (bp.k == k && bp.sign == (sign == '+' ? BranchSign::plus : BranchSign::minus))
            return &bp;
    return nullptr;
}

int worker_count(int requested) {
    if (const char* env = std::getenv("EHDLAB_JOBS")) {
        const int n = std::atoi(env);
        if (n >= 1)
            return n;
    }
    if (requested >= 1)
        return requested;
    return 1;
}

// ---------------------------------------------------------------------------

int cmd_dispersion(const RunConfig& cfg) {
    const RunContext ctx = make_context(cfg, "dispersion");
    const WaveParams& p = cfg.physics;

    std::ofstream csv(ctx.dir / "dispersion.csv");
    csv << "k,lambda,D_k\n";
    for (int k = 1; k <= cfg.numerics.kmax; ++k) {
        for (int i = 0; i < cfg.job.lambda_count; ++i) {
            const double lambda =
                cfg.job.lambda_count == 1
                    ? cfg.job.lambda_min
                    : cfg.job.lambda_min + (cfg.job.lambda_max - cfg.job.lambda_min) * i / (cfg.job.lambda_count - 1);
            csv << k << ',' << format_float(lambda) << ',' << format_float(dispersion(k, lambda, p)) << "\n";
        }
    }

    json sidecar = sidecar_base(ctx);
    sidecar["admissible_field"] = cfg.numerics.kmax >= 1 ? admissible_field(p, cfg.numerics.kmax) : true;
    if (!sidecar["admissible_field"].get<bool>())
        sidecar["warnings"] = json::array({"field strength violates the admissibility condition"});
    json roots = json::array();
    for (int k = 1; k <= cfg.numerics.kmax; ++k) {
        json entry{{"k", k}};
        try {
            if (const auto s = bifurcation_speeds(k, p)) {
                entry["lambda_plus"] = s->plus;
                entry["lambda_minus"] = s->minus;
            } else {
                entry["real_roots"] = false;
            }
        } catch (const std::domain_error& e) {
            entry["degenerate"] = e.what();
        }
        roots.push_back(entry);
    }
    sidecar["roots"] = roots;
    write_json(ctx.dir / "roots.json", sidecar);
    std::cout << ctx.dir.string() << "\n";
    return exit_ok;
}

int cmd_points(const RunConfig& cfg) {
    const RunContext ctx = make_context(cfg, "points");
    StripGridPair grids(cfg.numerics.M, cfg.numerics.N);
    const auto pts = find_bifurcation_points(cfg.physics, cfg.numerics.kmax, grids, cfg.continuation());

    std::ofstream csv(ctx.dir / "points.csv");
    csv << "k,sign,lambda_star,kernel_dim,partner_mode\n";
    for (const auto& bp : pts)
        csv << bp.k << ',' << to_string(bp.sign) << ',' << format_float(bp.lambda_star) << ',' << bp.kernel_dim
            << ',' << (bp.partner_mode ? std::to_string(*bp.partner_mode) : "") << "\n";

    json sidecar = sidecar_base(ctx);
    sidecar["count"] = pts.size();
    write_json(ctx.dir / "points.json", sidecar);
    std::cout << ctx.dir.string() << "\n";
    return exit_ok;
}

int cmd_branch(const RunConfig& cfg, bool resume) {
    const RunContext ctx = make_context(cfg, "branch");
    StripGridPair grids(cfg.numerics.M, cfg.numerics.N);
    ContinuationOptions opts = cfg.continuation();

    const auto pts = find_bifurcation_points(cfg.physics, std::max(cfg.job.k, 1), grids, opts);
    const BifurcationPoint* bp = select_point(pts, cfg.job.k, cfg.job.sign);
    if (!bp) {
        std::cerr << "no bifurcation point (k=" << cfg.job.k << ", sign=" << cfg.job.sign << ")\n";
        return exit_numerical_failure;
    }
    if (bp->kernel_dim != 1) {
        std::cerr << "kernel is " << bp->kernel_dim << "-dimensional; perturb e0 and hunt the secondary branch\n";
        return exit_numerical_failure;
    }

    const fs::path dataset_path = ctx.dir / "branch.csv";
    Branch branch;
    int resumed_rows = 0;
    if (resume && fs::exists(dataset_path)) {
        const BranchDataset ds = read_branch_dataset(dataset_path);
        if (ds.header.config_hash != ctx.hash) {
            std::cerr << "refusing to resume: dataset was produced by config " << ds.header.config_hash << "\n";
            return exit_config_error;
        }
        branch = branch_from_dataset(ds, *bp);
        resumed_rows = static_cast<int>(ds.rows.size());
    }
    try {
        if (branch.points.size() >= 2)
            extend_branch(branch, cfg.physics, grids, opts);
        else
            branch = continue_branch(*bp, cfg.physics, grids, opts);
    } catch (const SolverError& e) {
        std::cerr << "continuation failed: " << e.what() << "\n";
        return exit_numerical_failure;
    }

    ContinuationProblem prob(cfg.physics, grids, opts);
    write_branch_dataset(dataset_path, branch, prob.mode_count(),
                         dataset_header(ctx, "primary", bp->k, cfg.job.sign, prob.mode_count()));

    json summary = sidecar_base(ctx);
    summary["k"] = bp->k;
    summary["sign"] = std::string(1, cfg.job.sign);
    summary["lambda_star"] = bp->lambda_star;
    summary["points"] = branch.points.size();
    summary["resumed_rows"] = resumed_rows;
    try {
        const auto dir = branch_direction(*bp, cfg.physics, grids, opts.solve);
        summary["lambda_d0"] = dir.lambda_d0;
        summary["lambda_dd0"] = dir.lambda_dd0;
        summary["lambda_dd0_series"] = dir.lambda_dd0_series;
    } catch (const SolverError& e) {
        summary["direction_error"] = e.what();
    }
    if (branch.points.size() >= 4) {
        const int n = static_cast<int>(branch.points.size());
        Eigen::MatrixXd V(n, 3);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            const double s = branch.points[i].s;
            V(i, 0) = 1.0;
            V(i, 1) = s * s;
            V(i, 2) = s * s * s * s;
            y[i] = branch.points[i].state.lambda;
        }
        const Eigen::VectorXd c = V.householderQr().solve(y);
        summary["fit"] = {{"lambda0", c[0]}, {"lambda_dd0", 2.0 * c[1]}, {"quartic", 24.0 * c[2]}};
    }
    json events = json::array();
    for (const auto& ev : branch.events)
        events.push_back({{"s", ev.s}, {"note", ev.note}});
    summary["events"] = events;
    write_json(ctx.dir / "summary.json", summary);
    std::cout << ctx.dir.string() << "\n";
    return exit_ok;
}

int cmd_stability(const RunConfig& cfg) {
    const RunContext ctx = make_context(cfg, "stability");
    StripGridPair grids(cfg.numerics.M, cfg.numerics.N);
    ContinuationOptions opts = cfg.continuation();
    const auto pts = find_bifurcation_points(cfg.physics, std::max(cfg.job.k, 1), grids, opts);
    const BifurcationPoint* bp = select_point(pts, cfg.job.k, cfg.job.sign);
    if (!bp) {
        std::cerr << "no bifurcation point (k=" << cfg.job.k << ", sign=" << cfg.job.sign << ")\n";
        return exit_numerical_failure;
    }

    // trivial-branch classification on a window bracketing only this point
    double lo = cfg.job.lambda_min, hi = cfg.job.lambda_max;
    if (!(lo < bp->lambda_star && bp->lambda_star < hi)) {
        const double h = 0.02 * std::max(1.0, std::abs(bp->lambda_star));
        lo = bp->lambda_star - h;
        hi = bp->lambda_star + h;
    }
    std::ofstream csv(ctx.dir / "trivial.csv");
    csv << "lambda,crossing_eigenvalue,label\n";
    const int samples = std::max(cfg.job.lambda_count, 2);
    try {
        const auto labels = classify_trivial(lo, hi, samples, *bp, cfg.physics, cfg.numerics.kmax);
        for (const auto& [lambda, lab] : labels)
            csv << format_float(lambda) << ',' << format_float(lab.tracked_eigenvalue) << ','
                << to_string(lab.label) << "\n";
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return exit_config_error;
    }

    // spectrum sidecar plus the branch-side classification
    json sidecar = sidecar_base(ctx);
    sidecar["crossing_slope"] = crossing_slope(*bp, cfg.physics);
    const auto spectrum = trivial_spectrum(bp->lambda_star, cfg.physics, cfg.numerics.kmax);
    sidecar["spectrum_at_lambda_star"] = spectrum.eigenvalues;
    Branch branch = continue_branch(*bp, cfg.physics, grids, opts);
    const auto labels = classify_branch(branch, 1e-7);
    json rows = json::array();
    for (size_t i = 0; i < branch.points.size(); ++i)
        rows.push_back({{"s", branch.points[i].s},
                        {"mu", branch.points[i].tracked_eigenvalue},
                        {"label", to_string(labels[i].label)}});
    sidecar["branch"] = rows;
    write_json(ctx.dir / "stability.json", sidecar);
    std::cout << ctx.dir.string() << "\n";
    return exit_ok;
}

int cmd_resonance_atlas(const RunConfig& cfg) {
    const RunContext ctx = make_context(cfg, "resonance-atlas");
    if (cfg.job.gamma_min <= 0.0 && cfg.job.gamma_max >= 0.0) {
        std::cerr << "resonance-atlas: the gamma grid must exclude 0 (the resonance field divides by gamma^2)\n";
        return exit_config_error;
    }
    std::ofstream csv(ctx.dir / "atlas.csv");
    csv << "k,l,gamma,E_kl,condition_holds,det1,det2\n";
    for (int k = 1; k <= cfg.numerics.kmax; ++k) {
        for (int l = 1; l <= cfg.numerics.kmax; ++l) {
            if (k == l)
                continue;
            for (int i = 0; i < cfg.job.gamma_count; ++i) {
                WaveParams p = cfg.physics;
                p.gamma = cfg.job.gamma_count == 1 ? cfg.job.gamma_min
                                                   : cfg.job.gamma_min + (cfg.job.gamma_max - cfg.job.gamma_min) *
                                                                             i / (cfg.job.gamma_count - 1);
                const auto e = resonance_field(k, l, p);
                csv << k << ',' << l << ',' << format_float(p.gamma) << ',';
                if (!e) {
                    csv << ",false,,\n";
                    continue;
                }
                csv << format_float(*e) << ",true,";
                try {
                    const auto rec = nondegeneracy_checks(k, l, p);
                    csv << format_float(rec.det1) << ',' << format_float(rec.det2) << "\n";
                } catch (const std::exception&) {
                    csv << ",\n";
                }
            }
        }
    }
    write_json(ctx.dir / "atlas.json", sidecar_base(ctx));
    std::cout << ctx.dir.string() << "\n";
    return exit_ok;
}

int cmd_secondary(const RunConfig& cfg) {
    const RunContext ctx = make_context(cfg, "secondary");
    const int k = cfg.job.k, l = cfg.job.l;
    WaveParams p = cfg.physics;

    json report = sidecar_base(ctx);
    const auto e = resonance_field(k, l, p);
    if (!e) {
        std::cerr << "no resonance: condition fails for (k,l)=(" << k << "," << l << ") at gamma=" << p.gamma
                  << "\n";
        return exit_numerical_failure;
    }
    ResonanceRecord rec;
    try {
        rec = nondegeneracy_checks(k, l, p);
    } catch (const SolverError& err) {
        std::cerr << err.what() << "\n";
        return exit_numerical_failure;
    }
    report["resonance"] = {{"k", k},          {"l", l},          {"E_kl", rec.e_field},
                           {"lambda_star", rec.lambda_star}, {"det1", rec.det1}, {"det2", rec.det2}};

    StripGridPair grids(cfg.numerics.M, cfg.numerics.N);
    ContinuationOptions opts = cfg.continuation();

    // perturb the field strength off the resonance and hunt on the k-branch
    WaveParams pe = p;
    pe.e0 = std::sqrt(rec.e_field * (1.0 + cfg.job.delta));
    report["e0"] = pe.e0;
    const auto pts = find_bifurcation_points(pe, std::max(k, l), grids, opts);
    const BifurcationPoint* bp = select_point(pts, k, cfg.job.sign);
    if (!bp || bp->kernel_dim != 1) {
        std::cerr << "no simple k-branch point at the detuned field\n";
        return exit_numerical_failure;
    }

    Branch primary;
    std::vector<BranchEvent> events;
    for (double dirn : {cfg.job.direction, -cfg.job.direction}) {
        ContinuationOptions o2 = opts;
        o2.direction = dirn;
        Branch candidate = continue_branch(*bp, pe, grids, o2);
        auto evs = detect_singularities(candidate, pe, grids, o2);
        if (!evs.empty()) {
            primary = std::move(candidate);
            events = std::move(evs);
            break;
        }
        if (primary.points.empty())
            primary = std::move(candidate);
    }
    ContinuationProblem prob(pe, grids, opts);
    write_branch_dataset(ctx.dir / "primary.csv", primary, prob.mode_count(),
                         dataset_header(ctx, "primary", k, cfg.job.sign, prob.mode_count()));

    if (events.empty()) {
        report["status"] = "no-event";
        write_json(ctx.dir / "intersection.json", report);
        std::cout << ctx.dir.string() << "\n";
        return exit_no_event;
    }
    const BranchEvent& ev = events.front();
    report["event"] = {{"s", ev.s},
                       {"lambda", ev.state.lambda},
                       {"dominant_mode", ev.dominant_mode},
                       {"sigma_min", ev.sigma_min},
                       {"sigma_median", ev.sigma_median},
                       {"note", ev.note}};
    report["event_residual"] = assemble_residual(ev.state, pe, grids, opts.solve).values.cwiseAbs().maxCoeff();

    SwitchOptions sw;
    sw.continuation = opts;
    sw.mode_threshold = cfg.job.mode_threshold;
    try {
        const Branch secondary = switch_branch(ev, *bp, pe, grids, sw);
        write_branch_dataset(ctx.dir / "secondary.csv", secondary, prob.mode_count(),
                             dataset_header(ctx, "secondary", k, cfg.job.sign, prob.mode_count()));
        report["status"] = "ok";
        report["secondary_points"] = secondary.points.size();
        report["minimal_period_divisor"] = profile_period_divisor(secondary.points.back().state.eta, 1e-8);
    } catch (const SolverError& err) {
        report["status"] = "switch-failed";
        report["error"] = err.what();
        write_json(ctx.dir / "intersection.json", report);
        std::cerr << err.what() << "\n";
        return exit_numerical_failure;
    }
    write_json(ctx.dir / "intersection.json", report);
    std::cout << ctx.dir.string() << "\n";
    return exit_ok;
}

int cmd_sweep(const RunConfig& cfg, int jobs_flag) {
    const RunContext ctx = make_context(cfg, "sweep");
    StripGridPair grids(cfg.numerics.M, cfg.numerics.N);
    ContinuationOptions base = cfg.continuation();
    const auto pts = find_bifurcation_points(cfg.physics, cfg.numerics.kmax, grids, base);

    struct JobResult {
        std::string file;
        int k = 0;
        char sign = '+';
        std::string status;
        size_t points = 0;
    };
    std::vector<JobResult> results(pts.size());
    std::atomic<size_t> next{0};
    const int workers = std::min<size_t>(worker_count(jobs_flag), std::max<size_t>(pts.size(), 1));

    auto run_job = [&](size_t i) {
        const BifurcationPoint& bp = pts[i];
        JobResult& res = results[i];
        res.k = bp.k;
        res.sign = bp.sign == BranchSign::plus ? '+' : '-';
        res.file = "branch_k" + std::to_string(bp.k) + (bp.sign == BranchSign::plus ? "p" : "m") + ".csv";
        try {
            if (bp.kernel_dim != 1) {
                res.status = "two-dimensional kernel";
                res.file.clear();
                return;
            }
            // each job owns its grids: solves are reentrant per workspace
            StripGridPair job_grids(cfg.numerics.M, cfg.numerics.N);
            const Branch branch = continue_branch(bp, cfg.physics, job_grids, base);
            ContinuationProblem prob(cfg.physics, job_grids, base);
            write_branch_dataset(ctx.dir / res.file, branch, prob.mode_count(),
                                 dataset_header(ctx, "primary", bp.k, res.sign, prob.mode_count()));
            res.status = "ok";
            res.points = branch.points.size();
        } catch (const std::exception& err) {
            res.status = err.what();
            res.file.clear();
        }
    };

    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < pts.size(); i = next.fetch_add(1))
                run_job(i);
        });
    for (auto& t : pool)
        t.join();

    // single-writer merge of the per-job files
    json index = sidecar_base(ctx);
    json jobs = json::array();
    for (const auto& res : results)
        jobs.push_back({{"k", res.k},
                        {"sign", std::string(1, res.sign)},
                        {"file", res.file},
                        {"status", res.status},
                        {"points", res.points}});
    index["jobs"] = jobs;
    write_json(ctx.dir / "index.json", index);
    std::cout << ctx.dir.string() << "\n";
    return exit_ok;
}

RunConfig load_config_or_exit(const std::string& path, const std::string& outdir_override) {
    std::ifstream is(path);
    if (!is) {
        std::cerr << "cannot read config: " << path << "\n";
        std::exit(exit_config_error);
    }
    std::stringstream buffer;
    buffer << is.rdbuf();
    const ConfigParse parsed = validate_config(buffer.str());
    std::cerr << parsed.render();
    if (!parsed.ok())
        std::exit(exit_config_error);
    RunConfig cfg = *parsed.config;
    if (!outdir_override.empty())
        cfg.outdir = outdir_override;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"electrohydrodynamic capillary-gravity wave laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string outdir;
    bool resume = false;
    int jobs = 0;
    app.add_option("--config", config_path, "configuration file (key = value sections)")->required();
    app.add_option("--out", outdir, "output directory override");
    app.add_flag("--resume", resume, "extend an existing branch dataset");
    app.add_option("--jobs", jobs, "worker count for sweeps (env EHDLAB_JOBS overrides)");

    auto* dispersion_cmd = app.add_subcommand("dispersion", "tabulate the dispersion symbol and its roots");
    auto* points_cmd = app.add_subcommand("points", "locate and validate bifurcation points");
    auto* branch_cmd = app.add_subcommand("branch", "continue one bifurcation branch");
    auto* stability_cmd = app.add_subcommand("stability", "classify trivial and branch stability");
    auto* atlas_cmd = app.add_subcommand("resonance-atlas", "tabulate resonance fields over a vorticity grid");
    auto* secondary_cmd = app.add_subcommand("secondary", "hunt a secondary branch near a resonance");
    auto* sweep_cmd = app.add_subcommand("sweep", "continue all branches up to kmax in parallel");

    CLI11_PARSE(app, argc, argv);

    const RunConfig cfg = load_config_or_exit(config_path, outdir);
    try {
        if (dispersion_cmd->parsed())
            return cmd_dispersion(cfg);
        if (points_cmd->parsed())
            return cmd_points(cfg);
        if (branch_cmd->parsed())
            return cmd_branch(cfg, resume);
        if (stability_cmd->parsed())
            return cmd_stability(cfg);
        if (atlas_cmd->parsed())
            return cmd_resonance_atlas(cfg);
        if (secondary_cmd->parsed())
            return cmd_secondary(cfg);
        if (sweep_cmd->parsed())
            return cmd_sweep(cfg, jobs);
    } catch (const SolverError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config_error;
    }
    return exit_config_error;
}
