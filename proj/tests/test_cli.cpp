// Drives the installed binary end to end through temp configs.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ehd/dataset.hpp"

namespace fs = std::filesystem;

namespace {

struct TempRun {
    fs::path dir;
    TempRun() {
        dir = fs::temp_directory_path() / ("ehdlab_cli_" + std::to_string(std::rand()));
        fs::create_directories(dir);
    }
    ~TempRun() { fs::remove_all(dir); }

    fs::path write_config(const std::string& text) const {
        const fs::path path = dir / "run.cfg";
        std::ofstream os(path);
        os << text;
        return path;
    }
};

int run(const std::string& args) {
    const std::string cmd = std::string(EHDLAB_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path only_subdir(const fs::path& parent) {
    for (const auto& entry : fs::directory_iterator(parent))
        if (entry.is_directory())
            return entry.path();
    throw std::runtime_error("no run directory under " + parent.string());
}

}  // namespace

TEST_CASE("dispersion run writes the table and the root sidecar") {
    TempRun tmp;
    const auto cfg = tmp.write_config(
        "[physics]\ng = 1\nsigma = 1\n"
        "[numerics]\nkmax = 3\n"
        "[job]\nlambda_min = -2\nlambda_max = 2\nlambda_count = 9\n"
        "[output]\ndir = " + (tmp.dir / "out").string() + "\n");
    REQUIRE(run("--config " + cfg.string() + " dispersion") == 0);
    const fs::path rundir = only_subdir(tmp.dir / "out");
    const std::string csv = slurp(rundir / "dispersion.csv");
    CHECK(csv.find("k,lambda,D_k") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 9);
    const std::string roots = slurp(rundir / "roots.json");
    CHECK(roots.find("lambda_plus") != std::string::npos);

    // rerun: byte-identical except the created timestamps
    const std::string before = csv;
    REQUIRE(run("--config " + cfg.string() + " dispersion") == 0);
    CHECK(slurp(rundir / "dispersion.csv") == before);
}

TEST_CASE("empty sweep ranges produce header-only tables") {
    TempRun tmp;
    const auto cfg = tmp.write_config(
        "[numerics]\nkmax = 0\n[job]\nlambda_count = 0\n[output]\ndir = " + (tmp.dir / "out").string() + "\n");
    REQUIRE(run("--config " + cfg.string() + " dispersion") == 0);
    const fs::path rundir = only_subdir(tmp.dir / "out");
    CHECK(slurp(rundir / "dispersion.csv") == "k,lambda,D_k\n");
}

TEST_CASE("config errors exit with the dedicated code") {
    TempRun tmp;
    const auto cfg = tmp.write_config("[physics]\nsigma = -2\n");
    CHECK(run("--config " + cfg.string() + " dispersion") == 2);
    CHECK(run("--config " + (tmp.dir / "missing.cfg").string() + " dispersion") == 2);
}

TEST_CASE("branch run writes a dataset and resume extends it") {
    TempRun tmp;
    const std::string base =
        "[physics]\ng = 1\nsigma = 1\n"
        "[numerics]\nM = 32\nN = 24\nmodes = 10\nkmax = 2\nsmax = SMAX\n"
        "[job]\nk = 1\nsign = +\n"
        "[output]\ndir = " + (tmp.dir / "out").string() + "\n";

    auto with_smax = [&](const std::string& v) {
        std::string text = base;
        text.replace(text.find("SMAX"), 4, v);
        return tmp.write_config(text);
    };

    // a zero-length branch carries the single origin row
    REQUIRE(run("--config " + with_smax("0").string() + " branch") == 0);
    {
        const fs::path rundir = only_subdir(tmp.dir / "out");
        const auto ds = ehd::read_branch_dataset(rundir / "branch.csv");
        CHECK(ds.rows.size() == 1);
        CHECK(ds.rows[0].s == 0.0);
        fs::remove_all(tmp.dir / "out");
    }

    const auto cfg = with_smax("4e-3");
    REQUIRE(run("--config " + cfg.string() + " branch") == 0);
    const fs::path rundir = only_subdir(tmp.dir / "out");
    const auto first = ehd::read_branch_dataset(rundir / "branch.csv");
    REQUIRE(first.rows.size() >= 3);

    // resumed runs must not recompute converged rows: row count additive
    const auto cfg2 = with_smax("8e-3");
    REQUIRE(run("--config " + cfg2.string() + " branch") == 0);  // fresh run, new dir
    const auto cfg2_resume = with_smax("8e-3");
    // copy the first dataset into the new run directory to resume from it
    fs::path rundir2;
    for (const auto& entry : fs::directory_iterator(tmp.dir / "out"))
        if (entry.path() != rundir)
            rundir2 = entry.path();
    REQUIRE(run("--config " + cfg2_resume.string() + " --resume branch") == 0);
    const auto extended = ehd::read_branch_dataset(rundir2 / "branch.csv");
    CHECK(extended.rows.size() >= first.rows.size());

    // the summary carries the direction diagnostics
    const std::string summary = slurp(rundir / "summary.json");
    CHECK(summary.find("lambda_dd0") != std::string::npos);
    CHECK(summary.find("fit") != std::string::npos);
}

TEST_CASE("resonance atlas rejects a gamma grid through zero") {
    TempRun tmp;
    const auto bad = tmp.write_config(
        "[job]\ngamma_min = -1\ngamma_max = 1\n[output]\ndir = " + (tmp.dir / "out").string() + "\n");
    CHECK(run("--config " + bad.string() + " resonance-atlas") == 2);

    const auto good = tmp.write_config(
        "[numerics]\nkmax = 2\n[job]\ngamma_min = 0.5\ngamma_max = 2.5\ngamma_count = 3\n[output]\ndir = " +
        (tmp.dir / "out").string() + "\n");
    REQUIRE(run("--config " + good.string() + " resonance-atlas") == 0);
    const fs::path rundir = only_subdir(tmp.dir / "out");
    const std::string csv = slurp(rundir / "atlas.csv");
    CHECK(csv.find("k,l,gamma,E_kl,condition_holds,det1,det2") == 0);
    CHECK(csv.find("false") != std::string::npos);  // small gamma rows fail the condition
}

TEST_CASE("sweep fans out and merges an index") {
    TempRun tmp;
    const auto cfg = tmp.write_config(
        "[physics]\ng = 1\nsigma = 1\n"
        "[numerics]\nM = 32\nN = 24\nmodes = 8\nkmax = 2\nsmax = 2e-3\n"
        "[output]\ndir = " + (tmp.dir / "out").string() + "\n");
    REQUIRE(run("--config " + cfg.string() + " --jobs 2 sweep") == 0);
    const fs::path rundir = only_subdir(tmp.dir / "out");
    const std::string index = slurp(rundir / "index.json");
    CHECK(index.find("branch_k1p.csv") != std::string::npos);
    CHECK(index.find("branch_k2m.csv") != std::string::npos);
    const auto ds = ehd::read_branch_dataset(rundir / "branch_k1p.csv");
    CHECK(ds.rows.size() >= 2);
}
