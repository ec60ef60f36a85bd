// Command line front end; talks to the library only through the C API.

#include "pencilrank/pencilrank.h"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#ifndef PENCILRANK_FIXTURE_DIR
#define PENCILRANK_FIXTURE_DIR "fixtures"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIndeterminate = 3;

struct Common {
    std::string in;
    std::string out;
    int rank = 0;
    std::optional<std::uint64_t> seed;
    int restarts = 0;
    double tol = 0.0;
    bool json = false;
};

struct Extra {
    bool report = false;
    std::string init = "qz";
    int iterations = 0;
    std::string signal;
    int i_min = 0;
    int i_max = 0;
    int arrays = 0;
    std::string hessian = "auto";
    int threads = 0;
    std::string dir = PENCILRANK_FIXTURE_DIR;
};

class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const Common& c) {
    if (c.seed) return *c.seed;
    const char* env = std::getenv("PENCILRANK_SEED");
    if (!env || !*env) return 0;
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string("PENCILRANK_SEED is not an unsigned integer: ") + env);
    }
}

pr_options make_options(const Common& c, const Extra& e) {
    pr_options o;
    pr_options_init(&o);
    o.rank = c.rank;
    o.seed = resolve_seed(c);
    o.restarts = c.restarts;
    o.tol = c.tol;
    o.report = e.report ? 1 : 0;
    if (e.init == "qz") {
        o.init = PR_INIT_QZ;
    } else if (e.init == "random") {
        o.init = PR_INIT_RANDOM;
    } else {
        throw UsageError("--init must be qz or random");
    }
    o.iterations = e.iterations;
    o.i_min = e.i_min;
    o.i_max = e.i_max;
    o.arrays_per_i = e.arrays;
    o.hessian = e.hessian == "on" ? 1 : e.hessian == "off" ? 0 : -1;
    o.threads = e.threads;
    return o;
}

bool write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return static_cast<bool>(std::cout);
    }
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) {
        std::cerr << "error: cannot write '" << path << "'\n";
        return false;
    }
    return true;
}

int exit_code(pr_status status) {
    switch (status) {
        case PR_OK: return kExitOk;
        case PR_INDETERMINATE: return kExitIndeterminate;
        case PR_INVALID_ARGUMENT: return kExitUsage;
        default: return kExitFailure;
    }
}

// Emits the result (if any), reports the status and maps it to an exit code.
int emit(pr_status status, pr_result* result, const std::string& out, bool csv) {
    int code = exit_code(status);
    if (result) {
        const std::string text = csv ? pr_result_csv(result) : pr_result_json(result);
        if (!write_text(out, text)) code = kExitFailure;
        pr_result_destroy(result);
    }
    if (status != PR_OK) {
        std::cerr << (status == PR_INDETERMINATE ? "indeterminate: " : "error: ") << pr_last_error_message() << '\n';
    }
    return code;
}

using TensorOp = pr_status (*)(const pr_tensor*, const pr_options*, pr_result**);

int run_tensor_op(TensorOp op, const Common& c, const Extra& e) {
    const pr_options o = make_options(c, e);
    pr_tensor* t = nullptr;
    if (pr_status s = pr_tensor_read(c.in.c_str(), &t); s != PR_OK) return emit(s, nullptr, c.out, false);
    pr_result* r = nullptr;
    const pr_status s = op(t, &o, &r);
    pr_tensor_destroy(t);
    return emit(s, r, c.out, false);
}

int run_cpd(const Common& c, const Extra& e) {
    const pr_options o = make_options(c, e);
    pr_tensor* t = nullptr;
    if (pr_status s = pr_tensor_read(c.in.c_str(), &t); s != PR_OK) return emit(s, nullptr, c.out, false);
    pr_result* r = nullptr;
    const pr_status s = pr_cpd(t, &o, &r);
    pr_tensor_destroy(t);
    if (s == PR_OK && !e.signal.empty() && !write_text(e.signal, pr_result_csv(r))) {
        pr_result_destroy(r);
        return kExitFailure;
    }
    return emit(s, r, c.out, false);
}

void add_common(CLI::App* cmd, Common& c, bool needs_input, bool needs_rank) {
    auto* in = cmd->add_option("--in", c.in, "input array (.json or .csv)");
    if (needs_input) in->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, "write output here instead of stdout");
    auto* rank = cmd->add_option("--rank", c.rank, "approximation rank R")->check(CLI::PositiveNumber);
    if (needs_rank) rank->required();
    cmd->add_option("--seed", c.seed, "random seed (falls back to PENCILRANK_SEED, then 0)");
    cmd->add_option("--restarts", c.restarts, "number of starts")->check(CLI::PositiveNumber);
    cmd->add_option("--tol", c.tol, "relative eigenvalue tolerance")->check(CLI::PositiveNumber);
    cmd->add_flag("--json", c.json, "JSON output (default for all but simulate)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pencilrank: rank and best low-rank approximation of real I x J x 2 arrays"};
    app.require_subcommand(1);
    Common c;
    Extra e;

    auto* rank = app.add_subcommand("rank", "rank of the array from its pencil eigenvalues");
    add_common(rank, c, true, false);

    auto* exists = app.add_subcommand("exists", "does a best rank-R approximation exist");
    add_common(exists, c, true, true);

    auto* gsd = app.add_subcommand("gsd", "generalized Schur decomposition fit");
    add_common(gsd, c, true, false);
    gsd->add_flag("--report", e.report, "emit the first/second order optimality report");
    gsd->add_option("--init", e.init, "qz or random")->check(CLI::IsMember({"qz", "random"}));

    auto* mlrank = app.add_subcommand("mlrank", "best multilinear rank-(R,R,2) approximation");
    add_common(mlrank, c, true, true);

    auto* cpd = app.add_subcommand("cpd", "rank-R CPD by alternating least squares");
    add_common(cpd, c, true, true);
    cpd->add_option("--iterations", e.iterations, "ALS iterations (default 1000)")->check(CLI::PositiveNumber);
    cpd->add_option("--signal", e.signal, "write the per-iteration degeneracy CSV here");

    auto* simulate = app.add_subcommand("simulate", "GSD optimality studies on random arrays");
    simulate->require_subcommand(1);
    auto add_study = [&](CLI::App* s) {
        add_common(s, c, false, false);
        s->add_option("--Imin", e.i_min, "smallest I")->check(CLI::Range(2, 1000));
        s->add_option("--Imax", e.i_max, "largest I")->check(CLI::Range(2, 1000));
        s->add_option("--arrays", e.arrays, "arrays per I")->check(CLI::PositiveNumber);
        s->add_option("--init", e.init, "qz or random")->check(CLI::IsMember({"qz", "random"}));
        s->add_option("--hessian", e.hessian, "on, off or auto (I <= 7)")->check(CLI::IsMember({"on", "off", "auto"}));
        s->add_option("--threads", e.threads, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
    };
    auto* table = simulate->add_subcommand("tableA1", "per-I table of optimality diagnostics (CSV)");
    add_study(table);
    auto* figure = simulate->add_subcommand("figureA1", "per-array diagnostics for I = 2..25 (CSV)");
    add_study(figure);

    auto* verify = app.add_subcommand("verify-fixtures", "check the two 3x3x2 fixture examples");
    add_common(verify, c, false, false);
    verify->add_option("--dir", e.dir, "directory holding a1.json and a2.json")->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*rank) return run_tensor_op(pr_rank, c, e);
        if (*exists) return run_tensor_op(pr_exists, c, e);
        if (*gsd) return run_tensor_op(pr_gsd, c, e);
        if (*mlrank) return run_tensor_op(pr_mlrank, c, e);
        if (*cpd) return run_cpd(c, e);
        if (*table || *figure) {
            const pr_options o = make_options(c, e);
            pr_result* r = nullptr;
            const pr_status s = *table ? pr_simulate_table_a1(&o, &r) : pr_simulate_figure_a1(&o, &r);
            return emit(s, r, c.out, !c.json);
        }
        if (*verify) {
            pr_result* r = nullptr;
            const pr_status s = pr_verify_fixtures(e.dir.c_str(), &r);
            return emit(s, r, c.out, false);
        }
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
