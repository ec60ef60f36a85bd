#include "pencilrank/pencilrank.h"

#include "common/error.hpp"
#include "cpd/als.hpp"
#include "existence/oracle.hpp"
#include "experiments/fixtures.hpp"
#include "experiments/study.hpp"
#include "gsd/gsd_solver.hpp"
#include "gsd/optimality.hpp"
#include "mlrank/mlrank_solver.hpp"
#include "rank/pencil_diagnosis.hpp"
#include "tensor/tensor_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <exception>
#include <new>
#include <optional>
#include <string>

struct pr_tensor {
    pencilrank::Array3 array;
};

struct pr_result {
    std::string json;
    std::string csv;
};

namespace {

using namespace pencilrank;

thread_local std::string last_error;

pr_status status_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return PR_INVALID_ARGUMENT;
        case ErrorCode::Dimension: return PR_DIMENSION;
        case ErrorCode::Parse: return PR_PARSE;
        case ErrorCode::Io: return PR_IO;
        case ErrorCode::Numerical: return PR_NUMERICAL;
        case ErrorCode::DegenerateCore: return PR_NUMERICAL;
        case ErrorCode::Unsupported: return PR_INVALID_ARGUMENT;
    }
    return PR_INTERNAL;
}

pr_status set_error(pr_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

// Runs `body` and converts every escaping exception into a status.
template <class F>
pr_status guarded(F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        return set_error(status_of(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return set_error(PR_PARSE, e.what());
    } catch (const std::bad_alloc&) {
        return set_error(PR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(PR_INTERNAL, e.what());
    } catch (...) {
        return set_error(PR_INTERNAL, "unknown failure");
    }
}

pr_options defaults_or(const pr_options* options) {
    pr_options o;
    pr_options_init(&o);
    return options ? *options : o;
}

DiagnosisConfig diagnosis_config(const pr_options& o) {
    DiagnosisConfig cfg;
    if (o.tol > 0.0) {
        cfg.cluster_tol = o.tol;
        cfg.real_tol = o.tol;
    }
    return cfg;
}

InitMode init_mode(const pr_options& o) {
    switch (o.init) {
        case PR_INIT_QZ: return InitMode::Qz;
        case PR_INIT_RANDOM: return InitMode::Random;
        default: fail(ErrorCode::InvalidArgument, "unknown init mode " + std::to_string(o.init));
    }
}

int required_rank(const pr_options& o) {
    if (o.rank < 1) fail(ErrorCode::InvalidArgument, "a rank R >= 1 is required");
    return o.rank;
}

pr_status finish(pr_result** out, nlohmann::json doc, std::string csv = {}) {
    auto* r = new pr_result{doc.dump(2), std::move(csv)};
    r->json.push_back('\n');
    *out = r;
    return PR_OK;
}

template <class T>
pr_status check_out(const void* in, T** out) {
    if (!out) return set_error(PR_INVALID_ARGUMENT, "output pointer is null");
    *out = nullptr;
    if (!in) return set_error(PR_INVALID_ARGUMENT, "input is null");
    return PR_OK;
}

StudyConfig study_config(const pr_options& o, StudyConfig base) {
    if (o.i_min > 0) base.i_min = o.i_min;
    if (o.i_max > 0) base.i_max = o.i_max;
    if (o.arrays_per_i > 0) base.arrays_per_i = o.arrays_per_i;
    if (o.restarts > 0) base.restarts = o.restarts;
    if (o.hessian >= 0) base.hessian = o.hessian != 0;
    if (o.threads > 0) base.threads = o.threads;
    base.init = init_mode(o);
    base.seed = o.seed;
    return base;
}

nlohmann::json study_config_json(const StudyConfig& cfg) {
    nlohmann::json hessian = cfg.hessian ? nlohmann::json(*cfg.hessian) : nlohmann::json("auto");
    return {{"Imin", cfg.i_min},       {"Imax", cfg.i_max}, {"arraysPerI", cfg.arrays_per_i},
            {"restarts", cfg.restarts}, {"init", to_string(cfg.init)}, {"hessian", hessian},
            {"seed", cfg.seed}};
}

}  // namespace

extern "C" {

void pr_options_init(pr_options* options) {
    if (!options) return;
    *options = pr_options{};
    options->hessian = -1;
}

const char* pr_status_string(pr_status status) {
    switch (status) {
        case PR_OK: return "ok";
        case PR_INVALID_ARGUMENT: return "invalid argument";
        case PR_DIMENSION: return "dimension error";
        case PR_PARSE: return "parse error";
        case PR_IO: return "i/o error";
        case PR_NUMERICAL: return "numerical failure";
        case PR_INDETERMINATE: return "indeterminate";
        case PR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* pr_last_error_message(void) { return last_error.c_str(); }

pr_status pr_tensor_create(size_t rows, size_t cols, const double* slice1, const double* slice2, pr_tensor** out) {
    if (!out) return set_error(PR_INVALID_ARGUMENT, "output pointer is null");
    *out = nullptr;
    if (!slice1 || !slice2) return set_error(PR_INVALID_ARGUMENT, "slice data is null");
    if (rows == 0 || cols == 0) return set_error(PR_DIMENSION, "dimensions must be positive");
    return guarded([&] {
        using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        const auto r = static_cast<Eigen::Index>(rows);
        const auto c = static_cast<Eigen::Index>(cols);
        Matrix z1 = Eigen::Map<const RowMajor>(slice1, r, c);
        Matrix z2 = Eigen::Map<const RowMajor>(slice2, r, c);
        *out = new pr_tensor{Array3(std::move(z1), std::move(z2))};
        return PR_OK;
    });
}

pr_status pr_tensor_read(const char* path, pr_tensor** out) {
    if (pr_status s = check_out(path, out); s != PR_OK) return s;
    return guarded([&] {
        *out = new pr_tensor{read_tensor(path)};
        return PR_OK;
    });
}

pr_status pr_tensor_parse_json(const char* text, pr_tensor** out) {
    if (pr_status s = check_out(text, out); s != PR_OK) return s;
    return guarded([&] {
        *out = new pr_tensor{tensor_from_json(nlohmann::json::parse(text))};
        return PR_OK;
    });
}

pr_status pr_tensor_write(const pr_tensor* tensor, const char* path) {
    if (!tensor || !path) return set_error(PR_INVALID_ARGUMENT, "tensor or path is null");
    return guarded([&] {
        write_tensor(path, tensor->array);
        return PR_OK;
    });
}

pr_status pr_tensor_random(size_t rows, size_t cols, uint64_t seed, pr_tensor** out) {
    if (!out) return set_error(PR_INVALID_ARGUMENT, "output pointer is null");
    *out = nullptr;
    if (rows == 0 || cols == 0) return set_error(PR_DIMENSION, "dimensions must be positive");
    return guarded([&] {
        *out = new pr_tensor{random_array(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols), seed)};
        return PR_OK;
    });
}

pr_status pr_tensor_dims(const pr_tensor* tensor, size_t* rows, size_t* cols) {
    if (!tensor || !rows || !cols) return set_error(PR_INVALID_ARGUMENT, "null argument");
    *rows = static_cast<size_t>(tensor->array.rows());
    *cols = static_cast<size_t>(tensor->array.cols());
    return PR_OK;
}

pr_status pr_tensor_copy_slices(const pr_tensor* tensor, double* slice1, double* slice2) {
    if (!tensor || !slice1 || !slice2) return set_error(PR_INVALID_ARGUMENT, "null argument");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Array3& a = tensor->array;
    Eigen::Map<RowMajor>(slice1, a.rows(), a.cols()) = a.slice(0);
    Eigen::Map<RowMajor>(slice2, a.rows(), a.cols()) = a.slice(1);
    return PR_OK;
}

void pr_tensor_destroy(pr_tensor* tensor) { delete tensor; }

pr_status pr_rank(const pr_tensor* tensor, const pr_options* options, pr_result** out) {
    if (pr_status s = check_out(tensor, out); s != PR_OK) return s;
    const pr_options o = defaults_or(options);
    return guarded([&] {
        const Array3& z = tensor->array;
        nlohmann::json doc = {{"I", z.rows()}, {"J", z.cols()}};
        if (!z.is_square()) {
            const auto big = std::max(z.rows(), z.cols());
            const auto small = std::min(z.rows(), z.cols());
            doc["rank"] = std::min(big, 2 * small);
            doc["method"] = "typical rank of the shape";
            doc["verdict"] = nullptr;
            return finish(out, doc);
        }
        const GenericRank g = generic_rank_square(z, diagnosis_config(o));
        doc["rank"] = g.rank ? nlohmann::json(*g.rank) : nlohmann::json(nullptr);
        doc["method"] = "pencil eigenvalues";
        doc["verdict"] = to_string(g.diagnosis.verdict);
        doc["diagnosis"] = to_json(g.diagnosis);
        doc["note"] = g.note;
        finish(out, doc);
        if (!g.rank) return set_error(PR_INDETERMINATE, g.note.empty() ? "rank is indeterminate" : g.note);
        return PR_OK;
    });
}

pr_status pr_exists(const pr_tensor* tensor, const pr_options* options, pr_result** out) {
    if (pr_status s = check_out(tensor, out); s != PR_OK) return s;
    const pr_options o = defaults_or(options);
    return guarded([&] {
        ExistenceConfig cfg;
        cfg.seed = o.seed;
        if (o.restarts > 0) cfg.gsd_restarts = o.restarts;
        cfg.diagnosis = diagnosis_config(o);
        const ExistenceVerdict v = decide(tensor->array, required_rank(o), cfg);
        nlohmann::json doc = to_json(v);
        doc["witness"] = v.witness ? tensor_to_json(*v.witness) : nlohmann::json(nullptr);
        const auto limit = v.limit_array();
        doc["limitPoint"] = limit ? tensor_to_json(*limit) : nlohmann::json(nullptr);
        finish(out, doc);
        if (v.outcome == Outcome::Indeterminate) {
            return set_error(PR_INDETERMINATE, v.note.empty() ? "existence is indeterminate" : v.note);
        }
        return PR_OK;
    });
}

pr_status pr_gsd(const pr_tensor* tensor, const pr_options* options, pr_result** out) {
    if (pr_status s = check_out(tensor, out); s != PR_OK) return s;
    const pr_options o = defaults_or(options);
    return guarded([&] {
        const Array3& z = tensor->array;
        const Eigen::Index rank = o.rank > 0 ? o.rank : std::min(z.rows(), z.cols());
        GsdConfig cfg;
        cfg.init = init_mode(o);
        cfg.seed = o.seed;
        if (o.restarts > 0) cfg.restarts = o.restarts;
        const GsdSolution sol = fit_gsd(z, rank, cfg);
        if (o.report) {
            const bool hessian = z.is_square() && rank == z.rows();
            return finish(out, to_json(optimality_report(sol, hessian)));
        }
        nlohmann::json doc = to_json(sol);
        try {
            const PencilDiagnosis d = diagnose_core(sol.core_array(), diagnosis_config(o));
            doc["diagnosis"] = to_json(d);
            auto groups = nlohmann::json::array();
            for (const EigenCluster& c : diverging_groups(d)) groups.push_back(to_json(c));
            doc["divergingGroups"] = groups;
        } catch (const Error& e) {
            doc["diagnosis"] = nullptr;
            doc["divergingGroups"] = nullptr;
            doc["note"] = e.what();
        }
        return finish(out, doc);
    });
}

pr_status pr_mlrank(const pr_tensor* tensor, const pr_options* options, pr_result** out) {
    if (pr_status s = check_out(tensor, out); s != PR_OK) return s;
    const pr_options o = defaults_or(options);
    return guarded([&] {
        MlrankConfig cfg;
        cfg.seed = o.seed;
        cfg.restarts = o.restarts > 0 ? o.restarts : 10;
        const MlrankSolution sol = fit_mlrank(tensor->array, required_rank(o), cfg);
        return finish(out, to_json(sol));
    });
}

pr_status pr_cpd(const pr_tensor* tensor, const pr_options* options, pr_result** out) {
    if (pr_status s = check_out(tensor, out); s != PR_OK) return s;
    const pr_options o = defaults_or(options);
    return guarded([&] {
        AlsConfig cfg;
        cfg.seed = o.seed;
        if (o.iterations > 0) cfg.iterations = o.iterations;
        const AlsResult r = fit_als(tensor->array, required_rank(o), cfg);
        nlohmann::json doc = {
            {"rank", o.rank},
            {"iterations", r.signal.iteration.size()},
            {"seed", o.seed},
            {"error", r.model.error},
            {"ridgeApplied", r.ridge_applied},
            {"maxIncrease", r.max_increase},
            {"A", matrix_to_json(r.model.a)},
            {"B", matrix_to_json(r.model.b)},
            {"C", matrix_to_json(r.model.c)},
        };
        if (!r.signal.iteration.empty()) {
            doc["maxNormA"] = r.signal.max_norm_a.back();
            doc["maxNormB"] = r.signal.max_norm_b.back();
            doc["minAngleDeg"] = r.signal.min_angle_deg.back();
        }
        return finish(out, doc, r.signal.to_csv());
    });
}

pr_status pr_simulate_table_a1(const pr_options* options, pr_result** out) {
    if (!out) return set_error(PR_INVALID_ARGUMENT, "output pointer is null");
    *out = nullptr;
    const pr_options o = defaults_or(options);
    return guarded([&] {
        const StudyConfig cfg = study_config(o, StudyConfig{});
        const StudyResult result = run_tableA1(cfg);
        nlohmann::json rows = nlohmann::json::array();
        for (const TableRow& r : result.rows) rows.push_back(to_json(r));
        nlohmann::json records = nlohmann::json::array();
        for (const TrialRecord& r : result.records) records.push_back(to_json(r));
        nlohmann::json doc = {{"config", study_config_json(cfg)}, {"rows", rows}, {"records", records}};
        return finish(out, doc, table_to_csv(result.rows));
    });
}

pr_status pr_simulate_figure_a1(const pr_options* options, pr_result** out) {
    if (!out) return set_error(PR_INVALID_ARGUMENT, "output pointer is null");
    *out = nullptr;
    const pr_options o = defaults_or(options);
    return guarded([&] {
        StudyConfig cfg = study_config(o, figureA1_config(o.seed));
        cfg.restarts = 1;
        const std::vector<TrialRecord> records = run_figureA1(cfg);
        nlohmann::json list = nlohmann::json::array();
        for (const TrialRecord& r : records) list.push_back(to_json(r));
        nlohmann::json doc = {{"config", study_config_json(cfg)}, {"records", list}};
        return finish(out, doc, figure_to_csv(records));
    });
}

pr_status pr_verify_fixtures(const char* dir, pr_result** out) {
    if (pr_status s = check_out(dir, out); s != PR_OK) return s;
    return guarded([&] {
        const std::vector<FixtureCheck> checks = verify_fixtures(dir);
        bool passed = true;
        std::string failures;
        nlohmann::json list = nlohmann::json::array();
        for (const FixtureCheck& c : checks) {
            passed = passed && c.passed;
            for (const std::string& f : c.failures) failures += (failures.empty() ? "" : "; ") + c.name + ": " + f;
            list.push_back(to_json(c));
        }
        finish(out, {{"passed", passed}, {"fixtures", list}});
        if (!passed) return set_error(PR_NUMERICAL, "fixture check failed: " + failures);
        return PR_OK;
    });
}

const char* pr_result_json(const pr_result* result) { return result ? result->json.c_str() : ""; }

const char* pr_result_csv(const pr_result* result) { return result ? result->csv.c_str() : ""; }

void pr_result_destroy(pr_result* result) { delete result; }

}  // extern "C"
