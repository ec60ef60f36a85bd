#include "experiments/study.hpp"

#include "common/error.hpp"
#include "common/random.hpp"
#include "rank/pencil_diagnosis.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <sstream>
#include <thread>

namespace pencilrank {

namespace {

struct Job {
    int order = 0;
    int array = 0;
};

std::vector<Job> jobs_of(const StudyConfig& cfg) {
    std::vector<Job> jobs;
    for (int order = cfg.i_min; order <= cfg.i_max; ++order) {
        for (int a = 0; a < cfg.arrays_per_i; ++a) jobs.push_back({order, a});
    }
    return jobs;
}

std::uint64_t job_seed(std::uint64_t seed, const Job& job) {
    return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(job.order)), static_cast<std::uint64_t>(job.array));
}

std::vector<TrialRecord> run_job(const StudyConfig& cfg, const Job& job) {
    const std::uint64_t seed = job_seed(cfg.seed, job);
    auto [z, array_seed] = rank_above_order_array(job.order, seed);
    GsdConfig gsd;
    gsd.init = cfg.init;
    gsd.restarts = cfg.restarts;
    gsd.seed = seed;
    const auto entries = multi_start_study(z, job.order, gsd, cfg.hessian_for(job.order));

    std::vector<TrialRecord> out;
    for (const StudyEntry& e : entries) {
        TrialRecord r;
        r.order = job.order;
        r.array = job.array;
        r.start = e.start;
        r.array_seed = array_seed;
        r.gsd_seed = seed;
        r.init = e.init;
        r.converged = e.report.converged;
        r.residual = e.residual;
        r.max_abs_first = e.report.max_abs_first;
        r.min_second = e.report.min_second;
        if (e.report.hessian_eigs && !e.report.hessian_eigs->empty()) {
            r.min_hessian_eig = e.report.hessian_eigs->front();
        }
        r.suboptimal = e.suboptimal;
        out.push_back(std::move(r));
    }
    return out;
}

// Runs every job on a small pool; results land in per-job slots so the
// concatenation order is fixed.
std::vector<TrialRecord> run_pool(const StudyConfig& cfg, const std::vector<Job>& jobs) {
    std::vector<std::vector<TrialRecord>> slots(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            try {
                slots[k] = run_job(cfg, jobs[k]);
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, std::max(1, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<TrialRecord> records;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        if (!errors[k].empty()) {
            fail(ErrorCode::Numerical, "study run I=" + std::to_string(jobs[k].order) + " array " +
                                           std::to_string(jobs[k].array) + " failed: " + errors[k]);
        }
        for (auto& r : slots[k]) records.push_back(std::move(r));
    }
    return records;
}

std::string number(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::string optional_number(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

}  // namespace

void StudyConfig::validate() const {
    if (i_min < 2) fail(ErrorCode::InvalidArgument, "study I range must start at 2 or above");
    if (i_max < i_min) fail(ErrorCode::InvalidArgument, "study I range is empty");
    if (arrays_per_i < 1) fail(ErrorCode::InvalidArgument, "arrays per I must be positive");
    if (restarts < 1) fail(ErrorCode::InvalidArgument, "restarts must be at least 1");
    if (threads < 0) fail(ErrorCode::InvalidArgument, "thread count must be nonnegative");
    if (init == InitMode::Given) fail(ErrorCode::InvalidArgument, "studies draw their own starts; init 'given' is not allowed");
}

bool StudyConfig::hessian_for(int order) const { return hessian ? *hessian : order <= 7; }

std::pair<Array3, std::uint64_t> rank_above_order_array(Eigen::Index order, std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t s = mix_seed(seed, attempt);
        Array3 z = random_array(order, order, s);
        const GenericRank g = generic_rank_square(z);
        if (g.rank && *g.rank == order + 1) return {std::move(z), s};
    }
}

std::vector<TrialRecord> run_trials(const StudyConfig& cfg) {
    cfg.validate();
    return run_pool(cfg, jobs_of(cfg));
}

std::vector<TableRow> aggregate(const std::vector<TrialRecord>& records) {
    std::vector<TableRow> rows;
    int last_array = -1;
    for (const TrialRecord& r : records) {
        if (rows.empty() || rows.back().order != r.order) {
            TableRow row;
            row.order = r.order;
            row.min_second = std::numeric_limits<double>::infinity();
            rows.push_back(row);
            last_array = -1;
        }
        TableRow& row = rows.back();
        if (r.array != last_array) {
            ++row.arrays;
            last_array = r.array;
        }
        ++row.runs;
        row.converged += r.converged ? 1 : 0;
        row.suboptimal += r.suboptimal ? 1 : 0;
        row.max_abs_first = std::max(row.max_abs_first, r.max_abs_first);
        row.min_second = std::min(row.min_second, r.min_second);
        if (r.min_hessian_eig) {
            row.min_hessian_eig = row.min_hessian_eig ? std::min(*row.min_hessian_eig, *r.min_hessian_eig)
                                                      : *r.min_hessian_eig;
        }
    }
    for (TableRow& row : rows) row.suboptimal_pct = 100.0 * row.suboptimal / std::max(row.runs, 1);
    return rows;
}

StudyResult run_tableA1(const StudyConfig& cfg) {
    StudyResult out;
    out.records = run_trials(cfg);
    out.rows = aggregate(out.records);
    return out;
}

StudyConfig figureA1_config(std::uint64_t seed) {
    StudyConfig cfg;
    cfg.i_min = 2;
    cfg.i_max = 25;
    cfg.arrays_per_i = 10;
    cfg.restarts = 1;
    cfg.hessian = false;
    cfg.seed = seed;
    return cfg;
}

std::vector<TrialRecord> run_figureA1(const StudyConfig& cfg) {
    StudyConfig single = cfg;
    single.restarts = 1;
    return run_trials(single);
}

std::string table_to_csv(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    out << "I,arrays,runs,converged,suboptimal,suboptimalPct,maxAbsFirst,minSecond,minHessianEig\n";
    for (const TableRow& r : rows) {
        out << r.order << ',' << r.arrays << ',' << r.runs << ',' << r.converged << ',' << r.suboptimal << ','
            << number(r.suboptimal_pct) << ',' << number(r.max_abs_first) << ',' << number(r.min_second) << ','
            << optional_number(r.min_hessian_eig) << '\n';
    }
    return out.str();
}

std::string records_to_csv(const std::vector<TrialRecord>& records) {
    std::ostringstream out;
    out << "I,array,start,arraySeed,gsdSeed,init,converged,residual,maxAbsFirst,minSecond,minHessianEig,suboptimal\n";
    for (const TrialRecord& r : records) {
        out << r.order << ',' << r.array << ',' << r.start << ',' << r.array_seed << ',' << r.gsd_seed << ','
            << r.init << ',' << (r.converged ? 1 : 0) << ',' << number(r.residual) << ','
            << number(r.max_abs_first) << ',' << number(r.min_second) << ',' << optional_number(r.min_hessian_eig)
            << ',' << (r.suboptimal ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string figure_to_csv(const std::vector<TrialRecord>& records) {
    std::ostringstream out;
    out << "I,array,arraySeed,maxAbsFirst,minSecond\n";
    for (const TrialRecord& r : records) {
        out << r.order << ',' << r.array << ',' << r.array_seed << ',' << number(r.max_abs_first) << ','
            << number(r.min_second) << '\n';
    }
    return out.str();
}

nlohmann::json to_json(const TableRow& row) {
    nlohmann::json j = {
        {"I", row.order},
        {"arrays", row.arrays},
        {"runs", row.runs},
        {"converged", row.converged},
        {"suboptimal", row.suboptimal},
        {"suboptimalPct", row.suboptimal_pct},
        {"maxAbsFirst", row.max_abs_first},
        {"minSecond", row.min_second},
        {"minHessianEig", nullptr},
    };
    if (row.min_hessian_eig) j["minHessianEig"] = *row.min_hessian_eig;
    return j;
}

nlohmann::json to_json(const TrialRecord& r) {
    nlohmann::json j = {
        {"I", r.order},
        {"array", r.array},
        {"start", r.start},
        {"arraySeed", r.array_seed},
        {"gsdSeed", r.gsd_seed},
        {"init", r.init},
        {"converged", r.converged},
        {"residual", r.residual},
        {"maxAbsFirst", r.max_abs_first},
        {"minSecond", r.min_second},
        {"minHessianEig", nullptr},
        {"suboptimal", r.suboptimal},
    };
    if (r.min_hessian_eig) j["minHessianEig"] = *r.min_hessian_eig;
    return j;
}

}  // namespace pencilrank
