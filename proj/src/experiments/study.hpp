#pragma once

#include "gsd/gsd_solver.hpp"
#include "gsd/optimality.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pencilrank {

struct StudyConfig {
    int i_min = 2;
    int i_max = 7;
    int arrays_per_i = 10;
    /// GSD starts per array: the first with `init`, the rest random orthonormal.
    int restarts = 1;
    InitMode init = InitMode::Qz;
    /// Hessian spectrum per run; unset means on for I <= 7 only.
    std::optional<bool> hessian;
    std::uint64_t seed = 0;
    /// Worker threads; 0 picks the hardware concurrency.
    int threads = 0;

    void validate() const;
    bool hessian_for(int order) const;
};

/// One GSD run (one start on one array).
struct TrialRecord {
    int order = 0;                    // I
    int array = 0;                    // index of the array within its I
    int start = 0;
    std::uint64_t array_seed = 0;     // seed of the accepted random array
    std::uint64_t gsd_seed = 0;
    std::string init;
    bool converged = false;
    double residual = 0.0;
    double max_abs_first = 0.0;
    double min_second = 0.0;
    std::optional<double> min_hessian_eig;
    bool suboptimal = false;
};

/// Aggregate over all runs with the same I.
struct TableRow {
    int order = 0;
    int arrays = 0;
    int runs = 0;
    int converged = 0;
    int suboptimal = 0;
    double suboptimal_pct = 0.0;
    double max_abs_first = 0.0;
    double min_second = 0.0;
    std::optional<double> min_hessian_eig;
};

struct StudyResult {
    std::vector<TrialRecord> records;   // sorted by (I, array, start)
    std::vector<TableRow> rows;
};

/// Random I x I x 2 array of rank I + 1: arrays drawn from sub-seeds of
/// `seed` until the pencil eigenvalues include a complex pair. Returns the
/// array and the sub-seed that produced it.
std::pair<Array3, std::uint64_t> rank_above_order_array(Eigen::Index order, std::uint64_t seed);

/// All GSD runs of a study (rank R = I on rank-(I+1) arrays), in a thread pool.
/// Each array has its own sub-seed, so the records do not depend on the thread count.
std::vector<TrialRecord> run_trials(const StudyConfig& cfg);

/// Sequential fold of records into one row per I.
std::vector<TableRow> aggregate(const std::vector<TrialRecord>& records);

StudyResult run_tableA1(const StudyConfig& cfg);

/// Defaults of the per-I scatter study: I = 2..25, 10 arrays each, one QZ start, no Hessian.
StudyConfig figureA1_config(std::uint64_t seed);

/// One record per array (single start), same order as run_trials.
std::vector<TrialRecord> run_figureA1(const StudyConfig& cfg);

/// Header "I,arrays,runs,converged,suboptimal,suboptimalPct,maxAbsFirst,minSecond,minHessianEig".
std::string table_to_csv(const std::vector<TableRow>& rows);

/// Header "I,array,start,arraySeed,gsdSeed,init,converged,residual,maxAbsFirst,minSecond,minHessianEig,suboptimal".
std::string records_to_csv(const std::vector<TrialRecord>& records);

/// Header "I,array,arraySeed,maxAbsFirst,minSecond".
std::string figure_to_csv(const std::vector<TrialRecord>& records);

nlohmann::json to_json(const TableRow& row);
nlohmann::json to_json(const TrialRecord& record);

}  // namespace pencilrank
