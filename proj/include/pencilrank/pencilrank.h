#ifndef PENCILRANK_PENCILRANK_H
#define PENCILRANK_PENCILRANK_H

/*
 * C interface of the pencilrank library: rank diagnosis, existence of best
 * low-rank approximations, GSD and multilinear-rank fits, ALS CPD and the
 * simulation studies for real I x J x 2 arrays.
 *
 * Conventions:
 *   - Every call returns a pr_status. On failure pr_last_error_message()
 *     describes the problem (thread-local, valid until the next failing call
 *     on the same thread).
 *   - Results are opaque; their JSON (and for some calls CSV) text is owned
 *     by the result and lives until pr_result_destroy.
 *   - PR_INDETERMINATE is a numerical verdict, not a failure: the result is
 *     still produced and must be destroyed.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PR_API __declspec(dllexport)
#else
#define PR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pr_status {
    PR_OK = 0,
    PR_INVALID_ARGUMENT = 1,
    PR_DIMENSION = 2,
    PR_PARSE = 3,
    PR_IO = 4,
    PR_NUMERICAL = 5,
    PR_INDETERMINATE = 6,
    PR_INTERNAL = 7
} pr_status;

typedef enum pr_init {
    PR_INIT_QZ = 0,
    PR_INIT_RANDOM = 1
} pr_init;

typedef struct pr_tensor pr_tensor;
typedef struct pr_result pr_result;

/* Zero or negative fields mean "use the default of the operation". */
typedef struct pr_options {
    int rank;             /* requested approximation rank R */
    uint64_t seed;
    int restarts;         /* starts of the fits (first deterministic, rest random) */
    double tol;           /* relative eigenvalue clustering / realness tolerance (default 1e-8) */
    int report;           /* pr_gsd: emit the optimality report instead of the solution */
    int init;             /* pr_init for pr_gsd and the studies */
    int iterations;       /* pr_cpd: ALS iterations (default 1000) */
    int i_min;            /* studies: smallest I (default 2) */
    int i_max;            /* studies: largest I (default 7, figure 25) */
    int arrays_per_i;     /* studies: arrays per I (default 10) */
    int hessian;          /* studies: -1 auto (I <= 7), 0 off, 1 on */
    int threads;          /* studies: worker threads, 0 = hardware concurrency */
} pr_options;

PR_API void pr_options_init(pr_options* options);

PR_API const char* pr_status_string(pr_status status);
PR_API const char* pr_last_error_message(void);

/* Slices are row-major I x J blocks. */
PR_API pr_status pr_tensor_create(size_t rows, size_t cols, const double* slice1, const double* slice2,
                                  pr_tensor** out);
/* JSON ({"I","J","K":2,"slices"}) or, for a ".csv" path, CSV. */
PR_API pr_status pr_tensor_read(const char* path, pr_tensor** out);
PR_API pr_status pr_tensor_parse_json(const char* text, pr_tensor** out);
PR_API pr_status pr_tensor_write(const pr_tensor* tensor, const char* path);
PR_API pr_status pr_tensor_random(size_t rows, size_t cols, uint64_t seed, pr_tensor** out);
PR_API pr_status pr_tensor_dims(const pr_tensor* tensor, size_t* rows, size_t* cols);
PR_API pr_status pr_tensor_copy_slices(const pr_tensor* tensor, double* slice1, double* slice2);
PR_API void pr_tensor_destroy(pr_tensor* tensor);

/* Rank of a square array from the pencil eigenvalues (I or I + 1); for
 * I != J the typical value min(max, 2 min) of the shape. PR_INDETERMINATE for
 * repeated or borderline eigenvalues. */
PR_API pr_status pr_rank(const pr_tensor* tensor, const pr_options* options, pr_result** out);

/* Whether a best rank-R approximation exists (options->rank required).
 * PR_INDETERMINATE when the decisive eigenvalues are not numerically resolved. */
PR_API pr_status pr_exists(const pr_tensor* tensor, const pr_options* options, pr_result** out);

/* GSD fit of rank R (default min(I, J)). */
PR_API pr_status pr_gsd(const pr_tensor* tensor, const pr_options* options, pr_result** out);

/* Best multilinear rank-(R, R, 2) approximation (options->rank required). */
PR_API pr_status pr_mlrank(const pr_tensor* tensor, const pr_options* options, pr_result** out);

/* Rank-R CPD by alternating least squares; CSV holds the per-iteration
 * degeneracy signal. */
PR_API pr_status pr_cpd(const pr_tensor* tensor, const pr_options* options, pr_result** out);

/* GSD optimality study on random rank-(I+1) arrays; CSV is the per-I table. */
PR_API pr_status pr_simulate_table_a1(const pr_options* options, pr_result** out);

/* One single-start GSD run per array for I = i_min..i_max (default 2..25);
 * CSV rows (I, array, arraySeed, maxAbsFirst, minSecond). */
PR_API pr_status pr_simulate_figure_a1(const pr_options* options, pr_result** out);

/* Checks a1.json and a2.json in `dir`. PR_NUMERICAL when a check fails; the
 * result (with the named failures) is produced either way. */
PR_API pr_status pr_verify_fixtures(const char* dir, pr_result** out);

PR_API const char* pr_result_json(const pr_result* result);
/* Empty string when the operation has no CSV form. */
PR_API const char* pr_result_csv(const pr_result* result);
PR_API void pr_result_destroy(pr_result* result);

#ifdef __cplusplus
}
#endif

#endif
