#pragma once

#include "tensor/array3.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace pencilrank {

/// Expected diagnostics of a 3 x 3 x 2 fixture taken as its own GSD solution (R = 3).
struct FixtureSpec {
    std::string name;
    std::vector<double> hessian_eigs;          // ascending
    int negative_eigs = 0;                     // eigenvalues below -eig_tol
    std::vector<std::pair<int, int>> zero_second_row;   // 1-based pairs
    std::vector<std::pair<int, int>> zero_second_col;
};

/// Saddle point: one negative Hessian eigenvalue.
FixtureSpec fixture_a1_spec();
/// Local minimum with a flat direction: no negative eigenvalue.
FixtureSpec fixture_a2_spec();

struct FixtureCheck {
    std::string name;
    bool passed = false;
    std::vector<std::string> failures;   // one line per deviating quantity
    nlohmann::json report;
};

/// Runs the first/second order, Hessian and rank checks on one fixture.
/// Tolerances: first-order and listed second-order values within 1e-12 ||Z||^2,
/// Hessian eigenvalues within 0.05 of the expected list, complex pencil (rank 4).
FixtureCheck check_fixture(const Array3& z, const FixtureSpec& spec);

/// Reads a1.json and a2.json from `dir` and checks both.
std::vector<FixtureCheck> verify_fixtures(const std::string& dir);

nlohmann::json to_json(const FixtureCheck& check);

}  // namespace pencilrank
