#include "experiments/fixtures.hpp"

#include "gsd/optimality.hpp"
#include "rank/pencil_diagnosis.hpp"
#include "tensor/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pencilrank {

namespace {

constexpr double kEigTol = 0.05;
constexpr double kZeroTol = 1e-12;

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

std::string pair_name(const char* side, int i, int j) {
    return std::string(side) + " (" + std::to_string(i) + "," + std::to_string(j) + ")";
}

const PairValue* find_pair(const std::vector<PairValue>& values, int i, int j) {
    for (const PairValue& p : values) {
        if (p.i == i - 1 && p.j == j - 1) return &p;
    }
    return nullptr;
}

void check_zero(const std::vector<PairValue>& values, const char* side, int i, int j, double scale,
                std::vector<std::string>& failures) {
    const PairValue* p = find_pair(values, i, j);
    if (!p) {
        failures.push_back("second-order " + pair_name(side, i, j) + " missing");
    } else if (std::abs(p->value) > kZeroTol * scale) {
        failures.push_back("second-order " + pair_name(side, i, j) + " = " + fmt(p->value) + ", expected 0");
    }
}

}  // namespace

FixtureSpec fixture_a1_spec() {
    return {"a1", {-0.1, 0.0, 10.0, 22.1, 36.1, 63.7}, 1, {{1, 2}}, {}};
}

FixtureSpec fixture_a2_spec() {
    return {"a2", {0.0, 0.0, 0.01, 20.9, 36.0, 54.9}, 0, {{1, 2}}, {{2, 3}}};
}

FixtureCheck check_fixture(const Array3& z, const FixtureSpec& spec) {
    FixtureCheck out;
    out.name = spec.name;
    auto& failures = out.failures;
    if (z.rows() != 3 || z.cols() != 3) {
        failures.push_back("shape " + std::to_string(z.rows()) + "x" + std::to_string(z.cols()) + ", expected 3x3");
        return out;
    }
    const double scale = frobenius_norm_sq(z);
    const OptimalityReport report = optimality_report(z, 3, true);

    if (report.max_abs_first > kZeroTol * scale) {
        failures.push_back("maxAbsFirst = " + fmt(report.max_abs_first) + " above 1e-12 scale");
    }
    for (const PairValue& p : report.second_row) {
        if (p.value < -kZeroTol * scale) {
            failures.push_back("second-order " + pair_name("row", int(p.i) + 1, int(p.j) + 1) + " negative");
        }
    }
    for (const PairValue& p : report.second_col) {
        if (p.value < -kZeroTol * scale) {
            failures.push_back("second-order " + pair_name("col", int(p.i) + 1, int(p.j) + 1) + " negative");
        }
    }
    for (auto [i, j] : spec.zero_second_row) check_zero(report.second_row, "row", i, j, scale, failures);
    for (auto [i, j] : spec.zero_second_col) check_zero(report.second_col, "col", i, j, scale, failures);

    const std::vector<double>& eigs = *report.hessian_eigs;
    if (eigs.size() != spec.hessian_eigs.size()) {
        failures.push_back("Hessian has " + std::to_string(eigs.size()) + " eigenvalues, expected " +
                           std::to_string(spec.hessian_eigs.size()));
    } else {
        for (std::size_t k = 0; k < eigs.size(); ++k) {
            if (std::abs(eigs[k] - spec.hessian_eigs[k]) > kEigTol) {
                failures.push_back("Hessian eigenvalue " + std::to_string(k + 1) + " = " + fmt(eigs[k]) +
                                   ", expected " + fmt(spec.hessian_eigs[k]) + " +- 0.05");
            }
        }
    }
    const int negative = static_cast<int>(std::count_if(eigs.begin(), eigs.end(), [](double v) { return v < -kEigTol; }));
    if (negative != spec.negative_eigs) {
        failures.push_back("Hessian has " + std::to_string(negative) + " negative eigenvalues, expected " +
                           std::to_string(spec.negative_eigs));
    }

    const GenericRank rank = generic_rank_square(z);
    if (!rank.rank || *rank.rank != 4) {
        failures.push_back("pencil diagnosis " + to_string(rank.diagnosis.verdict) + ", expected complex (rank 4)");
    }

    out.report = to_json(report);
    out.report["pencil"] = to_json(rank.diagnosis);
    out.report["rank"] = rank.rank ? nlohmann::json(*rank.rank) : nlohmann::json(nullptr);
    out.passed = failures.empty();
    return out;
}

std::vector<FixtureCheck> verify_fixtures(const std::string& dir) {
    std::vector<FixtureCheck> out;
    for (const FixtureSpec& spec : {fixture_a1_spec(), fixture_a2_spec()}) {
        out.push_back(check_fixture(read_tensor(dir + "/" + spec.name + ".json"), spec));
    }
    return out;
}

nlohmann::json to_json(const FixtureCheck& check) {
    return {{"name", check.name}, {"passed", check.passed}, {"failures", check.failures}, {"report", check.report}};
}

}  // namespace pencilrank
