#include "tensor/tensor_io.hpp"

#include "common/error.hpp"

#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <vector>

namespace pencilrank {

namespace {

std::int64_t require_dimension(const nlohmann::json& doc, const char* field) {
    if (!doc.contains(field)) {
        fail(ErrorCode::Parse, std::string("missing field '") + field + "'");
    }
    const auto& v = doc.at(field);
    if (!v.is_number_integer()) {
        fail(ErrorCode::Parse, std::string("field '") + field + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

Matrix slice_from_json(const nlohmann::json& rows, std::int64_t ni, std::int64_t nj, int k) {
    const std::string where = "slices[" + std::to_string(k) + "]";
    if (!rows.is_array() || static_cast<std::int64_t>(rows.size()) != ni) {
        fail(ErrorCode::Parse, "field '" + where + "' must hold I=" + std::to_string(ni) + " rows");
    }
    Matrix m(ni, nj);
    for (std::int64_t i = 0; i < ni; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<std::int64_t>(row.size()) != nj) {
            fail(ErrorCode::Parse, "field '" + where + "[" + std::to_string(i) +
                                       "]' must hold J=" + std::to_string(nj) + " numbers");
        }
        for (std::int64_t j = 0; j < nj; ++j) {
            const auto& v = row[static_cast<std::size_t>(j)];
            if (!v.is_number()) {
                fail(ErrorCode::Parse, "field '" + where + "[" + std::to_string(i) + "][" +
                                           std::to_string(j) + "]' is not a number");
            }
            m(i, j) = v.get<double>();
        }
    }
    return m;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool has_csv_extension(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

}  // namespace

nlohmann::json tensor_to_json(const Array3& a, const TensorMetadata& meta) {
    nlohmann::json doc;
    doc["I"] = a.rows();
    doc["J"] = a.cols();
    doc["K"] = 2;
    doc["slices"] = nlohmann::json::array({matrix_to_json(a.slice(0)), matrix_to_json(a.slice(1))});
    if (meta.seed || meta.generator) {
        nlohmann::json m = nlohmann::json::object();
        if (meta.seed) m["seed"] = *meta.seed;
        if (meta.generator) m["generator"] = *meta.generator;
        doc["metadata"] = std::move(m);
    }
    return doc;
}

Array3 tensor_from_json(const nlohmann::json& doc, TensorMetadata* meta) {
    if (!doc.is_object()) {
        fail(ErrorCode::Parse, "tensor document must be a JSON object");
    }
    const auto ni = require_dimension(doc, "I");
    const auto nj = require_dimension(doc, "J");
    const auto nk = require_dimension(doc, "K");
    if (nk != 2) {
        fail(ErrorCode::Dimension, "field 'K' must equal 2, got " + std::to_string(nk));
    }
    if (ni < 1 || nj < 1) {
        fail(ErrorCode::Dimension, "fields 'I' and 'J' must be positive");
    }
    if (!doc.contains("slices") || !doc.at("slices").is_array() || doc.at("slices").size() != 2) {
        fail(ErrorCode::Parse, "field 'slices' must be an array of two slices");
    }
    const auto& slices = doc.at("slices");
    Array3 out(slice_from_json(slices[0], ni, nj, 0), slice_from_json(slices[1], ni, nj, 1));
    if (meta != nullptr) {
        *meta = {};
        if (doc.contains("metadata") && doc.at("metadata").is_object()) {
            const auto& m = doc.at("metadata");
            if (m.contains("seed") && m.at("seed").is_number_unsigned()) {
                meta->seed = m.at("seed").get<std::uint64_t>();
            }
            if (m.contains("generator") && m.at("generator").is_string()) {
                meta->generator = m.at("generator").get<std::string>();
            }
        }
    }
    return out;
}

std::string tensor_to_csv(const Array3& a) {
    std::string out = "# I=" + std::to_string(a.rows()) + " J=" + std::to_string(a.cols()) + " K=2\n";
    char buf[32];
    for (int k = 0; k < 2; ++k) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            for (Eigen::Index j = 0; j < a.cols(); ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", a(i, j, k));
                if (j > 0) out += ',';
                out += buf;
            }
            out += '\n';
        }
    }
    return out;
}

Array3 tensor_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) {
        fail(ErrorCode::Parse, "empty CSV tensor file");
    }
    static const std::regex header_re(R"(^#\s*I=(\d+)\s+J=(\d+)\s+K=(\d+)\s*$)");
    std::smatch match;
    if (!std::regex_match(header, match, header_re)) {
        fail(ErrorCode::Parse, "CSV header must read '# I=<I> J=<J> K=2'");
    }
    const long ni = std::stol(match[1]);
    const long nj = std::stol(match[2]);
    const long nk = std::stol(match[3]);
    if (nk != 2) {
        fail(ErrorCode::Dimension, "field 'K' must equal 2, got " + std::to_string(nk));
    }
    if (ni < 1 || nj < 1) {
        fail(ErrorCode::Dimension, "fields 'I' and 'J' must be positive");
    }
    Matrix tall(2 * ni, nj);
    std::string line;
    long row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        if (row >= 2 * ni) {
            fail(ErrorCode::Parse, "CSV has more than 2I=" + std::to_string(2 * ni) + " rows");
        }
        std::istringstream ls(line);
        std::string cell;
        long col = 0;
        while (std::getline(ls, cell, ',')) {
            if (col >= nj) {
                fail(ErrorCode::Parse, "CSV row " + std::to_string(row) + " has more than J values");
            }
            try {
                std::size_t used = 0;
                tall(row, col) = std::stod(cell, &used);
            } catch (const std::exception&) {
                fail(ErrorCode::Parse, "CSV row " + std::to_string(row) + " column " +
                                           std::to_string(col) + " is not a number");
            }
            ++col;
        }
        if (col != nj) {
            fail(ErrorCode::Parse, "CSV row " + std::to_string(row) + " must hold J=" +
                                       std::to_string(nj) + " values");
        }
        ++row;
    }
    if (row != 2 * ni) {
        fail(ErrorCode::Parse, "CSV must hold 2I=" + std::to_string(2 * ni) + " rows");
    }
    return from_tall_unfold(tall);
}

Array3 read_tensor(const std::string& path, TensorMetadata* meta) {
    const std::string text = read_file(path);
    if (has_csv_extension(path)) {
        if (meta != nullptr) *meta = {};
        return tensor_from_csv(text);
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::Parse, "'" + path + "' is not valid JSON: " + e.what());
    }
    return tensor_from_json(doc, meta);
}

void write_tensor(const std::string& path, const Array3& a, const TensorMetadata& meta) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    }
    if (has_csv_extension(path)) {
        out << tensor_to_csv(a);
    } else {
        out << tensor_to_json(a, meta).dump() << '\n';
    }
    if (!out) {
        fail(ErrorCode::Io, "failed writing '" + path + "'");
    }
}

nlohmann::json matrix_to_json(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace pencilrank
