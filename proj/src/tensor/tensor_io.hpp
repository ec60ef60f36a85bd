#pragma once

#include "tensor/array3.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace pencilrank {

struct TensorMetadata {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> generator;
};

/// Row-major nested arrays.
nlohmann::json matrix_to_json(const Matrix& m);

// JSON layout: {"I":..,"J":..,"K":2,"slices":[Z1 rows, Z2 rows]}.
nlohmann::json tensor_to_json(const Array3& a, const TensorMetadata& meta = {});
Array3 tensor_from_json(const nlohmann::json& doc, TensorMetadata* meta = nullptr);

// CSV layout: header "# I=<I> J=<J> K=2", then Z1 rows followed by Z2 rows.
std::string tensor_to_csv(const Array3& a);
Array3 tensor_from_csv(const std::string& text);

/// Format chosen by extension: ".csv" reads/writes CSV, anything else JSON.
Array3 read_tensor(const std::string& path, TensorMetadata* meta = nullptr);
void write_tensor(const std::string& path, const Array3& a, const TensorMetadata& meta = {});

}  // namespace pencilrank
