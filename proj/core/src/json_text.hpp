#ifndef TRISTAB_SRC_JSON_TEXT_HPP
#define TRISTAB_SRC_JSON_TEXT_HPP

#include <cstddef>
#include <string>

#include "tristab/linalg.hpp"

#include <json.hpp>

namespace tristab::detail {

/// Deterministic JSON rendering: object keys sorted, floats with 17
/// significant digits (always carrying a '.' or exponent so they parse back
/// as floats), non-finite floats as null. Objects are indented by two
/// spaces; arrays that hold no objects stay on one line.
std::string render_json(const nlohmann::json& value);

/// Shortest-safe 17 significant digit rendering of a double, locale-free.
std::string format_double(double value);

/// Matrices travel as row-major lists of [re, im] pairs.
nlohmann::json matrix_to_json(const linalg::ComplexMatrix& m);
linalg::Complex complex_from_json(const nlohmann::json& pair);
linalg::ComplexMatrix matrix_from_json(std::size_t dim, const nlohmann::json& entries);

}  // namespace tristab::detail

#endif  // TRISTAB_SRC_JSON_TEXT_HPP
