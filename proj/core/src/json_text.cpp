#include "json_text.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tristab::detail {

namespace {

bool holds_object(const nlohmann::json& value) {
  if (value.is_object()) return true;
  if (value.is_array()) {
    for (const auto& item : value)
      if (holds_object(item)) return true;
  }
  return false;
}

void render(const nlohmann::json& value, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string inner_pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
  switch (value.type()) {
    case nlohmann::json::value_t::object: {
      if (value.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, item] : value.items()) {
        if (!first) out += ",\n";
        first = false;
        out += inner_pad;
        out += nlohmann::json(key).dump();
        out += ": ";
        render(item, depth + 1, out);
      }
      out += "\n" + pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (value.empty()) {
        out += "[]";
        return;
      }
      if (!holds_object(value)) {
        out += "[";
        bool first = true;
        for (const auto& item : value) {
          if (!first) out += ", ";
          first = false;
          render(item, depth + 1, out);
        }
        out += "]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : value) {
        if (!first) out += ",\n";
        first = false;
        out += inner_pad;
        render(item, depth + 1, out);
      }
      out += "\n" + pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += format_double(value.get<double>());
      return;
    default:
      out += value.dump();
      return;
  }
}

}  // namespace

std::string format_double(double value) {
  if (!std::isfinite(value)) return "null";
  std::array<char, 64> buf{};
  const auto [end, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
  std::string text(buf.data(), end);
  if (text.find_first_of(".e") == std::string::npos) text += ".0";
  return text;
}

std::string render_json(const nlohmann::json& value) {
  std::string out;
  render(value, 0, out);
  out += "\n";
  return out;
}

nlohmann::json matrix_to_json(const linalg::ComplexMatrix& m) {
  auto out = nlohmann::json::array();
  for (const auto& c : m.row_major()) out.push_back({c.real(), c.imag()});
  return out;
}

linalg::Complex complex_from_json(const nlohmann::json& pair) {
  if (!pair.is_array() || pair.size() != 2)
    throw std::invalid_argument("JSON: complex entries must be [re, im] pairs");
  return {pair.at(0).get<double>(), pair.at(1).get<double>()};
}

linalg::ComplexMatrix matrix_from_json(std::size_t dim, const nlohmann::json& entries) {
  if (!entries.is_array() || entries.size() != dim * dim) {
    throw std::invalid_argument("JSON: expected " + std::to_string(dim * dim) +
                                " matrix entries");
  }
  std::vector<linalg::Complex> values;
  values.reserve(entries.size());
  for (const auto& pair : entries) values.push_back(complex_from_json(pair));
  return linalg::ComplexMatrix(dim, std::move(values));
}

}  // namespace tristab::detail
