#pragma once

// Grid container: a text preamble, a JSON header, and little-endian float64
// arrays in row-major (t, w, p) order.
//
//   MEXPGRID 1\n
//   <header byte length>\n
//   <JSON header>
//   <array 0 payload><array 1 payload>...
//
// The header holds "dims" [n_t, n_w, n_p], "axes", "params_hash",
// "settings", and "arrays" (names in payload order).

#include "mexp/grid.hpp"

#include <json.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mexp {

struct ContainerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Container {
    GridAxes axes;
    std::string params_hash;
    nlohmann::json settings;
    std::vector<std::string> order;
    std::map<std::string, NodeField> arrays;

    [[nodiscard]] const NodeField& array(const std::string& name) const;
};

void write_container(const std::string& path, const GridAxes& axes, const std::string& params_hash,
                     const nlohmann::json& settings,
                     const std::vector<std::pair<std::string, const NodeField*>>& arrays);

[[nodiscard]] Container read_container(const std::string& path);

/// Writes text atomically enough for batch use (truncate + write).
void write_text(const std::string& path, const std::string& text);

}  // namespace mexp
