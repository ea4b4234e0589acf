#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dagcrew/common.hpp"

namespace dagcrew::planner {

/// Minimal JSON path dialect: `$` root, `.member` / `['member']` access,
/// `[0]` numeric index, and `*` wildcard over members or elements.
/// evaluate() returns every match in document order.
std::vector<nlohmann::json> jsonpath_evaluate(const nlohmann::json& document,
                                              const std::string& expression);

}  // namespace dagcrew::planner
