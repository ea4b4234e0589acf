#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace dagcrew::harness {

/// Bundled task library: a handful of construction blueprints (including
/// the trapdoor-and-flowers plot and a trivial flat platform), the two
/// cooking goals, and the escape atoms behind the generator.
const std::vector<std::string>& bundled_construction_tasks();
const std::vector<std::string>& bundled_cooking_tasks();

/// {"<task id>": ["<blueprint line>", ...]}
nlohmann::json construction_document(const std::string& task_id);

/// {"goal": "<item>", "recipes": [<recipe document>, ...]}
nlohmann::json cooking_document(const std::string& task_id);

}  // namespace dagcrew::harness
