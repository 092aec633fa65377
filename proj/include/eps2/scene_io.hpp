#pragma once

#include <string>

#include <json.hpp>

#include "eps2/region.hpp"

namespace eps2 {

// Scene documents are JSON:
//   {"dim": 2, "plus": TREE, "minus": TREE, "scale": 1.0 (optional)}
//   TREE := {"op": "union"|"intersection", "children": [TREE...]}
//         | {"op": "complement", "children": [TREE]}
//         | {"primitive": NAME, "params": {...}}
// See README.md for the primitive parameter tables.
// Errors are SceneError with a message prefixed by the JSON path, e.g.
// "plus.children[1].params.radius: expected a positive number".
RegionPair parse_scene(const nlohmann::json& doc);
RegionPair load_scene(const std::string& path);
nlohmann::json region_to_json(const RegionNode& n);
nlohmann::json scene_to_json(const RegionPair& R);

}  // namespace eps2
