// Built-in schemas used by the verify command and the test suites.
#pragma once

#include <memory>

#include "strudel/schema.hpp"

namespace strudel {

// Two objects with two properties each; two slots with two dimensions each.
inline SchemaPtr toy_two_level_schema() {
    return std::make_shared<const HierarchySchema>(HierarchySchema::full_product(
        {{"object", {"object_1", "object_2"}, {"slot_1", "slot_2"}},
         {"property", {"color", "size"}, {"dim_1", "dim_2"}}}));
}

// Three hierarchy levels: object x latent-kind x property, with slots split
// into mask/component sub-latents.
inline SchemaPtr three_level_schema() {
    return std::make_shared<const HierarchySchema>(HierarchySchema::full_product(
        {{"object", {"object_1", "object_2"}, {"slot_1", "slot_2"}},
         {"kind", {"extrinsic", "intrinsic"}, {"mask", "component"}},
         {"property", {"position", "appearance"}, {"dim_1", "dim_2"}}}));
}

}  // namespace strudel
