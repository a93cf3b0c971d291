#pragma once

// Degree-and-leaning heuristics used as comparison points. None of them look
// at propagation probabilities. "Degree" is out-degree: seeds push items
// along out-edges.

#include "divexp/core.hpp"

namespace divexp {

struct BaselineResult {
  Assignment assignment;
  // Fewer than k pairs fit under the attention bounds.
  bool exhausted = false;
};

// Highest-degree node with attention left gets its closest unassigned item.
// Ties: smaller node id, then smaller item id.
BaselineResult baseline_close(const SocialGraph& g, const ItemCatalog& items,
                              const ConstraintSet& c);

// As baseline_close but with the item of most different leaning.
BaselineResult baseline_far(const SocialGraph& g, const ItemCatalog& items,
                            const ConstraintSet& c);

// All pairs ranked by out_degree(u) * |l(u) - l(i)|, taken in order while
// the attention bounds allow.
BaselineResult baseline_weight(const SocialGraph& g, const ItemCatalog& items,
                               const ConstraintSet& c);

}  // namespace divexp
