#pragma once

#include <string>
#include <vector>

namespace absa {

enum class UnfreezeStrategy { gradual, chain_thaw_full, chain_thaw_partial, all_at_once };

UnfreezeStrategy unfreeze_strategy_from_string(const std::string& s);
std::string to_string(UnfreezeStrategy s);

struct UnfreezePhase {
    std::vector<std::string> trainable;  // group names trainable in this phase
    bool until_convergence = false;      // early-stopped phase (chain-thaw style)
    std::size_t epochs = 1;              // fixed-length phase otherwise
};

struct UnfreezePlan {
    UnfreezeStrategy strategy = UnfreezeStrategy::all_at_once;
    std::vector<UnfreezePhase> phases;
};

// Head-first thawing: phase 1 trains only the last (head) group, each later
// phase adds the next-deeper group, and once everything is thawed the
// remaining epochs train all groups jointly. Groups are ordered bottom-to-top.
UnfreezePlan gradual_unfreeze_plan(const std::vector<std::string>& groups, std::size_t epochs);

// Head until convergence, then every group individually bottom-up (head
// included), then everything together. Each phase runs to convergence.
UnfreezePlan chain_thaw_full_plan(const std::vector<std::string>& groups);

// First k phases of the full chain-thaw sequence.
UnfreezePlan chain_thaw_partial_plan(const std::vector<std::string>& groups, std::size_t k);

UnfreezePlan all_at_once_plan(const std::vector<std::string>& groups, std::size_t epochs);

}  // namespace absa
