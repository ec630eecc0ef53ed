#include "absa/unfreeze.hpp"

#include "absa/errors.hpp"

namespace absa {

UnfreezeStrategy unfreeze_strategy_from_string(const std::string& s) {
    if (s == "gradual") return UnfreezeStrategy::gradual;
    if (s == "chain_thaw_full") return UnfreezeStrategy::chain_thaw_full;
    if (s == "chain_thaw_partial") return UnfreezeStrategy::chain_thaw_partial;
    if (s == "all_at_once") return UnfreezeStrategy::all_at_once;
    throw ConfigError("unknown unfreeze strategy '" + s + "'");
}

std::string to_string(UnfreezeStrategy s) {
    switch (s) {
        case UnfreezeStrategy::gradual: return "gradual";
        case UnfreezeStrategy::chain_thaw_full: return "chain_thaw_full";
        case UnfreezeStrategy::chain_thaw_partial: return "chain_thaw_partial";
        case UnfreezeStrategy::all_at_once: return "all_at_once";
    }
    return "?";
}

UnfreezePlan gradual_unfreeze_plan(const std::vector<std::string>& groups, std::size_t epochs) {
    if (groups.empty()) throw ConfigError("gradual_unfreeze_plan: no groups");
    if (epochs < 1) throw ConfigError("gradual_unfreeze_plan: epochs must be at least 1");
    UnfreezePlan plan;
    plan.strategy = UnfreezeStrategy::gradual;
    std::size_t g = groups.size();
    for (std::size_t e = 0; e < std::min(epochs, g); ++e) {
        UnfreezePhase phase;
        // top e+1 groups, deepest last
        for (std::size_t i = g - (e + 1); i < g; ++i) phase.trainable.push_back(groups[i]);
        phase.epochs = 1;
        if (e + 1 == g && epochs > g) phase.epochs = epochs - g + 1;  // rest trains all
        plan.phases.push_back(std::move(phase));
    }
    return plan;
}

UnfreezePlan chain_thaw_full_plan(const std::vector<std::string>& groups) {
    if (groups.empty()) throw ConfigError("chain_thaw_plan: no groups");
    UnfreezePlan plan;
    plan.strategy = UnfreezeStrategy::chain_thaw_full;
    auto phase_of = [](std::vector<std::string> names) {
        UnfreezePhase p;
        p.trainable = std::move(names);
        p.until_convergence = true;
        return p;
    };
    plan.phases.push_back(phase_of({groups.back()}));  // new head first
    for (const auto& g : groups) plan.phases.push_back(phase_of({g}));  // bottom-up singles
    plan.phases.push_back(phase_of(groups));  // everything together
    return plan;
}

UnfreezePlan chain_thaw_partial_plan(const std::vector<std::string>& groups, std::size_t k) {
    UnfreezePlan full = chain_thaw_full_plan(groups);
    if (k < 1 || k > full.phases.size())
        throw ConfigError("chain_thaw_partial_plan: k must lie in [1," +
                          std::to_string(full.phases.size()) + "], got " + std::to_string(k));
    full.strategy = UnfreezeStrategy::chain_thaw_partial;
    full.phases.resize(k);
    return full;
}

UnfreezePlan all_at_once_plan(const std::vector<std::string>& groups, std::size_t epochs) {
    if (groups.empty()) throw ConfigError("all_at_once_plan: no groups");
    if (epochs < 1) throw ConfigError("all_at_once_plan: epochs must be at least 1");
    UnfreezePlan plan;
    plan.strategy = UnfreezeStrategy::all_at_once;
    UnfreezePhase phase;
    phase.trainable = groups;
    phase.epochs = epochs;
    plan.phases.push_back(std::move(phase));
    return plan;
}

}  // namespace absa
