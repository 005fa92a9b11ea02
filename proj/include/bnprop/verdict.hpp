#pragma once

#include <cstdint>
#include <string>

namespace bnprop {

enum class Decision { Accept, Reject };

// Outcome of one tester invocation. Unless `trigger` is set (forced paths:
// preprocessing discrepancies, count guards, budget overruns), the decision is
// Reject exactly when statistic >= threshold, so verdicts are auditable.
struct Verdict {
    Decision decision = Decision::Accept;
    double statistic = 0.0;
    double threshold = 0.0;
    std::uint64_t samples_used = 0;
    std::string trigger; // empty unless a forced path fired
    std::string stage;   // "preprocess" | "structure" | "statistic" (bn testers)

    bool accepted() const { return decision == Decision::Accept; }
};

inline Verdict make_verdict(bool reject, double statistic, double threshold,
                            std::uint64_t samples_used, std::string stage = {}) {
    Verdict v;
    v.decision = reject ? Decision::Reject : Decision::Accept;
    v.statistic = statistic;
    v.threshold = threshold;
    v.samples_used = samples_used;
    v.stage = std::move(stage);
    return v;
}

inline Verdict forced_reject(double statistic, double threshold, std::uint64_t samples_used,
                             std::string trigger, std::string stage = {}) {
    Verdict v;
    v.decision = Decision::Reject;
    v.statistic = statistic;
    v.threshold = threshold;
    v.samples_used = samples_used;
    v.trigger = std::move(trigger);
    v.stage = std::move(stage);
    return v;
}

} // namespace bnprop
