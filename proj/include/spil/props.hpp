#pragma once

#include <string>
#include <vector>

namespace spil {

struct PropertyCheck {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    /// true: pass iff measured <= threshold; false: pass iff measured >= threshold.
    bool upper_bound = true;
    bool pass = false;
};

struct PropertyReport {
    std::vector<PropertyCheck> checks;
    bool all_pass = true;
};

/// Executes every deterministic invariant across the modules (labeling
/// identities, KL and Huber closed forms, sampler statistics, gradient
/// checks with a planted-error negative control, term-assembly equalities,
/// frozen-parameter checks, simulator invariants, dataset counting) and
/// reports each with its measured value.
PropertyReport run_property_suite();

std::string format_property_report(const PropertyReport& report);

}  // namespace spil
