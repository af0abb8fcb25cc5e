#pragma once

// Quick internal consistency checks behind `slicenet selftest`.

#include <string>
#include <vector>

namespace gatslice {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Finite-difference gradient checks of the tensor primitives.
std::vector<CheckResult> check_gradients();
/// Coarse and fine action codecs round-trip every action.
std::vector<CheckResult> check_codecs();
/// Attention rows are distributions supported on the mask.
std::vector<CheckResult> check_attention();
/// DQN recovers the exact optimum of the toy MDP.
std::vector<CheckResult> check_toy_oracle();

std::vector<CheckResult> run_selftest();

} // namespace gatslice
