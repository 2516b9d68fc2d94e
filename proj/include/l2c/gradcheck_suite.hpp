#pragma once

// Finite-difference verification of every differentiable op, module and
// composed training loss at desk scale.

#include <cstdint>
#include <string>
#include <vector>

namespace l2c {

struct GradcheckRow {
    std::string group;  // op, encoder, graph, decoder or loss
    std::string name;
    std::size_t tensors = 0;     // leaves checked
    std::size_t components = 0;  // perturbed components across those leaves
    double max_rel_error = 0.0;
    double seconds = 0.0;
    bool passed = false;
};

struct GradcheckOptions {
    double tolerance = 1e-4;
    double eps = 1e-5;
    std::uint64_t seed = 0;
    double loss_eps = 1e-6;  // step for the composed-loss rows
    // Per-leaf cap for the composed-loss rows; 0 checks every component.
    std::size_t loss_components = 64;
};

std::vector<GradcheckRow> run_gradcheck_suite(const GradcheckOptions& options = {});

bool all_passed(const std::vector<GradcheckRow>& rows);

// Fixed-width human table; one row per check plus a summary line.
std::string format_gradcheck_table(const std::vector<GradcheckRow>& rows, double tolerance);

} // namespace l2c
