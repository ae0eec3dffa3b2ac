#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgdlab/dataset.hpp"
#include "sgdlab/network.hpp"

namespace sgdlab {

// One verified property: `value` is the measured quantity and `bound` the
// threshold it was held against. A failed check is a result, not an error.
struct VerifyCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double bound = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::string suite;
    std::vector<VerifyCheck> checks;
    bool all_pass = true;
};

// theorem1, prop1, prop1a, propGD, two-step, balancedness, weight-decay,
// gradcheck, relu-counterexample.
std::vector<std::string> verify_suite_names();

// Runs one self-contained, seeded suite. Unknown names throw
// std::invalid_argument listing the valid ones.
VerifyReport run_verify_suite(const std::string& suite);

std::string verify_report_json(const VerifyReport& report);

// Monte Carlo over random diagonal-chain inits: trains each irrelevant chain
// (zero labels, positive input second moment) with full-batch updates until
// its smallest weight crosses the kill threshold, and records which layer
// holds that smallest weight. Chains still alive at max_steps are classified
// by their current argmin and counted as unresolved.
struct SupportLayerCensus {
    std::size_t depth = 0;
    std::size_t chains = 0;   // irrelevant chains per seed
    std::size_t seeds = 0;
    std::vector<std::vector<std::size_t>> layer_counts;  // [chain][layer] histogram
    std::size_t all_first_layer = 0;  // seeds whose every chain died in layer 1
    std::size_t unresolved = 0;
};

SupportLayerCensus support_layer_census(std::size_t depth, std::size_t chains,
                                        std::size_t seeds, std::size_t max_steps);

// Two-point ReLU fixture: the relevant input parts are large and opposite,
// the irrelevant parts tiny, positive, and shared, and the labels equal the
// magnitude of the relevant part. Each hidden row activates on exactly one
// of the two points, and with the under-fitted init below, plain gradient
// descent pushes the irrelevant first-layer weights up instead of down.
struct OppositePairFixture {
    Dataset ds;
    NetworkSpec spec;
    NetworkState net;
    std::vector<std::size_t> irrelevant_columns;  // {1}
};

OppositePairFixture opposite_relevant_pair_fixture();

// Max relative error between backpropagated gradients and central finite
// differences over every weight of a randomly initialized network.
double max_grad_check_error(const NetworkSpec& spec, std::uint64_t seed);

}  // namespace sgdlab
