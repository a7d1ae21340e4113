#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "concord/rng.hpp"
#include "concord/stochastic.hpp"

namespace concord {

// Randomized property suites exercised both by the CLI `verify` subcommand
// and by the acceptance tests.

struct SuiteResult {
    std::string name;
    int trials = 0;
    int failures = 0;
    std::vector<std::string> counterexamples;  // CSV dumps of failing inputs
    bool passed() const { return failures == 0; }
};

// Known names: scrambling_lemma, metropolis, prop_single, prop_multi,
// confidence_ineq, sia. "all" runs every suite.
std::vector<std::string> verify_suite_names();
SuiteResult run_verify_suite(const std::string& name, int trials, std::uint64_t seed);
std::vector<SuiteResult> run_all_suites(int trials, std::uint64_t seed);

// Shared generators (also used by the test binaries).
StochasticMatrix random_positive_stochastic(std::size_t n, Rng& rng);
StochasticMatrix random_permutation_matrix(std::size_t n, Rng& rng);
StationaryDistribution random_positive_distribution(std::size_t n, Rng& rng);
StochasticMatrix random_self_confident_doubly_stochastic(std::size_t n, Rng& rng);
// Row-normalized random similarity matrix (self-confident, non-symmetric).
StochasticMatrix random_self_confident_stochastic(std::size_t n, Rng& rng);

// Rejection sampling of condition-satisfying matrices (Dirichlet rows with
// a biased concentration, then checked); throws GenerationError when the
// attempt budget is exhausted.
StochasticMatrix random_single_lowq_matrix(std::size_t n, std::size_t b, Rng& rng,
                                           int max_attempts = 10000);
StochasticMatrix random_multi_lowq_matrix(std::size_t n,
                                          const std::vector<std::size_t>& regular,
                                          const std::vector<std::size_t>& lowq, Rng& rng,
                                          int max_attempts = 10000);

}  // namespace concord
