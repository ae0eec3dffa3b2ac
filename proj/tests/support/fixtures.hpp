#pragma once

#include "sgdlab/fixtures.hpp"

namespace sgdlab::testing {
using fixtures::SupportFixtureOptions;
using fixtures::aligned_tail_net;
using fixtures::exact_support_dataset;
}  // namespace sgdlab::testing
