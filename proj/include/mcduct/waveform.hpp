#pragma once

#include <vector>

#include "mcduct/params.hpp"

namespace mcduct {

/// A channel impulse response sampled on the shared recording grid:
/// h[l] is the expected rate of binding events per released molecule [1/s]
/// at t = grid.time(l). Nonnegative and finite everywhere by construction.
struct CirWaveform {
    ChannelParams params;
    TimeGrid grid;
    std::vector<double> h;

    double peak() const;
    bool all_zero() const;
};

}  // namespace mcduct
