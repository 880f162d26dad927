#include "mcduct/waveform.hpp"

#include <algorithm>

namespace mcduct {

double CirWaveform::peak() const {
    double m = 0.0;
    for (double v : h) m = std::max(m, v);
    return m;
}

bool CirWaveform::all_zero() const {
    return std::all_of(h.begin(), h.end(), [](double v) { return v == 0.0; });
}

}  // namespace mcduct
