#pragma once
#include <optional>
#include <string>
#include <vector>

#include "psahara/utility.hpp"

namespace psahara {

struct Bridge {
    double left;   // tangent point on the left arc
    double right;  // tangent point on the right arc
    double slope;  // chord slope
};

struct EnvelopeResult {
    PiecewiseUtility envelope;
    std::vector<Bridge> bridges;  // only intervals where the envelope differs from the input
    std::vector<double> kinks;    // breakpoints with gamma_k^+ < gamma_k^-
};

EnvelopeResult concave_envelope(const RawUtility& U);
EnvelopeResult concave_envelope(const PiecewiseUtility& U);

struct ConcavityCheck {
    bool concave = true;
    std::optional<double> where;
    std::string reason;
};

ConcavityCheck is_concave(const PiecewiseUtility& U);
ConcavityCheck is_concave(const RawUtility& U);

}  // namespace psahara
