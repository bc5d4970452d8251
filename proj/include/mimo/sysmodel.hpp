#pragma once

#include <vector>

#include "mimo/linalg.hpp"

namespace mimo {

// Frame layout: N+1 blocks of L symbol slots each. Block 1 carries L_P pilot
// slots followed by L - L_P data slots; blocks 2..N+1 are data only.
struct SystemConfig {
    int M = 8;  // receive antennas
    int K = 4;  // single-antenna users
    int L = 10; // slots per block
    int Lp = 4; // pilot slots, needs K <= Lp <= L
    int N = 4;  // data-only blocks after the first

    void validate() const;
};

// Square QAM of order 4^Q with unit average symbol power. Points are indexed
// lexicographically by (Re, Im) ascending, which the slicer relies on for
// deterministic tie-breaking.
struct Constellation {
    int order = 1;            // Q
    double alpha = 0.0;       // sqrt(2(4^Q-1)/3), scales odd-integer levels to unit power
    std::vector<cxd> points;  // 4^Q entries

    int size() const { return static_cast<int>(points.size()); }
};

Constellation make_constellation(int q);

// x = (1/alpha) sum_q 2^{q-1} v_q with Re/Im of each v_q in {-1,+1}.
// Input entries must lie within 1e-9 of a constellation point.
std::vector<CVec> qam_decompose(const CVec& x, const Constellation& c);

CVec qam_reconstruct(const std::vector<CVec>& v, const Constellation& c);

// Nearest constellation point per entry; ties go to the smaller (Re, Im) pair.
CVec slice_to_symbol(const CVec& x, const Constellation& c);

// Same decision as slice_to_symbol, reported as point indices.
std::vector<int> nearest_indices(const CVec& x, const Constellation& c);

} // namespace mimo
