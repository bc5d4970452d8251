#include "mimo/sysmodel.hpp"

#include <cmath>
#include <string>

#include "mimo/errors.hpp"

namespace mimo {

void SystemConfig::validate() const {
    if (M < 1 || K < 1) throw ConfigError("system: M and K must be >= 1");
    if (Lp < K) throw ConfigError("system: need at least K pilot slots for orthogonal pilots");
    if (L < Lp) throw ConfigError("system: block length L must cover the pilot slots");
    if (N < 0) throw ConfigError("system: N must be >= 0");
}

Constellation make_constellation(int q) {
    if (q < 1 || q > 6)
        throw UnsupportedOrder("make_constellation: order exponent " + std::to_string(q) +
                               " outside [1,6]");
    const int levels = 1 << q;           // per-dimension
    const int top = levels - 1;          // largest odd level
    Constellation c;
    c.order = q;
    c.alpha = std::sqrt(2.0 * (std::pow(4.0, q) - 1.0) / 3.0);
    c.points.reserve(static_cast<size_t>(levels) * levels);
    for (int re = 0; re < levels; ++re)
        for (int im = 0; im < levels; ++im)
            c.points.emplace_back((2.0 * re - top) / c.alpha, (2.0 * im - top) / c.alpha);
    return c;
}

namespace {

// odd-integer level recovered from one scaled coordinate, or throws
int to_level(double v, int q, double tol_scaled) {
    const double r = std::round(v);
    const int iv = static_cast<int>(r);
    if (std::abs(v - r) > tol_scaled || ((iv % 2) + 2) % 2 != 1 || std::abs(iv) > (1 << q) - 1)
        throw NotAConstellationPoint("qam_decompose: coordinate " + std::to_string(v) +
                                     " is not a valid level");
    return iv;
}

} // namespace

std::vector<CVec> qam_decompose(const CVec& x, const Constellation& c) {
    const int q = c.order;
    const int k = static_cast<int>(x.size());
    // 1e-9 tolerance is on the unit-power point, so scale it by alpha here
    const double tol = 1e-9 * c.alpha;
    std::vector<CVec> v(q, CVec(k));
    for (int i = 0; i < k; ++i) {
        int lre = to_level(x(i).real() * c.alpha, q, tol);
        int lim = to_level(x(i).imag() * c.alpha, q, tol);
        for (int b = q - 1; b >= 0; --b) {
            const int w = 1 << b;
            const double sre = lre >= 0 ? 1.0 : -1.0;
            const double sim = lim >= 0 ? 1.0 : -1.0;
            v[b](i) = cxd(sre, sim);
            lre -= static_cast<int>(sre) * w;
            lim -= static_cast<int>(sim) * w;
        }
    }
    return v;
}

CVec qam_reconstruct(const std::vector<CVec>& v, const Constellation& c) {
    if (static_cast<int>(v.size()) != c.order)
        throw DimensionMismatch("qam_reconstruct: expected " + std::to_string(c.order) +
                                " binary layers, got " + std::to_string(v.size()));
    CVec x = CVec::Zero(v[0].size());
    for (int b = 0; b < c.order; ++b) {
        if (v[b].size() != x.size())
            throw DimensionMismatch("qam_reconstruct: inconsistent layer lengths");
        x += std::pow(2.0, b) * v[b];
    }
    return x / c.alpha;
}

namespace {

// nearest level index per dimension; exact midpoints resolve to the lower level
inline int level_index(double v, int levels, double alpha) {
    const double t = (v * alpha + (levels - 1)) / 2.0;
    int i = static_cast<int>(std::ceil(t - 0.5));
    if (i < 0) i = 0;
    if (i > levels - 1) i = levels - 1;
    return i;
}

} // namespace

CVec slice_to_symbol(const CVec& x, const Constellation& c) {
    const int levels = 1 << c.order;
    CVec out(x.size());
    for (int i = 0; i < x.size(); ++i) {
        const int ire = level_index(x(i).real(), levels, c.alpha);
        const int iim = level_index(x(i).imag(), levels, c.alpha);
        out(i) = c.points[static_cast<size_t>(ire) * levels + iim];
    }
    return out;
}

std::vector<int> nearest_indices(const CVec& x, const Constellation& c) {
    const int levels = 1 << c.order;
    std::vector<int> out(static_cast<size_t>(x.size()));
    for (int i = 0; i < x.size(); ++i) {
        const int ire = level_index(x(i).real(), levels, c.alpha);
        const int iim = level_index(x(i).imag(), levels, c.alpha);
        out[static_cast<size_t>(i)] = ire * levels + iim;
    }
    return out;
}

} // namespace mimo
