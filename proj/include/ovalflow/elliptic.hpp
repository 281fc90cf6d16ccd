#pragma once

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/jacobi_elliptic.hpp>

#include "errors.hpp"

namespace ovalflow::elliptic {

// Modulus convention throughout: integrands use k^2 sin^2 u.

inline void check_modulus(double k)
{
    if (!(k >= 0.0 && k < 1.0))
        throw ConfigError("elliptic modulus must lie in [0, 1)");
}

inline double elliptic_K(double k)
{
    check_modulus(k);
    return std::comp_ellint_1(k);
}

// Incomplete integral of the first kind, extended to all real phi by
// F(phi + m pi) = F(phi) + 2 m K.
inline double elliptic_F(double phi, double k)
{
    check_modulus(k);
    if (!std::isfinite(phi))
        throw ConfigError("elliptic_F: non-finite amplitude");
    double const m = std::round(phi / std::numbers::pi);
    double const r = phi - m * std::numbers::pi;
    double const base = r < 0 ? -std::ellint_1(k, -r) : std::ellint_1(k, r);
    return base + 2.0 * m * std::comp_ellint_1(k);
}

struct JacobiValues
{
    double sn = 0;
    double cn = 1;
    double dn = 1;
};

inline JacobiValues jacobi(double u, double k)
{
    check_modulus(k);
    JacobiValues v;
    v.sn = boost::math::jacobi_elliptic(k, u, &v.cn, &v.dn);
    // The library dn loses accuracy where cn vanishes; this form is well
    // conditioned everywhere.
    v.dn = std::sqrt((1.0 - k) * (1.0 + k) + k * k * v.cn * v.cn);
    return v;
}

}  // namespace ovalflow::elliptic
