#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ovalflow::spectral {

// Real trigonometric series
//   u(theta) = c[0] + sum_{n>=1} c[n] cos(n theta) + s[n] sin(n theta).
// s[0] is carried for indexing convenience and is always zero.
struct Series
{
    std::vector<double> c;
    std::vector<double> s;

    Series() = default;
    explicit Series(std::size_t harmonics) : c(harmonics + 1, 0.0), s(harmonics + 1, 0.0) {}

    std::size_t harmonics() const { return c.empty() ? 0 : c.size() - 1; }
};

inline Series& operator+=(Series& a, Series const& b)
{
    for (std::size_t n = 0; n < a.c.size(); ++n)
    {
        a.c[n] += b.c[n];
        a.s[n] += b.s[n];
    }
    return a;
}

inline Series operator*(double f, Series a)
{
    for (std::size_t n = 0; n < a.c.size(); ++n)
    {
        a.c[n] *= f;
        a.s[n] *= f;
    }
    return a;
}

inline Series operator+(Series a, Series const& b) { return a += b; }

// Termwise derivative of the given order.
inline Series derivative(Series const& u, int order)
{
    Series d(u.harmonics());
    for (std::size_t n = 0; n < u.c.size(); ++n)
    {
        double c = u.c[n];
        double s = u.s[n];
        double const fn = static_cast<double>(n);
        for (int k = 0; k < order; ++k)
        {
            double const nc = fn * s;
            double const ns = -fn * c;
            c = nc;
            s = ns;
        }
        d.c[n] = c;
        d.s[n] = s;
    }
    return d;
}

// Values of u, u', u'', u''' at one angle.
struct PointValues
{
    double v0 = 0, v1 = 0, v2 = 0, v3 = 0;
};

// Direct summation; e^{i n theta} by recurrence, reseeded periodically
// to bound the phase drift.
inline PointValues evaluate(Series const& u, double theta)
{
    PointValues out;
    out.v0 = u.c.empty() ? 0.0 : u.c[0];
    std::complex<double> const z = std::polar(1.0, theta);
    std::complex<double> w = 1.0;
    for (std::size_t n = 1; n < u.c.size(); ++n)
    {
        if (n % 32 == 0)
            w = std::polar(1.0, static_cast<double>(n) * theta);
        else
            w *= z;
        double const fn = static_cast<double>(n);
        double const term = u.c[n] * w.real() + u.s[n] * w.imag();
        double const dterm = -u.c[n] * w.imag() + u.s[n] * w.real();
        out.v0 += term;
        out.v1 += fn * dterm;
        out.v2 -= fn * fn * term;
        out.v3 -= fn * fn * fn * dterm;
    }
    return out;
}

namespace detail {

struct FftwFree
{
    void operator()(void* p) const { fftw_free(p); }
};

template<class T>
using FftwArray = std::unique_ptr<T[], FftwFree>;

template<class T>
FftwArray<T> fftw_array(std::size_t n)
{
    void* p = fftw_malloc(sizeof(T) * (n == 0 ? 1 : n));
    if (!p)
        throw std::bad_alloc();
    return FftwArray<T>(static_cast<T*>(p));
}

// Plans are created once per size and reused through the new-array
// execute interface, which is safe to call concurrently.
class PlanCache
{
  public:
    struct Pair
    {
        fftw_plan forward = nullptr;   // r2c
        fftw_plan backward = nullptr;  // c2r
    };

    static PlanCache& instance()
    {
        static PlanCache cache;
        return cache;
    }

    Pair get(std::size_t n)
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end())
            return it->second;
        auto real = fftw_array<double>(n);
        auto cplx = fftw_array<std::complex<double>>(n / 2 + 1);
        int const ni = static_cast<int>(n);
        Pair p;
        p.forward = fftw_plan_dft_r2c_1d(
            ni, real.get(), reinterpret_cast<fftw_complex*>(cplx.get()), FFTW_ESTIMATE);
        p.backward = fftw_plan_dft_c2r_1d(
            ni, reinterpret_cast<fftw_complex*>(cplx.get()), real.get(), FFTW_ESTIMATE);
        if (!p.forward || !p.backward)
            throw std::runtime_error("FFTW planning failed");
        plans_.emplace(n, p);
        return p;
    }

  private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::size_t, Pair> plans_;
};

}  // namespace detail

// Values of u on the grid theta_j = 2 pi j / m. Requires m > 2 * harmonics.
inline std::vector<double> synthesize(Series const& u, std::size_t m)
{
    std::size_t const nh = u.harmonics();
    if (m <= 2 * nh)
        throw std::invalid_argument("synthesize: grid too small for series");
    auto plan = detail::PlanCache::instance().get(m);
    auto spec = detail::fftw_array<std::complex<double>>(m / 2 + 1);
    auto real = detail::fftw_array<double>(m);
    for (std::size_t n = 0; n <= m / 2; ++n)
        spec[n] = 0.0;
    if (!u.c.empty())
        spec[0] = u.c[0];
    for (std::size_t n = 1; n <= nh; ++n)
        spec[n] = std::complex<double>(0.5 * u.c[n], -0.5 * u.s[n]);
    fftw_execute_dft_c2r(
        plan.backward, reinterpret_cast<fftw_complex*>(spec.get()), real.get());
    return std::vector<double>(real.get(), real.get() + m);
}

// Least-squares (interpolating) trigonometric coefficients up to the given
// harmonic from equispaced samples. Requires harmonics < values.size() / 2.
inline Series analyze(std::span<double const> values, std::size_t harmonics)
{
    std::size_t const m = values.size();
    if (2 * harmonics >= m)
        throw std::invalid_argument("analyze: too many harmonics for grid");
    auto plan = detail::PlanCache::instance().get(m);
    auto real = detail::fftw_array<double>(m);
    auto spec = detail::fftw_array<std::complex<double>>(m / 2 + 1);
    std::copy(values.begin(), values.end(), real.get());
    fftw_execute_dft_r2c(
        plan.forward, real.get(), reinterpret_cast<fftw_complex*>(spec.get()));
    Series u(harmonics);
    double const inv = 1.0 / static_cast<double>(m);
    u.c[0] = spec[0].real() * inv;
    for (std::size_t n = 1; n <= harmonics; ++n)
    {
        u.c[n] = 2.0 * spec[n].real() * inv;
        u.s[n] = -2.0 * spec[n].imag() * inv;
    }
    return u;
}

inline double grid_angle(std::size_t j, std::size_t m)
{
    return 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m);
}

// Reduce an angle to [0, 2 pi).
inline double wrap_angle(double theta)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(theta, two_pi);
    if (r < 0)
        r += two_pi;
    if (r >= two_pi)
        r = 0.0;
    return r;
}

// Signed difference b - a reduced to (-pi, pi].
inline double angle_difference(double b, double a)
{
    double d = wrap_angle(b - a);
    if (d > std::numbers::pi)
        d -= 2.0 * std::numbers::pi;
    return d;
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace ovalflow::spectral
