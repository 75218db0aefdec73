#pragma once

#include <cstdint>
#include <string>

namespace tacseg {

/// Sampling rate held as an exact rational so long recordings do not drift
/// off the grid (16.67 Hz is 50/3, not 16.67).
struct Rate {
    std::int64_t num = 1;
    std::int64_t den = 1;

    /// Snaps a user-typed rate onto a small-denominator rational when one lies
    /// within 0.005 Hz (denominators up to 12); otherwise approximates with
    /// denominator up to 1e6.
    static Rate from_hz(double hz);

    double hz() const { return static_cast<double>(num) / static_cast<double>(den); }
    /// Seconds of the k-th grid point after t0.
    double time_at(double t0, std::int64_t k) const {
        return t0 + static_cast<double>(k * den) / static_cast<double>(num);
    }
    std::string str() const;

    friend bool operator==(const Rate&, const Rate&) = default;
};

inline const Rate kTactileRate{50, 3};

}  // namespace tacseg
