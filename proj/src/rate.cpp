#include "tacseg/rate.hpp"

#include "tacseg/errors.hpp"

#include <cmath>
#include <numeric>

namespace tacseg {

Rate Rate::from_hz(double hz) {
    if (!std::isfinite(hz) || hz <= 0.0) fail(ErrorCode::ConfigError, "rate must be positive and finite");
    for (std::int64_t den = 1; den <= 12; ++den) {
        const double num = std::round(hz * static_cast<double>(den));
        if (num >= 1.0 && std::abs(num / static_cast<double>(den) - hz) <= 0.005) {
            const auto n = static_cast<std::int64_t>(num);
            const auto g = std::gcd(n, den);
            return {n / g, den / g};
        }
    }
    constexpr std::int64_t kDen = 1000000;
    const auto n = static_cast<std::int64_t>(std::llround(hz * kDen));
    const auto g = std::gcd(n, kDen);
    return {n / g, kDen / g};
}

std::string Rate::str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

}  // namespace tacseg
