// Bivariate normal upper-orthant probability with Genz's fixed-node method:
// Gauss-Legendre quadrature of the Plackett integral for |r| < 0.925 and of
// Drezner's asymptotic expansion around |r| = 1 otherwise. Absolute accuracy
// is close to double precision over the whole parameter range.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "cfho/channel.hpp"
#include "cfho/error.hpp"

namespace cfho {

namespace {

// Half sets of Gauss-Legendre nodes (positive abscissae) and weights.
constexpr std::array<double, 3> kW6{0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
constexpr std::array<double, 3> kX6{0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
constexpr std::array<double, 6> kW12{0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                                     0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
constexpr std::array<double, 6> kX12{0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                                     0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
constexpr std::array<double, 10> kW20{0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                                      0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                                      0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                                      0.1527533871307259};
constexpr std::array<double, 10> kX20{0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                                      0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                                      0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                                      0.07652652113349733};

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double genz_bvnu(double h, double k, double r) {
    std::span<const double> w;
    std::span<const double> x;
    if (std::abs(r) < 0.3) {
        w = kW6;
        x = kX6;
    } else if (std::abs(r) < 0.75) {
        w = kW12;
        x = kX12;
    } else {
        w = kW20;
        x = kX20;
    }
    const double two_pi = 2.0 * std::numbers::pi;
    double hk = h * k;
    double p = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r) / 2.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            for (double node : {1.0 - x[i], 1.0 + x[i]}) {
                const double sn = std::sin(asr * node);
                p += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        }
        return p * asr / two_pi + phi_cdf(-h) * phi_cdf(-k);
    }
    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(r) < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 80.0;
        const double asr0 = -(bs / as + hk) / 2.0;
        if (asr0 > -100.0) p = a * std::exp(asr0) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
        if (hk > -100.0) {
            const double b = std::sqrt(bs);
            const double sp = std::sqrt(two_pi) * phi_cdf(-b / a);
            p -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
        }
        a /= 2.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            for (double node : {1.0 - x[i], 1.0 + x[i]}) {
                const double xs = (a * node) * (a * node);
                const double asr = -(bs / xs + hk) / 2.0;
                if (asr <= -100.0) continue;
                const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                const double rs = std::sqrt(1.0 - xs);
                const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
                sum += w[i] * std::exp(asr) * (sp - ep);
            }
        }
        p = (a * sum - p) / two_pi;
    }
    if (r > 0.0) return p + phi_cdf(-std::max(h, k));
    if (h >= k) return -p;
    const double l = h < 0.0 ? phi_cdf(k) - phi_cdf(h) : phi_cdf(-h) - phi_cdf(-k);
    return l - p;
}

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double bvn_upper_rect(double a, double b, double corr) {
    if (std::isnan(a) || std::isnan(b) || std::isnan(corr)) {
        throw ContractViolation("bvn_upper_rect: NaN argument");
    }
    if (corr < -1.0 || corr > 1.0) throw ContractViolation("bvn_upper_rect: correlation outside [-1, 1]");

    if (a == std::numeric_limits<double>::infinity() || b == std::numeric_limits<double>::infinity()) return 0.0;
    if (a == -std::numeric_limits<double>::infinity()) return q_function(b);
    if (b == -std::numeric_limits<double>::infinity()) return q_function(a);

    if (corr == 1.0) return q_function(std::max(a, b));
    if (corr == -1.0) return std::max(0.0, q_function(a) - q_function(-b));

    const double qa = q_function(a);
    const double qb = q_function(b);
    if (corr == 0.0) return qa * qb;
    return std::clamp(genz_bvnu(a, b, corr), 0.0, std::min(qa, qb));
}

}  // namespace cfho
