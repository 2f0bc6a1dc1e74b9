#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace crrr {

inline double std_normal_pdf(double z) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

// Absolute error below 1e-15; erfc carries the tails.
inline double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
}

// Inverse normal CDF: rational initial guess (Acklam) plus one Halley step
// against std_normal_cdf. Relative error is at machine level over (0, 1).
inline double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("std_normal_quantile: p must lie in (0, 1)");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;

  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  constexpr double sqrt_2pi = 2.5066282746310002;
  const double e = std_normal_cdf(x) - p;
  const double u = e * sqrt_2pi * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

// Stable in both tails.
inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("logit: p must lie in (0, 1)");
  }
  return std::log(p) - std::log1p(-p);
}

// log(1 + exp(a)) without overflow; exact identity
// softplus(a) - softplus(-a) == a holds to rounding.
inline double softplus(double a) {
  return std::fmax(a, 0.0) + std::log1p(std::exp(-std::fabs(a)));
}

// d/da softplus(a).
inline double softplus_grad(double a) { return logistic(a); }

// Standard bivariate normal CDF P(X <= x, Y <= y) with correlation rho.
// Gauss-Legendre quadrature over the correlation integral, with the
// near-singular |rho| branch handled by the usual series correction
// (Drezner & Wesolowsky; Genz's double-precision variant, |err| < 5e-16).
inline double binormal_cdf(double x, double y, double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw std::invalid_argument("binormal_cdf: rho must lie in [-1, 1]");
  }
  static constexpr double w20[] = {0.01761400713915212,  0.04060142980038694,
                                   0.06267204833410906,  0.08327674157670475,
                                   0.1019301198172404,   0.1181945319615184,
                                   0.1316886384491766,   0.1420961093183821,
                                   0.1491729864726037,   0.1527533871307259};
  static constexpr double x20[] = {-0.9931285991850949, -0.9639719272779138,
                                   -0.9122344282513259, -0.8391169718222188,
                                   -0.7463319064601508, -0.6360536807265150,
                                   -0.5108670019508271, -0.3737060887154196,
                                   -0.2277858511416451, -0.07652652113349733};
  static constexpr double w12[] = {0.04717533638651183, 0.1069393259953184,
                                   0.1600783285433462,  0.2031674267230659,
                                   0.2334925365383548,  0.2491470458134028};
  static constexpr double x12[] = {-0.9815606342467192, -0.9041172563704749,
                                   -0.7699026741943047, -0.5873179542866175,
                                   -0.3678314989981802, -0.1252334085114689};
  static constexpr double w6[] = {0.1713244923791704, 0.3607615730481386,
                                  0.4679139345726910};
  static constexpr double x6[] = {-0.9324695142031521, -0.6612093864662645,
                                  -0.2386191860831969};

  const double* gw;
  const double* gx;
  int ng;
  if (std::fabs(rho) < 0.3) {
    gw = w6, gx = x6, ng = 3;
  } else if (std::fabs(rho) < 0.75) {
    gw = w12, gx = x12, ng = 6;
  } else {
    gw = w20, gx = x20, ng = 10;
  }

  const double h = -x, k = -y;
  double hk = h * k;
  double bvn = 0.0;

  if (std::fabs(rho) < 0.925) {
    if (std::fabs(rho) > 0.0) {
      const double hs = 0.5 * (h * h + k * k);
      const double asr = std::asin(rho);
      for (int i = 0; i < ng; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double sn = std::sin(asr * (is * gx[i] + 1.0) * 0.5);
          bvn += gw[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
      }
      bvn = bvn * asr / (4.0 * std::numbers::pi);
    }
    return bvn + std_normal_cdf(-h) * std_normal_cdf(-k);
  }

  double hh = h, kk = k;
  if (rho < 0.0) {
    kk = -kk;
    hk = -hk;
  }
  if (std::fabs(rho) < 1.0) {
    const double as = (1.0 - rho) * (1.0 + rho);
    double a = std::sqrt(as);
    const double bs = (hh - kk) * (hh - kk);
    const double cc = (4.0 - hk) / 8.0;
    const double dd = (12.0 - hk) / 16.0;
    const double asr = -0.5 * (bs / as + hk);
    if (asr > -100.0) {
      bvn = a * std::exp(asr) *
            (1.0 - cc * (bs - as) * (1.0 - dd * bs / 5.0) / 3.0 +
             cc * dd * as * as / 5.0);
    }
    if (-hk < 100.0) {
      const double bb = std::sqrt(bs);
      bvn -= std::exp(-0.5 * hk) * std::sqrt(2.0 * std::numbers::pi) *
             std_normal_cdf(-bb / a) * bb *
             (1.0 - cc * bs * (1.0 - dd * bs / 5.0) / 3.0);
    }
    a *= 0.5;
    for (int i = 0; i < ng; ++i) {
      for (int is = -1; is <= 1; is += 2) {
        const double xs = a * (is * gx[i] + 1.0) * a * (is * gx[i] + 1.0);
        const double rs = std::sqrt(1.0 - xs);
        const double asr2 = -0.5 * (bs / xs + hk);
        if (asr2 > -100.0) {
          bvn += a * gw[i] * std::exp(asr2) *
                 (std::exp(-hk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))) / rs -
                  (1.0 + cc * xs * (1.0 + dd * xs)));
        }
      }
    }
    bvn = -bvn / (2.0 * std::numbers::pi);
  }
  if (rho > 0.0) {
    return bvn + std_normal_cdf(-std::fmax(hh, kk));
  }
  bvn = -bvn;
  if (kk > hh) bvn += std_normal_cdf(kk) - std_normal_cdf(hh);
  return bvn;
}

}  // namespace crrr
