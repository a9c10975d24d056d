#pragma once

namespace gprg {

/// Largest order accepted without explicit opt-in; beyond this the
/// unnormalized polynomials grow fast enough that callers should know
/// what they are doing (pass allow_large = true).
inline constexpr int kHermiteOptInOrder = 30;

/// Probabilist's Hermite polynomial He_n(x), via the three-term recurrence
/// He_{n+1} = x He_n - n He_{n-1}.  He_0 = 1, He_1 = x, He_2 = x^2 - 1, ...
double hermite_probabilist(int n, double x, bool allow_large = false);

/// Orthonormal variant he_n = He_n / sqrt(n!), unit-variance under the
/// standard normal measure. Uses the normalized recurrence
/// he_{n+1} = (x he_n - sqrt(n) he_{n-1}) / sqrt(n+1) for stability.
double hermite_orthonormal(int n, double x, bool allow_large = false);

/// Fills out[0..n] with he_0(x) .. he_n(x) in one recurrence pass.
void hermite_orthonormal_all(int n, double x, double* out);

}  // namespace gprg
