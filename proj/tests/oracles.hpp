#pragma once

// Independent long-double re-implementations of the closed forms, written
// directly from the formulas and sharing no code with the library.

#include <cmath>

namespace oracle {

using ld = long double;

inline ld m_star(ld c, ld k) { return std::sqrt(k / (2 * c)); }

inline ld local(ld m, ld c, ld k) { return k / (2 * m) + c * m; }

inline ld federated(ld m, ld sum, ld c, ld k) { return k / (2 * (m + sum)) + c * m; }

inline ld lambda(ld c, ld sum, ld k, ld alpha) {
  const ld ms = m_star(c, k);
  const ld inner = c - k / (2 * (sum + ms) * (sum + ms));
  return ms * (sum + ms) / ((2 - alpha) * k * sum) * inner * inner;
}

inline ld penalty(ld m, ld c, ld lam, ld sum, ld k) {
  const ld mc = m_star(c, k);
  const ld arg = c / (2 * lam) - k / (4 * lam * (mc + sum) * (mc + sum)) + mc - m;
  return lam * arg * arg;
}

inline ld pfl(ld m, ld true_c, ld reported_c, ld lam, ld sum, ld k) {
  return federated(m, sum, true_c, k) + penalty(m, reported_c, lam, sum, k);
}

inline ld gap(ld ms, ld sum, ld k, ld alpha) { return alpha / 4 * k * sum / (ms * (sum + ms)); }

inline ld effective_fee(ld m, ld sum, ld k) { return k * sum / (2 * m * (m + sum)); }

inline ld fee(ld m, ld c, ld sum, ld k, ld lam) {
  return effective_fee(m, sum, k) - penalty(m, c, lam, sum, k);
}

// Relative difference measured in long double.
inline ld rel(ld a, ld b) { return std::fabs(a - b) / std::fabs(b); }

}  // namespace oracle
