#pragma once

#include "baroid/tensor.hpp"
#include "baroid/types.hpp"

#include <cmath>

namespace baroid {

/// Material parameters of the barodesy model for sand (Kolymbas-type).
/// Stress-valued quantities are in kPa with compression negative, so the
/// stress norm sigma = |S| is a positive kPa scalar.
struct MaterialParams {
  Scalar c1 = 0.0;
  Scalar c2 = 0.0;
  Scalar c3 = 0.0;
  Scalar c4 = 0.0;
  Scalar c5 = 0.0;
  Scalar c6 = 0.0;
  Scalar ec0 = 0.0;  // critical void ratio at zero stress

  Vec7 vector() const {
    Vec7 v;
    v << c1, c2, c3, c4, c5, c6, ec0;
    return v;
  }

  static MaterialParams from_vector(const Vec7& v) {
    return MaterialParams{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  }

  /// Reference calibration for dense Hostun sand.
  static MaterialParams hostun_sand() {
    return MaterialParams{-1.7637, -1.0249, 0.5517, -1174.0, -4175.0, 2218.0, 0.8703};
  }

  void validate() const {
    if (!vector().allFinite()) throw InvalidParams("material parameters must be finite");
    if (!(c3 > 0.0 && c3 < 1.0)) {
      throw InvalidParams("c3 must lie in (0,1), got " + std::to_string(c3));
    }
    if (c4 == 0.0) throw InvalidParams("c4 must be nonzero");
  }
};

/// Stress tensor plus void ratio at a single material point.
struct MaterialState {
  SymTensor3 stress;   // Cauchy stress, compression negative [kPa]
  Scalar void_ratio = 0.0;
};

/// Rate of change of a material state (dS/dt, de/dt).
struct StateRate {
  SymTensor3 stress_rate;
  Scalar void_ratio_rate = 0.0;
};

/// Critical void ratio e_c(sigma) = (1 + e_c0) exp(sigma^(1-c3) / (c4 (1-c3))) - 1.
/// For c4 < 0 (sands) this decreases monotonically with the stress level.
inline Scalar critical_void_ratio(Scalar sigma, const MaterialParams& p) {
  if (p.c3 >= 1.0) throw InvalidParams("c3 must be < 1 for the critical void ratio");
  if (p.c4 == 0.0) throw InvalidParams("c4 must be nonzero for the critical void ratio");
  const Scalar q = 1.0 - p.c3;
  return (1.0 + p.ec0) * std::exp(std::pow(sigma, q) / (p.c4 * q)) - 1.0;
}

/// R(D0) = tr(D0) I + c1 exp(c2 D0), evaluated on the unit-normalized
/// stretching direction.
inline SymTensor3 response_tensor(const SymTensor3& d0, const MaterialParams& p) {
  return SymTensor3::isotropic(d0.trace()) + p.c1 * sym_exp(p.c2 * d0);
}

/// Constitutive stiffness term
///   H(S, D, e) = h_b(sigma) (f_b R0 + g_b S0) |D|
/// with h_b = sigma^c3, f_b = c4 tr(D0) + c5 (e - e_c) + c6, g_b = -c6.
/// Requires |S| > eps and |D| > eps.
inline SymTensor3 barodesy_H(const MaterialState& state, const SymTensor3& d,
                             const MaterialParams& p) {
  const Scalar sigma = tensor_norm(state.stress);
  if (sigma <= kNormEps) {
    throw NormTooSmall("stress norm degenerate in constitutive evaluation");
  }
  const Scalar d_norm = tensor_norm(d);
  const SymTensor3 s0 = state.stress / sigma;
  const SymTensor3 d0 = d / d_norm;

  const SymTensor3 r0 = normalize(response_tensor(d0, p));
  const Scalar hb = std::pow(sigma, p.c3);
  const Scalar ec = critical_void_ratio(sigma, p);
  const Scalar fb = p.c4 * d0.trace() + p.c5 * (state.void_ratio - ec) + p.c6;
  const Scalar gb = -p.c6;
  return hb * d_norm * (fb * r0 + gb * s0);
}

/// Full barodesy rate:
///   dS/dt = W S - S W + H(S, D, e)
///   de/dt = (1 + e) tr(D)
/// When |D| <= eps the constitutive term is bypassed (H scales with |D|,
/// so its zero-rate limit is 0) and only the spin term remains.
inline StateRate barodesy_rhs(const MaterialState& state, const SymTensor3& d,
                              const SkewTensor3& w, const MaterialParams& p) {
  StateRate rate;
  rate.void_ratio_rate = (1.0 + state.void_ratio) * d.trace();

  if (!w.is_zero()) {
    const Mat3 wm = w.matrix();
    const Mat3 sm = state.stress.matrix();
    rate.stress_rate = SymTensor3::from_matrix(wm * sm - sm * wm);
  }
  if (tensor_norm(d) > kNormEps) {
    rate.stress_rate += barodesy_H(state, d, p);
  }
  return rate;
}

}  // namespace baroid
