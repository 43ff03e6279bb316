#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "baroid/constitutive.hpp"
#include "baroid/rng.hpp"

#include <cmath>

using namespace baroid;

TEST_CASE("material parameter validation") {
  MaterialParams p = MaterialParams::hostun_sand();
  CHECK_NOTHROW(p.validate());

  p.c3 = 1.0;
  CHECK_THROWS_AS(p.validate(), InvalidParams);
  p = MaterialParams::hostun_sand();
  p.c4 = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidParams);
  p = MaterialParams::hostun_sand();
  p.c5 = std::numeric_limits<Scalar>::quiet_NaN();
  CHECK_THROWS_AS(p.validate(), InvalidParams);
}

TEST_CASE("critical void ratio") {
  const MaterialParams p = MaterialParams::hostun_sand();

  SUBCASE("approaches ec0 as the stress vanishes") {
    CHECK(critical_void_ratio(1e-12, p) == doctest::Approx(p.ec0).epsilon(1e-8));
  }

  SUBCASE("frozen value at sigma = 100") {
    // expected value from an independent transcription of the formula
    CHECK(critical_void_ratio(100.0, p) ==
          doctest::Approx(0.8425011555462953).epsilon(1e-14));
  }

  SUBCASE("decreases with stress for c4 < 0") {
    CHECK(critical_void_ratio(200.0, p) ==
          doctest::Approx(0.8324734314462463).epsilon(1e-14));
    CHECK(critical_void_ratio(200.0, p) < critical_void_ratio(100.0, p));
  }

  SUBCASE("rejects degenerate parameters") {
    MaterialParams bad = p;
    bad.c3 = 1.0;
    CHECK_THROWS_AS(critical_void_ratio(100.0, bad), InvalidParams);
    bad = p;
    bad.c4 = 0.0;
    CHECK_THROWS_AS(critical_void_ratio(100.0, bad), InvalidParams);
  }
}

TEST_CASE("response tensor") {
  const MaterialParams p = MaterialParams::hostun_sand();

  SUBCASE("uniaxial compression direction, frozen values") {
    const SymTensor3 r = response_tensor(SymTensor3::diagonal(-1, 0, 0), p);
    CHECK(r.xx() == doctest::Approx(-5.915108728350792).epsilon(1e-14));
    CHECK(r.yy() == doctest::Approx(-2.7637).epsilon(1e-14));
    CHECK(r.zz() == doctest::Approx(-2.7637).epsilon(1e-14));
    CHECK(r.is_diagonal());
  }

  SUBCASE("c1 = 0 reduces to tr(D0) I") {
    MaterialParams q = p;
    q.c1 = 0.0;
    const SymTensor3 d0 = normalize(SymTensor3::diagonal(-1, 0.5, 0.25));
    const SymTensor3 r = response_tensor(d0, q);
    CHECK(r.xx() == doctest::Approx(d0.trace()).epsilon(1e-14));
    CHECK(r.yy() == doctest::Approx(d0.trace()).epsilon(1e-14));
    CHECK(r.xy() == 0.0);
  }

  SUBCASE("c2 = 0 gives (tr(D0) + c1) I for isotropic direction") {
    MaterialParams q = p;
    q.c2 = 0.0;
    const Scalar inv_sqrt3 = 1.0 / std::sqrt(3.0);
    const SymTensor3 d0 = SymTensor3::diagonal(inv_sqrt3, inv_sqrt3, inv_sqrt3);
    const SymTensor3 r = response_tensor(d0, q);
    CHECK(r.xx() == doctest::Approx(std::sqrt(3.0) + q.c1).epsilon(1e-14));
    CHECK(r.yy() == doctest::Approx(std::sqrt(3.0) + q.c1).epsilon(1e-14));
  }
}

TEST_CASE("barodesy rate") {
  const MaterialParams p = MaterialParams::hostun_sand();

  SUBCASE("zero driving gives a zero rate") {
    const MaterialState s{SymTensor3::diagonal(-100, -50, -50), 0.7};
    const StateRate r = barodesy_rhs(s, SymTensor3::zero(), SkewTensor3::zero(), p);
    CHECK(tensor_norm(r.stress_rate) == 0.0);
    CHECK(r.void_ratio_rate == 0.0);
  }

  SUBCASE("pure spin rotates the stress without changing void ratio") {
    const MaterialState s{SymTensor3::diagonal(-100, -50, -25), 0.7};
    const SkewTensor3 w(0.3, -0.2, 0.1);
    const StateRate r = barodesy_rhs(s, SymTensor3::zero(), w, p);
    CHECK(r.void_ratio_rate == 0.0);
    CHECK(tensor_norm(r.stress_rate) > 0.0);
    // the spin term is trace-free: rotation never changes tr(S)
    CHECK(r.stress_rate.trace() == doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("frozen oedometric compression rate") {
    // expected values from an independent term-by-term transcription
    const MaterialState s{SymTensor3::diagonal(-100, -50, -50), 0.70};
    const SymTensor3 d = SymTensor3::diagonal(-0.01, 0, 0);
    const StateRate r = barodesy_rhs(s, d, SkewTensor3::zero(), p);
    CHECK(r.stress_rate.xx() == doctest::Approx(-213.73330955131547).epsilon(1e-12));
    CHECK(r.stress_rate.yy() == doctest::Approx(-91.44025390742678).epsilon(1e-12));
    CHECK(r.stress_rate.zz() == doctest::Approx(-91.44025390742678).epsilon(1e-12));
    CHECK(r.stress_rate.is_diagonal());
    CHECK(r.void_ratio_rate == doctest::Approx(-0.017).epsilon(1e-15));
  }

  SUBCASE("degenerate stress is rejected") {
    const MaterialState s{SymTensor3::zero(), 0.7};
    const SymTensor3 d = SymTensor3::diagonal(-0.01, 0, 0);
    CHECK_THROWS_AS(barodesy_rhs(s, d, SkewTensor3::zero(), p), NormTooSmall);
  }
}

TEST_CASE("rate properties") {
  const MaterialParams p = MaterialParams::hostun_sand();
  SplitMix64 rng(321);

  SUBCASE("void ratio rate is (1+e) tr(D), independent of stress and spin") {
    for (int rep = 0; rep < 30; ++rep) {
      Vec6 dv;
      for (int i = 0; i < 6; ++i) dv[i] = rng.uniform(-0.05, 0.05);
      const SymTensor3 d(dv);
      const SkewTensor3 w(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Scalar e = rng.uniform(0.4, 1.1);
      const MaterialState s{SymTensor3::diagonal(rng.uniform(-200, -10), rng.uniform(-200, -10),
                                                 rng.uniform(-200, -10)),
                            e};
      const StateRate r = barodesy_rhs(s, d, w, p);
      CHECK(r.void_ratio_rate == (1.0 + e) * d.trace());
    }
  }

  SUBCASE("constitutive term is degree-1 homogeneous in the stretching") {
    for (int rep = 0; rep < 30; ++rep) {
      Vec6 dv;
      for (int i = 0; i < 6; ++i) dv[i] = rng.uniform(-0.05, 0.05);
      const SymTensor3 d(dv);
      if (tensor_norm(d) <= 1e-6) continue;
      const MaterialState s{SymTensor3::diagonal(-120, -60, -60), 0.68};
      const Scalar alpha = rng.uniform(0.1, 10.0);
      const SymTensor3 h1 = barodesy_H(s, d * alpha, p);
      const SymTensor3 h2 = barodesy_H(s, d, p) * alpha;
      CHECK((h1.components() - h2.components()).cwiseAbs().maxCoeff() <
            1e-12 * h2.components().cwiseAbs().maxCoeff());
    }
  }

  SUBCASE("diagonal states and driving stay diagonal") {
    for (int rep = 0; rep < 30; ++rep) {
      const MaterialState s{SymTensor3::diagonal(rng.uniform(-300, -1), rng.uniform(-300, -1),
                                                 rng.uniform(-300, -1)),
                            rng.uniform(0.5, 1.0)};
      const SymTensor3 d =
          SymTensor3::diagonal(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                               rng.uniform(-0.05, 0.05));
      const StateRate r = barodesy_rhs(s, d, SkewTensor3::zero(), p);
      CHECK(r.stress_rate.xy() == 0.0);
      CHECK(r.stress_rate.xz() == 0.0);
      CHECK(r.stress_rate.yz() == 0.0);
    }
  }

  SUBCASE("spin term is trace-free for arbitrary S and W") {
    for (int rep = 0; rep < 30; ++rep) {
      Vec6 sv;
      for (int i = 0; i < 6; ++i) sv[i] = rng.uniform(-100, 100);
      sv[0] -= 200;  // keep |S| well away from zero
      const MaterialState s{SymTensor3(sv), 0.7};
      const SkewTensor3 w(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
      const StateRate r = barodesy_rhs(s, SymTensor3::zero(), w, p);
      CHECK(std::abs(r.stress_rate.trace()) < 1e-12 * tensor_norm(r.stress_rate) + 1e-14);
    }
  }
}
