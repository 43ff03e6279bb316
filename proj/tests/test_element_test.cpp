#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "baroid/element_test.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace baroid;

TEST_CASE("oedometric strain rate schedule") {
  LoadingSchedule sched;  // defaults: vp = -0.001, h0 = 0.1, 675 steps, split 0.5

  SUBCASE("loading phase rate is vp / h0") {
    const auto [d, w] = strain_rate_at(0, sched);
    CHECK(d.xx() == doctest::Approx(-0.01).epsilon(1e-15));
    CHECK(d.yy() == 0.0);
    CHECK(d.zz() == 0.0);
    CHECK(w.is_zero());
  }

  SUBCASE("rate reverses sign after the split") {
    const auto [d, w] = strain_rate_at(sched.n_steps - 1, sched);
    CHECK(d.xx() == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(w.is_zero());
  }

  SUBCASE("split boundary follows step < fraction * n_steps") {
    // 0.5 * 675 = 337.5: steps 0..337 load, 338.. unload
    CHECK(strain_rate_at(337, sched).first.xx() < 0.0);
    CHECK(strain_rate_at(338, sched).first.xx() > 0.0);
  }

  SUBCASE("no rotation at any step") {
    for (Index step = 0; step < sched.n_steps; step += 37) {
      CHECK(strain_rate_at(step, sched).second.is_zero());
    }
  }

  SUBCASE("schedule validation") {
    LoadingSchedule bad = sched;
    bad.dt = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = sched;
    bad.loading_fraction = 1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = sched;
    bad.n_steps = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = sched;
    bad.substeps = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
  }
}

TEST_CASE("single step integration") {
  const MaterialParams p = MaterialParams::hostun_sand();

  SUBCASE("zero driving leaves the state unchanged") {
    const MaterialState s0{SymTensor3::diagonal(-10, -5, -5), 0.7};
    const MaterialState s1 =
        integrate_step(s0, SymTensor3::zero(), SkewTensor3::zero(), 0.0015, 10, p);
    CHECK(s1.stress.components() == s0.stress.components());
    CHECK(s1.void_ratio == s0.void_ratio);
  }

  SUBCASE("void ratio follows the closed form for constant tr(D)") {
    // de/dt = (1+e) tr(D)  =>  e(T) = (1+e0) exp(tr(D) T) - 1
    const Scalar e0 = 0.66;
    MaterialState s{SymTensor3::isotropic(-1.0), e0};
    const SymTensor3 d = SymTensor3::diagonal(-0.01, 0, 0);
    const Scalar dt = 0.0015;
    const Index steps = 300;
    for (Index i = 0; i < steps; ++i) {
      s = integrate_step(s, d, SkewTensor3::zero(), dt, 10, p);
    }
    const Scalar t = static_cast<Scalar>(steps) * dt;
    const Scalar expected = (1.0 + e0) * std::exp(-0.01 * t) - 1.0;
    CHECK(std::abs(s.void_ratio - expected) / std::abs(expected) < 1e-8);
  }

  SUBCASE("one loading step from the default initial state compresses") {
    const InitialState init;
    MaterialState s = init.state();
    const SymTensor3 d = SymTensor3::diagonal(-0.01, 0, 0);
    const MaterialState s1 = integrate_step(s, d, SkewTensor3::zero(), 0.0015, 10, p);
    CHECK(s1.stress.all_finite());
    CHECK(tensor_norm(s1.stress) > tensor_norm(s.stress));
    CHECK(-s1.stress.xx() > -s.stress.xx());
  }

  SUBCASE("overflowing critical void ratio diverges") {
    MaterialParams bad = p;
    bad.c4 = 1e-9;  // e_c = exp(sigma^(1-c3)/(c4 (1-c3))) overflows
    MaterialState s{SymTensor3::isotropic(-1.0), 0.66};
    const SymTensor3 d = SymTensor3::diagonal(-0.01, 0, 0);
    CHECK_THROWS_AS(integrate_step(s, d, SkewTensor3::zero(), 0.0015, 1, bad), Diverged);
  }
}

TEST_CASE("full oedometric run") {
  const MaterialParams p = MaterialParams::hostun_sand();
  const InitialState init;
  const LoadingSchedule sched;

  const StressSeries series = run_test(p, init, sched);

  SUBCASE("series length equals the step count") {
    CHECK(series.values.size() == 675);
    CHECK(series.values.allFinite());
  }

  SUBCASE("stress rises while loading and falls while unloading") {
    // strictly increasing through the loading phase
    bool increasing = true;
    for (Index k = 1; k < 338; ++k) {
      if (!(series.values[k] > series.values[k - 1])) increasing = false;
    }
    CHECK(increasing);
    // unloading brings the axial stress back down
    CHECK(series.values[series.values.size() - 1] < series.values[337]);
    CHECK(series.values.maxCoeff() == series.values[337]);
  }

  SUBCASE("runs are deterministic") {
    const StressSeries again = run_test(p, init, sched);
    CHECK(series.values == again.values);
  }

  SUBCASE("no off-diagonal stress develops") {
    // re-run step by step and inspect the state
    MaterialState s = init.state();
    for (Index step = 0; step < sched.n_steps; ++step) {
      const auto [d, w] = strain_rate_at(step, sched);
      s = integrate_step(s, d, w, sched.dt, sched.substeps, p);
      CHECK(std::abs(s.stress.xy()) <= 1e-14);
      CHECK(std::abs(s.stress.xz()) <= 1e-14);
      CHECK(std::abs(s.stress.yz()) <= 1e-14);
    }
  }

  SUBCASE("substep refinement converges at fourth order") {
    LoadingSchedule short_sched = sched;
    short_sched.n_steps = 40;
    std::vector<Scalar> finals;
    for (Index sub : {1, 2, 4, 8, 16}) {
      LoadingSchedule s2 = short_sched;
      s2.substeps = sub;
      finals.push_back(run_test(p, init, s2).values[short_sched.n_steps - 1]);
    }
    // successive differences shrink ~16x per doubling; allow a loose band
    for (std::size_t i = 0; i + 2 < finals.size(); ++i) {
      const Scalar d1 = std::abs(finals[i] - finals[i + 1]);
      const Scalar d2 = std::abs(finals[i + 1] - finals[i + 2]);
      CHECK(d2 > 0.0);
      const Scalar ratio = d1 / d2;
      CHECK(ratio > 8.0);
      CHECK(ratio < 40.0);
    }
  }

  SUBCASE("divergence reports the failing step") {
    MaterialParams bad = p;
    bad.c4 = 1e-9;  // blows up the critical void ratio exponent
    try {
      run_test(bad, init, sched);
      CHECK(false);
    } catch (const Diverged& ex) {
      CHECK(ex.step >= 0);
      CHECK(ex.step < sched.n_steps);
    }
  }
}

TEST_CASE("stress strain curve") {
  const LoadingSchedule sched;
  const MaterialParams p = MaterialParams::hostun_sand();
  const InitialState init;
  const StressSeries series = run_test(p, init, sched);
  const auto curve = stress_strain_curve(series, sched);

  SUBCASE("output length equals series length") {
    CHECK(curve.size() == static_cast<std::size_t>(series.values.size()));
  }

  SUBCASE("strain ramps linearly during loading") {
    const Scalar rate = sched.piston_rate / sched.sample_height;
    for (Index k : {Index{0}, Index{100}, Index{300}}) {
      CHECK(curve[static_cast<std::size_t>(k)].first ==
            doctest::Approx(static_cast<Scalar>(k + 1) * sched.dt * rate).epsilon(1e-12));
    }
  }

  SUBCASE("strain heads back toward zero during unloading") {
    const Scalar end_strain = curve.back().first;
    const Scalar peak_strain = curve[337].first;
    CHECK(std::abs(end_strain) < std::abs(peak_strain));
  }
}

TEST_CASE("csv export") {
  LoadingSchedule sched;
  sched.n_steps = 12;
  const StressSeries series = run_test(MaterialParams::hostun_sand(), InitialState{}, sched);

  const std::string dir =
      (std::filesystem::temp_directory_path() / "baroid_csv_test").string();
  std::filesystem::create_directories(dir);

  const std::string series_path = dir + "/series.csv";
  write_series_csv(series, series_path);
  {
    std::ifstream in(series_path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "# t,neg_sigma1");
    int rows = 0;
    Scalar t = 0.0, v = 0.0;
    char comma = 0;
    while (in >> t >> comma >> v) ++rows;
    CHECK(rows == 12);
  }

  const std::string curve_path = dir + "/curve.csv";
  write_curve_csv(series, sched, curve_path);
  {
    std::ifstream in(curve_path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "# eps1,neg_sigma1");
  }

  // values round-trip at 17 significant digits
  {
    std::ifstream in(series_path);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    const auto comma_at = line.find(',');
    const Scalar v = std::strtod(line.substr(comma_at + 1).c_str(), nullptr);
    CHECK(v == series.values[0]);
  }
  std::filesystem::remove_all(dir);
}
