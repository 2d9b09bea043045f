#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qop/certify.hpp"
#include "qop/resolvent.hpp"
#include "test_support.hpp"

using namespace qop;

TEST_CASE("prox catalog closed forms") {
  Vector v(3);
  v << 2, -0.5, 0.1;

  SUBCASE("quadratic") {
    Vector p(3);
    p << 1, 1, 1;
    const Vector z = prox(QuadraticFn{p}, 1.0, v);
    CHECK((z - (v + p) / 2.0).norm() < 1e-15);
  }

  SUBCASE("soft threshold") {
    const Vector z = prox(L1Fn{1.0}, 0.4, v);
    CHECK(z(0) == doctest::Approx(1.6));
    CHECK(z(1) == doctest::Approx(-0.1));
    CHECK(z(2) == doctest::Approx(0.0));
  }

  SUBCASE("box clamp") {
    const Vector z = prox(BoxFn{-0.2, 0.3}, 5.0, v);
    CHECK(z(0) == doctest::Approx(0.3));
    CHECK(z(1) == doctest::Approx(-0.2));
    CHECK(z(2) == doctest::Approx(0.1));
  }

  SUBCASE("nonpositive step is rejected") {
    CHECK_THROWS_AS(prox(L1Fn{1.0}, 0.0, v), RuleNotApplicable);
  }
}

TEST_CASE("prox optimality: z - v + t g = 0 for some subgradient g") {
  std::mt19937_64 gen(101);
  const ProxFunction fns[] = {ProxFunction{QuadraticFn{Vector::Ones(3)}},
                              ProxFunction{L1Fn{0.7}},
                              ProxFunction{BoxFn{-1.0, 2.0}}};
  for (const auto& f : fns) {
    for (int rep = 0; rep < 200; ++rep) {
      const Vector v = test::random_vector(gen, 3);
      const double t = test::uniform(gen, 0.1, 5.0);
      const Vector z = prox(f, t, v);
      // (v - z)/t must be a subgradient at z
      CHECK(subgradient_distance(f, z, Vector((v - z) / t)) < 1e-10);
    }
  }
}

TEST_CASE("conjugate prox routes agree") {
  std::mt19937_64 gen(103);
  const ProxFunction fns[] = {ProxFunction{QuadraticFn{Vector::Ones(3)}},
                              ProxFunction{L1Fn{0.7}},
                              ProxFunction{BoxFn{-1.0, 2.0}}};
  for (const auto& f : fns) {
    for (int rep = 0; rep < 200; ++rep) {
      const Vector v = test::random_vector(gen, 3);
      const double s = test::uniform(gen, 0.1, 5.0);
      const Vector a = prox_conjugate(f, s, v);
      const Vector b = prox_conjugate_direct(f, s, v);
      CHECK((a - b).norm() <= 1e-12 * (1.0 + v.norm()));
    }
  }
}

TEST_CASE("resolvent of affine specs") {
  const Metric id = Metric::identity(2);
  Vector b(2);
  b << 4, -2;

  SUBCASE("A = I gives the half map") {
    const auto r = ResolventHandle(
        MonotoneSpec::affine(Matrix::Identity(2, 2), Vector::Zero(2)), id);
    CHECK((r.apply(b) - 0.5 * b).norm() < 1e-12);
  }

  SUBCASE("A = 0 gives the identity") {
    const auto r = ResolventHandle(
        MonotoneSpec::affine(Matrix::Zero(2, 2), Vector::Zero(2)), id);
    CHECK((r.apply(b) - b).norm() < 1e-12);
  }

  SUBCASE("offset shifts the solve") {
    Vector c(2);
    c << 1, 1;
    // (I + I) z = b - c
    const auto r = ResolventHandle(
        MonotoneSpec::affine(Matrix::Identity(2, 2), c), id);
    CHECK((r.apply(b) - 0.5 * (b - c)).norm() < 1e-12);
  }

  SUBCASE("as_operator matches apply and is affine") {
    std::mt19937_64 gen(107);
    const Metric m(test::random_spd(gen, 3));
    Matrix a(3, 3);
    a = test::random_spd(gen, 3);
    const auto r =
        ResolventHandle(MonotoneSpec::affine(a, test::random_vector(gen, 3)), m);
    const auto t = r.as_operator();
    CHECK(t.is_affine());
    for (int rep = 0; rep < 20; ++rep) {
      const Vector x = test::random_vector(gen, 3);
      CHECK((t(x) - r.apply(x)).norm() < 1e-10);
    }
  }

  SUBCASE("non-monotone affine spec is rejected") {
    CHECK_THROWS_AS(
        MonotoneSpec::affine(-Matrix::Identity(2, 2), Vector::Zero(2)),
        RuleNotApplicable);
  }

  SUBCASE("rotation is monotone with mu = 0") {
    Matrix rot(2, 2);
    rot << 0, -1, 1, 0;
    const auto spec = MonotoneSpec::affine(rot, Vector::Zero(2));
    CHECK(spec.strong_monotonicity_mu() == 0.0);
  }
}

TEST_CASE("resolvent of subdifferential specs") {
  SUBCASE("l1 with tau = 1 soft-thresholds") {
    const auto r = ResolventHandle(
        MonotoneSpec::subdifferential(L1Fn{1.0}, 2), Metric::identity(2));
    Vector b(2);
    b << 3, -0.5;
    const Vector z = r.apply(b);
    CHECK(z(0) == doctest::Approx(2.0));
    CHECK(z(1) == doctest::Approx(0.0));
  }

  SUBCASE("scalar metric sets the step") {
    // Q = (1/tau) I with tau = 2: threshold is 2 lambda
    const Metric m(0.5 * Matrix::Identity(2, 2));
    const auto r =
        ResolventHandle(MonotoneSpec::subdifferential(L1Fn{1.0}, 2), m);
    Vector b(2);
    b << 3, -0.5;
    CHECK(r.apply(b)(0) == doctest::Approx(1.0));
  }

  SUBCASE("non-scalar metric is rejected") {
    std::mt19937_64 gen(109);
    Matrix q = test::random_spd(gen, 2);
    q(0, 0) += 1.0;
    CHECK_THROWS_AS(
        ResolventHandle(MonotoneSpec::subdifferential(L1Fn{1.0}, 2), Metric(q)),
        UnsupportedPairing);
  }

  SUBCASE("scaled_strong over a subdifferential is rejected") {
    const auto spec = MonotoneSpec::scaled_strong(
        1.0, MonotoneSpec::subdifferential(L1Fn{1.0}, 2));
    CHECK_THROWS_AS(ResolventHandle(spec, Metric::identity(2)),
                    UnsupportedPairing);
  }
}

TEST_CASE("scaled_strong flattening for affine specs") {
  const Metric id = Metric::identity(2);
  const auto inner = MonotoneSpec::affine(Matrix::Identity(2, 2), Vector::Zero(2));
  const auto spec = MonotoneSpec::scaled_strong(2.0, inner);
  CHECK(spec.strong_monotonicity_mu() == doctest::Approx(3.0));
  const auto r = ResolventHandle(spec, id);
  Vector b(2);
  b << 8, -4;
  // (3I + I) z = b
  CHECK((r.apply(b) - 0.25 * b).norm() < 1e-12);
}

TEST_CASE("resolvent preconditions") {
  const auto spec = MonotoneSpec::affine(Matrix::Identity(2, 2), Vector::Zero(2));
  Matrix psd(2, 2);
  psd << 1, 0, 0, 0;
  CHECK_THROWS_AS(ResolventHandle(spec, Metric(psd)), MetricStructureError);
  CHECK_THROWS_AS(ResolventHandle(spec, Metric::identity(3)), InvalidDimension);

  // extreme scale difference drives the solve below the conditioning floor
  Matrix skew(2, 2);
  skew << 1e20, 0, 0, 0;
  const auto huge = MonotoneSpec::affine(skew, Vector::Zero(2));
  CHECK_THROWS_AS(ResolventHandle(huge, Metric::identity(2)), SingularResolvent);
}

TEST_CASE("inclusion residual contract") {
  std::mt19937_64 gen(113);

  SUBCASE("affine over a random PD metric") {
    const Metric m(test::random_spd(gen, 3));
    const auto r = ResolventHandle(
        MonotoneSpec::affine(test::random_spd(gen, 3),
                             test::random_vector(gen, 3)),
        m);
    for (int rep = 0; rep < 100; ++rep) {
      const Vector b = test::random_vector(gen, 3);
      const Vector z = r.apply(b);
      CHECK(r.inclusion_residual(b, z) <= 1e-9 * (1.0 + b.norm()));
    }
  }

  SUBCASE("subdifferential catalog") {
    const ProxFunction fns[] = {ProxFunction{QuadraticFn{Vector::Ones(3)}},
                                ProxFunction{L1Fn{0.7}},
                                ProxFunction{BoxFn{-1.0, 2.0}}};
    for (const auto& f : fns) {
      const auto r = ResolventHandle(MonotoneSpec::subdifferential(f, 3),
                                     Metric(2.0 * Matrix::Identity(3, 3)));
      for (int rep = 0; rep < 100; ++rep) {
        const Vector b = test::random_vector(gen, 3);
        CHECK(r.inclusion_residual(b, r.apply(b)) <= 1e-9 * (1.0 + b.norm()));
      }
    }
  }

  SUBCASE("a wrong point has a visible residual") {
    const auto r = ResolventHandle(
        MonotoneSpec::affine(Matrix::Identity(2, 2), Vector::Zero(2)),
        Metric::identity(2));
    Vector b(2);
    b << 4, 4;
    CHECK(r.inclusion_residual(b, b) > 1.0);
  }
}

TEST_CASE("ppa and rppa") {
  const Metric id = Metric::identity(2);
  const auto r = ResolventHandle(
      MonotoneSpec::affine(Matrix::Identity(2, 2), Vector::Zero(2)), id);
  Vector b0(2);
  b0 << 1, -1;

  SUBCASE("ppa halves each step and finds the zero of A") {
    const auto trace = ppa(r, b0);
    CHECK((trace.iterates[1] - 0.5 * b0).norm() < 1e-14);
    CHECK(trace.iterates.back().norm() < 1e-10);
    CHECK(asymptotic_regularity(trace));
  }

  SUBCASE("rppa with gamma 1.5 contracts by 0.25 per step") {
    const auto trace = rppa(r, 1.5, b0);
    // b + 1.5 (b/2 - b) = 0.25 b
    CHECK((trace.iterates[1] - 0.25 * b0).norm() < 1e-14);
    CHECK(trace.iterates.back().norm() < 1e-10);
  }

  SUBCASE("gamma outside (0,2) is rejected") {
    CHECK_THROWS_AS(rppa(r, 2.0, b0), RuleNotApplicable);
    CHECK_THROWS_AS(rppa(r, 0.0, b0), RuleNotApplicable);
  }

  SUBCASE("ppa on the l1 subdifferential reaches zero") {
    const auto rl1 = ResolventHandle(
        MonotoneSpec::subdifferential(L1Fn{0.5}, 2), Metric::identity(2));
    const auto trace = ppa(rl1, b0);
    CHECK(trace.iterates.back().norm() == 0.0);
  }
}

TEST_CASE("resolvent certificates") {
  SUBCASE("merely monotone gives the firmly nonexpansive pair") {
    Matrix rot(2, 2);
    rot << 0, -1, 1, 0;
    const auto r = ResolventHandle(MonotoneSpec::affine(rot, Vector::Zero(2)),
                                   Metric::identity(2));
    const auto certs = resolvent_certificate(r);
    CHECK(certs.op.xi == 1.0);
    CHECK(certs.op.alpha == 0.5);
    CHECK(certs.complement.xi == 1.0);
    CHECK(certs.complement.alpha == 0.5);
  }

  SUBCASE("A = I under Q = I gives (1/3, 3/4) exactly") {
    const auto r = ResolventHandle(
        MonotoneSpec::affine(Matrix::Identity(2, 2), Vector::Zero(2)),
        Metric::identity(2));
    const auto certs = resolvent_certificate(r);
    CHECK(certs.op.xi == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(certs.op.alpha == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(certs.complement.xi == 1.0);
    CHECK(certs.complement.alpha == doctest::Approx(0.25).epsilon(1e-14));
    // decomposition check: T = (1-a) I + a K with K = I/3 here
    const auto t = r.as_operator();
    const Matrix k =
        (t.affine_data().m - 0.25 * Matrix::Identity(2, 2)) / 0.75;
    CHECK((k - Matrix::Identity(2, 2) / 3.0).norm() < 1e-14);
  }

  SUBCASE("non-symmetric metric is rejected") {
    Matrix q(2, 2);
    q << 2, 1, -1, 2;
    const auto r = ResolventHandle(
        MonotoneSpec::affine(Matrix::Identity(2, 2), Vector::Zero(2)),
        Metric(q));
    CHECK_THROWS_AS(resolvent_certificate(r), MetricStructureError);
  }
}

TEST_CASE("certificates hold empirically for random strongly monotone specs") {
  std::mt19937_64 gen(127);
  for (int rep = 0; rep < 5; ++rep) {
    const Metric m(test::random_spd(gen, 3));
    const auto spec = MonotoneSpec::affine(test::random_spd(gen, 3),
                                           test::random_vector(gen, 3));
    const ResolventHandle r(spec, m);
    const auto t = r.as_operator();
    const auto certs = resolvent_certificate(r);

    CHECK(certify(t, m, AveragedClass{certs.op.xi, certs.op.alpha}, 500,
                  200 + rep)
              .pass);
    CHECK(certify(t.identity_minus_scaled(1.0), m,
                  AveragedClass{certs.complement.xi, certs.complement.alpha},
                  500, 300 + rep)
              .pass);
    CHECK(certify(t, m, FirmlyNonexpansive{}, 500, 400 + rep).pass);

    // the defining inequality holds sample by sample
    std::mt19937_64 pair_gen(500 + rep);
    for (int s = 0; s < 200; ++s) {
      const Vector b1 = test::random_vector(pair_gen, 3);
      const Vector b2 = test::random_vector(pair_gen, 3);
      const double gap = fclass_gap(t, m, certs.op, b1, b2);
      const double scale = fclass_gap_scale(t, m, certs.op, b1, b2);
      CHECK(gap >= -1e-8 * scale);
    }
  }
}
