#include <doctest.h>

#include <cmath>
#include <numbers>

#include "aircomp/channel_model.hpp"

using namespace aircomp;

namespace {

double mean_abs2(const CMat& x) { return x.cwiseAbs2().sum() / static_cast<double>(x.size()); }

Geometry small_geometry() {
  Geometry g;
  g.K = 3;
  g.M = 4;
  g.N = 8;
  return g;
}

}  // namespace

TEST_CASE("path loss at the reference distance equals the reference gain") {
  FadingParams p;
  CHECK(path_loss(1.0, p, 2.2) == doctest::Approx(1e-3).epsilon(1e-15));
  p.ref_distance = 3.0;
  for (double beta : {0.0, 1.7, 3.6}) CHECK(path_loss(3.0, p, beta) == doctest::Approx(1e-3).epsilon(1e-15));
}

TEST_CASE("path loss follows the power law") {
  FadingParams p;
  CHECK(path_loss(100.0, p, 2.0) == doctest::Approx(1e-7).epsilon(1e-14));
  CHECK(path_loss(10.0, p, 3.0) == doctest::Approx(1e-6).epsilon(1e-14));
}

TEST_CASE("path loss rejects non-positive distances") {
  FadingParams p;
  CHECK_THROWS_AS(path_loss(0.0, p, 2.0), std::domain_error);
  CHECK_THROWS_AS(path_loss(-1.0, p, 2.0), std::domain_error);
}

TEST_CASE("user to RIS distance in the default layout") {
  CHECK(distance({10.0, 0.0, 0.0}, {0.0, 0.0, 10.0}) == doctest::Approx(std::sqrt(200.0)).epsilon(1e-15));
  CHECK(distance({-50.0, 0.0, 10.0}, {0.0, 0.0, 10.0}) == 50.0);
}

TEST_CASE("LoS matrices have unit-modulus entries") {
  const CMat los = los_matrix(10, {-50.0, 0.0, 10.0}, 64, {0.0, 0.0, 10.0});
  for (Eigen::Index j = 0; j < los.cols(); ++j)
    for (Eigen::Index i = 0; i < los.rows(); ++i)
      CHECK(std::abs(std::abs(los(i, j)) - 1.0) <= 4 * std::numeric_limits<double>::epsilon());
  const CVec a = steering_vector(16, {0.0, 0.0, 10.0}, {7.0, -3.0, 0.0});
  CHECK((a.cwiseAbs().array() - 1.0).abs().maxCoeff() <= 4 * std::numeric_limits<double>::epsilon());
  CHECK(std::abs(a(0) - cd(1.0, 0.0)) == 0.0);
}

TEST_CASE("Rician factor zero ignores the LoS component") {
  const CMat los_a = los_matrix(4, {0, 0, 0}, 3, {1, 2, 0});
  const CMat los_b = los_matrix(4, {0, 0, 0}, 3, {-5, 9, 0});
  Rng r1(42), r2(42);
  const CMat x = gen_rician_matrix(4, 3, 2e-5, 0.0, los_a, r1);
  const CMat y = gen_rician_matrix(4, 3, 2e-5, 0.0, los_b, r2);
  CHECK((x - y).norm() == 0.0);
}

TEST_CASE("pure LoS limit returns the scaled LoS matrix") {
  const CMat los = los_matrix(5, {0, 0, 0}, 7, {3, 4, 0});
  Rng rng(1);
  const CMat x = gen_rician_matrix(5, 7, 4e-6, kPureLosKappa, los, rng);
  CHECK((x - std::sqrt(4e-6) * los).norm() <= 1e-6 * (std::sqrt(4e-6) * los).norm());
}

TEST_CASE("Rayleigh entries have the requested second moment") {
  const CMat los = CMat::Ones(1000, 100);
  Rng rng(7);
  const CMat x = gen_rician_matrix(1000, 100, 1e-7, 0.0, los, rng);
  CHECK(std::abs(mean_abs2(x) / 1e-7 - 1.0) < 0.03);
  // real and imaginary parts each carry half the variance
  const double re = x.real().cwiseAbs2().sum() / static_cast<double>(x.size());
  CHECK(std::abs(re / 0.5e-7 - 1.0) < 0.03);
}

TEST_CASE("Rician matrix rejects mismatched LoS shape and negative parameters") {
  Rng rng(0);
  CHECK_THROWS_AS(gen_rician_matrix(2, 2, 1.0, 0.0, CMat::Ones(2, 3), rng), DimensionError);
  CHECK_THROWS_AS(gen_rician_matrix(2, 2, -1.0, 0.0, CMat::Ones(2, 2), rng), std::domain_error);
  CHECK_THROWS_AS(gen_rician_matrix(2, 2, 1.0, -1.0, CMat::Ones(2, 2), rng), std::domain_error);
}

TEST_CASE("gen_channels is deterministic and has the geometry's shapes") {
  const Geometry g = small_geometry();
  const FadingParams p;
  const ChannelSet a = gen_channels(g, p, 99);
  const ChannelSet b = gen_channels(g, p, 99);
  const ChannelSet c = gen_channels(g, p, 100);
  CHECK(a.H_d.rows() == 4);
  CHECK(a.H_d.cols() == 3);
  CHECK(a.H_r.rows() == 8);
  CHECK(a.H_r.cols() == 3);
  CHECK(a.G.rows() == 4);
  CHECK(a.G.cols() == 8);
  CHECK_FALSE(a.H_si.has_value());
  CHECK(a.H_d == b.H_d);
  CHECK(a.H_r == b.H_r);
  CHECK(a.G == b.G);
  CHECK(a.H_d != c.H_d);
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("scaling the reference gain scales every variance") {
  Geometry g = small_geometry();
  g.K = 4;
  g.N = 64;
  FadingParams lo, hi;
  lo.kappa_ris_ap = hi.kappa_ris_ap = 0.0;
  hi.ref_gain = 5.0 * lo.ref_gain;
  double e_lo = 0.0, e_hi = 0.0;
  for (int s = 0; s < 40; ++s) {  // 40 * (16 + 256 + 256) > 1e4 draws
    const ChannelSet a = gen_channels(g, lo, 1000 + s);
    const ChannelSet b = gen_channels(g, hi, 5000 + s);
    e_lo += a.G.cwiseAbs2().sum();
    e_hi += b.G.cwiseAbs2().sum();
  }
  CHECK(std::abs(e_hi / e_lo / 5.0 - 1.0) < 0.03);
}

TEST_CASE("same seed with a different reference gain is an exact rescale") {
  const Geometry g = small_geometry();
  FadingParams lo, hi;
  hi.ref_gain = 4.0 * lo.ref_gain;
  const ChannelSet a = gen_channels(g, lo, 3);
  const ChannelSet b = gen_channels(g, hi, 3);
  CHECK((b.G - 2.0 * a.G).norm() <= 1e-12 * b.G.norm());
  CHECK((b.H_r - 2.0 * a.H_r).norm() <= 1e-12 * b.H_r.norm());
}

TEST_CASE("invalid geometry and fading parameters are rejected") {
  Geometry g = small_geometry();
  g.N = 0;
  CHECK_THROWS_AS(gen_channels(g, FadingParams{}, 1), DimensionError);
  g = small_geometry();
  g.user_x = {5.0, 1.0};
  CHECK_THROWS_AS(gen_channels(g, FadingParams{}, 1), DimensionError);
  FadingParams p;
  p.kappa_user_ap = -1.0;
  CHECK_THROWS_AS(gen_channels(small_geometry(), p, 1), std::domain_error);
  p = FadingParams{};
  p.ref_gain = 0.0;
  CHECK_THROWS_AS(gen_channels(small_geometry(), p, 1), std::domain_error);
}

TEST_CASE("self-interference channel moments and determinism") {
  CHECK(gen_si_channel(5, 0.0, 1).norm() == 0.0);
  const CMat h = gen_si_channel(64, 1e-4, 11);
  CHECK(std::abs(mean_abs2(h) / 1e-4 - 1.0) < 0.05);
  CHECK(gen_si_channel(64, 1e-4, 11) == h);
  CHECK(gen_si_channel(64, 1e-4, 12) != h);
  CHECK_THROWS_AS(gen_si_channel(4, -1.0, 1), std::domain_error);
}

TEST_CASE("Rayleigh generator for the asymptotic scenarios") {
  const ChannelSet ch = gen_rayleigh_channels(8, 256, 8, 2e-7, 3e-7, 5);
  CHECK(ch.H_d.norm() == 0.0);
  CHECK(std::abs(mean_abs2(ch.H_r) / 2e-7 - 1.0) < 0.05);
  CHECK(std::abs(mean_abs2(ch.G) / 3e-7 - 1.0) < 0.05);
}

TEST_CASE("channel set validation catches shape errors and non-finite entries") {
  ChannelSet ch = gen_channels(small_geometry(), FadingParams{}, 2);
  ch.H_si = CMat::Zero(3, 3);
  CHECK_THROWS_AS(ch.validate(), DimensionError);
  ch.H_si.reset();
  ch.G(0, 0) = cd(std::nan(""), 0.0);
  CHECK_THROWS_AS(ch.validate(), DimensionError);
}

TEST_CASE("random stream basics") {
  CHECK(std::string(Rng::kScheme) == "mt64-sm64-v1");
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    const double ph = c.phase();
    CHECK((ph >= 0.0 && ph < 2.0 * std::numbers::pi));
  }
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}
