#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <vector>

#include "blockisd/channel.hpp"

using namespace blockisd;

TEST_CASE("vehicular A maps to the standard tap set at 50 MHz", "[channel]") {
  const ChannelProfile profile = vehicular_a();
  CHECK(profile_to_support(profile) == std::vector<int>{0, 16, 36, 55, 87, 126});
}

TEST_CASE("zero delay maps to the first tap", "[channel]") {
  ChannelProfile profile;
  profile.tap_delays_ns = {0.0};
  profile.tap_powers_db = {0.0};
  profile.max_length_L = 4;
  CHECK(profile_to_support(profile) == std::vector<int>{0});
}

TEST_CASE("colliding delays deduplicate", "[channel]") {
  // 10 ns at 50 MHz is half a sample and rounds down to the even index 0.
  ChannelProfile profile;
  profile.tap_delays_ns = {0.0, 10.0};
  profile.tap_powers_db = {0.0, -3.0};
  profile.max_length_L = 8;
  CHECK(profile_to_support(profile) == std::vector<int>{0});
}

TEST_CASE("taps beyond the channel length are rejected", "[channel]") {
  ChannelProfile profile;
  profile.tap_delays_ns = {0.0, 2560.0};
  profile.tap_powers_db = {0.0, 0.0};
  profile.max_length_L = 128;
  CHECK_THROWS_AS(profile_to_support(profile), std::invalid_argument);
}

TEST_CASE("profile validation catches malformed inputs", "[channel]") {
  ChannelProfile profile = vehicular_a();
  SECTION("empty") {
    profile.tap_delays_ns.clear();
    profile.tap_powers_db.clear();
    CHECK_THROWS_AS(validate(profile), std::invalid_argument);
  }
  SECTION("length mismatch") {
    profile.tap_powers_db.pop_back();
    CHECK_THROWS_AS(validate(profile), std::invalid_argument);
  }
  SECTION("first delay nonzero") {
    profile.tap_delays_ns.front() = 5.0;
    CHECK_THROWS_AS(validate(profile), std::invalid_argument);
  }
  SECTION("not strictly increasing") {
    profile.tap_delays_ns[2] = profile.tap_delays_ns[1];
    CHECK_THROWS_AS(validate(profile), std::invalid_argument);
  }
  SECTION("bad bandwidth") {
    profile.bandwidth_hz = 0.0;
    CHECK_THROWS_AS(validate(profile), std::invalid_argument);
  }
}

TEST_CASE("scaled profile fills the requested length", "[channel]") {
  CHECK(profile_to_support(vehicular_a_scaled(32)) == std::vector<int>{0, 4, 9, 13, 21, 31});
  CHECK(profile_to_support(vehicular_a_scaled(16)) == std::vector<int>{0, 2, 4, 7, 10, 15});
  CHECK(profile_to_support(vehicular_a_scaled(128)) == std::vector<int>{0, 16, 36, 55, 88, 127});
}

TEST_CASE("single tap single antenna", "[channel]") {
  ChannelProfile profile;
  profile.tap_delays_ns = {0.0};
  profile.tap_powers_db = {0.0};
  profile.max_length_L = 4;
  Rng rng(1);
  const Cir cir = generate_cir(profile, 1, rng);
  CHECK(cir.support == std::vector<int>{0});
  CHECK(cir.coeffs.size() == 4);
  CHECK(cir.coeffs(0) != std::complex<double>(0.0, 0.0));
  for (int k = 1; k < 4; ++k) CHECK(cir.coeffs(k) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("antennas share a common support", "[channel]") {
  Rng rng(2);
  const ChannelProfile profile = vehicular_a();
  const Cir cir = generate_cir(profile, 2, rng);
  std::set<int> antenna0, antenna1;
  for (int k : cir.support) (k < 128 ? antenna0 : antenna1).insert(k % 128);
  CHECK(antenna0 == antenna1);
  CHECK(antenna0.size() == 6);
  CHECK(tap_support(cir) == std::vector<int>{0, 16, 36, 55, 87, 126});
  // nonzero exactly on the support
  std::set<int> nonzero;
  for (int k = 0; k < cir.coeffs.size(); ++k)
    if (cir.coeffs(k) != std::complex<double>(0.0, 0.0)) nonzero.insert(k);
  CHECK(nonzero == std::set<int>(cir.support.begin(), cir.support.end()));
}

TEST_CASE("generation is deterministic under a fixed seed", "[channel]") {
  const ChannelProfile profile = vehicular_a_scaled(32);
  Rng a(77), b(77);
  const Cir ca = generate_cir(profile, 4, a);
  const Cir cb = generate_cir(profile, 4, b);
  REQUIRE(ca.support == cb.support);
  REQUIRE((ca.coeffs.array() == cb.coeffs.array()).all());
}

TEST_CASE("expected energy per antenna is one", "[channel]") {
  const ChannelProfile profile = vehicular_a();
  Rng rng(3);
  const int draws = 3000, antennas = 4;  // 12000 per-antenna samples
  double total = 0.0;
  for (int d = 0; d < draws; ++d) {
    const Cir cir = generate_cir(profile, antennas, rng);
    for (int a = 0; a < antennas; ++a)
      total += cir.coeffs.segment(a * cir.length_per_antenna, cir.length_per_antenna).squaredNorm();
  }
  CHECK(total / (draws * antennas) == Catch::Approx(1.0).epsilon(0.02));
}

TEST_CASE("colliding taps pool their power", "[channel]") {
  // Two taps land on sample 0: variances must add before normalization.
  ChannelProfile profile;
  profile.tap_delays_ns = {0.0, 10.0, 400.0};
  profile.tap_powers_db = {0.0, 0.0, 0.0};
  profile.max_length_L = 32;
  Rng rng(11);
  const int draws = 20000;
  double merged = 0.0, lone = 0.0;
  for (int d = 0; d < draws; ++d) {
    const Cir cir = generate_cir(profile, 1, rng);
    merged += std::norm(cir.coeffs(0));
    lone += std::norm(cir.coeffs(20));
  }
  CHECK(merged / draws == Catch::Approx(2.0 / 3.0).epsilon(0.05));
  CHECK(lone / draws == Catch::Approx(1.0 / 3.0).epsilon(0.05));
}
