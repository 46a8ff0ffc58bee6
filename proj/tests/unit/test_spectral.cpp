// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "core/spectral.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace usr;

TEST_SUITE("spectral") {

TEST_CASE("uniform grid enumerates start..end") {
  const auto g = WavelengthGrid::uniform(400, 500, 1);
  CHECK(g.size() == 101);
  CHECK(g.start() == 400);
  CHECK(g.end() == 500);
  CHECK(g.is_uniform());
  CHECK_THROWS_AS(WavelengthGrid::uniform(500, 400, 1), Error);
  CHECK_THROWS_AS(WavelengthGrid::uniform(400, 500, 0), Error);
  CHECK_THROWS_AS(WavelengthGrid::from_points({400, 400, 410}), Error);
}

TEST_CASE("quadrature examples") {
  const auto g1 = WavelengthGrid::uniform(400, 500, 1);
  CHECK(quadrature(std::vector<double>(g1.size(), 1.0), g1) == doctest::Approx(100.0).epsilon(1e-12));

  const auto g2 = WavelengthGrid::uniform(0, 10, 1);
  std::vector<double> lin(g2.points().begin(), g2.points().end());
  CHECK(quadrature(lin, g2) == doctest::Approx(50.0).epsilon(1e-12));

  const auto g3 = WavelengthGrid::uniform(0, 10, 0.1);
  std::vector<double> sq;
  for (double l : g3.points()) sq.push_back(l * l);
  const double coarse = quadrature(sq, g3);
  // Trapezoid on a quadratic: closed form plus h^2/12 * (f'(10) - f'(0)).
  const double h = 0.1;
  CHECK(coarse == doctest::Approx(1000.0 / 3.0 + h * h / 12.0 * 20.0).epsilon(1e-12));
  const auto fine = WavelengthGrid::uniform(0, 10, 0.001);
  std::vector<double> sq_fine;
  for (double l : fine.points()) sq_fine.push_back(l * l);
  CHECK(std::abs(quadrature(sq_fine, fine) - 1000.0 / 3.0) < 1e-5);
  CHECK(std::abs(coarse - quadrature(sq_fine, fine)) < 0.017);
}

TEST_CASE("quadrature rejects bad input") {
  const auto g = WavelengthGrid::uniform(0, 10, 1);
  CHECK_THROWS_AS(quadrature(std::vector<double>(5, 1.0), g), Error);
  std::vector<double> bad(g.size(), 1.0);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(quadrature(bad, g), Error);
}

TEST_CASE("quadrature is linear and preserves sign") {
  const auto g = WavelengthGrid::uniform(380, 1050, 5);
  std::vector<double> f, h, mix;
  for (double l : g.points()) {
    f.push_back(std::sin(l / 50.0) + 1.5);
    h.push_back(std::cos(l / 70.0) + 1.2);
    mix.push_back(2.0 * f.back() - 0.5 * h.back());
  }
  CHECK(quadrature(f, g) > 0.0);
  CHECK(quadrature(mix, g) == doctest::Approx(2.0 * quadrature(f, g) - 0.5 * quadrature(h, g)).epsilon(1e-12));
}

TEST_CASE("quadrature converges at second order") {
  auto err = [](double h) {
    const auto g = WavelengthGrid::uniform(0, 3, h);
    std::vector<double> f;
    for (double l : g.points()) f.push_back(std::sin(l));
    return std::abs(quadrature(f, g) - (1.0 - std::cos(3.0)));
  };
  const double ratio = err(0.1) / err(0.05);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("non-uniform grids integrate") {
  const auto g = WavelengthGrid::from_points({0.0, 1.0, 3.0, 6.0});
  CHECK_FALSE(g.is_uniform());
  CHECK(quadrature(std::vector<double>{1, 1, 1, 1}, g) == doctest::Approx(6.0));
}

TEST_CASE("band_srf_value uses the closed support") {
  const Band b{550, 10, 1};
  CHECK(band_srf_value(b, 550) == 1.0);
  CHECK(band_srf_value(b, 556) == 0.0);
  CHECK(band_srf_value(b, 545) == 1.0);
  CHECK(band_srf_value(b, 555) == 1.0);
  CHECK(band_srf_value(Band{550, 10, 0.25}, 551) == 0.25);
}

TEST_CASE("srf integrates to gain times fwhm within one step") {
  const auto g = WavelengthGrid::uniform(300, 900, 1);
  for (const Band b : {Band{550, 10, 1}, Band{600.5, 37.3, 2}, Band{700, 200, 0.5}}) {
    std::vector<double> f;
    for (double l : g.points()) f.push_back(band_srf_value(b, l));
    CHECK(std::abs(quadrature(f, g) - b.gain * b.fwhm_nm) <= b.gain * 1.0);
  }
}

TEST_CASE("validate_sensor examples") {
  CHECK(validate_sensor({"a", {{460, 40, 1}, {520, 40, 1}}}).empty());
  const auto v = validate_sensor({"b", {{470, 60, 1}, {515, 50, 1}}});
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::Overlap);
  CHECK(v[0].first == 0);
  CHECK(v[0].second == 1);
  CHECK(v[0].message.find("0") != std::string::npos);
  CHECK(v[0].message.find("1") != std::string::npos);
  CHECK(validate_sensor({"c", {{700, 700, 1}}}).empty());
}

TEST_CASE("validate_sensor reports every violation") {
  CHECK(validate_sensor({"empty", {}})[0].kind == ViolationKind::Empty);
  const auto v = validate_sensor({"bad", {{600, 10, 1}, {500, -1, 1}}});
  bool invalid = false, unsorted = false;
  for (const auto& x : v) {
    invalid |= x.kind == ViolationKind::InvalidBand;
    unsorted |= x.kind == ViolationKind::Unsorted;
  }
  CHECK(invalid);
  CHECK(unsorted);
  // Touching closed intervals share a single point, which has zero measure.
  CHECK(validate_sensor({"touch", {{485, 70, 1}, {560, 80, 1}}}).empty());
  // Declared overlaps are accepted.
  CHECK(validate_sensor({"pan", {{500, 100, 1}, {520, 20, 1}}, true}).empty());
}

TEST_CASE("spectrum interpolates and is zero outside its grid") {
  const auto g = WavelengthGrid::uniform(400, 410, 10);
  const Spectrum s(g, {1.0, 3.0});
  CHECK(s.value_at(405) == doctest::Approx(2.0));
  CHECK(s.value_at(399) == 0.0);
  CHECK(s.value_at(411) == 0.0);
  CHECK_THROWS_AS(Spectrum(g, {1.0}), Error);
  CHECK_THROWS_AS(Spectrum(g, {1.0, std::numeric_limits<double>::infinity()}), Error);
}

}
