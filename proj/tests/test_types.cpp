#include <doctest.h>

#include "eelink/csv.hpp"
#include "eelink/errors.hpp"
#include "eelink/types.hpp"

using namespace eelink;

namespace {

Observation obs(double y, int z, std::initializer_list<double> x) {
  Observation o;
  o.y = y;
  o.z = z;
  o.x.resize(static_cast<int>(x.size()));
  int i = 0;
  for (double v : x) o.x[i++] = v;
  return o;
}

}  // namespace

TEST_CASE("validate_dataset accepts a clean 3-row dataset") {
  Dataset d;
  d.q = 1;
  d.rows = {obs(1.0, 1, {0.5}), obs(0.0, 0, {-0.2}), obs(2.0, 1, {1.0})};
  auto rep = validate_dataset(d);
  CHECK(rep.ok());
  CHECK_NOTHROW(ensure_valid(d));
}

TEST_CASE("validate_dataset flags a single treatment arm") {
  Dataset d;
  d.q = 1;
  d.rows = {obs(1.0, 1, {0.5}), obs(0.0, 1, {-0.2}), obs(2.0, 1, {1.0})};
  auto rep = validate_dataset(d);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.to_string().find("single treatment arm") != std::string::npos);
  CHECK_THROWS_AS(ensure_valid(d), ValidationError);
}

TEST_CASE("validate_dataset flags non-finite covariates with the row index") {
  Dataset d;
  d.q = 1;
  d.rows = {obs(1.0, 1, {0.5}), obs(0.0, 0, {-0.2}), obs(2.0, 1, {1.0})};
  d.rows[2].x[0] = std::numeric_limits<double>::quiet_NaN();
  auto rep = validate_dataset(d);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.to_string().find("non-finite covariate at row 2") != std::string::npos);
}

TEST_CASE("validate_dataset flags non-binary z, bad y, ragged rows, and n < 2") {
  Dataset d;
  d.q = 2;
  d.rows = {obs(1.0, 2, {0.5, 1.0})};
  d.rows[0].y = std::numeric_limits<double>::infinity();
  Observation ragged = obs(0.0, 0, {1.0});
  d.rows.push_back(ragged);
  auto rep = validate_dataset(d);
  std::string s = rep.to_string();
  CHECK(s.find("non-binary z") != std::string::npos);
  CHECK(s.find("non-finite outcome") != std::string::npos);
  CHECK(s.find("length 1") != std::string::npos);

  Dataset tiny;
  tiny.q = 1;
  tiny.rows = {obs(1.0, 1, {0.0})};
  CHECK_FALSE(validate_dataset(tiny).ok());
}

TEST_CASE("validate_dataset is pure") {
  Dataset d;
  d.q = 1;
  d.rows = {obs(1.0, 1, {0.5}), obs(0.0, 1, {-0.2})};
  CHECK(validate_dataset(d).to_string() == validate_dataset(d).to_string());
}

TEST_CASE("design_matrix with and without intercept") {
  Dataset d;
  d.q = 1;
  d.rows = {obs(0.0, 1, {2.0}), obs(0.0, 0, {3.0})};

  Mat plain = design_matrix(d, false);
  REQUIRE(plain.rows() == 2);
  REQUIRE(plain.cols() == 1);
  CHECK(plain(0, 0) == 2.0);
  CHECK(plain(1, 0) == 3.0);

  Mat aug = design_matrix(d, true);
  REQUIRE(aug.cols() == 2);
  CHECK(aug(0, 0) == 1.0);
  CHECK(aug(1, 0) == 1.0);
  CHECK(aug(0, 1) == 2.0);
  CHECK(aug(1, 1) == 3.0);
}

TEST_CASE("WeightVector validates the simplex constraints") {
  Vec w(3);
  w << 0.2, 0.3, 0.5;
  CHECK_NOTHROW(WeightVector::from(w));

  w << 0.2, 0.3, 0.6;
  CHECK_THROWS_AS(WeightVector::from(w), ValidationError);

  w << -0.1, 0.6, 0.5;
  CHECK_THROWS_AS(WeightVector::from(w), ValidationError);

  w << 0.2, 0.3, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(WeightVector::from(w), ValidationError);

  // A drift of 1e-11 in the sum is over the documented 1e-12 tolerance.
  w << 0.2, 0.3, 0.5 + 1e-11;
  CHECK_THROWS_AS(WeightVector::from(w), ValidationError);
}

TEST_CASE("equal weights are exactly 1/n") {
  WeightVector w = WeightVector::equal(4);
  for (int i = 0; i < 4; ++i) CHECK(w[i] == 0.25);
  WeightVector one = WeightVector::equal(1);
  CHECK(one[0] == 1.0);
}

TEST_CASE("dataset CSV round-trips exactly") {
  Dataset d;
  d.q = 2;
  d.rows = {obs(1.25, 1, {0.5, -1.75}), obs(-0.125, 0, {2.0, 0.3333333333333333})};
  std::string text = dataset_to_csv(d);
  Dataset back = parse_dataset_csv(text);
  REQUIRE(back.n() == 2);
  REQUIRE(back.q == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(back.rows[i].y == d.rows[i].y);
    CHECK(back.rows[i].z == d.rows[i].z);
    CHECK(back.rows[i].x == d.rows[i].x);
  }
}

TEST_CASE("dataset CSV rejects malformed input") {
  CHECK_THROWS_AS(parse_dataset_csv(""), ParseError);
  CHECK_THROWS_AS(parse_dataset_csv("a,b,c\n"), ParseError);
  CHECK_THROWS_AS(parse_dataset_csv("y,z,x1\n1.0,2,0.5\n"), ParseError);  // z must be 0/1
  CHECK_THROWS_AS(parse_dataset_csv("y,z,x1\n1.0,1\n"), ParseError);      // short row
  CHECK_THROWS_AS(parse_dataset_csv("y,z,x1\nfoo,1,0.5\n"), ParseError);  // bad float
  CHECK_THROWS_AS(parse_dataset_csv("y,z,x2\n1.0,1,0.5\n"), ParseError);  // bad header name
}
