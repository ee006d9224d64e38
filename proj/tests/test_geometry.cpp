#include <gtest/gtest.h>

#include <random>

#include "oracles/random_design.hpp"
#include "vlt/geometry.hpp"

using namespace vlt;

namespace {

Design two_rects() {
  Design d{100, 100, {}};
  d.elements.push_back({"a", {10, 10, 0, 20, 20}});
  d.elements.push_back({"b", {50, 10, 1, 10, 30}});
  return d;
}

}  // namespace

TEST(Geometry, ApplyAddsDeltas) {
  const Design d = two_rects();
  const Design out = apply_transformation(d, {{"a", Delta{2, 8, 0, 0, 0}}});
  EXPECT_EQ(out.at("a").geometry, (ElementGeometry{12, 18, 0, 20, 20}));
  EXPECT_EQ(out.at("b").geometry, d.at("b").geometry);
}

TEST(Geometry, EmptyTransformationIsIdentity) { EXPECT_EQ(apply_transformation(two_rects(), {}), two_rects()); }

TEST(Geometry, ZeroDeltasAreNotStored) {
  Transformation t;
  t.set("a", Delta{});
  EXPECT_TRUE(t.empty());
  t.set("a", Delta{1, 0, 0, 0, 0});
  t.add("a", Delta{-1, 0, 0, 0, 0});
  EXPECT_TRUE(t.empty());
}

TEST(Geometry, UnknownElementThrows) {
  try {
    apply_transformation(two_rects(), {{"zz", Delta{1, 0, 0, 0, 0}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_element);
  }
}

TEST(Geometry, MinSizeEnforced) {
  try {
    apply_transformation(two_rects(), {{"b", Delta{0, 0, 0, -9.5, 0}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::min_size_violation);
  }
  EXPECT_NO_THROW(apply_transformation(two_rects(), {{"b", Delta{0, 0, 0, -9, 0}}}));
}

TEST(Geometry, LockedPropertyRejected) {
  Design d = two_rects();
  d.elements[0].locked.insert(Property::x);
  EXPECT_NO_THROW(apply_transformation(d, {{"a", Delta{0, 3, 0, 0, 0}}}));
  try {
    apply_transformation(d, {{"a", Delta{1, 0, 0, 0, 0}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::locked_property_violation);
  }
}

TEST(Geometry, NonFiniteDeltaRejected) {
  EXPECT_THROW(apply_transformation(two_rects(), {{"a", Delta{NAN, 0, 0, 0, 0}}}), Error);
}

TEST(Geometry, ZSwapReranks) {
  const Design out = apply_transformation(two_rects(), {{"a", Delta{0, 0, 1, 0, 0}}, {"b", Delta{0, 0, -1, 0, 0}}});
  EXPECT_EQ(out.at("a").geometry.z, 1);
  EXPECT_EQ(out.at("b").geometry.z, 0);
}

TEST(Geometry, ZRaiseKeepsDenseLayers) {
  Design d{10, 10, {}};
  for (int i = 0; i < 4; ++i) d.elements.push_back({"e" + std::to_string(i), {0, 0, i, 1, 1}});
  const Design out = apply_transformation(d, {{"e0", Delta{0, 0, 10, 0, 0}}});
  EXPECT_EQ(out.at("e0").geometry.z, 3);
  EXPECT_EQ(out.at("e1").geometry.z, 0);
  EXPECT_EQ(out.at("e3").geometry.z, 2);
}

TEST(Geometry, DeltaBetweenRoundTrips) {
  const ElementGeometry a{1, 2, 0, 3, 4}, b{5, -1, 2, 7, 1};
  const Delta d = delta_between(a, b);
  EXPECT_EQ(d, (Delta{4, -3, 2, 4, -3}));
}

TEST(Geometry, RelationClassification) {
  const ElementGeometry big{0, 0, 0, 100, 100}, small{10, 10, 0, 10, 10}, side{95, 50, 0, 20, 20}, far{200, 0, 0, 5, 5};
  EXPECT_EQ(bounds_relation(big, small).relation, Relation::a_contains_b);
  EXPECT_EQ(bounds_relation(small, big).relation, Relation::b_contains_a);
  EXPECT_EQ(bounds_relation(big, side).relation, Relation::overlap);
  const auto r = bounds_relation(big, far);
  EXPECT_EQ(r.relation, Relation::disjoint);
  ASSERT_TRUE(r.horizontal_gap);
  EXPECT_DOUBLE_EQ(*r.horizontal_gap, 100);
  EXPECT_FALSE(r.vertical_gap);
}

TEST(Geometry, TouchingBoxesAreDisjoint) {
  const auto r = bounds_relation({0, 0, 0, 10, 10}, {10, 0, 0, 10, 10});
  EXPECT_EQ(r.relation, Relation::disjoint);
  EXPECT_DOUBLE_EQ(*r.horizontal_gap, 0);
}

TEST(Geometry, NearFullCoverageCountsAsContainment) {
  // 99% of the inner box covered.
  EXPECT_TRUE(contains({0, 0, 0, 100, 100}, {0.5, 0, 0, 100.0 / 2, 10}));
  EXPECT_TRUE(contains({0, 0, 0, 100, 100}, {-0.1, 0, 0, 10, 10}));
  EXPECT_FALSE(contains({0, 0, 0, 100, 100}, {-0.5, 0, 0, 10, 10}));
}

TEST(Geometry, EqualBoxesOverlapWithoutContainment) {
  EXPECT_EQ(bounds_relation({0, 0, 0, 10, 10}, {0, 0, 0, 10, 10}).relation, Relation::overlap);
}

TEST(Geometry, PropertySetOps) {
  PropertySet s;
  EXPECT_TRUE(s.empty());
  s.insert(Property::w);
  s.insert(Property::x);
  EXPECT_EQ(s.to_vector(), (std::vector<Property>{Property::x, Property::w}));
  PropertySet t;
  t.insert(Property::x);
  s.remove(t);
  EXPECT_FALSE(s.contains(Property::x));
  EXPECT_TRUE(PropertySet::all().contains(Property::z));
  EXPECT_EQ(property_from_string("h"), Property::h);
  EXPECT_FALSE(property_from_string("q"));
}

// Composition: apply(apply(d, t1), t2) == apply(d, compose(t1, t2)) when no
// z deltas are involved; half-unit values keep the arithmetic exact.
TEST(GeometryProperty, ComposeIsSequentialApply) {
  std::mt19937_64 rng(7);
  auto half = [&](int lo, int hi) { return 0.5 * std::uniform_int_distribution<int>(2 * lo, 2 * hi)(rng); };
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Design d = oracle::random_design(seed);
    if (d.elements.empty()) continue;
    auto random_t = [&]() {
      Transformation t;
      for (const auto& e : d.elements) {
        if (rng() % 2) t.set(e.id, Delta{half(-5, 5), half(-5, 5), 0, half(0, 5), half(0, 5)});
      }
      return t;
    };
    const Transformation t1 = random_t(), t2 = random_t();
    EXPECT_EQ(apply_transformation(apply_transformation(d, t1), t2), apply_transformation(d, compose(t1, t2)));
    EXPECT_EQ(compose(t1, t2), compose(t2, t1));
    EXPECT_EQ(compose(t1, Transformation{}), t1);
  }
}

TEST(GeometryProperty, ZStaysAPermutation) {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Design d = oracle::random_design(seed);
    Transformation t;
    for (const auto& e : d.elements) t.set(e.id, Delta{0, 0, static_cast<int>(rng() % 7) - 3, 0, 0});
    const Design out = apply_transformation(d, t);
    std::vector<int> zs;
    for (const auto& e : out.elements) zs.push_back(e.geometry.z);
    std::sort(zs.begin(), zs.end());
    for (std::size_t i = 0; i < zs.size(); ++i) EXPECT_EQ(zs[i], static_cast<int>(i));
  }
}
