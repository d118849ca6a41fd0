#include "test_support.hpp"

using namespace mt;

TEST(Directions, UnitAndDeterministic) {
  for (Eigen::Index n : {1, 2, 3, 4}) {
    const auto a = directions(n, 64), b = directions(n, 64);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i].norm(), 1.0, 1e-12);
      EXPECT_TRUE(a[i] == b[i]);
    }
  }
  EXPECT_EQ(directions(1, 64).size(), 2u);
}

TEST(Directions, SpreadOverCircle) {
  // Every unit vector is within 0.1 rad of some direction.
  const auto d = directions(2, 64);
  for (int k = 0; k < 360; ++k) {
    const double a = k * M_PI / 180;
    double best = -1;
    for (const auto& u : d) best = std::max(best, u(0) * std::cos(a) + u(1) * std::sin(a));
    EXPECT_GT(best, std::cos(0.1));
  }
}

TEST(InclusionCheck, Case2EqualityMargins) {
  const auto p = example311_problem(2);
  InclusionOptions opt;
  opt.directions = 2;
  const auto r = inclusion_check(p, vec({0}), coderivative_estimate(p, vec({0})), opt);
  EXPECT_EQ(r.verdict, Verdict::holds);
  ASSERT_EQ(r.directions.size(), 2u);
  for (const auto& d : r.directions) {
    EXPECT_NEAR(d.phi_dd, 1.0, 1e-9);
    EXPECT_NEAR(d.margin, 0.0, 1e-9);
  }
}

TEST(InclusionCheck, Case1Unbounded) {
  const auto p = example311_problem(1);
  const auto r = inclusion_check(p, vec({0}), coderivative_estimate(p, vec({0})));
  EXPECT_EQ(r.verdict, Verdict::holds);
  for (const auto& d : r.directions) {
    EXPECT_TRUE(d.unbounded);
    EXPECT_TRUE(std::isinf(d.margin));
  }
  EXPECT_EQ(r.unbounded_directions.size(), r.directions.size());
}

TEST(InclusionCheck, ShrunkenEstimateViolated) {
  const auto p = example311_problem(2);
  const auto r = inclusion_check(p, vec({0}), supplied_estimate(GeneratedConvexSet::point(vec({0}))));
  EXPECT_EQ(r.verdict, Verdict::violated);
  const auto* w = r.worst();
  ASSERT_NE(w, nullptr);
  EXPECT_NEAR(w->margin, -1.0, 1e-9);
}

TEST(InclusionCheck, EmptyEstimateInconclusive) {
  const auto p = example311_problem(2);
  const auto r = inclusion_check(p, vec({0}), supplied_estimate(GeneratedConvexSet::empty(1)));
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
  EXPECT_STREQ(to_string(r.verdict), "inconclusive: empty estimate");
}

TEST(InclusionCheck, ParallelEqualsSerial) {
  const auto p = random_instance(5, 2, 2);
  const auto e = coderivative_estimate(p, Vector::Zero(2));
  InclusionOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const auto a = report_json(inclusion_check(p, Vector::Zero(2), e, one)).dump();
  const auto b = report_json(inclusion_check(p, Vector::Zero(2), e, many)).dump();
  EXPECT_EQ(a, b);
}

TEST(Claim1, Case2) {
  const auto recs = claim1_check(example311_problem(2), vec({0}), {vec({1})});
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_NEAR(recs[0].lhs, 1.0, 1e-9);
  EXPECT_NEAR(recs[0].rhs.value(), 1.0, 1e-9);
  EXPECT_TRUE(recs[0].holds);
}

TEST(Claim1, AffineMarginal) {
  const auto recs = claim1_check(whole_space_problem({aff(1, 1), aff(1, -1)}), vec({0}), {vec({1}), vec({-1})});
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_NEAR(recs[0].lhs, 1.0, 1e-9);
  EXPECT_NEAR(recs[0].rhs.value(), 1.0, 1e-9);
  EXPECT_NEAR(recs[1].lhs, -1.0, 1e-9);
  EXPECT_NEAR(recs[1].rhs.value(), -1.0, 1e-9);
}

TEST(Claim1, RandomInstancesHold) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = random_instance(seed, 1, 1);
    for (const auto& r : claim1_check(p, vec({0}), directions(1, 2), fuzz_sampling())) EXPECT_TRUE(r.holds) << seed;
  }
}

TEST(Example311, Cases) {
  const auto a = example311(1);
  EXPECT_TRUE(a.estimate.oracle(vec({1})).is_plus_infinity());
  const auto b = example311(2);
  EXPECT_NEAR(b.estimate.oracle(vec({1})).value(), 1.0, 1e-9);
  EXPECT_NEAR(b.estimate.oracle(vec({-1})).value(), 1.0, 1e-9);
  const auto c = example311(2, 0.5);
  EXPECT_NEAR(c.estimate.oracle(vec({1})).value(), 1.0, 1e-9);
  EXPECT_NEAR(c.estimate.oracle(vec({-1})).value(), -1.0, 1e-9);
  EXPECT_NO_THROW(example311(1, -0.5));
  EXPECT_THROW(example311(3), ValidationError);
}

TEST(RandomInstance, Deterministic) {
  const auto a = problem_to_json(random_instance(1, 2, 3)).dump();
  const auto b = problem_to_json(random_instance(1, 2, 3)).dump();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, problem_to_json(random_instance(2, 2, 3)).dump());
}

TEST(RandomInstance, HundredSeedsValid) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto [n, m] = fuzz_dims(seed);
    const auto p = random_instance(seed, n, m);
    EXPECT_NO_THROW(p.validate());
    const Vector x = Vector::Zero(n);
    EXPECT_FALSE(detail::nonempty_slices(p, x).empty());
    EXPECT_TRUE(eval_phi(p, x).value.is_finite());
    const auto w = random_instance(seed, n, m, InstanceClass::max_affine_whole_space);
    EXPECT_TRUE(eval_phi(w, x).value.is_finite());
  }
  EXPECT_THROW(random_instance(1, 0, 1), ValidationError);
}

TEST(RenderReport, Lines) {
  EXPECT_EQ(render_report({}).text, "NO CHECKS RUN\n");
  const auto p = example311_problem(2);
  const auto good = inclusion_check(p, vec({0}), coderivative_estimate(p, vec({0})));
  const auto bad = inclusion_check(p, vec({0}), supplied_estimate(GeneratedConvexSet::point(vec({0}))));
  const auto a = render_report({good});
  EXPECT_TRUE(a.all_hold);
  EXPECT_EQ(a.text.rfind("PASS", 0), 0u);
  EXPECT_NE(a.text.find("counterexample"), std::string::npos);
  const auto b = render_report({bad});
  EXPECT_FALSE(b.all_hold);
  EXPECT_EQ(b.text.rfind("FAIL", 0), 0u);
  EXPECT_NE(b.text.find("worst u=(1)"), std::string::npos);
  EXPECT_EQ(b.document[0]["verdict"], "violated");
  EXPECT_EQ(b.document[0]["estimate_form"], "supplied");
}
