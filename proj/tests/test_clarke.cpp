#include "test_support.hpp"

using namespace mt;

namespace {

std::vector<HPolyhedron> abs_graph() {
  return {poly(2, {{1, -1, 0}, {-1, 1, 0}, {-1, 0, 0}}), poly(2, {{1, 1, 0}, {-1, -1, 0}, {1, 0, 0}})};
}

std::vector<HPolyhedron> slab_graph() {
  return {poly(2, {{-1, 0, 0}, {1, -1, 0}, {-1, 1, 1}}), poly(2, {{1, 0, 0}, {-1, -1, 0}, {1, 1, 1}})};
}

std::vector<HPolyhedron> diagonal_graph() {
  HPolyhedron P(2);
  P.add_equality(vec({1, -1}), 0);
  return {P};
}

bool in_cone(const ConeGenerators& T, const Vector& u) {
  return contains(GeneratedConvexSet::cone(T.dim, T.all()), u, 1e-9);
}

// Closest point of a planar polygon {A z <= b}: the point itself, its
// projections onto edge lines, or pairwise line intersections.
Vector planar_projection(const HPolyhedron& P, const Vector& z) {
  if (P.violation(z) <= 0) return z;
  std::vector<Vector> cands;
  const Eigen::Index k = P.A.rows();
  for (Eigen::Index i = 0; i < k; ++i) {
    const Vector a = P.A.row(i).transpose();
    cands.push_back(z - (a.dot(z) - P.b(i)) / a.squaredNorm() * a);
    for (Eigen::Index j = i + 1; j < k; ++j) {
      Eigen::Matrix2d M;
      M << P.A.row(i), P.A.row(j);
      if (std::abs(M.determinant()) > 1e-12) cands.push_back(Vector(M.inverse() * Eigen::Vector2d(P.b(i), P.b(j))));
    }
  }
  Vector best;
  double bd = std::numeric_limits<double>::infinity();
  for (const auto& c : cands)
    if (P.violation(c) <= 1e-12 && (c - z).norm() < bd) {
      bd = (c - z).norm();
      best = c;
    }
  return best;
}

bool in_union(const std::vector<HPolyhedron>& pieces, const Vector& z, double tol) {
  for (const auto& P : pieces)
    if (P.violation(z) <= tol) return true;
  return false;
}

// Clarke tangent directions of a planar union by definition: u is accepted iff
// every sampled base point z of the set near zbar (including zbar, points on
// edges and vertices) admits z + t u in the set for a small step t.
bool tangent_by_definition(const std::vector<HPolyhedron>& pieces, const Vector& zbar, const Vector& u,
                           const std::vector<Vector>& base) {
  const double t = 1e-7;
  for (const auto& z : base)
    if (!in_union(pieces, z + t * u, 1e-13)) return false;
  (void)zbar;
  return true;
}

std::vector<Vector> base_points(const std::vector<HPolyhedron>& pieces, const Vector& zbar, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vector> out{zbar};
  const double r = 1e-3;
  for (int s = 0; s < 400; ++s) {
    const Vector w = zbar + random_vector(rng, 2, -r, r);
    for (const auto& P : pieces) {
      const Vector q = planar_projection(P, w);
      if ((q - zbar).norm() <= 2 * r) out.push_back(q);
    }
  }
  return out;
}

void compare_with_definition(const std::vector<HPolyhedron>& pieces, const Vector& zbar, unsigned seed) {
  const auto T = tangent_cone_polyunion(pieces, zbar);
  const auto base = base_points(pieces, zbar, seed);
  auto dirs = directions(2, 64);
  for (const auto& g : T.all()) dirs.push_back(g.normalized());
  for (const auto& u : dirs) EXPECT_EQ(in_cone(T, u), tangent_by_definition(pieces, zbar, u, base)) << "u = " << u.transpose();
}

} // namespace

TEST(ActiveIndices, Examples) {
  const auto f = max_of({aff(1, 1), aff(1, -1)});
  EXPECT_EQ(active_indices(f, vec({0}), vec({0}), 1e-8).indices, (std::vector<size_t>{0, 1}));
  EXPECT_EQ(active_indices(f, vec({0}), vec({1}), 1e-8).indices, (std::vector<size_t>{0}));
  EXPECT_EQ(active_indices(max_of({aff(0, 1)}), vec({3}), vec({4})).indices, (std::vector<size_t>{0}));
  EXPECT_THROW(active_indices(f, vec({0}), vec({0}), 0.0), PreconditionError);
}

TEST(ClarkeSubdiff, Examples) {
  const auto a = clarke_subdiff_max(max_of({aff(0, 1)}), vec({0}), vec({0}));
  ASSERT_EQ(a.vertices.size(), 1u);
  EXPECT_TRUE(a.vertices[0].isApprox(vec({0, 1})));
  const auto b = clarke_subdiff_max(max_of({aff(1, 1), aff(1, -1)}), vec({0}), vec({0}));
  EXPECT_EQ(b.vertices.size(), 2u);
  EXPECT_DOUBLE_EQ(support(b, vec({0, 1})).value(), 1.0);
  EXPECT_DOUBLE_EQ(support(b, vec({0, -1})).value(), 1.0);
  EXPECT_DOUBLE_EQ(support(b, vec({1, 0})).value(), 1.0);
  const auto c = clarke_subdiff_max(max_of({aff(0, 1), aff(0, -1)}), vec({0}), vec({0}));
  EXPECT_DOUBLE_EQ(support(c, vec({0, 1})).value(), 1.0);
  EXPECT_DOUBLE_EQ(support(c, vec({1, 0})).value(), 0.0);
}

TEST(ClarkeSubdiff, NonemptyCompactEverywhere) {
  std::mt19937_64 rng(2);
  std::vector<SmoothComponent> cs;
  for (int i = 0; i < 4; ++i) cs.push_back(SmoothComponent::affine(random_vector(rng, 2), random_vector(rng, 1), 0));
  const auto f = max_of(cs);
  for (int t = 0; t < 100; ++t) {
    const Vector z = t < 10 ? Vector::Zero(3) : random_vector(rng, 3);
    const auto S = clarke_subdiff_max(f, z.head(2), z.tail(1));
    EXPECT_FALSE(S.is_empty());
    EXPECT_TRUE(S.is_bounded());
  }
}

TEST(GenDirDerivExact, Examples) {
  EXPECT_DOUBLE_EQ(gen_dir_deriv_exact(max_of({aff(0, 1), aff(0, -1)}), vec({0}), vec({0}), vec({0, 1})), 1.0);
  EXPECT_DOUBLE_EQ(gen_dir_deriv_exact(max_of({aff(0, 1)}), vec({0}), vec({0}), vec({3, 2})), 2.0);
  EXPECT_DOUBLE_EQ(gen_dir_deriv_exact(max_of({aff(1, 1), aff(1, -1)}), vec({0}), vec({0}), vec({1, 0})), 1.0);
}

TEST(GenDirDerivSampled, Examples) {
  const ScalarFn abs1 = [](const Vector& x) { return std::abs(x(0)); };
  EXPECT_NEAR(gen_dir_deriv_sampled(abs1, vec({0}), vec({1})), 1.0, 1e-12);
  EXPECT_NEAR(gen_dir_deriv_sampled(abs1, vec({1}), vec({1})), 1.0, 1e-9);
  const ScalarFn relu = [](const Vector& x) { return std::max(0.0, x(0)); };
  // Dense (x, t) grid: the quotient of max(0, .) along -1 never exceeds 0.
  double brute = -1.0;
  for (int i = -200; i <= 200; ++i)
    for (int k = 1; k <= 200; ++k) {
      const double x = i * 5e-5, t = k * 5e-5;
      brute = std::max(brute, (relu(vec({x - t})) - relu(vec({x}))) / t);
    }
  EXPECT_NEAR(brute, 0.0, 1e-12);
  EXPECT_NEAR(gen_dir_deriv_sampled(relu, vec({0}), vec({-1})), brute, 1e-12);
}

TEST(GenDirDerivSampled, MonotoneUnderSampleExtension) {
  const ScalarFn f = [](const Vector& x) { return std::max({x(0) + 2 * x(1), -x(0), 0.5 * x(1) - 0.001}); };
  SampledLimsupParams few, many;
  few.samples_per_radius = 8;
  many.samples_per_radius = 64;
  for (const auto& u : directions(2, 16))
    EXPECT_LE(gen_dir_deriv_sampled(f, vec({0.0005, 0}), u, few), gen_dir_deriv_sampled(f, vec({0.0005, 0}), u, many));
}

TEST(GenDirDerivSampled, RejectsNonFinite) {
  const ScalarFn f = [](const Vector& x) { return x(0) > 0 ? std::numeric_limits<double>::infinity() : 0.0; };
  EXPECT_THROW(gen_dir_deriv_sampled(f, vec({0}), vec({1})), NumericalError);
}

TEST(GenDirDerivSampled, NeverAboveExactPiecewiseAffine) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    std::vector<SmoothComponent> cs;
    for (int i = 0; i < 5; ++i) cs.push_back(SmoothComponent::affine(random_vector(rng, 1), random_vector(rng, 1), 0));
    const auto f = max_of(cs);
    const ScalarFn fn = [&f](const Vector& z) { return f.value(z.head(1), z.tail(1)); };
    for (const auto& u : directions(2, 32))
      EXPECT_LE(gen_dir_deriv_sampled(fn, Vector::Zero(2), u), gen_dir_deriv_exact(f, vec({0}), vec({0}), u) + 1e-6);
  }
}

TEST(GenDirDerivSampled, NeverAboveExactUpToCurvature) {
  // With curvature the quotient can exceed f° by |Q| (delta + t / 2).
  std::mt19937_64 rng(9);
  const SampledLimsupParams params;
  const double slack = *std::max_element(params.radii.begin(), params.radii.end()) +
                       0.5 * *std::max_element(params.steps.begin(), params.steps.end());
  for (int t = 0; t < 20; ++t) {
    std::vector<SmoothComponent> cs;
    for (int i = 0; i < 4; ++i) cs.push_back(SmoothComponent::affine(random_vector(rng, 1), random_vector(rng, 1), 0));
    cs.push_back(SmoothComponent::quadratic(Matrix::Identity(2, 2), random_vector(rng, 2), 0, 1));
    const auto f = max_of(cs);
    const ScalarFn fn = [&f](const Vector& z) { return f.value(z.head(1), z.tail(1)); };
    for (const auto& u : directions(2, 32))
      EXPECT_LE(gen_dir_deriv_sampled(fn, Vector::Zero(2), u, params),
                gen_dir_deriv_exact(f, vec({0}), vec({0}), u) + slack + 1e-6);
  }
}

TEST(SumRule, ConvexMaxAffine) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    std::vector<SmoothComponent> fs, gs, sums;
    std::vector<Vector> fa, ga;
    for (int i = 0; i < 3; ++i) fa.push_back(random_vector(rng, 2));
    for (int i = 0; i < 3; ++i) ga.push_back(random_vector(rng, 2));
    for (const auto& a : fa) fs.push_back(SmoothComponent::affine(a.head(1), a.tail(1), 0));
    for (const auto& a : ga) gs.push_back(SmoothComponent::affine(a.head(1), a.tail(1), 0));
    for (const auto& a : fa)
      for (const auto& b : ga) sums.push_back(SmoothComponent::affine((a + b).head(1), (a + b).tail(1), 0));
    const Vector x = vec({0}), y = vec({0});
    const auto Sf = clarke_subdiff_max(max_of(fs), x, y);
    const auto Sg = clarke_subdiff_max(max_of(gs), x, y);
    const auto Ss = clarke_subdiff_max(max_of(sums), x, y);
    for (const auto& u : directions(2, 64))
      EXPECT_NEAR(support(Ss, u).value(), support(Sf, u).value() + support(Sg, u).value(), 1e-9);
  }
}

TEST(TangentCone, AbsGraphAtKink) {
  const auto T = tangent_cone_polyunion(abs_graph(), vec({0, 0}));
  EXPECT_TRUE(T.rays.empty());
  EXPECT_TRUE(T.lineality.empty());
}

TEST(TangentCone, AbsGraphOnBranch) {
  const auto T = tangent_cone_polyunion(abs_graph(), vec({1, 1}));
  EXPECT_TRUE(in_cone(T, vec({1, 1})));
  EXPECT_TRUE(in_cone(T, vec({-1, -1})));
  EXPECT_FALSE(in_cone(T, vec({1, 0})));
  EXPECT_FALSE(in_cone(T, vec({0, 1})));
}

TEST(TangentCone, SquareCorner) {
  const auto T = tangent_cone_polyunion({poly(2, {{-1, 0, 0}, {0, -1, 0}, {1, 0, 1}, {0, 1, 1}})}, vec({0, 0}));
  EXPECT_TRUE(in_cone(T, vec({1, 0})));
  EXPECT_TRUE(in_cone(T, vec({0, 1})));
  EXPECT_TRUE(in_cone(T, vec({1, 3})));
  EXPECT_FALSE(in_cone(T, vec({-1, 1})));
}

TEST(TangentCone, OutsideSetThrows) {
  EXPECT_THROW(tangent_cone_polyunion(abs_graph(), vec({0, 1})), DomainError);
}

TEST(TangentCone, MatchesDefinitionOracle) {
  compare_with_definition(abs_graph(), vec({0, 0}), 1);
  compare_with_definition(abs_graph(), vec({1, 1}), 2);
  compare_with_definition(slab_graph(), vec({0, 0}), 3);
  compare_with_definition(slab_graph(), vec({0, 1}), 4);
  // Two squares meeting at a corner; an L-shaped re-entrant corner.
  compare_with_definition({poly(2, {{1, 0, 0}, {0, 1, 0}, {-1, 0, 1}, {0, -1, 1}}),
                           poly(2, {{-1, 0, 0}, {0, -1, 0}, {1, 0, 1}, {0, 1, 1}})},
                          vec({0, 0}), 5);
  compare_with_definition({poly(2, {{-1, 0, 0}, {1, 0, 1}, {0, 1, 1}, {0, -1, 1}}),
                           poly(2, {{0, -1, 0}, {1, 0, 1}, {-1, 0, 1}, {0, 1, 1}})},
                          vec({0, 0}), 6);
  // A wedge glued to a segment-like thin triangle.
  compare_with_definition({poly(2, {{1, -2, 0}, {-1, -1, 0}, {0, 1, 1}}), poly(2, {{-1, 3, 0}, {1, -4, 0}, {1, 0, 1}})},
                          vec({0, 0}), 7);
}

TEST(TangentCone, RandomUnionsMatchDefinitionOracle) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 8; ++t) {
    std::vector<HPolyhedron> pieces;
    for (int p = 0; p < 2; ++p) {
      HPolyhedron P(2);
      for (int k = 0; k < 2; ++k) P.add_inequality(random_vector(rng, 2), 0.0);
      P.add_inequality(random_vector(rng, 2), 0.5);
      for (const auto& box : {vec({1, 0}), vec({-1, 0}), vec({0, 1}), vec({0, -1})}) P.add_inequality(box, 1.0);
      if (!P.contains(vec({0, 0}))) continue;
      pieces.push_back(P);
    }
    if (pieces.empty()) continue;
    compare_with_definition(pieces, vec({0, 0}), 100 + t);
  }
}

TEST(NormalCone, AbsGraphIsPlane) {
  const auto N = normal_cone(abs_graph(), vec({0, 0}));
  EXPECT_EQ(N.halfspaces.A.rows() + N.halfspaces.E.rows(), 0);
  for (const auto& u : directions(2, 8)) EXPECT_TRUE(support(N.cone, u).is_plus_infinity());
}

TEST(NormalCone, SlabGraphHandPolarity) {
  // Polar of cone{(1,1), (-1,1), (0,1)} is {(a, c) : c <= -|a|}.
  const auto N = normal_cone(slab_graph(), vec({0, 0}));
  std::mt19937_64 rng(6);
  for (int s = 0; s < 300; ++s) {
    const Vector z = random_vector(rng, 2, -2, 2);
    if (std::abs(z(1) + std::abs(z(0))) < 1e-6) continue;
    const bool want = z(1) <= -std::abs(z(0));
    EXPECT_EQ(N.halfspaces.contains(z), want);
    EXPECT_EQ(contains(N.cone, z, 1e-9), want);
  }
}

TEST(NormalCone, DiagonalIsOrthogonalComplement) {
  const auto N = normal_cone(diagonal_graph(), vec({0, 0}));
  EXPECT_TRUE(contains(N.cone, vec({2, -2})));
  EXPECT_TRUE(contains(N.cone, vec({-1, 1})));
  EXPECT_FALSE(contains(N.cone, vec({1, 1})));
  EXPECT_FALSE(contains(N.cone, vec({1, 0})));
}

TEST(NormalCone, PolarToTangent) {
  std::mt19937_64 rng(17);
  const std::vector<std::pair<std::vector<HPolyhedron>, Vector>> cases = {
      {abs_graph(), vec({0, 0})}, {slab_graph(), vec({0, 0})}, {slab_graph(), vec({0.5, 1.5})},
      {diagonal_graph(), vec({1, 1})}};
  for (const auto& [pieces, z] : cases) {
    const auto N = normal_cone(pieces, z);
    for (const auto& n : N.cone.rays)
      for (const auto& t : N.tangent.all()) EXPECT_LE(n.dot(t), 1e-12);
  }
  for (int t = 0; t < 20; ++t) {
    HPolyhedron P(3);
    for (int k = 0; k < 3; ++k) P.add_inequality(random_vector(rng, 3), 0.0);
    P.add_inequality(random_vector(rng, 3), 1.0);
    const auto N = normal_cone({P}, Vector::Zero(3));
    for (const auto& n : N.cone.rays)
      for (const auto& g : N.tangent.all()) EXPECT_LE(n.dot(g), 1e-12);
  }
}

TEST(Coderivative, Examples) {
  const auto a = coderivative(abs_graph(), 1, vec({0, 0}), vec({1}));
  EXPECT_TRUE(support(a, vec({1})).is_plus_infinity());
  EXPECT_TRUE(support(a, vec({-1})).is_plus_infinity());
  const auto b = coderivative(slab_graph(), 1, vec({0, 0}), vec({1}));
  EXPECT_NEAR(support(b, vec({1})).value(), 1.0, 1e-12);
  EXPECT_NEAR(support(b, vec({-1})).value(), 1.0, 1e-12);
  const auto c = coderivative(diagonal_graph(), 1, vec({0, 0}), vec({1}));
  EXPECT_NEAR(support(c, vec({1})).value(), 1.0, 1e-12);
  EXPECT_NEAR(support(c, vec({-1})).value(), -1.0, 1e-12);
}

TEST(Coderivative, CanBeEmpty) {
  // Lower boundary of the slab at (0, 0) with y* = -1: (x*, 1) must be normal.
  const auto e = coderivative(slab_graph(), 1, vec({0, 0}), vec({-1}));
  EXPECT_TRUE(e.is_empty());
}
