#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "morpho/bderiv.hpp"
#include "morpho/maxplus.hpp"
#include "morpho/oracle.hpp"

using namespace morpho;
using oracle::SeededSampler;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Vec negated(Vec v) {
  for (auto& x : v) x = -x;
  return v;
}

Mat mat_add_scaled(const Mat& A, double s, const Mat& B) {
  Mat out = A;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += s * B.data()[i];
  return out;
}

Vec vec_add_scaled(const Vec& a, double s, const Vec& b) {
  Vec out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b[i];
  return out;
}
}  // namespace

TEST_CASE("support sets: fixed values") {
  auto J = support_sets_wrt_params(Mat::from_rows({{0, 0}}), {1, 1}, 0.0);
  CHECK(J.sets[0] == std::vector<std::size_t>{0, 1});
  CHECK(J.multiplicity(0) == 2);

  J = support_sets_wrt_params(Mat::from_rows({{1, -1}, {0, 2}}), {0, 1}, 0.0);
  CHECK(J.sets[0] == std::vector<std::size_t>{0});
  CHECK(J.sets[1] == std::vector<std::size_t>{1});

  // a tolerance widens the set
  J = support_sets_wrt_params(Mat::from_rows({{0, 0}}), {1, 0.6}, 0.5);
  CHECK(J.sets[0] == std::vector<std::size_t>{0, 1});

  CHECK_THROWS_AS(support_sets_wrt_params(Mat(1, 2), {1, 2, 3}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(support_sets_wrt_params(Mat(1, 2), {1, 2}, -1.0), std::invalid_argument);
}

TEST_CASE("parameter derivative: fixed values and linear singleton case") {
  SupportSets J;
  J.source_dim = 2;
  J.sets = {{0, 1}};
  CHECK(bderiv_wrt_params(J, Mat::from_rows({{3, -1}})) == Vec{3});

  // all singletons: output i = H(i, j_i)
  SupportSets S;
  S.source_dim = 3;
  S.sets = {{2}, {0}};
  const Mat H = Mat::from_rows({{1, 2, 3}, {4, 5, 6}});
  CHECK(bderiv_wrt_params(S, H) == Vec{3, 4});

  SupportSets bad;
  bad.source_dim = 2;
  bad.sets = {{}};
  CHECK_THROWS_AS(bderiv_wrt_params(bad, Mat(1, 2)), std::invalid_argument);
  CHECK_THROWS_AS(bderiv_wrt_params(S, Mat(1, 2)), std::invalid_argument);
}

TEST_CASE("input derivative: fixed values, selection matrix, homogeneity") {
  SupportSets J;
  J.source_dim = 2;
  J.sets = {{0, 1}};
  CHECK(bderiv_wrt_input(J, {-1, 4}) == Vec{4});

  SupportSets S;
  S.source_dim = 3;
  S.sets = {{2}, {0}};
  CHECK(bderiv_wrt_input(S, {7, 8, 9}) == Vec{9, 7});  // E h with rows e_2, e_0

  // positive homogeneity at dyadic scales is exact
  SeededSampler sampler(21);
  for (int t = 0; t < 50; ++t) {
    SeededSampler child = sampler.child(t);
    const auto inst = oracle::lattice_dilation_instance(child, 3, 4, true);
    const SupportSets sets = support_sets_wrt_params(inst.W, inst.x, 0.0);
    const Vec h = child.lattice_vec(4, -4, 4, 1.0);
    const Vec base = bderiv_wrt_input(sets, h);
    for (double lambda : {0.0, 0.5, 2.0}) {
      Vec scaled(h.size());
      for (std::size_t i = 0; i < h.size(); ++i) scaled[i] = lambda * h[i];
      Vec want(base.size());
      for (std::size_t i = 0; i < base.size(); ++i) want[i] = lambda * base[i];
      CHECK(bderiv_wrt_input(sets, scaled) == want);
    }
  }
}

TEST_CASE("affine range w.r.t. parameters: worked example") {
  const Mat W = Mat::from_rows({{0, 0}});
  const Vec x = {2, 0};
  const Mat H = Mat::from_rows({{0, 1}});
  const SupportSets J = support_sets_wrt_params(W, x, 0.0);
  CHECK(J.sets[0] == std::vector<std::size_t>{0});
  const AffineRange r = affine_range_wrt_params(W, x, H, J);
  CHECK(r.epsilon == 2.0);  // (2 - 0) / (1 - 0)
  CHECK(r.per_row[0] == 2.0);
  CHECK(r.eta[0] == 2.0);
}

TEST_CASE("affine range: no competitor means an infinite range") {
  const Mat W = Mat::from_rows({{0, 0}});
  const Vec x = {2, 0};
  // slopes never exceed the support slope
  const Mat H = Mat::from_rows({{1, 1}});
  const SupportSets J = support_sets_wrt_params(W, x, 0.0);
  const AffineRange r = affine_range_wrt_params(W, x, H, J);
  CHECK(r.epsilon == kInf);
  // equality holds on the whole grid when no branch can overtake
  const Vec base = dilation_forward(W, x);
  const Vec slope = bderiv_wrt_params(J, H);
  CHECK(oracle::eta_grid_scan(
      [&](double eta) { return dilation_forward(mat_add_scaled(W, eta, H), x); }, base, slope,
      r.epsilon, oracle::linear_grid(2.0)));
}

TEST_CASE("affine range w.r.t. input: worked example and all-ones shift") {
  const Mat W = Mat::from_rows({{0, 0}});
  const Vec x = {2, 0};
  const SupportSets J = support_sets_wrt_params(W, x, 0.0);
  CHECK(affine_range_wrt_input(W, x, {0, 1}, J).epsilon == 2.0);

  // a uniform shift never changes the winner
  const AffineRange shift = affine_range_wrt_input(W, x, {1, 1}, J);
  CHECK(shift.epsilon == kInf);
  CHECK(bderiv_wrt_input(J, {1, 1}) == Vec{1});
}

TEST_CASE("affine range iff, input direction: 1000 planted instances") {
  SeededSampler sampler(22);
  for (int t = 0; t < 1000; ++t) {
    SeededSampler child = sampler.child(t);
    const std::size_t m = 1 + child.index(6), n = 2 + child.index(5);
    const auto inst = oracle::planted_dilation_input(child, m, n);
    const SupportSets J = support_sets_wrt_params(inst.W, inst.x, 0.0);
    const AffineRange r = affine_range_wrt_input(inst.W, inst.x, inst.h, J);
    REQUIRE(r.epsilon == inst.epsilon);
    const Vec base = dilation_forward(inst.W, inst.x);
    const Vec slope = bderiv_wrt_input(J, inst.h);
    for (double eta : {0.0, inst.epsilon / 2, inst.epsilon})
      CHECK(dilation_forward(inst.W, vec_add_scaled(inst.x, eta, inst.h)) ==
            vec_add_scaled(base, eta, slope));
    const double past = inst.epsilon * (1.0 + 1e-6);
    const Vec lhs = dilation_forward(inst.W, vec_add_scaled(inst.x, past, inst.h));
    const Vec rhs = vec_add_scaled(base, past, slope);
    CHECK(lhs[inst.binding_row] > rhs[inst.binding_row]);
  }
}

TEST_CASE("erosion: fixed example and support sets") {
  const Mat W(2, 1, 0.0);
  const Vec y = {1, 2};
  CHECK(erosion_forward(W, y) == Vec{1});
  const SupportSets J = erosion_support_sets(W, y, 0.0);
  CHECK(J.sets[0] == std::vector<std::size_t>{0});
}

TEST_CASE("erosion derivatives agree with the negation duality oracle") {
  // ero_W(y) = -dil_{W^T}(-y); every erosion derivative must match the
  // negate -> dilation derivative -> negate route bitwise.
  SeededSampler sampler(23);
  for (int t = 0; t < 400; ++t) {
    SeededSampler child = sampler.child(t);
    const std::size_t m = 1 + child.index(5), n = 1 + child.index(5);
    const Mat W = child.lattice_mat(m, n, -8, 8, 0.0625);
    const Vec y = child.lattice_vec(m, -8, 8, 0.0625);
    CHECK(erosion_forward(W, y) == negated(dilation_forward(W.transposed(), negated(y))));

    const SupportSets Je = erosion_support_sets(W, y, 0.0);
    const SupportSets Jd = support_sets_wrt_params(W.transposed(), negated(y), 0.0);
    REQUIRE(Je.sets == Jd.sets);

    const Vec h = child.lattice_vec(m, -4, 4, 1.0);
    CHECK(erosion_bderiv_wrt_input(Je, h) == negated(bderiv_wrt_input(Jd, negated(h))));

    const Mat H = child.lattice_mat(m, n, -4, 4, 1.0);
    CHECK(erosion_bderiv_wrt_params(Je, H) == negated(bderiv_wrt_params(Jd, H.transposed())));

    const AffineRange re = erosion_affine_range_wrt_params(W, y, H, Je);
    const AffineRange rd = affine_range_wrt_params(W.transposed(), negated(y), H.transposed(), Jd);
    CHECK(re.epsilon == rd.epsilon);
    CHECK(re.per_row == rd.per_row);
    CHECK(re.eta == rd.eta);
  }
}

TEST_CASE("erosion affine range iff on planted instances") {
  SeededSampler sampler(24);
  for (int t = 0; t < 500; ++t) {
    SeededSampler child = sampler.child(t);
    const std::size_t m = 2 + child.index(5), n = 1 + child.index(6);
    const auto inst = oracle::planted_erosion_param(child, m, n);
    const SupportSets J = erosion_support_sets(inst.W, inst.x, 0.0);
    const AffineRange r = erosion_affine_range_wrt_params(inst.W, inst.x, inst.H, J);
    REQUIRE(r.epsilon == inst.epsilon);
    const Vec base = erosion_forward(inst.W, inst.x);
    const Vec slope = erosion_bderiv_wrt_params(J, inst.H);
    for (double eta : {0.0, inst.epsilon / 2, inst.epsilon})
      CHECK(erosion_forward(mat_add_scaled(inst.W, eta, inst.H), inst.x) ==
            vec_add_scaled(base, eta, slope));
    const double past = inst.epsilon * (1.0 + 1e-6);
    CHECK(erosion_forward(mat_add_scaled(inst.W, past, inst.H), inst.x) !=
          vec_add_scaled(base, past, slope));
  }
}

TEST_CASE("conv affine range iff on planted instances") {
  SeededSampler sampler(25);
  for (int t = 0; t < 500; ++t) {
    SeededSampler child = sampler.child(t);
    const std::size_t n = 1 + child.index(6), p = 2 + child.index(5);
    const auto inst = oracle::planted_conv_taps(child, n, p);
    const SupportSets J = conv_support_sets(inst.taps, inst.blocks, 0.0);
    const AffineRange r = conv_affine_range_wrt_taps(inst.taps, inst.blocks, inst.h, J);
    REQUIRE(r.epsilon == inst.epsilon);
    const Vec base = conv_dilation_forward(inst.taps, inst.blocks);
    const Vec slope = conv_bderiv_wrt_taps(J, inst.h);
    for (double eta : {0.0, inst.epsilon / 2, inst.epsilon})
      CHECK(conv_dilation_forward(vec_add_scaled(inst.taps, eta, inst.h), inst.blocks) ==
            vec_add_scaled(base, eta, slope));
    const double past = inst.epsilon * (1.0 + 1e-6);
    CHECK(conv_dilation_forward(vec_add_scaled(inst.taps, past, inst.h), inst.blocks) !=
          vec_add_scaled(base, past, slope));
  }
}

TEST_CASE("composition chain rule equals the derivative of the fused layer") {
  SeededSampler sampler(26);
  for (int t = 0; t < 300; ++t) {
    SeededSampler child = sampler.child(t);
    const std::size_t m = 1 + child.index(4), p = 1 + child.index(4), n = 1 + child.index(4);
    const Mat A = child.lattice_mat(m, p, -8, 8, 0.0625);
    const Mat B = child.lattice_mat(p, n, -8, 8, 0.0625);
    const Vec x = child.lattice_vec(n, -8, 8, 0.0625);
    const Vec h = child.lattice_vec(n, -4, 4, 1.0);
    const SupportSets JB = support_sets_wrt_params(B, x, 0.0);
    const Vec inner = bderiv_wrt_input(JB, h);
    const Vec mid = dilation_forward(B, x);
    const SupportSets JA = support_sets_wrt_params(A, mid, 0.0);
    const Vec composed = bderiv_wrt_input(JA, inner);
    const Mat C = maxplus_matmul(A, B);
    const SupportSets JC = support_sets_wrt_params(C, x, 0.0);
    CHECK(composed == bderiv_wrt_input(JC, h));
  }
}

TEST_CASE("derivative map is linear in the function") {
  // (a f + b g)'(x; h) = a f'(x; h) + b g'(x; h) for two dilations
  SeededSampler sampler(27);
  for (int t = 0; t < 100; ++t) {
    SeededSampler child = sampler.child(t);
    const std::size_t m = 1 + child.index(4), n = 1 + child.index(4);
    const Mat A = child.lattice_mat(m, n, -8, 8, 0.0625);
    const Mat B = child.lattice_mat(m, n, -8, 8, 0.0625);
    const Vec x = child.lattice_vec(n, -8, 8, 0.0625);
    const Vec h = child.lattice_vec(n, -4, 4, 1.0);
    const double a = child.lattice(-2, 2, 0.25), b = child.lattice(-2, 2, 0.25);

    const SupportSets JA = support_sets_wrt_params(A, x, 0.0);
    const SupportSets JB = support_sets_wrt_params(B, x, 0.0);
    Vec claimed(m);
    const Vec dA = bderiv_wrt_input(JA, h), dB = bderiv_wrt_input(JB, h);
    for (std::size_t i = 0; i < m; ++i) claimed[i] = a * dA[i] + b * dB[i];

    // exact quotient at a dyadic step inside both affine ranges
    const double ea = affine_range_wrt_input(A, x, h, JA).epsilon;
    const double eb = affine_range_wrt_input(B, x, h, JB).epsilon;
    double alpha = 1.0;
    while (alpha > std::min(ea, eb)) alpha /= 2;
    const auto f = [&](const Vec& xx) {
      const Vec fa = dilation_forward(A, xx), fb = dilation_forward(B, xx);
      Vec out(m);
      for (std::size_t i = 0; i < m; ++i) out[i] = a * fa[i] + b * fb[i];
      return out;
    };
    const auto fd = oracle::directional_derivative_fd(f, x, h, {alpha});
    CHECK(fd.quotients.front() == claimed);
  }
}

TEST_CASE("row i of the derivative depends only on row-i data") {
  SeededSampler sampler(28);
  for (int t = 0; t < 100; ++t) {
    SeededSampler child = sampler.child(t);
    const auto inst = oracle::lattice_dilation_instance(child, 3, 4, true);
    const SupportSets J = support_sets_wrt_params(inst.W, inst.x, 0.0);
    Mat H = child.lattice_mat(3, 4, -4, 4, 1.0);
    const Vec before = bderiv_wrt_params(J, H);
    // perturb the other rows only
    for (std::size_t j = 0; j < 4; ++j) {
      H(1, j) += 3.0;
      H(2, j) -= 2.0;
    }
    const Vec after = bderiv_wrt_params(J, H);
    CHECK(after[0] == before[0]);
  }
}

TEST_CASE("generic (tie-free) parameter derivative is additive") {
  SeededSampler sampler(29);
  int done = 0;
  for (int t = 0; done < 100; ++t) {
    SeededSampler child = sampler.child(t);
    const auto inst = oracle::lattice_dilation_instance(child, 4, 4, false);
    const SupportSets J = support_sets_wrt_params(inst.W, inst.x, 0.0);
    if (!J.all_singleton()) continue;
    ++done;
    const Mat H1 = child.lattice_mat(4, 4, -4, 4, 1.0);
    const Mat H2 = child.lattice_mat(4, 4, -4, 4, 1.0);
    const Vec d1 = bderiv_wrt_params(J, H1), d2 = bderiv_wrt_params(J, H2);
    Vec sum(4);
    for (std::size_t i = 0; i < 4; ++i) sum[i] = d1[i] + d2[i];
    CHECK(bderiv_wrt_params(J, mat_add_scaled(H1, 1.0, H2)) == sum);
  }
}

TEST_CASE("first-order check: exact for piecewise affine layers, relu, linear") {
  SeededSampler sampler(30);
  SeededSampler child = sampler.child(0);
  const auto inst = oracle::planted_dilation_input(child, 3, 4);
  const SupportSets J = support_sets_wrt_params(inst.W, inst.x, 0.0);
  const Vec claimed = bderiv_wrt_input(J, inst.h);
  const double r = first_order_check(
      [&](const Vec& x) { return dilation_forward(inst.W, x); }, inst.x, inst.h, claimed,
      {inst.epsilon, inst.epsilon / 2, inst.epsilon / 4});
  CHECK(r == 0.0);

  // relu at the kink, moving into the active side
  const double r2 = first_order_check([](const Vec& x) { return relu_forward(x); }, {0.0},
                                      {1.0}, {1.0}, {1.0, 0.5, 0.25});
  CHECK(r2 == 0.0);

  const Mat W = Mat::from_rows({{2, -1}, {1, 3}});
  const Vec point = {0.5, -0.25}, dir = {1, 2};
  const Vec lin_deriv = {2.0 * 1 - 1 * 2, 1.0 * 1 + 3 * 2};
  const double r3 =
      first_order_check([&](const Vec& x) { return linear_forward(W, {0, 0}, x); }, point, dir,
                        lin_deriv, {1.0, 0.5});
  CHECK(r3 == 0.0);

  CHECK_THROWS_AS(first_order_check([](const Vec& x) { return x; }, {0}, {1}, {1}, {0.5, 1.0}),
                  std::invalid_argument);
}
