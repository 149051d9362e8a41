#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mrrxbar/signed_mvm.hpp"

using namespace mrrxbar;
using Catch::Matchers::WithinAbs;

namespace {

Mat random_mat(int n, int seed, double lo, double hi) {
  std::mt19937 rng(static_cast<unsigned>(seed));
  std::uniform_real_distribution<double> uni(lo, hi);
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = uni(rng);
  return m;
}

Vec random_vec(int n, int seed, double lo, double hi) {
  std::mt19937 rng(static_cast<unsigned>(seed));
  std::uniform_real_distribution<double> uni(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = uni(rng);
  return v;
}

}  // namespace

TEST_CASE("signed products are exact on the digital backend") {
  const int n = 5;
  IdealBackend be(n);
  const Mat w = random_mat(n, 41, -1.0, 1.0);

  SECTION("nonnegative inputs: one optical pass plus one offset pass") {
    const Vec x = random_vec(n, 42, 0.0, 1.0);
    const Vec y = mvm_signed_weights(be, w, x);
    CHECK_THAT((y - w * x).cwiseAbs().maxCoeff(), WithinAbs(0.0, 1e-12));
    CHECK(be.passes_forward() == 1);
    CHECK(be.passes_offset() == 1);
    CHECK(be.total_passes() == 2);
    CHECK(be.programmings() == 1);
  }

  SECTION("signed inputs: four passes") {
    const Vec x = random_vec(n, 43, -1.0, 1.0);
    const Vec y = mvm_signed_full(be, w, x);
    CHECK_THAT((y - w * x).cwiseAbs().maxCoeff(), WithinAbs(0.0, 1e-12));
    CHECK(be.passes_forward() == 2);
    CHECK(be.passes_offset() == 2);
    CHECK(be.total_passes() == 4);
  }

  SECTION("signed transpose products: up to four passes") {
    const Vec d = random_vec(n, 44, -1.0, 1.0);
    const Vec y = mvm_signed_backward(be, w, d);
    CHECK_THAT((y - w.transpose() * d).cwiseAbs().maxCoeff(),
               WithinAbs(0.0, 1e-12));
    CHECK(be.passes_backward() == 2);
    CHECK(be.passes_offset() == 2);
    CHECK(be.total_passes() == 4);

    be.reset_counters();
    Vec d_pos = d.cwiseAbs();  // single-signed deltas need half the passes
    const Vec y2 = mvm_signed_backward(be, w, d_pos, "pos");
    CHECK_THAT((y2 - w.transpose() * d_pos).cwiseAbs().maxCoeff(),
               WithinAbs(0.0, 1e-12));
    CHECK(be.passes_backward() == 1);
    CHECK(be.passes_offset() == 1);
  }
}

TEST_CASE("programming tags skip redundant reprogramming") {
  IdealBackend be(3);
  const Mat w = random_mat(3, 45, 0.0, 1.0);
  be.program(w, "epoch-1");
  be.program(w, "epoch-1");
  CHECK(be.programmings() == 1);
  CHECK(be.programmed_tag() == "epoch-1");
  be.program(w, "epoch-2");
  CHECK(be.programmings() == 2);
  be.program(w);  // empty tag: always reprogram
  be.program(w);
  CHECK(be.programmings() == 4);
}

TEST_CASE("signed wrappers validate operand ranges and shapes") {
  IdealBackend be(3);
  Mat w = random_mat(3, 46, -1.0, 1.0);
  const Vec x = random_vec(3, 47, 0.0, 1.0);
  Mat big = w;
  big(0, 0) = 1.5;
  CHECK_THROWS_AS(mvm_signed_weights(be, big, x), OutOfRange);
  Vec loud = x;
  loud(1) = 2.0;
  CHECK_THROWS_AS(mvm_signed_full(be, w, loud), OutOfRange);
  CHECK_THROWS_AS(mvm_signed_full(be, w, Vec::Zero(4)), DimensionMismatch);
  CHECK_THROWS_AS(be.program(Mat::Zero(2, 2)), DimensionMismatch);
  CHECK_THROWS_AS(be.forward(Vec::Zero(5)), DimensionMismatch);
  CHECK_THROWS_AS(be.program(Mat::Constant(3, 3, 1.2)), OutOfRange);
}

TEST_CASE("crossbar backend reproduces matrix-vector products") {
  CrossbarBackend be(default_config(4));
  const Mat w = random_mat(4, 48, 0.05, 0.95);
  const Vec x = random_vec(4, 49, 0.0, 1.0);
  be.program(w, "check");
  const Vec y = be.forward(x);
  CHECK((y - w * x).cwiseAbs().maxCoeff() < 0.05);
  CHECK(be.last_report().converged);

  // consecutive identical tags reuse the calibrated phases
  const long progs = be.programmings();
  be.program(w, "check");
  CHECK(be.programmings() == progs);
}

TEST_CASE("corrected backward pass is the adjoint of the effective forward map") {
  CrossbarBackend be(default_config(4));
  be.program(random_mat(4, 50, 0.1, 0.9), "adjoint");
  Mat fwd(4, 4), bwd(4, 4);
  for (int k = 0; k < 4; ++k) {
    Vec e = Vec::Zero(4);
    e(k) = 1.0;
    fwd.col(k) = be.forward(e);
    bwd.col(k) = be.backward(e);
  }
  CHECK((bwd - fwd.transpose()).cwiseAbs().maxCoeff() < 1e-6);

  const Vec d = random_vec(4, 51, -1.0, 1.0);
  const Vec back = mvm_signed_backward(be, random_mat(4, 52, -0.9, 0.9), d, "t");
  CHECK(back.allFinite());
}

TEST_CASE("crossbar backend handles signed operands within tolerance") {
  CrossbarBackend be(default_config(4));
  const Mat w = random_mat(4, 53, -0.9, 0.9);
  const Vec x = random_vec(4, 54, 0.0, 1.0);
  const Vec y = mvm_signed_weights(be, w, x, "s1");
  CHECK((y - w * x).cwiseAbs().maxCoeff() < 0.1);

  const Vec xs = random_vec(4, 55, -1.0, 1.0);
  const Vec yf = mvm_signed_full(be, w, xs, "s1");
  CHECK((yf - w * xs).cwiseAbs().maxCoeff() < 0.2);

  const Vec d = random_vec(4, 56, -1.0, 1.0);
  const Vec yb = mvm_signed_backward(be, w, d, "s1");
  CHECK((yb - w.transpose() * d).cwiseAbs().maxCoeff() < 0.1);
}
