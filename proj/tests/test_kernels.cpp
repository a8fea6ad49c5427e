#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_support.hpp"

#include <omp.h>

#include "xtsc/kernels.hpp"

using namespace xtsc;
using namespace xtsc::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed, 5);
  std::vector<double> v(n);
  for (double& e : v) e = rng.uniform(-1.0, 1.0);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12).scale(1.0));
}

struct ConvCase {
  ConvShape shape;
  std::vector<double> x, w, b, dy;
};

ConvCase make_case(ConvShape s, std::uint64_t seed) {
  return {s, random_vec(s.in_channels * s.steps, seed), random_vec(s.out_channels * s.in_channels * s.width, seed + 1),
          random_vec(s.out_channels, seed + 2), random_vec(s.out_channels * s.steps, seed + 3)};
}

const std::vector<ConvShape> kShapes = {
    {1, 1, 1, 1}, {1, 3, 7, 5}, {2, 4, 3, 50}, {50, 32, 7, 50}, {32, 32, 7, 200}, {3, 2, 9, 4}};

}  // namespace

TEST_CASE("conv forward matches a hand-computed case") {
  // One channel, width 3, pad 1: y_t = w0 x_{t-1} + w1 x_t + w2 x_{t+1} + b.
  const ConvShape s{1, 1, 3, 4};
  const std::vector<double> x{1, 2, 3, 4}, w{0.5, -1, 2}, b{0.25};
  std::vector<double> y(4), y_ref(4);
  conv1d_forward(s, x, w, b, y);
  conv1d_forward_reference(s, x, w, b, y_ref);
  const std::vector<double> expected{-1 + 4 + 0.25, 0.5 - 2 + 6 + 0.25, 1 - 3 + 8 + 0.25, 1.5 - 4 + 0.25};
  check_close(y, expected);
  check_close(y_ref, expected);
}

TEST_CASE("parallel conv forward and backward agree with the reference") {
  std::uint64_t seed = 1;
  for (const ConvShape& s : kShapes) {
    CAPTURE(s.in_channels);
    CAPTURE(s.steps);
    const ConvCase c = make_case(s, seed += 10);
    std::vector<double> y(s.out_channels * s.steps), y_ref(y.size());
    conv1d_forward(s, c.x, c.w, c.b, y);
    conv1d_forward_reference(s, c.x, c.w, c.b, y_ref);
    check_close(y, y_ref);

    // Backward accumulates, so start from a nonzero buffer.
    std::vector<double> dx(c.x.size(), 0.5), dw(c.w.size(), -0.25), db(c.b.size(), 1.0);
    std::vector<double> dx_ref = dx, dw_ref = dw, db_ref = db;
    conv1d_backward(s, c.x, c.w, c.dy, dx, dw, db);
    conv1d_backward_reference(s, c.x, c.w, c.dy, dx_ref, dw_ref, db_ref);
    check_close(dx, dx_ref);
    check_close(dw, dw_ref);
    check_close(db, db_ref);
  }
}

TEST_CASE("conv backward equals the adjoint of forward") {
  // <dy, conv(x)> is linear in x, w and b; its gradients are dx, dw, db.
  const ConvShape s{3, 4, 5, 9};
  const ConvCase c = make_case(s, 77);
  std::vector<double> dx(c.x.size()), dw(c.w.size()), db(c.b.size());
  conv1d_backward_reference(s, c.x, c.w, c.dy, dx, dw, db);
  auto objective = [&](const std::vector<double>& x, const std::vector<double>& w, const std::vector<double>& b) {
    std::vector<double> y(s.out_channels * s.steps);
    conv1d_forward_reference(s, x, w, b, y);
    double acc = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) acc += y[k] * c.dy[k];
    return acc;
  };
  const double base = objective(c.x, c.w, c.b);
  for (std::size_t k = 0; k < c.x.size(); ++k) {
    auto x = c.x;
    x[k] += 1.0;
    CHECK(objective(x, c.w, c.b) - base == doctest::Approx(dx[k]).epsilon(1e-10));
  }
  for (std::size_t k = 0; k < c.w.size(); ++k) {
    auto w = c.w;
    w[k] += 1.0;
    CHECK(objective(c.x, w, c.b) - base == doctest::Approx(dw[k]).epsilon(1e-10));
  }
  for (std::size_t k = 0; k < c.b.size(); ++k) {
    auto b = c.b;
    b[k] += 1.0;
    CHECK(objective(c.x, c.w, b) - base == doctest::Approx(db[k]).epsilon(1e-10));
  }
}

TEST_CASE("empty gradient spans are skipped") {
  const ConvShape s{2, 3, 3, 6};
  const ConvCase c = make_case(s, 5);
  std::vector<double> dw(c.w.size()), dw_ref(c.w.size());
  conv1d_backward(s, c.x, c.w, c.dy, {}, dw, {});
  conv1d_backward_reference(s, c.x, c.w, c.dy, {}, dw_ref, {});
  check_close(dw, dw_ref);
}

TEST_CASE("matvec agrees with the reference") {
  for (auto [rows, cols] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {2, 50}, {40, 10}, {300, 257}}) {
    const auto w = random_vec(rows * cols, rows), x = random_vec(cols, cols);
    std::vector<double> y(rows), y_ref(rows), y_naive(rows, 0.0);
    matvec(rows, cols, w, x, y);
    matvec_reference(rows, cols, w, x, y_ref);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < cols; ++k) y_naive[r] += w[r * cols + k] * x[k];
    check_close(y, y_ref);
    check_close(y, y_naive);
  }
}

TEST_CASE("parallel kernels are bit-identical across thread counts") {
  const ConvShape s{32, 32, 7, 120};
  const ConvCase c = make_case(s, 9);
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    std::vector<double> y(s.out_channels * s.steps), dx(c.x.size()), dw(c.w.size()), db(c.b.size());
    conv1d_forward(s, c.x, c.w, c.b, y);
    conv1d_backward(s, c.x, c.w, c.dy, dx, dw, db);
    y.insert(y.end(), dx.begin(), dx.end());
    y.insert(y.end(), dw.begin(), dw.end());
    y.insert(y.end(), db.begin(), db.end());
    return y;
  };
  const auto one = run(1);
  CHECK(run(4) == one);
  CHECK(run(7) == one);
}
