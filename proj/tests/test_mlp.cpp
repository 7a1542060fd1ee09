#include <gtest/gtest.h>

#include <cmath>

#include "hierlab/error.hpp"
#include "hierlab/mlp.hpp"

using namespace hierlab;

namespace {

// Scalar head: loss = sum_i sum_o c_o * y_io, so dLoss/dy = c broadcast over rows.
double head_loss(const Mlp& net, const Matrix& x, const std::vector<double>& c) {
  MlpWorkspace ws;
  const Matrix& y = net.forward(x, ws);
  double s = 0.0;
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t o = 0; o < y.cols; ++o) s += c[o] * y(i, o);
  return s;
}

std::vector<double> head_grad(const Mlp& net, const Matrix& x, const std::vector<double>& c, Matrix* dx = nullptr) {
  MlpWorkspace ws;
  const Matrix& y = net.forward(x, ws);
  Matrix g(y.rows, y.cols);
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t o = 0; o < y.cols; ++o) g(i, o) = c[o];
  std::vector<double> grad(net.num_params(), 0.0);
  net.backward(ws, g, grad, dx);
  return grad;
}

Matrix random_input(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix x(rows, cols);
  for (double& v : x.data) v = 2.0 * uniform01(rng) - 1.0;
  return x;
}

}  // namespace

TEST(Mlp, ZeroParametersGiveZeroOutput) {
  Mlp net({3, 8, 2});
  const auto y = net.forward(std::vector<double>{0.5, -1.0, 2.0});
  EXPECT_EQ(y, (std::vector<double>{0.0, 0.0}));
}

TEST(Mlp, SingleLayerIsAffine) {
  Mlp net({2, 2});
  auto p = net.params();
  // W = [[1, 2], [3, 4]], b = [0.5, -0.5]
  const double values[] = {1, 2, 3, 4, 0.5, -0.5};
  std::copy(std::begin(values), std::end(values), p.begin());
  EXPECT_EQ(net.forward(std::vector<double>{1.0, -2.0}), (std::vector<double>{-2.5, -5.5}));
}

TEST(Mlp, HiddenLayerUsesTanh) {
  Mlp net({1, 1, 1});
  auto p = net.params();
  // w1 = 2, b1 = 0.1, w2 = 3, b2 = -1
  p[0] = 2;
  p[1] = 0.1;
  p[2] = 3;
  p[3] = -1;
  EXPECT_NEAR(net.forward(std::vector<double>{0.7})[0], 3 * std::tanh(1.5) - 1, 1e-15);
}

TEST(Mlp, ForwardIsDeterministicAndBatchConsistent) {
  Rng rng(1);
  const Mlp net = Mlp::make({4, 16, 16, 3}, rng);
  const Matrix x = random_input(rng, 5, 4);
  MlpWorkspace ws;
  const Matrix batched = net.forward(x, ws);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto a = net.forward(x.row(i));
    const auto b = net.forward(x.row(i));
    EXPECT_EQ(a, b);
    for (std::size_t o = 0; o < 3; ++o) EXPECT_NEAR(a[o], batched(i, o), 1e-14);
  }
  EXPECT_THROW(net.forward(std::vector<double>{1.0}), InputError);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  Rng rng(2);
  Mlp net = Mlp::make({5, 12, 7, 3}, rng);
  const Matrix x = random_input(rng, 6, 5);
  const std::vector<double> c{0.7, -1.3, 0.4};
  Matrix dx;
  const auto grad = head_grad(net, x, c, &dx);
  const double h = 1e-5;
  for (std::size_t i = 0; i < net.num_params(); ++i) {
    const double orig = net.params()[i];
    net.params()[i] = orig + h;
    const double up = head_loss(net, x, c);
    net.params()[i] = orig - h;
    const double down = head_loss(net, x, c);
    net.params()[i] = orig;
    const double fd = (up - down) / (2 * h);
    const double rel = std::abs(fd - grad[i]) / std::max(1e-6, std::abs(fd) + std::abs(grad[i]));
    ASSERT_LT(rel, 1e-4) << "param " << i << " fd=" << fd << " analytic=" << grad[i];
  }
  // Input gradient too.
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t col = 0; col < x.cols; ++col) {
      Matrix xp = x, xm = x;
      xp(r, col) += h;
      xm(r, col) -= h;
      const double fd = (head_loss(net, xp, c) - head_loss(net, xm, c)) / (2 * h);
      ASSERT_NEAR(dx(r, col), fd, 1e-4 * std::max(1.0, std::abs(fd)));
    }
}

// 100 random parameter points; worst relative error over every coordinate.
TEST(Mlp, GradientAtRandomParameterPoints) {
  Rng rng(11);
  Mlp net = Mlp::make({4, 10, 6, 2}, rng);
  const Mlp base = net;
  const std::vector<double> c{1.1, -0.6};
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    for (std::size_t i = 0; i < net.num_params(); ++i)
      net.params()[i] = base.params()[i] + 0.5 * standard_normal(rng);
    const Matrix x = random_input(rng, 3, 4);
    const auto grad = head_grad(net, x, c);
    for (std::size_t i = 0; i < net.num_params(); ++i) {
      const double orig = net.params()[i];
      net.params()[i] = orig + h;
      const double up = head_loss(net, x, c);
      net.params()[i] = orig - h;
      const double down = head_loss(net, x, c);
      net.params()[i] = orig;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1e-6, std::abs(fd) + std::abs(grad[i])));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Mlp, ZeroUpstreamGradientGivesZero) {
  Rng rng(3);
  const Mlp net = Mlp::make({3, 6, 2}, rng);
  const auto g = head_grad(net, random_input(rng, 4, 3), {0.0, 0.0});
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Mlp, GradientIsLinearInTheLoss) {
  Rng rng(4);
  const Mlp net = Mlp::make({3, 6, 2}, rng);
  const Matrix x = random_input(rng, 4, 3);
  const auto g1 = head_grad(net, x, {1.0, 0.0});
  const auto g2 = head_grad(net, x, {0.0, 1.0});
  const auto g12 = head_grad(net, x, {1.0, 1.0});
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g12[i], g1[i] + g2[i], 1e-12);
}

TEST(Mlp, BackwardNeedsForward) {
  Mlp net({2, 2});
  MlpWorkspace ws;
  std::vector<double> g(net.num_params());
  EXPECT_THROW(net.backward(ws, Matrix(1, 2), g, nullptr), UsageError);
}

TEST(Polyak, Examples) {
  std::vector<double> t{0, 0}, o{2, 4};
  polyak(t, o, 0.5);
  EXPECT_EQ(t, (std::vector<double>{1, 2}));
  polyak(t, o, 0.0);
  EXPECT_EQ(t, (std::vector<double>{1, 2}));
  polyak(t, o, 1.0);
  EXPECT_EQ(t, o);
  std::vector<double> short_t{0};
  EXPECT_THROW(polyak(short_t, o, 0.5), InputError);
}

TEST(Adam, FirstStepMovesBySignTimesLr) {
  Adam opt(3, {0.01, 0.9, 0.999, 1e-12});
  std::vector<double> p{1, 1, 1};
  const std::vector<double> g{2.0, -0.5, 0.0};
  opt.step(p, g);
  EXPECT_NEAR(p[0], 0.99, 1e-9);
  EXPECT_NEAR(p[1], 1.01, 1e-9);
  EXPECT_EQ(p[2], 1.0);
  EXPECT_EQ(opt.steps(), 1);
}
