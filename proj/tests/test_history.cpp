#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fracstep/history.hpp"

using namespace fracstep;

namespace {

// Blocked and serial kernels sum in different orders; compare against the magnitude bound.
void compare_kernels(int dim, int steps, int block) {
  std::mt19937 rng(1234u + dim * 7 + block);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> w(steps + 1);
  for (auto& x : w) x = u(rng);
  HistorySum<double> blocked(w, dim, HistoryKernel::Blocked, block);
  HistorySum<double> serial(w, dim, HistoryKernel::Serial);
  std::vector<double> x(dim), hb(dim), hs(dim), ref(dim);
  for (int m = 0; m < steps; ++m) {
    for (auto& v : x) v = u(rng);
    blocked.push(x);
    serial.push(x);
    blocked.evaluate(hb);
    serial.evaluate(hs);
    blocked.evaluate_serial(ref);
    for (int k = 0; k < dim; ++k) {
      ASSERT_EQ(hs[k], ref[k]);
      ASSERT_NEAR(hb[k], hs[k], 1e-13 * (m + 1)) << "dim " << dim << " step " << m;
    }
  }
}

}  // namespace

TEST(HistorySum, BlockedMatchesSerial) {
  compare_kernels(1, 300, 64);
  compare_kernels(7, 200, 1);
  compare_kernels(7, 200, 5);
  compare_kernels(300, 150, 16);
  compare_kernels(600, 70, 64);
}

TEST(HistorySum, SmallExample) {
  HistorySum<double> h({0.0, 1.0, 10.0, 100.0}, 1, HistoryKernel::Blocked, 2);
  std::vector<double> out(1);
  h.push(std::vector<double>{1.0});
  h.evaluate(out);
  EXPECT_EQ(out[0], 1.0);
  h.push(std::vector<double>{2.0});
  h.evaluate(out);
  EXPECT_EQ(out[0], 10.0 + 2.0);
  h.push(std::vector<double>{3.0});
  h.evaluate(out);
  EXPECT_EQ(out[0], 100.0 + 20.0 + 3.0);
  h.push(std::vector<double>{4.0});
  EXPECT_THROW(h.evaluate(out), PreconditionError);
}

TEST(HistorySum, SizeMismatchThrows) {
  HistorySum<double> h({0.0, 1.0}, 3);
  EXPECT_THROW(h.push(std::vector<double>{1.0}), PreconditionError);
}
