#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gclab/noise.hpp"
#include "gclab/transport.hpp"

using namespace gclab;

namespace {

// Brute-force oracle: for equal-size uniform measures the optimum is attained
// at a permutation, so enumerate all of them.
double brute_force_w1(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i][perm[i]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

}  // namespace

TEST_CASE("wasserstein: coinciding measures, two-point couplings") {
  auto mu = EmpiricalMeasure<double>::uniform({0.3, 1.1, -2.0});
  auto same = mu;
  auto dist = [](double x, double y) { return std::abs(x - y); };
  CHECK(empirical_wasserstein(mu, same, dist) == 0.0);

  auto d0 = EmpiricalMeasure<double>::uniform({0.0});
  auto d1 = EmpiricalMeasure<double>::uniform({1.0});
  auto capped = [](double x, double y) { return std::min(std::abs(x - y), 1.0); };
  CHECK(empirical_wasserstein(d0, d1, capped) == 1.0);

  auto u02 = EmpiricalMeasure<double>::uniform({0.0, 2.0});
  auto u13 = EmpiricalMeasure<double>::uniform({1.0, 3.0});
  CHECK(empirical_wasserstein(u02, u13, dist) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("wasserstein: validation errors") {
  EmpiricalMeasure<double> bad;
  bad.points = {0.0, 1.0};
  bad.weights = {0.7, 0.7};
  auto ok = EmpiricalMeasure<double>::uniform({0.0});
  auto dist = [](double x, double y) { return std::abs(x - y); };
  CHECK_THROWS_AS(empirical_wasserstein(bad, ok, dist), std::invalid_argument);

  TransportOptions opt;
  opt.max_points = 4;
  auto big = EmpiricalMeasure<double>::uniform({0., 1., 2., 3., 4.});
  CHECK_THROWS_AS(empirical_wasserstein(big, big, dist, opt), std::invalid_argument);
}

TEST_CASE("wasserstein equals permutation brute force on random instances") {
  NoiseStream rng(2024, 0, 2, 1.0);
  std::vector<double> z(2);
  std::uint64_t draw = 0;
  auto next = [&]() {
    rng.fill_normals(draw++, z);
    return z[0];
  };

  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 2 + static_cast<std::size_t>(inst % 6);  // 2..7
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    const bool integer_instance = inst % 2 == 0;
    for (auto& row : cost)
      for (double& c : row) {
        const double u = std::abs(next());
        c = integer_instance ? std::floor(std::fmod(u * 7.0, 21.0)) : u;
      }
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto mu = EmpiricalMeasure<int>::uniform(idx);
    auto nu = mu;
    auto d = [&](int i, int j) { return cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; };

    const double solver = empirical_wasserstein(mu, nu, d);
    const double oracle = brute_force_w1(cost);
    if (integer_instance) {
      // integer costs: n*W is an integer on both routes
      CHECK(std::llround(solver * static_cast<double>(n)) ==
            std::llround(oracle * static_cast<double>(n)));
      CHECK(std::abs(solver - oracle) < 1e-12);
    } else {
      CHECK(std::abs(solver - oracle) < 1e-12 * std::max(1.0, oracle));
    }
  }
}

TEST_CASE("wasserstein: cost scaling and weighted measures") {
  auto mu = EmpiricalMeasure<double>{{0.0, 1.0, 5.0}, {0.5, 0.25, 0.25}};
  auto nu = EmpiricalMeasure<double>{{2.0, 3.0}, {0.5, 0.5}};
  auto dist = [](double x, double y) { return std::abs(x - y); };
  const double w = empirical_wasserstein(mu, nu, dist);
  auto dist3 = [](double x, double y) { return 3.0 * std::abs(x - y); };
  CHECK(empirical_wasserstein(mu, nu, dist3) == doctest::Approx(3.0 * w).epsilon(1e-13));

  // hand-checkable value: move 0.5 mass from 0 (split 0.25/0.25 to 2 and 3),
  // 0.25 from 1 to the cheaper remaining slot, 0.25 from 5 down.
  // Optimal plan: 0->2 (0.25), 0->3 (0.25), 1->2 (0.25), 5->3 (0.25)
  // cost = 0.25*(2 + 3 + 1 + 2) = 2.0
  CHECK(w == doctest::Approx(2.0).epsilon(1e-13));
}
