#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "gclab/util.hpp"

namespace gclab {

/// Weighted sample cloud; weights are a probability vector.
template <class Point>
struct EmpiricalMeasure {
  std::vector<Point> points;
  std::vector<double> weights;

  void validate() const {
    if (points.empty()) throw std::invalid_argument("empirical measure: no points");
    if (points.size() != weights.size())
      throw std::invalid_argument("empirical measure: weight count mismatch");
    KahanSum s;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("empirical measure: negative weight");
      s.add(w);
    }
    if (std::abs(s.value() - 1.0) > 1e-12)
      throw std::invalid_argument("empirical measure: weights must sum to 1");
  }

  static EmpiricalMeasure uniform(std::vector<Point> pts) {
    EmpiricalMeasure m;
    const double w = 1.0 / static_cast<double>(pts.size());
    m.weights.assign(pts.size(), w);
    m.points = std::move(pts);
    return m;
  }
};

struct TransportOptions {
  std::size_t max_points = 512;
};

namespace detail {

/// Exact transportation problem on a dense bipartite graph, solved by
/// successive shortest augmenting paths with node potentials. Sources are
/// nodes [0,n), sinks [n,n+m).
inline double solve_transport(const std::vector<double>& cost, std::size_t n, std::size_t m,
                              std::vector<double> supply, std::vector<double> demand) {
  const double eps = 1e-15;
  const std::size_t V = n + m;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> flow(n * m, 0.0);
  std::vector<double> pot(V, 0.0);
  std::vector<double> dist(V);
  std::vector<int> parent(V);
  std::vector<char> done(V);

  std::size_t guard = 0;
  const std::size_t guard_max = 16 * V * V + 1024;
  for (;;) {
    double remaining = 0.0;
    for (double s : supply) remaining += s;
    if (remaining <= eps) break;
    if (++guard > guard_max) throw std::runtime_error("transport: augmentation guard tripped");
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i)
      if (supply[i] > eps) dist[i] = 0.0;

    // Dense Dijkstra over reduced costs, run to completion so every reached
    // node is finalized before the potential update. Flow-carrying arcs are
    // traversable backwards at reduced cost 0 by complementary slackness.
    for (;;) {
      std::size_t u = V;
      double best = inf;
      for (std::size_t v = 0; v < V; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u == V) break;
      done[u] = 1;
      if (u < n) {
        for (std::size_t j = 0; j < m; ++j) {
          const double rc = std::max(0.0, cost[u * m + j] + pot[u] - pot[n + j]);
          if (dist[u] + rc < dist[n + j]) {
            dist[n + j] = dist[u] + rc;
            parent[n + j] = static_cast<int>(u);
          }
        }
      } else {
        const std::size_t j = u - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (flow[i * m + j] <= 0.0) continue;
          const double rc = std::max(0.0, pot[n + j] - pot[i] - cost[i * m + j]);
          if (dist[u] + rc < dist[i]) {
            dist[i] = dist[u] + rc;
            parent[i] = static_cast<int>(u);
          }
        }
      }
    }
    std::size_t target = V;
    double best_target = inf;
    for (std::size_t j = 0; j < m; ++j)
      if (demand[j] > eps && dist[n + j] < best_target) {
        best_target = dist[n + j];
        target = n + j;
      }
    if (target == V) throw std::runtime_error("transport: no augmenting path (unbalanced weights)");

    // Bottleneck: terminal demand, backward-arc flows, and root supply.
    double push = demand[target - n];
    std::size_t root = target;
    for (std::size_t v = target; parent[v] >= 0; v = static_cast<std::size_t>(parent[v])) {
      const std::size_t p = static_cast<std::size_t>(parent[v]);
      if (v < n) push = std::min(push, flow[v * m + (p - n)]);
      root = p;
    }
    push = std::min(push, supply[root]);

    for (std::size_t v = target; parent[v] >= 0; v = static_cast<std::size_t>(parent[v])) {
      const std::size_t p = static_cast<std::size_t>(parent[v]);
      if (v >= n)
        flow[p * m + (v - n)] += push;  // source -> sink, forward
      else
        flow[v * m + (p - n)] -= push;  // sink -> source, cancel flow
    }
    supply[root] -= push;
    demand[target - n] -= push;

    const double dcap = dist[target];
    for (std::size_t v = 0; v < V; ++v)
      if (dist[v] < inf) pot[v] += std::min(dist[v], dcap);
  }

  KahanSum total;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (flow[i * m + j] > 0.0) total.add(flow[i * m + j] * cost[i * m + j]);
  return total.value();
}

}  // namespace detail

/// Exact Wasserstein-1 cost between weighted point clouds under a caller
/// supplied cost d (symmetric, nonnegative, d(x,x)=0). Solved as an exact
/// network-flow transportation problem; no entropic approximation.
template <class Point, class Cost>
double empirical_wasserstein(const EmpiricalMeasure<Point>& mu, const EmpiricalMeasure<Point>& nu,
                             Cost&& d, const TransportOptions& opt = {}) {
  mu.validate();
  nu.validate();
  if (mu.points.size() > opt.max_points || nu.points.size() > opt.max_points)
    throw std::invalid_argument("empirical_wasserstein: point count over cap; subsample first");
  const std::size_t n = mu.points.size(), m = nu.points.size();
  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double c = d(mu.points[i], nu.points[j]);
      if (!(c >= 0.0)) throw std::invalid_argument("empirical_wasserstein: cost must be >= 0");
      cost[i * m + j] = c;
    }
  // Equalize the totals exactly so the flow problem is balanced.
  double sa = 0.0, sb = 0.0;
  for (double w : mu.weights) sa += w;
  for (double w : nu.weights) sb += w;
  std::vector<double> demand = nu.weights;
  const double scale = sa / sb;
  for (double& w : demand) w *= scale;
  return detail::solve_transport(cost, n, m, mu.weights, demand);
}

}  // namespace gclab
