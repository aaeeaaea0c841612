#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "mfito/errors.hpp"
#include "mfito/summation.hpp"

namespace mfito {

/// Minimum-cost transport between two discrete weight vectors with an
/// arbitrary cost matrix (row-major, supply.size() x demand.size()).
/// Successive shortest augmenting paths with Bellman-Ford; meant for the
/// handful of atoms used in diagnostics, not for large problems.
inline double min_cost_transport(std::span<const double> supply, std::span<const double> demand,
                                 std::span<const double> cost) {
    const std::size_t n0 = supply.size();
    const std::size_t n1 = demand.size();
    detail::require(cost.size() == n0 * n1, "transport cost matrix has the wrong shape");
    constexpr double kEps = 1e-15;

    // Nodes: 0 = source, 1..n0 = supply atoms, n0+1..n0+n1 = demand atoms, last = sink.
    const std::size_t nodes = n0 + n1 + 2;
    const std::size_t source = 0;
    const std::size_t sink = nodes - 1;
    struct Edge {
        std::size_t to;
        std::size_t rev;
        double cap;
        double cost;
    };
    std::vector<std::vector<Edge>> graph(nodes);
    auto add_edge = [&](std::size_t a, std::size_t b, double cap, double c) {
        graph[a].push_back({b, graph[b].size(), cap, c});
        graph[b].push_back({a, graph[a].size() - 1, 0.0, -c});
    };
    const double inf_cap = 2.0;
    for (std::size_t i = 0; i < n0; ++i) add_edge(source, 1 + i, supply[i], 0.0);
    for (std::size_t j = 0; j < n1; ++j) add_edge(1 + n0 + j, sink, demand[j], 0.0);
    for (std::size_t i = 0; i < n0; ++i)
        for (std::size_t j = 0; j < n1; ++j) add_edge(1 + i, 1 + n0 + j, inf_cap, cost[i * n1 + j]);

    std::vector<double> contributions;
    const std::size_t max_iter = 4 * (n0 + n1 + 2) * (n0 + n1 + 2) + 16;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        std::vector<double> dist(nodes, std::numeric_limits<double>::infinity());
        std::vector<std::size_t> prev_node(nodes, nodes);
        std::vector<std::size_t> prev_edge(nodes, 0);
        dist[source] = 0.0;
        for (std::size_t pass = 0; pass < nodes; ++pass) {
            bool changed = false;
            for (std::size_t v = 0; v < nodes; ++v) {
                if (dist[v] == std::numeric_limits<double>::infinity()) continue;
                for (std::size_t e = 0; e < graph[v].size(); ++e) {
                    const Edge& ed = graph[v][e];
                    if (ed.cap <= kEps) continue;
                    const double nd = dist[v] + ed.cost;
                    if (nd < dist[ed.to] - 1e-15) {
                        dist[ed.to] = nd;
                        prev_node[ed.to] = v;
                        prev_edge[ed.to] = e;
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }
        if (prev_node[sink] == nodes) break;
        double push = std::numeric_limits<double>::infinity();
        for (std::size_t v = sink; v != source; v = prev_node[v])
            push = std::min(push, graph[prev_node[v]][prev_edge[v]].cap);
        for (std::size_t v = sink; v != source; v = prev_node[v]) {
            Edge& ed = graph[prev_node[v]][prev_edge[v]];
            ed.cap -= push;
            graph[v][ed.rev].cap += push;
        }
        contributions.push_back(push * dist[sink]);
    }
    return pairwise_sum(contributions);
}

}  // namespace mfito
