#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gatslice/rng.hpp"

namespace gatslice {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Vec2 a, Vec2 b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::hypot(dx, dy);
}

struct Arena {
    double width = 160.0;
    double height = 160.0;

    bool contains(Vec2 p) const {
        return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
    }
    Vec2 center() const { return {width / 2.0, height / 2.0}; }
};

struct BaseStation {
    int id = 0;
    Vec2 position;
};

struct Subscriber {
    int id = 0;
    int slice = 0;
    Vec2 position;
    Vec2 direction;  // unit vector
    double speed = 0.0;  // m/s
};

/// Per-slice mobility parameters used when spawning subscribers.
struct MobilityProfile {
    int count = 0;
    double speed_min = 0.0;
    double speed_max = 0.0;
};

/// BS adjacency: neighbors(m) is the sorted neighborhood of m, m included.
class NeighborGraph {
public:
    NeighborGraph() = default;
    explicit NeighborGraph(std::vector<std::vector<int>> adjacency);

    std::size_t size() const { return adjacency_.size(); }
    const std::vector<int>& neighbors(int m) const { return adjacency_.at(static_cast<std::size_t>(m)); }
    bool connected(int m, int j) const;

    /// Nodes within `hops` edges of m, sorted ascending.
    std::vector<int> receptive_field(int m, int hops) const;

private:
    std::vector<std::vector<int>> adjacency_;
};

/// Hexagonal layout of 1 + 3r(r+1) cells centered in the arena, spiral order
/// (center first, then ring by ring counter-clockwise starting east).
std::vector<BaseStation> build_hex_layout(int rings, double inter_site_distance, const Arena& arena);

NeighborGraph build_neighbor_graph(std::span<const BaseStation> bss, double radius);

/// Subscribers are dealt round-robin into the four arena corners, placed
/// uniformly inside a corner box of side `corner_fraction` x arena, and given
/// a uniform random heading and a per-slice uniform speed.
std::vector<Subscriber> spawn_subscribers(std::span<const MobilityProfile> slices, const Arena& arena,
                                          double corner_fraction, Rng& rng);

/// Straight-line motion with specular reflection at the arena walls.
void advance_mobility(std::span<Subscriber> subs, const Arena& arena, double dt);

/// Nearest BS by Euclidean distance, lowest id wins ties.
std::vector<int> associate(std::span<const Subscriber> subs, std::span<const BaseStation> bss);

int nearest_bs(Vec2 p, std::span<const BaseStation> bss);

} // namespace gatslice
