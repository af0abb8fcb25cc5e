#include "gatslice/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gatslice/error.hpp"

namespace gatslice {

NeighborGraph::NeighborGraph(std::vector<std::vector<int>> adjacency) : adjacency_(std::move(adjacency)) {
    for (auto& row : adjacency_) std::sort(row.begin(), row.end());
}

bool NeighborGraph::connected(int m, int j) const {
    const auto& row = neighbors(m);
    return std::binary_search(row.begin(), row.end(), j);
}

std::vector<int> NeighborGraph::receptive_field(int m, int hops) const {
    std::vector<int> frontier{m};
    std::vector<char> seen(adjacency_.size(), 0);
    seen.at(static_cast<std::size_t>(m)) = 1;
    for (int h = 0; h < hops; ++h) {
        std::vector<int> next;
        for (int u : frontier) {
            for (int v : neighbors(u)) {
                if (!seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    next.push_back(v);
                }
            }
        }
        frontier = std::move(next);
    }
    std::vector<int> out;
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (seen[i]) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<BaseStation> build_hex_layout(int rings, double inter_site_distance, const Arena& arena) {
    if (rings < 0) throw ConfigError("hex layout: rings must be >= 0");
    if (!(inter_site_distance > 0.0)) throw ConfigError("hex layout: inter-site distance must be > 0");

    // Axial hex coordinates walked as a spiral.
    static constexpr int dq[6] = {-1, -1, 0, 1, 1, 0};
    static constexpr int dr[6] = {1, 0, -1, -1, 0, 1};
    std::vector<std::pair<int, int>> axial{{0, 0}};
    for (int ring = 1; ring <= rings; ++ring) {
        int q = ring;
        int r = 0;
        for (int side = 0; side < 6; ++side) {
            for (int step = 0; step < ring; ++step) {
                axial.emplace_back(q, r);
                q += dq[side];
                r += dr[side];
            }
        }
    }

    const Vec2 c = arena.center();
    const double s3 = std::sqrt(3.0) / 2.0;
    std::vector<BaseStation> out;
    out.reserve(axial.size());
    for (std::size_t i = 0; i < axial.size(); ++i) {
        const auto [q, r] = axial[i];
        const Vec2 p{c.x + inter_site_distance * (q + 0.5 * r), c.y + inter_site_distance * s3 * r};
        if (!arena.contains(p)) {
            throw ConfigError("hex layout: arena " + std::to_string(arena.width) + "x" +
                              std::to_string(arena.height) + " too small for " + std::to_string(rings) +
                              " rings at spacing " + std::to_string(inter_site_distance));
        }
        out.push_back({static_cast<int>(i), p});
    }
    return out;
}

NeighborGraph build_neighbor_graph(std::span<const BaseStation> bss, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("neighbor graph: radius must be > 0");
    std::vector<std::vector<int>> adj(bss.size());
    for (std::size_t m = 0; m < bss.size(); ++m) {
        for (std::size_t j = 0; j < bss.size(); ++j) {
            if (m == j || distance(bss[m].position, bss[j].position) <= radius)
                adj[m].push_back(static_cast<int>(j));
        }
    }
    return NeighborGraph(std::move(adj));
}

std::vector<Subscriber> spawn_subscribers(std::span<const MobilityProfile> slices, const Arena& arena,
                                          double corner_fraction, Rng& rng) {
    if (!(corner_fraction > 0.0 && corner_fraction <= 1.0))
        throw ConfigError("spawn: corner_fraction must be in (0, 1]");
    const double bw = arena.width * corner_fraction;
    const double bh = arena.height * corner_fraction;
    const Vec2 origins[4] = {
        {0.0, 0.0}, {arena.width - bw, 0.0}, {0.0, arena.height - bh}, {arena.width - bw, arena.height - bh}};

    std::vector<Subscriber> out;
    int id = 0;
    for (std::size_t n = 0; n < slices.size(); ++n) {
        const auto& prof = slices[n];
        if (prof.count < 0 || prof.speed_min < 0.0 || prof.speed_max < prof.speed_min)
            throw ConfigError("spawn: invalid mobility profile for slice " + std::to_string(n));
        for (int i = 0; i < prof.count; ++i) {
            const Vec2 o = origins[i % 4];
            Subscriber s;
            s.id = id++;
            s.slice = static_cast<int>(n);
            s.position = {o.x + rng.uniform01() * bw, o.y + rng.uniform01() * bh};
            const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
            s.direction = {std::cos(theta), std::sin(theta)};
            s.speed = rng.uniform(prof.speed_min, prof.speed_max);
            out.push_back(s);
        }
    }
    return out;
}

namespace {

// Folds an unconstrained coordinate back into [0, len]; returns true when an
// odd number of reflections happened (the velocity component flips).
bool reflect(double& x, double len) {
    if (x >= 0.0 && x <= len) return false;
    const double period = 2.0 * len;
    double r = std::fmod(x, period);
    if (r < 0.0) r += period;
    const double k = std::floor(x / len);
    const bool flipped = static_cast<long long>(k) % 2 != 0;
    x = r <= len ? r : period - r;
    return flipped;
}

} // namespace

void advance_mobility(std::span<Subscriber> subs, const Arena& arena, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("advance_mobility: dt must be > 0");
    for (auto& s : subs) {
        double x = s.position.x + s.direction.x * s.speed * dt;
        double y = s.position.y + s.direction.y * s.speed * dt;
        if (reflect(x, arena.width)) s.direction.x = -s.direction.x;
        if (reflect(y, arena.height)) s.direction.y = -s.direction.y;
        s.position = {x, y};
    }
}

int nearest_bs(Vec2 p, std::span<const BaseStation> bss) {
    int best = -1;
    double best_d = 0.0;
    for (const auto& b : bss) {
        const double d = distance(p, b.position);
        if (best < 0 || d < best_d) {
            best = b.id;
            best_d = d;
        }
    }
    return best;
}

std::vector<int> associate(std::span<const Subscriber> subs, std::span<const BaseStation> bss) {
    std::vector<int> out;
    out.reserve(subs.size());
    for (const auto& s : subs) out.push_back(nearest_bs(s.position, bss));
    return out;
}

} // namespace gatslice
