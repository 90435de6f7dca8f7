#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "laesim/common.hpp"
#include "laesim/rng.hpp"

namespace laesim::world {

/// Building-height raster over a metric grid. Heights combine terrain offset
/// and building height; flat terrain is the 0 m baseline.
struct WorldMap {
  int nx = 0;
  int ny = 0;
  double cell_size = 0.0;
  Vec2 origin{0.0, 0.0};
  std::vector<double> height;  // row-major, index = iy * nx + ix

  double at(int ix, int iy) const { return height[static_cast<std::size_t>(iy) * nx + ix]; }
  double& at(int ix, int iy) { return height[static_cast<std::size_t>(iy) * nx + ix]; }

  double extent_x() const { return nx * cell_size; }
  double extent_y() const { return ny * cell_size; }

  bool in_extent(double x, double y) const {
    return x >= origin.x && x < origin.x + extent_x() && y >= origin.y && y < origin.y + extent_y();
  }

  /// Cell index of the half-open interval [lo, hi) containing x.
  int cell_x(double x) const { return static_cast<int>(std::floor((x - origin.x) / cell_size)); }
  int cell_y(double y) const { return static_cast<int>(std::floor((y - origin.y) / cell_size)); }

  double center_x(int ix) const { return origin.x + (ix + 0.5) * cell_size; }
  double center_y(int iy) const { return origin.y + (iy + 0.5) * cell_size; }

  void validate() const {
    if (nx < 1 || ny < 1) throw ValidationError("world grid: nx, ny >= 1");
    if (!(cell_size > 0.0)) throw ValidationError("world grid: cell_size > 0");
    if (height.size() != static_cast<std::size_t>(nx) * ny)
      throw ValidationError("world grid: height raster size equals nx*ny");
    for (double h : height) {
      if (!std::isfinite(h) || h < 0.0)
        throw ValidationError("world grid: all height values >= 0 and finite");
    }
  }

  bool operator==(const WorldMap& o) const {
    return nx == o.nx && ny == o.ny && cell_size == o.cell_size && origin.x == o.origin.x &&
           origin.y == o.origin.y && height == o.height;
  }
};

/// Axis-aligned building footprint with a flat roof.
struct Building {
  double x_min = 0.0, y_min = 0.0;
  double x_max = 0.0, y_max = 0.0;
  double height = 0.0;

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }

  void validate() const {
    if (!(x_min < x_max)) throw ValidationError("building: x_min < x_max");
    if (!(y_min < y_max)) throw ValidationError("building: y_min < y_max");
    if (!(height > 0.0) || !std::isfinite(height)) throw ValidationError("building: height > 0");
  }

  bool operator==(const Building& o) const {
    return x_min == o.x_min && y_min == o.y_min && x_max == o.x_max && y_max == o.y_max &&
           height == o.height;
  }
};

/// Mission geometry: where agents start, where they must go, and the bounds
/// they are paid to stay within.
struct MissionSpec {
  Box3 start_zone;
  std::vector<Vec3> targets;  // one per agent
  Box2 mission_area;
  double z_min = 0.0;
  double z_max = 0.0;
  double reach_tolerance = 0.0;
  int max_steps = 0;

  int agent_count() const { return static_cast<int>(targets.size()); }

  void validate() const {
    if (!(z_min < z_max)) throw ValidationError("mission: z_min < z_max");
    if (!(reach_tolerance > 0.0)) throw ValidationError("mission: reach_tolerance > 0");
    if (targets.empty()) throw ValidationError("mission: at least one target");
    if (max_steps < 1) throw ValidationError("mission: max_steps >= 1");
    if (!(start_zone.x_min < start_zone.x_max) || !(start_zone.y_min < start_zone.y_max) ||
        !(start_zone.z_min <= start_zone.z_max))
      throw ValidationError("mission: start_zone nonempty");
    if (!mission_area.contains_box(start_zone.footprint()))
      throw ValidationError("mission: start_zone inside mission_area");
    for (const auto& t : targets) {
      if (!mission_area.contains(t.x, t.y))
        throw ValidationError("mission: targets inside mission_area");
      if (t.z < z_min || t.z > z_max)
        throw ValidationError("mission: target altitude within [z_min, z_max]");
    }
  }

  bool operator==(const MissionSpec& o) const {
    return start_zone == o.start_zone && targets == o.targets && mission_area == o.mission_area &&
           z_min == o.z_min && z_max == o.z_max && reach_tolerance == o.reach_tolerance &&
           max_steps == o.max_steps;
  }
};

/// Rasters buildings onto the grid: each cell takes the maximum height over
/// buildings whose footprint contains the cell center, else 0.
inline WorldMap rasterize(const std::vector<Building>& buildings, int nx, int ny, double cell_size,
                          Vec2 origin = {0.0, 0.0}) {
  WorldMap map;
  map.nx = nx;
  map.ny = ny;
  map.cell_size = cell_size;
  map.origin = origin;
  if (nx < 1 || ny < 1) throw ValidationError("world grid: nx, ny >= 1");
  if (!(cell_size > 0.0)) throw ValidationError("world grid: cell_size > 0");
  map.height.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  for (const auto& b : buildings) {
    b.validate();
    // only touch cells whose centers can fall inside the footprint
    int ix0 = std::max(0, map.cell_x(b.x_min) - 1);
    int ix1 = std::min(nx - 1, map.cell_x(b.x_max) + 1);
    int iy0 = std::max(0, map.cell_y(b.y_min) - 1);
    int iy1 = std::min(ny - 1, map.cell_y(b.y_max) + 1);
    for (int iy = iy0; iy <= iy1; ++iy) {
      for (int ix = ix0; ix <= ix1; ++ix) {
        if (b.contains(map.center_x(ix), map.center_y(iy))) {
          map.at(ix, iy) = std::max(map.at(ix, iy), b.height);
        }
      }
    }
  }
  return map;
}

/// Nearest-cell height lookup. Out-of-extent queries yield nullopt rather
/// than a value; the cell is the half-open interval [lo, hi) on each axis.
inline std::optional<double> height_at(const WorldMap& map, double x, double y) {
  if (!map.in_extent(x, y)) return std::nullopt;
  return map.at(map.cell_x(x), map.cell_y(y));
}

class PlacementError : public std::runtime_error {
 public:
  explicit PlacementError(const std::string& what) : std::runtime_error(what) {}
};

/// Samples n start positions uniformly inside the start zone, altitude
/// clamped to the mission band, with pairwise horizontal separation >= d_safe
/// enforced by rejection sampling. Deterministic per seed.
inline std::vector<Vec3> spawn_agents(const MissionSpec& mission, int n, double d_safe,
                                      std::uint64_t seed, int max_tries_per_agent = 1000) {
  if (n < 1) throw ValidationError("spawn: n >= 1");
  Rng rng(mix_seed({seed, 0x5350574eull}));  // "SPWN"
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n));
  const Box3& z = mission.start_zone;
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < max_tries_per_agent; ++attempt) {
      Vec3 p{rng.uniform(z.x_min, z.x_max), rng.uniform(z.y_min, z.y_max),
             clamp(rng.uniform(z.z_min, z.z_max), mission.z_min, mission.z_max)};
      bool ok = true;
      for (const auto& q : out) {
        if (distance_xy(p, q) < d_safe) {
          ok = false;
          break;
        }
      }
      if (ok) {
        out.push_back(p);
        placed = true;
        break;
      }
    }
    if (!placed)
      throw PlacementError("spawn: could not place agent " + std::to_string(i) +
                           " at separation " + std::to_string(d_safe) + " within retry budget");
  }
  return out;
}

}  // namespace laesim::world
