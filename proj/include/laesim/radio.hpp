#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "laesim/common.hpp"
#include "laesim/rng.hpp"
#include "laesim/worldmodel.hpp"

namespace laesim::radio {

struct RadioSite {
  int id = 0;
  Vec3 position{};  // antenna height included in z
  double tx_power_dbm = 35.0;
  double antenna_gain_db = 5.0;

  void validate() const {
    if (!(position.z > 0.0)) throw ValidationError("radio site: z > 0");
  }

  bool operator==(const RadioSite& o) const {
    return id == o.id && position == o.position && tx_power_dbm == o.tx_power_dbm &&
           antenna_gain_db == o.antenna_gain_db;
  }
};

/// Log-distance path loss with LoS/NLoS exponents plus correlated log-normal
/// shadowing. No fast fading: per-step SINR is the shadowed mean.
struct RadioParams {
  double pl0_db = 30.0;  // at reference distance d0
  double d0_m = 1.0;
  double n_los = 2.2;
  double n_nlos = 3.5;
  double nlos_extra_db = 20.0;
  double shadow_sigma_los_db = 4.0;
  double shadow_sigma_nlos_db = 6.0;
  double shadow_corr_len_m = 50.0;
  double noise_power_dbm = -94.0;
  std::uint64_t fading_seed = 0;

  void validate() const {
    if (!(d0_m > 0.0)) throw ValidationError("radio params: d0 > 0");
    if (!(n_los > 0.0) || !(n_nlos > 0.0)) throw ValidationError("radio params: n_los, n_nlos > 0");
    if (shadow_sigma_los_db < 0.0 || shadow_sigma_nlos_db < 0.0)
      throw ValidationError("radio params: sigmas >= 0");
    if (!(shadow_corr_len_m > 0.0)) throw ValidationError("radio params: corr_len > 0");
  }

  bool operator==(const RadioParams& o) const {
    return pl0_db == o.pl0_db && d0_m == o.d0_m && n_los == o.n_los && n_nlos == o.n_nlos &&
           nlos_extra_db == o.nlos_extra_db && shadow_sigma_los_db == o.shadow_sigma_los_db &&
           shadow_sigma_nlos_db == o.shadow_sigma_nlos_db &&
           shadow_corr_len_m == o.shadow_corr_len_m && noise_power_dbm == o.noise_power_dbm &&
           fading_seed == o.fading_seed;
  }
};

struct SinrSample {
  int serving_id = -1;
  double sinr_db = 0.0;
  std::vector<double> rx_powers_dbm;  // ordered as the site list
};

class OutOfExtentError : public std::runtime_error {
 public:
  explicit OutOfExtentError(const std::string& what) : std::runtime_error(what) {}
};

/// True iff the 3D segment a->b never passes at or below the height raster of
/// a crossed cell. Traversal is 2D DDA with linear z interpolation; the
/// endpoint cells are excluded.
inline bool line_of_sight(const world::WorldMap& map, const Vec3& a, const Vec3& b) {
  if (!map.in_extent(a.x, a.y) || !map.in_extent(b.x, b.y))
    throw OutOfExtentError("line_of_sight: endpoint outside grid extent");

  const int ax = map.cell_x(a.x), ay = map.cell_y(a.y);
  const int bx = map.cell_x(b.x), by = map.cell_y(b.y);
  if (ax == bx && ay == by) return true;  // endpoint cells excluded

  const double dx = b.x - a.x, dy = b.y - a.y, dz = b.z - a.z;
  int ix = ax, iy = ay;
  const int step_x = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int step_y = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);

  // parametric distance (t in [0,1]) to the next cell border on each axis
  double t_max_x, t_delta_x;
  if (step_x != 0) {
    double border = map.origin.x + (ix + (step_x > 0 ? 1 : 0)) * map.cell_size;
    t_max_x = (border - a.x) / dx;
    t_delta_x = map.cell_size / std::abs(dx);
  } else {
    t_max_x = std::numeric_limits<double>::infinity();
    t_delta_x = std::numeric_limits<double>::infinity();
  }
  double t_max_y, t_delta_y;
  if (step_y != 0) {
    double border = map.origin.y + (iy + (step_y > 0 ? 1 : 0)) * map.cell_size;
    t_max_y = (border - a.y) / dy;
    t_delta_y = map.cell_size / std::abs(dy);
  } else {
    t_max_y = std::numeric_limits<double>::infinity();
    t_delta_y = std::numeric_limits<double>::infinity();
  }

  double t_entry = 0.0;
  const int max_cells = map.nx + map.ny + 2;
  for (int it = 0; it < max_cells; ++it) {
    double t_exit = std::min({t_max_x, t_max_y, 1.0});
    const bool is_endpoint_cell = (ix == ax && iy == ay) || (ix == bx && iy == by);
    if (!is_endpoint_cell) {
      // z is linear in t; min over the in-cell interval is at an end
      double z_lo = std::min(a.z + t_entry * dz, a.z + t_exit * dz);
      if (z_lo <= map.at(ix, iy)) return false;
    }
    if (ix == bx && iy == by) break;
    if (t_max_x < t_max_y) {
      t_entry = t_max_x;
      t_max_x += t_delta_x;
      ix += step_x;
    } else {
      t_entry = t_max_y;
      t_max_y += t_delta_y;
      iy += step_y;
    }
    if (ix < 0 || ix >= map.nx || iy < 0 || iy >= map.ny) break;
  }
  return true;
}

/// PL = pl0 + 10 * n * log10(max(d, d0) / d0) + (los ? 0 : nlos_extra).
inline double path_loss_db(double d, bool los, const RadioParams& p) {
  const double n = los ? p.n_los : p.n_nlos;
  const double eff = std::max(d, p.d0_m);
  double pl = p.pl0_db + 10.0 * n * std::log10(eff / p.d0_m);
  if (!los) pl += p.nlos_extra_db;
  return pl;
}

/// Correlated shadow fading: a seeded lattice (spacing = corr_len) of
/// unit-variance Gaussian draws keyed by (fading_seed, site_id, node coords),
/// bilinearly interpolated in x-y and scaled by the applicable sigma.
inline double shadow_db(const Vec3& pos, const RadioParams& p, int site_id, bool los) {
  const double sigma = los ? p.shadow_sigma_los_db : p.shadow_sigma_nlos_db;
  if (sigma == 0.0) return 0.0;
  const double gx = pos.x / p.shadow_corr_len_m;
  const double gy = pos.y / p.shadow_corr_len_m;
  const auto ix = static_cast<std::int64_t>(std::floor(gx));
  const auto iy = static_cast<std::int64_t>(std::floor(gy));
  const double fx = gx - static_cast<double>(ix);
  const double fy = gy - static_cast<double>(iy);
  auto node = [&](std::int64_t nx, std::int64_t ny) {
    return keyed_gaussian({p.fading_seed, static_cast<std::uint64_t>(site_id),
                           static_cast<std::uint64_t>(nx), static_cast<std::uint64_t>(ny),
                           0x53484144ull});  // "SHAD"
  };
  const double v00 = node(ix, iy), v10 = node(ix + 1, iy);
  const double v01 = node(ix, iy + 1), v11 = node(ix + 1, iy + 1);
  const double v0 = v00 * (1.0 - fx) + v10 * fx;
  const double v1 = v01 * (1.0 - fx) + v11 * fx;
  return sigma * (v0 * (1.0 - fy) + v1 * fy);
}

/// Received power, serving-site selection (argmax rx, lowest id on exact tie)
/// and SINR at a 3D point.
inline SinrSample sinr_at(const Vec3& pos, std::span<const RadioSite> sites,
                          const world::WorldMap& map, const RadioParams& p) {
  if (sites.empty()) throw ValidationError("sinr_at: no sites configured");
  SinrSample s;
  s.rx_powers_dbm.reserve(sites.size());
  double best_rx = -std::numeric_limits<double>::infinity();
  int best_id = std::numeric_limits<int>::max();
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto& site = sites[i];
    const double d = distance(pos, site.position);
    const bool los = line_of_sight(map, pos, site.position);
    const double rx = site.tx_power_dbm + site.antenna_gain_db - path_loss_db(d, los, p) -
                      shadow_db(pos, p, site.id, los);
    s.rx_powers_dbm.push_back(rx);
    if (rx > best_rx || (rx == best_rx && site.id < best_id)) {
      best_rx = rx;
      best_id = site.id;
      best_index = i;
    }
  }
  double interference_mw = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (i != best_index) interference_mw += dbm_to_mw(s.rx_powers_dbm[i]);
  }
  const double noise_mw = dbm_to_mw(p.noise_power_dbm);
  s.serving_id = best_id;
  s.sinr_db = mw_to_dbm(dbm_to_mw(best_rx) / (interference_mw + noise_mw));
  return s;
}

/// Row-major SINR surface over an area at fixed altitude. Cells inside
/// buildings are emitted with an in-obstacle flag, not suppressed.
struct SinrSurface {
  int nx = 0, ny = 0;
  double altitude = 0.0;
  Box2 area{};
  double spacing_x = 0.0, spacing_y = 0.0;
  std::vector<double> sinr_db;     // index = iy * nx + ix
  std::vector<int> serving_id;
  std::vector<std::uint8_t> in_obstacle;

  double cell_center_x(int ix) const { return area.x_min + (ix + 0.5) * spacing_x; }
  double cell_center_y(int iy) const { return area.y_min + (iy + 0.5) * spacing_y; }
};

inline SinrSurface export_sinr_surface(double altitude, double resolution,
                                       std::span<const RadioSite> sites,
                                       const world::WorldMap& map, const RadioParams& p,
                                       const Box2& area) {
  if (!(resolution > 0.0)) throw ValidationError("surface: resolution > 0");
  SinrSurface surf;
  surf.altitude = altitude;
  surf.area = area;
  surf.nx = std::max(1, static_cast<int>(std::floor(area.width() / resolution + 1e-9)));
  surf.ny = std::max(1, static_cast<int>(std::floor(area.height() / resolution + 1e-9)));
  surf.spacing_x = area.width() / surf.nx;
  surf.spacing_y = area.height() / surf.ny;
  const std::size_t n = static_cast<std::size_t>(surf.nx) * surf.ny;
  surf.sinr_db.reserve(n);
  surf.serving_id.reserve(n);
  surf.in_obstacle.reserve(n);
  for (int iy = 0; iy < surf.ny; ++iy) {
    for (int ix = 0; ix < surf.nx; ++ix) {
      const Vec3 pos{surf.cell_center_x(ix), surf.cell_center_y(iy), altitude};
      const SinrSample s = sinr_at(pos, sites, map, p);
      const double ground = world::height_at(map, pos.x, pos.y).value_or(0.0);
      surf.sinr_db.push_back(s.sinr_db);
      surf.serving_id.push_back(s.serving_id);
      surf.in_obstacle.push_back(ground > 0.0 && pos.z <= ground ? 1 : 0);
    }
  }
  return surf;
}

inline void write_surface_csv(std::ostream& os, const SinrSurface& surf) {
  os << "x,y,z,sinr_db,serving_id,in_obstacle\n";
  for (int iy = 0; iy < surf.ny; ++iy) {
    for (int ix = 0; ix < surf.nx; ++ix) {
      const std::size_t i = static_cast<std::size_t>(iy) * surf.nx + ix;
      os << fmt_double(surf.cell_center_x(ix)) << ',' << fmt_double(surf.cell_center_y(iy)) << ','
         << fmt_double(surf.altitude) << ',' << fmt_double(surf.sinr_db[i]) << ','
         << surf.serving_id[i] << ',' << static_cast<int>(surf.in_obstacle[i]) << '\n';
    }
  }
}

}  // namespace laesim::radio
