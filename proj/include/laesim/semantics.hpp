#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "laesim/common.hpp"
#include "laesim/rng.hpp"
#include "laesim/version.hpp"
#include "laesim/worldmodel.hpp"

namespace laesim::sem {

/// Degradation and gating knobs for the terrain-interpreter rApp.
struct SemanticsParams {
  double noise_sigma_m = 2.0;
  double dropout_frac = 0.1;
  int coarse_factor = 4;
  double h_built_m = 5.0;
  double sigma_ref_m = 10.0;
  double gate_threshold = 0.6;

  void validate() const {
    if (noise_sigma_m < 0.0) throw ValidationError("semantics: noise_sigma >= 0");
    if (dropout_frac < 0.0 || dropout_frac > 1.0)
      throw ValidationError("semantics: 0 <= dropout_frac <= 1");
    if (coarse_factor < 1) throw ValidationError("semantics: coarse_factor >= 1");
    if (!(sigma_ref_m > 0.0)) throw ValidationError("semantics: sigma_ref > 0");
    if (gate_threshold < 0.0 || gate_threshold > 1.0)
      throw ValidationError("semantics: gate_threshold in [0,1]");
  }

  bool operator==(const SemanticsParams& o) const {
    return noise_sigma_m == o.noise_sigma_m && dropout_frac == o.dropout_frac &&
           coarse_factor == o.coarse_factor && h_built_m == o.h_built_m &&
           sigma_ref_m == o.sigma_ref_m && gate_threshold == o.gate_threshold;
  }
};

/// Overhead height raster as the rApp sees it: noisy, with dropped-out cells
/// marked missing (NaN).
struct RasterObservation {
  int nx = 0, ny = 0;
  double noise_sigma = 0.0;
  double dropout_frac = 0.0;
  std::vector<double> height_obs;  // row-major; NaN marks a missing cell

  static bool is_missing(double v) { return std::isnan(v); }
  double at(int ix, int iy) const { return height_obs[static_cast<std::size_t>(iy) * nx + ix]; }
};

/// Applies dropout and additive Gaussian noise to the true heights.
/// Deterministic per seed.
inline RasterObservation degrade(const world::WorldMap& map, double noise_sigma,
                                 double dropout_frac, std::uint64_t seed) {
  if (noise_sigma < 0.0) throw ValidationError("degrade: noise_sigma >= 0");
  if (dropout_frac < 0.0 || dropout_frac > 1.0)
    throw ValidationError("degrade: 0 <= dropout_frac <= 1");
  RasterObservation obs;
  obs.nx = map.nx;
  obs.ny = map.ny;
  obs.noise_sigma = noise_sigma;
  obs.dropout_frac = dropout_frac;
  obs.height_obs.resize(map.height.size());
  Rng rng(mix_seed({seed, 0x44454752ull}));  // "DEGR"
  for (std::size_t i = 0; i < map.height.size(); ++i) {
    if (rng.uniform01() < dropout_frac) {
      obs.height_obs[i] = std::numeric_limits<double>::quiet_NaN();
    } else {
      double h = map.height[i];
      if (noise_sigma > 0.0) h += noise_sigma * rng.gaussian();
      obs.height_obs[i] = std::max(0.0, h);
    }
  }
  return obs;
}

struct SemanticCell {
  double density = 0.0;      // fraction of built cells, in [0,1]
  double mean_height = 0.0;  // meters, over non-missing cells
  double max_height = 0.0;
  double occlusion = 0.0;  // fraction of taller coarse neighbors, in [0,1]
  double confidence = 0.0;
  bool gate_open = false;
  bool all_missing = false;

  bool operator==(const SemanticCell& o) const {
    return density == o.density && mean_height == o.mean_height && max_height == o.max_height &&
           occlusion == o.occlusion && confidence == o.confidence && gate_open == o.gate_open &&
           all_missing == o.all_missing;
  }
};

/// Coarse per-cell terrain features with confidence and gate flags.
struct SemanticFeatureMap {
  int cnx = 0, cny = 0;
  int k = 1;  // coarse factor over the fine grid
  bool padded = false;
  double gate_threshold = 0.0;
  std::vector<SemanticCell> cells;  // row-major

  const SemanticCell& at(int cx, int cy) const {
    return cells[static_cast<std::size_t>(cy) * cnx + cx];
  }
  SemanticCell& at(int cx, int cy) { return cells[static_cast<std::size_t>(cy) * cnx + cx]; }
  bool in_grid(int cx, int cy) const { return cx >= 0 && cx < cnx && cy >= 0 && cy < cny; }

  /// Content digest over features, confidence, and gates (not timestamps).
  std::uint64_t digest() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = fnv1a64_add(h, static_cast<std::uint64_t>(cnx));
    h = fnv1a64_add(h, static_cast<std::uint64_t>(cny));
    h = fnv1a64_add(h, static_cast<std::uint64_t>(k));
    h = fnv1a64_add(h, gate_threshold);
    for (const auto& c : cells) {
      h = fnv1a64_add(h, c.density);
      h = fnv1a64_add(h, c.mean_height);
      h = fnv1a64_add(h, c.max_height);
      h = fnv1a64_add(h, c.occlusion);
      h = fnv1a64_add(h, c.confidence);
      h = fnv1a64_add(h, static_cast<std::uint64_t>((c.gate_open ? 1 : 0) | (c.all_missing ? 2 : 0)));
    }
    return h;
  }

  bool operator==(const SemanticFeatureMap& o) const {
    return cnx == o.cnx && cny == o.cny && k == o.k && padded == o.padded &&
           gate_threshold == o.gate_threshold && cells == o.cells;
  }
};

/// Aggregates k x k fine cells into coarse features. Missing cells are
/// excluded from the statistics; grids not divisible by k are padded with
/// zero-height cells and the padding recorded.
inline SemanticFeatureMap extract_features(const RasterObservation& obs, int k, double h_built) {
  if (k < 1) throw ValidationError("extract_features: k >= 1");
  SemanticFeatureMap fm;
  fm.k = k;
  fm.cnx = (obs.nx + k - 1) / k;
  fm.cny = (obs.ny + k - 1) / k;
  fm.padded = (obs.nx % k != 0) || (obs.ny % k != 0);
  fm.cells.assign(static_cast<std::size_t>(fm.cnx) * fm.cny, SemanticCell{});
  for (int cy = 0; cy < fm.cny; ++cy) {
    for (int cx = 0; cx < fm.cnx; ++cx) {
      int n_valid = 0, n_built = 0;
      double sum_h = 0.0, max_h = 0.0;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const int ix = cx * k + dx;
          const int iy = cy * k + dy;
          double h = 0.0;  // pad-with-zero beyond the raster
          if (ix < obs.nx && iy < obs.ny) {
            h = obs.at(ix, iy);
            if (RasterObservation::is_missing(h)) continue;
          }
          ++n_valid;
          sum_h += h;
          max_h = std::max(max_h, h);
          if (h >= h_built) ++n_built;
        }
      }
      auto& cell = fm.at(cx, cy);
      if (n_valid == 0) {
        cell.all_missing = true;
        continue;
      }
      cell.density = static_cast<double>(n_built) / n_valid;
      cell.mean_height = sum_h / n_valid;
      cell.max_height = max_h;
    }
  }
  // occlusion: fraction of existing 8-neighbors whose max height exceeds this
  // cell's mean height
  for (int cy = 0; cy < fm.cny; ++cy) {
    for (int cx = 0; cx < fm.cnx; ++cx) {
      int neighbors = 0, taller = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (!fm.in_grid(cx + dx, cy + dy)) continue;
          ++neighbors;
          if (fm.at(cx + dx, cy + dy).max_height > fm.at(cx, cy).mean_height) ++taller;
        }
      }
      fm.at(cx, cy).occlusion =
          neighbors > 0 ? static_cast<double>(taller) / neighbors : 0.0;
    }
  }
  return fm;
}

/// Per coarse cell: conf = (1 - missing_frac) * exp(-noise_sigma / sigma_ref),
/// clamped to [0,1].
inline std::vector<double> confidence(const RasterObservation& obs, int k, double sigma_ref) {
  if (k < 1) throw ValidationError("confidence: k >= 1");
  if (!(sigma_ref > 0.0)) throw ValidationError("confidence: sigma_ref > 0");
  const int cnx = (obs.nx + k - 1) / k;
  const int cny = (obs.ny + k - 1) / k;
  const double noise_factor = std::exp(-obs.noise_sigma / sigma_ref);
  std::vector<double> out(static_cast<std::size_t>(cnx) * cny, 0.0);
  for (int cy = 0; cy < cny; ++cy) {
    for (int cx = 0; cx < cnx; ++cx) {
      int missing = 0;
      const int window = k * k;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const int ix = cx * k + dx;
          const int iy = cy * k + dy;
          if (ix < obs.nx && iy < obs.ny && RasterObservation::is_missing(obs.at(ix, iy)))
            ++missing;
        }
      }
      const double conf =
          (1.0 - static_cast<double>(missing) / window) * noise_factor;
      out[static_cast<std::size_t>(cy) * cnx + cx] = clamp(conf, 0.0, 1.0);
    }
  }
  return out;
}

inline void set_confidence(SemanticFeatureMap& fm, const std::vector<double>& conf) {
  if (conf.size() != fm.cells.size())
    throw ValidationError("set_confidence: confidence grid matches feature grid");
  for (std::size_t i = 0; i < conf.size(); ++i) fm.cells[i].confidence = conf[i];
}

/// Zeroes the features of cells whose confidence falls below the threshold
/// and closes their gates. Idempotent.
inline SemanticFeatureMap gate(SemanticFeatureMap fm, double threshold) {
  if (threshold < 0.0 || threshold > 1.0) throw ValidationError("gate: threshold in [0,1]");
  fm.gate_threshold = threshold;
  for (auto& c : fm.cells) {
    if (c.confidence >= threshold) {
      c.gate_open = true;
    } else {
      c.gate_open = false;
      c.density = 0.0;
      c.mean_height = 0.0;
      c.max_height = 0.0;
      c.occlusion = 0.0;
    }
  }
  return fm;
}

/// The enrichment record pushed from the Non-RT side over A1.
struct A1Message {
  int version = kMessageSchemaVersion;
  std::int64_t timestamp_ms = 0;
  SemanticFeatureMap map;
  std::uint64_t digest = 0;

  bool operator==(const A1Message& o) const {
    return version == o.version && timestamp_ms == o.timestamp_ms && map == o.map &&
           digest == o.digest;
  }
};

inline A1Message build_a1(const SemanticFeatureMap& fm, std::int64_t timestamp_ms) {
  A1Message msg;
  msg.timestamp_ms = timestamp_ms;
  msg.map = fm;
  msg.digest = fm.digest();
  return msg;
}

inline nlohmann::json a1_to_json(const A1Message& msg) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : msg.map.cells) {
    cells.push_back({{"density", c.density},
                     {"mean_h", c.mean_height},
                     {"max_h", c.max_height},
                     {"occl", c.occlusion},
                     {"conf", c.confidence},
                     {"gate_open", c.gate_open},
                     {"all_missing", c.all_missing}});
  }
  return nlohmann::json{{"version", msg.version},
                        {"timestamp_ms", msg.timestamp_ms},
                        {"gate_threshold", msg.map.gate_threshold},
                        {"k", msg.map.k},
                        {"nx", msg.map.cnx},
                        {"ny", msg.map.cny},
                        {"padded", msg.map.padded},
                        {"cells", cells},
                        {"digest", hex64(msg.digest)}};
}

inline A1Message a1_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("a1: not an object");
  const int version = j.at("version").get<int>();
  if (version != kMessageSchemaVersion)
    throw VersionError("a1: version " + std::to_string(version) + " unsupported (expected " +
                       std::to_string(kMessageSchemaVersion) + ")");
  A1Message msg;
  msg.version = version;
  msg.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
  msg.map.gate_threshold = j.at("gate_threshold").get<double>();
  msg.map.k = j.at("k").get<int>();
  msg.map.cnx = j.at("nx").get<int>();
  msg.map.cny = j.at("ny").get<int>();
  msg.map.padded = j.at("padded").get<bool>();
  for (const auto& cj : j.at("cells")) {
    SemanticCell c;
    c.density = cj.at("density").get<double>();
    c.mean_height = cj.at("mean_h").get<double>();
    c.max_height = cj.at("max_h").get<double>();
    c.occlusion = cj.at("occl").get<double>();
    c.confidence = cj.at("conf").get<double>();
    c.gate_open = cj.at("gate_open").get<bool>();
    c.all_missing = cj.at("all_missing").get<bool>();
    msg.map.cells.push_back(c);
  }
  if (msg.map.cells.size() != static_cast<std::size_t>(msg.map.cnx) * msg.map.cny)
    throw ParseError("a1: cell count does not match grid dims");
  msg.digest = msg.map.digest();
  return msg;
}

/// Full Non-RT pipeline: degrade -> extract -> confidence -> gate -> A1.
inline A1Message run_rapp(const world::WorldMap& map, const SemanticsParams& params,
                          std::uint64_t seed, std::int64_t timestamp_ms) {
  const RasterObservation obs = degrade(map, params.noise_sigma_m, params.dropout_frac, seed);
  SemanticFeatureMap fm = extract_features(obs, params.coarse_factor, params.h_built_m);
  set_confidence(fm, confidence(obs, params.coarse_factor, params.sigma_ref_m));
  fm = gate(std::move(fm), params.gate_threshold);
  return build_a1(fm, timestamp_ms);
}

}  // namespace laesim::sem
