#include "laesim/worldmodel.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

namespace lw = laesim::world;
using laesim::Vec2;
using laesim::Vec3;

namespace {

// brute-force oracle: max height over buildings containing the cell center
double brute_height(const std::vector<lw::Building>& buildings, double cx, double cy) {
  double h = 0.0;
  for (const auto& b : buildings) {
    if (cx >= b.x_min && cx <= b.x_max && cy >= b.y_min && cy <= b.y_max)
      h = std::max(h, b.height);
  }
  return h;
}

lw::MissionSpec simple_mission() {
  lw::MissionSpec m;
  m.start_zone = {0.0, 100.0, 0.0, 100.0, 55.0, 65.0};
  m.targets = {{500.0, 500.0, 60.0}};
  m.mission_area = {0.0, 1000.0, 0.0, 1000.0};
  m.z_min = 10.0;
  m.z_max = 150.0;
  m.reach_tolerance = 10.0;
  m.max_steps = 100;
  return m;
}

TEST(Rasterize, EmptyListGivesAllZero) {
  const auto map = lw::rasterize({}, 8, 6, 5.0);
  for (double h : map.height) EXPECT_EQ(h, 0.0);
}

TEST(Rasterize, SingleBuildingCoversExactCells) {
  // centers of cells ix=2..4, iy=3..5 on a 1 m grid are at 2.5..4.5, 3.5..5.5
  std::vector<lw::Building> b{{2.2, 3.2, 4.8, 5.8, 30.0}};
  const auto map = lw::rasterize(b, 10, 10, 1.0);
  for (int iy = 0; iy < 10; ++iy) {
    for (int ix = 0; ix < 10; ++ix) {
      const bool covered = ix >= 2 && ix <= 4 && iy >= 3 && iy <= 5;
      EXPECT_EQ(map.at(ix, iy), covered ? 30.0 : 0.0) << "cell " << ix << "," << iy;
    }
  }
}

TEST(Rasterize, OverlapTakesMax) {
  std::vector<lw::Building> b{{0.0, 0.0, 6.0, 6.0, 30.0}, {4.0, 4.0, 9.0, 9.0, 50.0}};
  const auto map = lw::rasterize(b, 10, 10, 1.0);
  for (int iy = 0; iy < 10; ++iy) {
    for (int ix = 0; ix < 10; ++ix) {
      EXPECT_EQ(map.at(ix, iy), brute_height(b, ix + 0.5, iy + 0.5));
    }
  }
}

TEST(Rasterize, OrderIndependent) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> pos(0.0, 80.0), size(5.0, 30.0), height(5.0, 60.0);
  std::vector<lw::Building> b;
  for (int i = 0; i < 20; ++i) {
    const double x = pos(gen), y = pos(gen);
    b.push_back({x, y, x + size(gen), y + size(gen), height(gen)});
  }
  const auto map1 = lw::rasterize(b, 25, 25, 4.0);
  std::reverse(b.begin(), b.end());
  const auto map2 = lw::rasterize(b, 25, 25, 4.0);
  EXPECT_TRUE(map1 == map2);
}

TEST(Rasterize, MatchesBruteForceOracleOnRandomInstances) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> pos(0.0, 90.0), size(1.0, 40.0), height(1.0, 80.0);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<lw::Building> b;
    for (int i = 0; i < 15; ++i) {
      const double x = pos(gen), y = pos(gen);
      b.push_back({x, y, x + size(gen), y + size(gen), height(gen)});
    }
    const auto map = lw::rasterize(b, 20, 20, 5.0);
    for (int iy = 0; iy < map.ny; ++iy) {
      for (int ix = 0; ix < map.nx; ++ix) {
        EXPECT_EQ(map.at(ix, iy), brute_height(b, map.center_x(ix), map.center_y(iy)));
      }
    }
  }
}

TEST(HeightAt, CellCenterLookup) {
  const auto map = lw::rasterize({{2.0, 2.0, 8.0, 8.0, 30.0}}, 10, 10, 1.0);
  EXPECT_EQ(lw::height_at(map, 5.5, 5.5).value(), 30.0);
}

TEST(HeightAt, BoundaryBelongsToUpperCell) {
  lw::WorldMap map;
  map.nx = 2;
  map.ny = 1;
  map.cell_size = 10.0;
  map.height = {1.0, 2.0};
  // x = 10 is the boundary: half-open [10, 20) owns it
  EXPECT_EQ(lw::height_at(map, 10.0, 5.0).value(), 2.0);
  EXPECT_EQ(lw::height_at(map, 9.999, 5.0).value(), 1.0);
}

TEST(HeightAt, OutOfExtentSignals) {
  const auto map = lw::rasterize({}, 10, 10, 1.0);
  EXPECT_FALSE(lw::height_at(map, -0.1, 5.0).has_value());
  EXPECT_FALSE(lw::height_at(map, 10.0, 5.0).has_value());  // right edge exclusive
  EXPECT_TRUE(lw::height_at(map, 0.0, 0.0).has_value());
}

TEST(SpawnAgents, SinglePointInsideZone) {
  const auto m = simple_mission();
  const auto pos = lw::spawn_agents(m, 1, 10.0, 123);
  ASSERT_EQ(pos.size(), 1u);
  EXPECT_GE(pos[0].x, m.start_zone.x_min);
  EXPECT_LE(pos[0].x, m.start_zone.x_max);
  EXPECT_GE(pos[0].y, m.start_zone.y_min);
  EXPECT_LE(pos[0].y, m.start_zone.y_max);
  EXPECT_GE(pos[0].z, m.z_min);
  EXPECT_LE(pos[0].z, m.z_max);
}

TEST(SpawnAgents, DeterministicPerSeed) {
  const auto m = simple_mission();
  const auto a = lw::spawn_agents(m, 4, 10.0, 55);
  const auto b = lw::spawn_agents(m, 4, 10.0, 55);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i] == b[i]);
  const auto c = lw::spawn_agents(m, 4, 10.0, 56);
  EXPECT_FALSE(a[0] == c[0]);
}

TEST(SpawnAgents, PairwiseSeparationHolds) {
  const auto m = simple_mission();
  const auto pos = lw::spawn_agents(m, 4, 10.0, 9001);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    for (std::size_t j = i + 1; j < pos.size(); ++j) {
      EXPECT_GE(laesim::distance_xy(pos[i], pos[j]), 10.0);
    }
  }
}

TEST(SpawnAgents, ImpossiblePackingFails) {
  auto m = simple_mission();
  m.start_zone = {0.0, 5.0, 0.0, 5.0, 55.0, 65.0};
  EXPECT_THROW(lw::spawn_agents(m, 10, 50.0, 1), lw::PlacementError);
}

TEST(MissionSpec, InvertedAltitudeBoundNamed) {
  auto m = simple_mission();
  m.z_min = 120.0;
  m.z_max = 60.0;
  try {
    m.validate();
    FAIL() << "expected validation error";
  } catch (const laesim::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("z_min < z_max"), std::string::npos);
  }
}

TEST(WorldMap, RejectsNegativeHeights) {
  lw::WorldMap map;
  map.nx = 1;
  map.ny = 1;
  map.cell_size = 1.0;
  map.height = {-2.0};
  EXPECT_THROW(map.validate(), laesim::ValidationError);
}

}  // namespace
