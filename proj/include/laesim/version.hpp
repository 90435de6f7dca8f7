#pragma once

namespace laesim {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr int kMessageSchemaVersion = 1;
inline constexpr int kModelSchemaVersion = 1;

}  // namespace laesim
