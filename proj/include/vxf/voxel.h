#pragma once

#include <array>
#include <cstdint>

#include "vxf/core.h"

namespace vxf {

/// Projective distance plus accumulated merge weight. A voxel with weight 0 is
/// unobserved and its distance carries no meaning.
struct TsdfVoxel {
  float distance = 0.0f;
  float weight = 0.0f;
  Color color;

  bool observed() const { return weight > kTsdfObservedWeight; }
};

/// Euclidean (or quasi-Euclidean) distance propagated by the wavefront
/// integrator. The parent triple points toward the voxel this one was lowered
/// from (quasi mode: components in {-1,0,1}) or holds the full integer offset
/// to the seed voxel (Euclidean mode).
struct EsdfVoxel {
  static constexpr uint8_t kObserved = 1 << 0;
  static constexpr uint8_t kFixed = 1 << 1;
  static constexpr uint8_t kInRaise = 1 << 2;
  static constexpr uint8_t kInLower = 1 << 3;

  float distance = 0.0f;
  std::array<int16_t, 3> parent = {0, 0, 0};
  uint8_t flags = 0;

  bool observed() const { return flags & kObserved; }
  bool fixed() const { return flags & kFixed; }
  bool in_raise() const { return flags & kInRaise; }
  bool in_lower() const { return flags & kInLower; }

  void set_observed(bool v) { set(kObserved, v); }
  void set_fixed(bool v) { set(kFixed, v); }
  void set_in_raise(bool v) { set(kInRaise, v); }
  void set_in_lower(bool v) { set(kInLower, v); }

  bool has_parent() const { return parent[0] != 0 || parent[1] != 0 || parent[2] != 0; }
  void clear_parent() { parent = {0, 0, 0}; }

 private:
  void set(uint8_t bit, bool v) { flags = v ? (flags | bit) : (flags & ~bit); }
};

}  // namespace vxf
