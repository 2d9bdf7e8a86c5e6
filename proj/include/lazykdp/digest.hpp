#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string_view>

#include "collision.hpp"
#include "robot.hpp"

namespace lazykdp
{
/// 64-bit FNV-1a accumulator.
class Fnv1a
{
public:
  void Bytes(const void* data, const size_t size)
  {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < size; ++i)
    {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }

  void U64(const uint64_t v)
  {
    unsigned char le[8];
    for (int i = 0; i < 8; ++i)
    {
      le[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    Bytes(le, 8);
  }

  void F64(const double v) { U64(std::bit_cast<uint64_t>(v)); }

  template <typename Range>
  void F64s(const Range& values)
  {
    U64(static_cast<uint64_t>(values.size()));
    for (const double v : values)
    {
      F64(v);
    }
  }

  void Text(const std::string_view s) { Bytes(s.data(), s.size()); }

  uint64_t Value() const { return hash_; }

private:
  uint64_t hash_ = 0xcbf29ce484222325ULL;
};

/// Digest of every robot and limit parameter that affects edge validity.
inline uint64_t RobotDigest(const RobotModel& model, const Limits& limits)
{
  Fnv1a h;
  h.Text("robot/v1");
  h.F64s(model.link_length);
  h.F64s(model.link_mass);
  h.F64s(model.com_offset);
  h.F64s(model.link_inertia);
  h.F64s(model.viscous_friction);
  h.F64s(model.coulomb_friction);
  h.F64(model.gravity);
  for (const JointVector* v : {&limits.q_min, &limits.q_max, &limits.dq_min,
                               &limits.dq_max, &limits.ddq_min, &limits.ddq_max,
                               &limits.tau_min, &limits.tau_max})
  {
    h.U64(static_cast<uint64_t>(v->size()));
    for (Eigen::Index i = 0; i < v->size(); ++i)
    {
      h.F64((*v)[i]);
    }
  }
  return h.Value();
}

inline uint64_t WorldDigest(const WorldModel& world)
{
  Fnv1a h;
  h.Text("world/v1");
  h.F64(world.link_radius);
  h.F64(world.collision_resolution);
  h.U64(world.obstacles.size());
  for (const auto& o : world.obstacles)
  {
    h.F64(o.center.x());
    h.F64(o.center.y());
    h.F64(o.radius);
  }
  return h.Value();
}
}  // namespace lazykdp
