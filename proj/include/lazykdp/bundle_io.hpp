#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bundle.hpp"

namespace lazykdp
{
/// Byte layout (all integers and doubles little-endian):
///
///   magic            8 bytes  "LKDPBNDL"
///   schema_version   u32
///   dof              u32
///   robot_digest     u64
///   world_digest     u64
///   generation       u64 n_edges, u32 steps_min, u32 steps_max,
///                    u32 segment_len, f64 dt, u64 rng_seed,
///                    f64 max_accel_jump, u64 attempt_budget_factor, f64 theta
///   annotation       u8 annotated, u64 perturbations, f64 theta, u64 rng_seed
///   theta            f64
///   edge_count       u64
///   edges            per edge: u64 id, f64 dt, u32 steps, f64 p_lazy_prop,
///                    f64 p_collision, f64[dof] q0, f64[dof] qf,
///                    f64[steps * dof] controls (step-major)
///   checksum         u64 FNV-1a over every preceding byte
inline constexpr char kBundleMagic[8] = {'L', 'K', 'D', 'P', 'B', 'N', 'D', 'L'};

class BundleIoError : public std::runtime_error
{
public:
  enum class Kind
  {
    kIo,
    kCorrupt,
    kSchemaVersion,
    kDigestMismatch,
  };

  BundleIoError(const Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind)
  {
  }

  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

namespace detail
{
class ByteWriter
{
public:
  void U8(const uint8_t v) { bytes_.push_back(v); }
  void U32(const uint32_t v)
  {
    for (int i = 0; i < 4; ++i)
    {
      bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
  }
  void U64(const uint64_t v)
  {
    for (int i = 0; i < 8; ++i)
    {
      bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
  }
  void F64(const double v) { U64(std::bit_cast<uint64_t>(v)); }
  void Vec(const JointVector& v)
  {
    for (Eigen::Index i = 0; i < v.size(); ++i)
    {
      F64(v[i]);
    }
  }
  void Raw(const char* data, const size_t n)
  {
    bytes_.insert(bytes_.end(), data, data + n);
  }
  std::vector<uint8_t>& bytes() { return bytes_; }

private:
  std::vector<uint8_t> bytes_;
};

class ByteReader
{
public:
  ByteReader(const uint8_t* data, const size_t size) : data_(data), size_(size) {}

  uint8_t U8() { return Take(1)[0]; }
  uint32_t U32()
  {
    const uint8_t* p = Take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
    {
      v |= static_cast<uint32_t>(p[i]) << (8 * i);
    }
    return v;
  }
  uint64_t U64()
  {
    const uint8_t* p = Take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
    {
      v |= static_cast<uint64_t>(p[i]) << (8 * i);
    }
    return v;
  }
  double F64() { return std::bit_cast<double>(U64()); }
  JointVector Vec(const int dof)
  {
    JointVector v(dof);
    for (int i = 0; i < dof; ++i)
    {
      v[i] = F64();
    }
    return v;
  }
  const uint8_t* Take(const size_t n)
  {
    if (n > size_ - pos_)
    {
      throw BundleIoError(BundleIoError::Kind::kCorrupt,
                          "bundle file: unexpected end of data");
    }
    const uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  bool AtEnd() const { return pos_ == size_; }

private:
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

inline uint64_t Checksum(const uint8_t* data, const size_t size)
{
  Fnv1a h;
  h.Bytes(data, size);
  return h.Value();
}
}  // namespace detail

inline std::vector<uint8_t> SerializeBundle(const EdgeBundle& bundle)
{
  const BundleMetadata& meta = bundle.metadata();
  const int dof = bundle.empty() ? 0 : static_cast<int>(bundle.edge(0).q0.size());
  detail::ByteWriter w;
  w.Raw(kBundleMagic, sizeof(kBundleMagic));
  w.U32(meta.schema_version);
  w.U32(static_cast<uint32_t>(dof));
  w.U64(meta.robot_digest);
  w.U64(meta.world_digest);
  const GenerationConfig& g = meta.generation;
  w.U64(g.n_edges);
  w.U32(g.steps_min);
  w.U32(g.steps_max);
  w.U32(g.segment_len);
  w.F64(g.dt);
  w.U64(g.rng_seed);
  w.F64(g.max_accel_jump);
  w.U64(g.attempt_budget_factor);
  w.F64(g.theta);
  const AnnotationInfo& a = meta.annotation;
  w.U8(a.annotated ? 1 : 0);
  w.U64(a.perturbations);
  w.F64(a.theta);
  w.U64(a.rng_seed);
  w.F64(bundle.theta());
  w.U64(bundle.size());
  for (const Edge& e : bundle.edges())
  {
    w.U64(e.id);
    w.F64(e.dt);
    w.U32(static_cast<uint32_t>(e.controls.size()));
    w.F64(e.p_lazy_prop);
    w.F64(e.p_collision);
    w.Vec(e.q0);
    w.Vec(e.qf);
    for (const auto& u : e.controls)
    {
      w.Vec(u);
    }
  }
  w.U64(detail::Checksum(w.bytes().data(), w.bytes().size()));
  return std::move(w.bytes());
}

/// Expected provenance; a loaded bundle whose digests differ is rejected.
struct BundleExpectation
{
  uint64_t robot_digest = 0;
  uint64_t world_digest = 0;
};

inline EdgeBundle DeserializeBundle(
    const std::vector<uint8_t>& bytes,
    const std::optional<BundleExpectation>& expect = std::nullopt)
{
  using Kind = BundleIoError::Kind;
  if (bytes.size() < sizeof(kBundleMagic) + 8)
  {
    throw BundleIoError(Kind::kCorrupt, "bundle file: too short");
  }
  const size_t body = bytes.size() - 8;
  detail::ByteReader tail(bytes.data() + body, 8);
  if (tail.U64() != detail::Checksum(bytes.data(), body))
  {
    throw BundleIoError(Kind::kCorrupt, "bundle file: checksum mismatch");
  }
  detail::ByteReader r(bytes.data(), body);
  if (std::memcmp(r.Take(sizeof(kBundleMagic)), kBundleMagic,
                  sizeof(kBundleMagic)) != 0)
  {
    throw BundleIoError(Kind::kCorrupt, "bundle file: bad magic");
  }
  BundleMetadata meta;
  meta.schema_version = r.U32();
  if (meta.schema_version != kBundleSchemaVersion)
  {
    throw BundleIoError(Kind::kSchemaVersion,
                        "bundle file: schema version " +
                            std::to_string(meta.schema_version) +
                            " not supported (expected " +
                            std::to_string(kBundleSchemaVersion) + ")");
  }
  const int dof = static_cast<int>(r.U32());
  meta.robot_digest = r.U64();
  meta.world_digest = r.U64();
  if (expect && (expect->robot_digest != meta.robot_digest ||
                 expect->world_digest != meta.world_digest))
  {
    throw BundleIoError(Kind::kDigestMismatch,
                        "bundle file: robot/world digest does not match the "
                        "active configuration");
  }
  GenerationConfig& g = meta.generation;
  g.n_edges = r.U64();
  g.steps_min = r.U32();
  g.steps_max = r.U32();
  g.segment_len = r.U32();
  g.dt = r.F64();
  g.rng_seed = r.U64();
  g.max_accel_jump = r.F64();
  g.attempt_budget_factor = r.U64();
  g.theta = r.F64();
  AnnotationInfo& a = meta.annotation;
  a.annotated = r.U8() != 0;
  a.perturbations = r.U64();
  a.theta = r.F64();
  a.rng_seed = r.U64();
  const double theta = r.F64();
  const uint64_t count = r.U64();
  std::vector<Edge> edges;
  edges.reserve(static_cast<size_t>(std::min<uint64_t>(count, body / 64 + 1)));
  for (uint64_t i = 0; i < count; ++i)
  {
    Edge e;
    e.id = r.U64();
    e.dt = r.F64();
    const uint32_t steps = r.U32();
    e.p_lazy_prop = r.F64();
    e.p_collision = r.F64();
    e.q0 = r.Vec(dof);
    e.qf = r.Vec(dof);
    e.controls.reserve(steps);
    for (uint32_t k = 0; k < steps; ++k)
    {
      e.controls.push_back(r.Vec(dof));
    }
    edges.push_back(std::move(e));
  }
  if (!r.AtEnd())
  {
    throw BundleIoError(Kind::kCorrupt, "bundle file: trailing bytes");
  }
  try
  {
    return EdgeBundle(std::move(edges), theta, meta);
  }
  catch (const std::invalid_argument& e)
  {
    throw BundleIoError(Kind::kCorrupt, std::string("bundle file: ") + e.what());
  }
}

inline void SaveBundle(const EdgeBundle& bundle,
                       const std::filesystem::path& path)
{
  const std::vector<uint8_t> bytes = SerializeBundle(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
  {
    throw BundleIoError(BundleIoError::Kind::kIo,
                        "cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
  {
    throw BundleIoError(BundleIoError::Kind::kIo,
                        "failed writing " + path.string());
  }
}

inline EdgeBundle LoadBundle(
    const std::filesystem::path& path,
    const std::optional<BundleExpectation>& expect = std::nullopt)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw BundleIoError(BundleIoError::Kind::kIo,
                        "cannot open bundle file " + path.string());
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return DeserializeBundle(bytes, expect);
}
}  // namespace lazykdp
