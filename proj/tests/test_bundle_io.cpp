#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_support.hpp"

namespace lazykdp
{
namespace
{
namespace fs = std::filesystem;

class BundleIo : public ::testing::Test
{
protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() /
           ("lazykdp_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::vector<uint8_t> ReadBytes(const fs::path& p)
  {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  static void WriteBytes(const fs::path& p, const std::vector<uint8_t>& bytes)
  {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }

  static BundleIoError::Kind KindOf(const std::function<void()>& fn)
  {
    try
    {
      fn();
    }
    catch (const BundleIoError& e)
    {
      return e.kind();
    }
    ADD_FAILURE() << "expected BundleIoError";
    return BundleIoError::Kind::kIo;
  }

  fs::path dir_;
};

GenerationConfig Config(const uint64_t n)
{
  GenerationConfig c;
  c.n_edges = n;
  return c;
}

TEST_F(BundleIo, RoundTripIsFieldExact)
{
  const Scene scene = testing::DefaultScene();
  const EdgeBundle bundle = BuildBundle(scene, Config(3));
  SaveBundle(bundle, dir_ / "b.lkdp");
  const EdgeBundle loaded = LoadBundle(dir_ / "b.lkdp");
  EXPECT_TRUE(loaded == bundle);
  EXPECT_EQ(loaded.metadata().schema_version, kBundleSchemaVersion);
}

TEST_F(BundleIo, AnnotatedRoundTripAndInfiniteJump)
{
  const Scene scene = testing::DefaultScene();
  GenerationConfig config = Config(20);
  config.max_accel_jump = std::numeric_limits<double>::infinity();
  PerturbationConfig pc;
  pc.perturbations = 10;
  const EdgeBundle bundle = AnnotateBundle(BuildBundle(scene, config), scene, pc);
  const EdgeBundle loaded = DeserializeBundle(SerializeBundle(bundle));
  EXPECT_TRUE(loaded == bundle);
  EXPECT_TRUE(loaded.metadata().annotation.annotated);
  EXPECT_TRUE(std::isinf(loaded.metadata().generation.max_accel_jump));
}

TEST_F(BundleIo, SameSeedBuildsAreByteIdentical)
{
  const Scene scene = testing::DefaultScene();
  SaveBundle(BuildBundle(scene, Config(100)), dir_ / "a.lkdp");
  SaveBundle(BuildBundle(scene, Config(100)), dir_ / "b.lkdp");
  EXPECT_EQ(ReadBytes(dir_ / "a.lkdp"), ReadBytes(dir_ / "b.lkdp"));
}

TEST_F(BundleIo, TruncatedFileFailsChecksum)
{
  const Scene scene = testing::DefaultScene();
  SaveBundle(BuildBundle(scene, Config(3)), dir_ / "b.lkdp");
  auto bytes = ReadBytes(dir_ / "b.lkdp");
  bytes.resize(bytes.size() - 17);
  WriteBytes(dir_ / "t.lkdp", bytes);
  EXPECT_EQ(KindOf([&] { LoadBundle(dir_ / "t.lkdp"); }), BundleIoError::Kind::kCorrupt);
  EXPECT_EQ(KindOf([&] { DeserializeBundle({1, 2, 3}); }), BundleIoError::Kind::kCorrupt);
}

TEST_F(BundleIo, FlippedByteFailsChecksum)
{
  auto bytes = SerializeBundle(BuildBundle(testing::DefaultScene(), Config(3)));
  bytes[bytes.size() / 2] ^= 0x40;
  EXPECT_EQ(KindOf([&] { DeserializeBundle(bytes); }), BundleIoError::Kind::kCorrupt);
}

TEST_F(BundleIo, SchemaVersionMismatch)
{
  auto bytes = SerializeBundle(BuildBundle(testing::DefaultScene(), Config(3)));
  bytes[8] = 99;  // schema_version follows the 8-byte magic
  // Re-seal so that only the version is wrong.
  Fnv1a h;
  h.Bytes(bytes.data(), bytes.size() - 8);
  const uint64_t sum = h.Value();
  for (int i = 0; i < 8; ++i)
  {
    bytes[bytes.size() - 8 + i] = static_cast<uint8_t>(sum >> (8 * i));
  }
  EXPECT_EQ(KindOf([&] { DeserializeBundle(bytes); }), BundleIoError::Kind::kSchemaVersion);
}

TEST_F(BundleIo, DigestMismatchAgainstOtherWorld)
{
  const Scene a = testing::DefaultScene();
  Scene b = a;
  b.world.obstacles.pop_back();
  SaveBundle(BuildBundle(a, Config(3)), dir_ / "a.lkdp");
  EXPECT_NO_THROW(LoadBundle(dir_ / "a.lkdp",
                             BundleExpectation{a.RobotDigest(), a.WorldDigest()}));
  EXPECT_EQ(KindOf([&] {
              LoadBundle(dir_ / "a.lkdp", BundleExpectation{b.RobotDigest(), b.WorldDigest()});
            }),
            BundleIoError::Kind::kDigestMismatch);
  Scene c = a;
  c.limits.tau_max[2] = 9.0;
  EXPECT_NE(c.RobotDigest(), a.RobotDigest());
  EXPECT_EQ(c.WorldDigest(), a.WorldDigest());
}

TEST_F(BundleIo, MissingFileIsIoError)
{
  EXPECT_EQ(KindOf([&] { LoadBundle(dir_ / "nope.lkdp"); }), BundleIoError::Kind::kIo);
  EXPECT_EQ(KindOf([&] {
              SaveBundle(BuildBundle(testing::DefaultScene(), Config(1)),
                         dir_ / "missing_dir" / "x.lkdp");
            }),
            BundleIoError::Kind::kIo);
}

TEST(Digest, FnvKnownValues)
{
  // Published FNV-1a 64-bit test vectors.
  Fnv1a empty;
  EXPECT_EQ(empty.Value(), 0xcbf29ce484222325ull);
  Fnv1a a;
  a.Text("a");
  EXPECT_EQ(a.Value(), 0xaf63dc4c8601ec8cull);
  Fnv1a foobar;
  foobar.Text("foobar");
  EXPECT_EQ(foobar.Value(), 0x85944171f73967e8ull);
}
}  // namespace
}  // namespace lazykdp
