#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "motcorr/errors.hpp"
#include "motcorr/stream_io.hpp"

using namespace motcorr;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("io");

namespace {
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "motcorr_io_test";
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

StreamFileData sample_clicks() {
  StreamFileData d;
  d.channel_count = 2;
  d.truth = false;
  d.duration_ns = 1000000;
  for (int i = 0; i < 500; ++i)
    d.events.push_back({static_cast<std::uint64_t>(i * 1000),
                        static_cast<std::uint8_t>(i % 2), kClickTag});
  return d;
}
} // namespace

TEST_CASE("stream roundtrip preserves every field") {
  TempDir tmp;
  const auto d = sample_clicks();
  const auto p = tmp.path / "clicks.bin";
  write_stream(p, d);
  const auto r = read_stream(p);
  CHECK(r.channel_count == d.channel_count);
  CHECK(r.truth == d.truth);
  CHECK(r.duration_ns == d.duration_ns);
  REQUIRE(r.events.size() == d.events.size());
  for (std::size_t i = 0; i < d.events.size(); ++i) {
    CHECK(r.events[i].t_ns == d.events[i].t_ns);
    CHECK(r.events[i].channel == d.events[i].channel);
    CHECK(r.events[i].tag == d.events[i].tag);
  }
}

TEST_CASE("truth stream roundtrip keeps polarization tags") {
  TempDir tmp;
  StreamFileData d;
  d.channel_count = 1;
  d.truth = true;
  d.duration_ns = 5000;
  d.events = {{10, 0, 0}, {20, 0, 1}, {30, 0, 2}};  // q = -1, 0, +1 as q+1
  const auto p = tmp.path / "truth.bin";
  write_stream(p, d);
  const auto r = read_stream(p);
  CHECK(r.truth);
  REQUIRE(r.events.size() == 3);
  CHECK(r.events[1].tag == 1);
}

TEST_CASE("corrupted payload fails the checksum") {
  TempDir tmp;
  const auto p = tmp.path / "corrupt.bin";
  write_stream(p, sample_clicks());
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    char byte = 0x5a;
    f.write(&byte, 1);
  }
  CHECK_THROWS_AS(read_stream(p), IoError);
}

TEST_CASE("bad magic and missing file raise IoError") {
  TempDir tmp;
  const auto p = tmp.path / "not_a_stream.bin";
  std::ofstream(p) << "this is not a timestamp stream";
  CHECK_THROWS_AS(read_stream(p), IoError);
  CHECK_THROWS_AS(read_stream(tmp.path / "absent.bin"), IoError);
}

TEST_CASE("unsorted timestamps are rejected on write") {
  TempDir tmp;
  auto d = sample_clicks();
  std::swap(d.events[3].t_ns, d.events[4].t_ns);
  CHECK_THROWS_AS(write_stream(tmp.path / "unsorted.bin", d), IoError);
}

TEST_CASE("click stream conversion is lossless") {
  ClickStream c;
  c.duration_ns = 999999;
  c.labels = {"l", "r"};
  c.channels[0] = {100, 300, 500};
  c.channels[1] = {200, 300, 800};
  const auto d = stream_from_clicks(c);
  CHECK(d.events.size() == 6);
  const auto back = clicks_from_stream(d);
  CHECK(back.channels[0] == c.channels[0]);
  CHECK(back.channels[1] == c.channels[1]);
  CHECK(back.duration_ns == c.duration_ns);
}

TEST_CASE("emission record to truth stream keeps ordering and tags") {
  EmissionRecord rec;
  rec.duration = 1e-5;
  rec.events.push_back({1.0e-6, -1, Vec3::UnitZ(), Vec3::Zero()});
  rec.events.push_back({2.5e-6, 0, Vec3::UnitZ(), Vec3::Zero()});
  rec.events.push_back({7.0e-6, 1, Vec3::UnitZ(), Vec3::Zero()});
  const auto d = stream_from_record(rec);
  CHECK(d.truth);
  REQUIRE(d.events.size() == 3);
  CHECK(d.events[0].tag == 0);
  CHECK(d.events[1].tag == 1);
  CHECK(d.events[2].tag == 2);
  CHECK(d.events[0].t_ns == 1000);
  CHECK(d.duration_ns == 10000);
}

TEST_SUITE_END();
