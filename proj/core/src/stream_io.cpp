#include "motcorr/stream_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include "motcorr/errors.hpp"

namespace motcorr {

namespace {

constexpr char kMagic[12] = {'M', 'O', 'T', 'C', 'O', 'R', 'R', '-', 'E', 'V', 'T', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u64(std::vector<unsigned char>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

} // namespace

void write_stream(const std::filesystem::path& path, const StreamFileData& data) {
  std::vector<unsigned char> buf;
  buf.reserve(32 + data.events.size() * 10 + 4);
  buf.insert(buf.end(), kMagic, kMagic + sizeof(kMagic));
  put_u32(buf, kVersion);
  buf.push_back(data.channel_count);
  buf.push_back(data.truth ? 1 : 0);
  put_u16(buf, 0);
  put_u64(buf, data.duration_ns);
  put_u64(buf, static_cast<std::uint64_t>(data.events.size()));

  std::uint64_t prev = 0;
  for (const StreamEvent& e : data.events) {
    if (e.t_ns < prev)
      throw IoError("write_stream: timestamps must be non-decreasing");
    if (e.channel >= data.channel_count)
      throw IoError("write_stream: channel id out of range");
    prev = e.t_ns;
    put_u64(buf, e.t_ns);
    buf.push_back(e.channel);
    buf.push_back(e.tag);
  }
  const std::uint32_t crc = static_cast<std::uint32_t>(
      ::crc32(0, buf.data(), static_cast<uInt>(buf.size())));
  put_u32(buf, crc);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("write_stream: cannot open " + path.string());
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("write_stream: short write to " + path.string());
}

StreamFileData read_stream(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_stream: cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 36 + 4) throw IoError("read_stream: truncated file");

  const std::uint32_t stored_crc = get_u32(buf.data() + buf.size() - 4);
  const std::uint32_t crc = static_cast<std::uint32_t>(
      ::crc32(0, buf.data(), static_cast<uInt>(buf.size() - 4)));
  if (crc != stored_crc) throw IoError("read_stream: checksum mismatch");

  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError("read_stream: bad magic");
  if (get_u32(buf.data() + 12) != kVersion)
    throw IoError("read_stream: unsupported version");

  StreamFileData data;
  data.channel_count = buf[16];
  data.truth = (buf[17] & 1) != 0;
  data.duration_ns = get_u64(buf.data() + 20);
  const std::uint64_t n = get_u64(buf.data() + 28);
  if (buf.size() != 36 + n * 10 + 4)
    throw IoError("read_stream: size does not match event count");

  data.events.reserve(n);
  std::uint64_t prev = 0;
  const unsigned char* p = buf.data() + 36;
  for (std::uint64_t i = 0; i < n; ++i, p += 10) {
    StreamEvent e{get_u64(p), p[8], p[9]};
    if (e.t_ns < prev) throw IoError("read_stream: timestamp regression");
    if (e.channel >= data.channel_count)
      throw IoError("read_stream: unknown channel id");
    prev = e.t_ns;
    data.events.push_back(e);
  }
  return data;
}

StreamFileData stream_from_record(const EmissionRecord& record) {
  StreamFileData d;
  d.channel_count = 1;
  d.truth = true;
  d.duration_ns = static_cast<std::uint64_t>(record.duration * 1e9);
  d.events.reserve(record.events.size());
  for (const Emission& e : record.events)
    d.events.push_back({static_cast<std::uint64_t>(e.t * 1e9), 0,
                        static_cast<std::uint8_t>(e.q + 1)});
  return d;
}

StreamFileData stream_from_clicks(const ClickStream& clicks) {
  StreamFileData d;
  d.channel_count = 2;
  d.truth = false;
  d.duration_ns = clicks.duration_ns;
  d.events.reserve(clicks.total_clicks());
  for (int ch = 0; ch < 2; ++ch)
    for (std::uint64_t t : clicks.channels[ch])
      d.events.push_back({t, static_cast<std::uint8_t>(ch), kClickTag});
  std::sort(d.events.begin(), d.events.end(),
            [](const StreamEvent& a, const StreamEvent& b) { return a.t_ns < b.t_ns; });
  return d;
}

ClickStream clicks_from_stream(const StreamFileData& data) {
  ClickStream c;
  c.duration_ns = data.duration_ns;
  c.labels = {"a", "b"};
  for (const StreamEvent& e : data.events) {
    if (e.channel < 2) c.channels[e.channel].push_back(e.t_ns);
  }
  return c;
}

} // namespace motcorr
