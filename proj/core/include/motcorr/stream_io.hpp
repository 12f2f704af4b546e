#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "motcorr/detection.hpp"
#include "motcorr/trajectory.hpp"

namespace motcorr {

// Binary timestamp stream:
//   16-byte header: 12-byte magic "MOTCORR-EVTS", u32 version (LE)
//   u8  channel count
//   u8  flags (bit 0: pre-detection truth data)
//   u16 reserved (0)
//   u64 duration, ns
//   u64 event count
//   events, 10 bytes each: u64 timestamp ns (LE, non-decreasing),
//                          u8 channel id, u8 tag (truth: q+1; clicks: 255)
//   u32 CRC-32 of everything above
struct StreamEvent {
  std::uint64_t t_ns;
  std::uint8_t channel;
  std::uint8_t tag;
};

inline constexpr std::uint8_t kClickTag = 255;

struct StreamFileData {
  std::uint8_t channel_count = 2;
  bool truth = false;
  std::uint64_t duration_ns = 0;
  std::vector<StreamEvent> events;
};

// Throws IoError on any filesystem or format problem (bad magic/version,
// checksum mismatch, timestamp regression, unknown channel id).
void write_stream(const std::filesystem::path& path, const StreamFileData& data);
StreamFileData read_stream(const std::filesystem::path& path);

StreamFileData stream_from_record(const EmissionRecord& record);
StreamFileData stream_from_clicks(const ClickStream& clicks);
ClickStream clicks_from_stream(const StreamFileData& data);

} // namespace motcorr
