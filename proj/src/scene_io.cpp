#include "robusta/scene_io.hpp"

#include <limits>

#include "robusta/binary_io.hpp"
#include "robusta/error.hpp"

namespace robusta {

namespace {
constexpr std::string_view kMagic = "RAS1";
constexpr std::uint8_t kVersion = 1;
constexpr const char* kModule = "synthgen";
}  // namespace

std::vector<std::uint8_t> encode_scenes(std::span<const RawScene> scenes,
                                        const Provenance& prov) {
  ByteWriter w;
  w.magic(kMagic);
  w.u8(kVersion);
  w.u64(prov.seed);
  w.u64(prov.config_hash);
  w.u32(static_cast<std::uint32_t>(scenes.size()));
  for (const auto& s : scenes) {
    validate_scene(s);
    w.str16(s.id);
    w.u8(s.label);
    w.u32(s.sample_rate);
    w.u32(static_cast<std::uint32_t>(s.segments));
    w.u32(static_cast<std::uint32_t>(s.samples_per_segment));
    w.u32(static_cast<std::uint32_t>(s.frames_per_segment));
    w.u32(static_cast<std::uint32_t>(s.height));
    w.u32(static_cast<std::uint32_t>(s.width));
    w.f32s(s.audio);
    w.f32s(s.frames);
    if (s.segment_truth.empty()) {
      w.u8(0);
    } else {
      w.u8(1);
      w.bytes(s.segment_truth);
    }
  }
  return w.take();
}

std::vector<RawScene> decode_scenes(std::span<const std::uint8_t> bytes,
                                    Provenance* prov) {
  ByteReader r(bytes, kModule);
  r.expect_magic(kMagic);
  if (const auto v = r.u8(); v != kVersion) r.fail("unsupported RAS1 version " + std::to_string(v));
  Provenance p;
  p.seed = r.u64();
  p.config_hash = r.u64();
  if (prov) *prov = p;
  const auto count = r.u32();
  std::vector<RawScene> scenes;
  for (std::uint32_t i = 0; i < count; ++i) {
    RawScene s;
    s.id = r.str16();
    s.label = r.u8();
    s.sample_rate = r.u32();
    s.segments = r.u32();
    s.samples_per_segment = r.u32();
    s.frames_per_segment = r.u32();
    s.height = r.u32();
    s.width = r.u32();
    const std::size_t audio_len = s.segments * s.samples_per_segment;
    const std::size_t frame_len = s.segments * s.segment_pixels();
    s.audio = r.f32s(audio_len);
    s.frames = r.f32s(frame_len);
    const auto truth = r.u8();
    if (truth == 1) {
      s.segment_truth = r.bytes(s.segments);
    } else if (truth != 0) {
      r.fail("bad truth flag");
    }
    try {
      validate_scene(s);
    } catch (const ValidationError& e) {
      throw FormatError(kModule, std::string("invalid scene record: ") + e.what());
    }
    scenes.push_back(std::move(s));
  }
  r.expect_end();
  return scenes;
}

void write_scenes(std::span<const RawScene> scenes, const Provenance& prov,
                  const std::filesystem::path& path) {
  write_file_bytes(path, encode_scenes(scenes, prov), kModule);
}

std::vector<RawScene> read_scenes(const std::filesystem::path& path, Provenance* prov) {
  return decode_scenes(read_file_bytes(path, kModule), prov);
}

}  // namespace robusta
