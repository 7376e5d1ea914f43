#include "robusta/feature_io.hpp"

#include <limits>

#include "robusta/binary_io.hpp"
#include "robusta/error.hpp"

namespace robusta {

namespace {
constexpr std::string_view kMagic = "RAF1";
constexpr const char* kModule = "core-data";
}  // namespace

std::vector<std::uint8_t> encode_features(std::span<const VideoBag> bags) {
  if (bags.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ContractError(kModule, "too many videos for RAF1");
  }
  ByteWriter w;
  w.magic(kMagic);
  w.u8(kFeatureFormatVersion);
  w.u32(static_cast<std::uint32_t>(bags.size()));
  for (const auto& bag : bags) {
    validate_bag(bag);
    const auto m = bag.segment_count();
    w.str16(bag.id);
    w.u8(bag.label);
    w.u32(static_cast<std::uint32_t>(m));
    w.u32(bag.audio ? static_cast<std::uint32_t>(bag.audio->dim) : 0);
    w.u32(bag.visual ? static_cast<std::uint32_t>(bag.visual->dim) : 0);
    if (bag.audio) w.f32s(bag.audio->values);
    if (bag.visual) w.f32s(bag.visual->values);
    if (bag.segment_truth) {
      w.u8(1);
      w.bytes(*bag.segment_truth);
    } else {
      w.u8(0);
    }
  }
  return w.take();
}

std::vector<VideoBag> decode_features(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, kModule);
  r.expect_magic(kMagic);
  const auto version = r.u8();
  if (version != kFeatureFormatVersion) {
    r.fail("unsupported RAF1 version " + std::to_string(version));
  }
  const auto count = r.u32();
  std::vector<VideoBag> bags;
  for (std::uint32_t v = 0; v < count; ++v) {
    VideoBag bag;
    bag.id = r.str16();
    bag.label = r.u8();
    const std::size_t m = r.u32();
    const std::size_t d_audio = r.u32();
    const std::size_t d_visual = r.u32();
    if (m == 0) r.fail("video '" + bag.id + "' declares zero segments");
    if (d_audio == 0 && d_visual == 0) {
      r.fail("video '" + bag.id + "' declares no modality");
    }
    auto read_block = [&](Modality mod, std::size_t d) {
      SegmentedModalityFeatures f;
      f.modality = mod;
      f.segments = m;
      f.dim = d;
      if (d != 0 && m > std::numeric_limits<std::size_t>::max() / d) {
        r.fail("dim/count overflow");
      }
      f.values = r.f32s(m * d);
      return f;
    };
    if (d_audio) bag.audio = read_block(Modality::Audio, d_audio);
    if (d_visual) bag.visual = read_block(Modality::Visual, d_visual);
    const auto truth_flag = r.u8();
    if (truth_flag == 1) {
      bag.segment_truth = r.bytes(m);
    } else if (truth_flag != 0) {
      r.fail("bad truth flag " + std::to_string(truth_flag));
    }
    try {
      validate_bag(bag);
    } catch (const ValidationError& e) {
      throw FormatError(kModule, std::string("invalid record: ") + e.what());
    }
    bags.push_back(std::move(bag));
  }
  r.expect_end();
  return bags;
}

void write_features(std::span<const VideoBag> bags,
                    const std::filesystem::path& path) {
  write_file_bytes(path, encode_features(bags), kModule);
}

std::vector<VideoBag> read_features(const std::filesystem::path& path) {
  return decode_features(read_file_bytes(path, kModule));
}

}  // namespace robusta
