#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "robusta/detector.hpp"
#include "robusta/fusion.hpp"
#include "robusta/gmm.hpp"
#include "robusta/scene_io.hpp"

namespace robusta {

/// RAM1 layout (little-endian): "RAM1" | version u8 | seed u64 |
/// config_hash u64 | variant u8 | d_audio u32 | d_visual u32 | epochs u32 |
/// lr f64 | batch u32 | weight_decay f64 | top_k u32 (0 = default) |
/// hidden_count u8, hidden u32[] | train_seed u64 | audio scaler and visual
/// scaler (dim u32, mean f32[dim], inv_std f32[dim]) | has_projection u8
/// [rows u32, cols u32, weight f32[rows*cols], bias f32[cols]] |
/// layer_count u32, per layer rows u32, cols u32, weight, bias |
/// loss_count u32, loss f64[].
std::vector<std::uint8_t> encode_model(const AnomalyModel& model, const Provenance& prov);
AnomalyModel decode_model(std::span<const std::uint8_t> bytes, Provenance* prov = nullptr);
void write_model(const AnomalyModel& model, const Provenance& prov, const std::filesystem::path& path);
AnomalyModel read_model(const std::filesystem::path& path, Provenance* prov = nullptr);

/// RAG1 layout: "RAG1" | version u8 | seed u64 | config_hash u64 |
/// modality u8 | K u32 | d u32 | weights f32[K] | means f32[K*d] |
/// variances f32[K*d] | calibrated u8 | scale f64 | shift f64.
/// Weights are renormalised and variances re-floored after the f32 round
/// trip.
struct GmmArtifact {
  GmmParams gmm;
  std::optional<SigmoidCalibration> calibration;
};

std::vector<std::uint8_t> encode_gmm(const GmmArtifact& artifact, const Provenance& prov);
GmmArtifact decode_gmm(std::span<const std::uint8_t> bytes, Provenance* prov = nullptr);
void write_gmm(const GmmArtifact& artifact, const Provenance& prov, const std::filesystem::path& path);
GmmArtifact read_gmm(const std::filesystem::path& path, Provenance* prov = nullptr);

}  // namespace robusta
