#include "robusta/model_io.hpp"

#include <algorithm>
#include <cmath>

#include "robusta/binary_io.hpp"
#include "robusta/error.hpp"

namespace robusta {

namespace {

constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kMaxDim = 1u << 20;

void put_matrix(ByteWriter& w, const Matrix& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) w.f32(static_cast<float>(m.data()[i]));
}

void put_row(ByteWriter& w, const RowVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) w.f32(static_cast<float>(v[i]));
}

std::size_t get_dim(ByteReader& r, const char* what) {
  const auto v = r.u32();
  if (v == 0 || v > kMaxDim) r.fail(std::string("implausible ") + what + " " + std::to_string(v));
  return v;
}

Matrix get_matrix(ByteReader& r) {
  const auto rows = get_dim(r, "row count");
  const auto cols = get_dim(r, "column count");
  if (rows * cols > (1u << 28)) r.fail("matrix too large");
  const auto vals = r.f32s(rows * cols);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < vals.size(); ++i) m.data()[i] = vals[i];
  return m;
}

RowVector get_row(ByteReader& r, std::size_t n) {
  const auto vals = r.f32s(n);
  RowVector v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

void put_scaler(ByteWriter& w, const FeatureScaler& s) {
  w.u32(static_cast<std::uint32_t>(s.dim()));
  put_row(w, s.mean);
  put_row(w, s.inv_std);
}

FeatureScaler get_scaler(ByteReader& r) {
  const auto d = get_dim(r, "scaler dim");
  FeatureScaler s;
  s.mean = get_row(r, d);
  s.inv_std = get_row(r, d);
  return s;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const AnomalyModel& m, const Provenance& prov) {
  ByteWriter w;
  w.magic("RAM1");
  w.u8(kVersion);
  w.u64(prov.seed);
  w.u64(prov.config_hash);
  w.u8(static_cast<std::uint8_t>(m.variant));
  w.u32(static_cast<std::uint32_t>(m.audio_dim));
  w.u32(static_cast<std::uint32_t>(m.visual_dim));
  const auto& tc = m.train_config;
  w.u32(static_cast<std::uint32_t>(tc.epochs));
  w.f64(tc.learning_rate);
  w.u32(static_cast<std::uint32_t>(tc.batch_size));
  w.f64(tc.weight_decay);
  w.u32(static_cast<std::uint32_t>(tc.top_k.value_or(0)));
  w.u8(static_cast<std::uint8_t>(tc.hidden.size()));
  for (auto h : tc.hidden) w.u32(static_cast<std::uint32_t>(h));
  w.u64(tc.seed);
  put_scaler(w, m.audio_scaler);
  put_scaler(w, m.visual_scaler);
  w.u8(m.projection ? 1 : 0);
  if (m.projection) {
    put_matrix(w, m.projection->weight);
    put_row(w, m.projection->bias);
  }
  w.u32(static_cast<std::uint32_t>(m.detector.layers.size()));
  for (const auto& l : m.detector.layers) {
    put_matrix(w, l.weight);
    put_row(w, l.bias);
  }
  w.u32(static_cast<std::uint32_t>(m.loss_history.size()));
  for (double v : m.loss_history) w.f64(v);
  return w.take();
}

AnomalyModel decode_model(std::span<const std::uint8_t> bytes, Provenance* prov) {
  ByteReader r(bytes, "detector");
  r.expect_magic("RAM1");
  if (const auto v = r.u8(); v != kVersion) r.fail("unsupported RAM1 version " + std::to_string(v));
  Provenance p;
  p.seed = r.u64();
  p.config_hash = r.u64();
  AnomalyModel m;
  const auto variant = r.u8();
  if (variant > 2) r.fail("unknown model variant " + std::to_string(variant));
  m.variant = static_cast<ModelVariant>(variant);
  m.audio_dim = get_dim(r, "audio dim");
  m.visual_dim = get_dim(r, "visual dim");
  auto& tc = m.train_config;
  tc.epochs = r.u32();
  tc.learning_rate = r.f64();
  tc.batch_size = r.u32();
  tc.weight_decay = r.f64();
  if (const auto k = r.u32(); k != 0) tc.top_k = k;
  tc.hidden.resize(r.u8());
  for (auto& h : tc.hidden) h = get_dim(r, "hidden width");
  tc.seed = r.u64();
  m.audio_scaler = get_scaler(r);
  m.visual_scaler = get_scaler(r);
  if (r.u8()) {
    ProjectionParams proj;
    proj.weight = get_matrix(r);
    proj.bias = get_row(r, proj.out_dim());
    m.projection = std::move(proj);
  }
  const auto layers = r.u32();
  if (layers == 0 || layers > 64) r.fail("implausible layer count " + std::to_string(layers));
  for (std::uint32_t i = 0; i < layers; ++i) {
    DenseLayer l;
    l.weight = get_matrix(r);
    l.bias = get_row(r, static_cast<std::size_t>(l.weight.cols()));
    m.detector.layers.push_back(std::move(l));
  }
  const auto losses = r.u32();
  if (losses > r.remaining() / 8) r.fail("truncated loss history");
  m.loss_history.resize(losses);
  for (auto& v : m.loss_history) v = r.f64();
  r.expect_end();

  // Cross-check shapes so a corrupt file fails here rather than at scoring.
  const std::size_t want_in = m.variant == ModelVariant::Concat ? m.audio_dim + m.visual_dim : m.visual_dim;
  if (m.audio_scaler.dim() != m.audio_dim || m.visual_scaler.dim() != m.visual_dim) r.fail("scaler dims disagree");
  if (m.detector.input_dim() != want_in) r.fail("detector input width disagrees with feature dims");
  if ((m.variant == ModelVariant::SharedProjection) != m.projection.has_value()) {
    r.fail("projection presence does not match the variant");
  }
  if (m.projection && (m.projection->in_dim() != m.audio_dim || m.projection->out_dim() != m.visual_dim)) {
    r.fail("projection shape disagrees with feature dims");
  }
  for (std::size_t i = 1; i < m.detector.layers.size(); ++i) {
    if (m.detector.layers[i].weight.rows() != m.detector.layers[i - 1].weight.cols()) r.fail("layer shapes do not chain");
  }
  if (m.detector.layers.back().weight.cols() != 1) r.fail("detector must end in one output");
  if (prov) *prov = p;
  return m;
}

void write_model(const AnomalyModel& model, const Provenance& prov, const std::filesystem::path& path) {
  write_file_bytes(path, encode_model(model, prov), "detector");
}

AnomalyModel read_model(const std::filesystem::path& path, Provenance* prov) {
  return decode_model(read_file_bytes(path, "detector"), prov);
}

std::vector<std::uint8_t> encode_gmm(const GmmArtifact& a, const Provenance& prov) {
  const auto& g = a.gmm;
  ByteWriter w;
  w.magic("RAG1");
  w.u8(kVersion);
  w.u64(prov.seed);
  w.u64(prov.config_hash);
  w.u8(static_cast<std::uint8_t>(g.modality));
  w.u32(static_cast<std::uint32_t>(g.components()));
  w.u32(static_cast<std::uint32_t>(g.dim()));
  for (double v : g.weights) w.f32(static_cast<float>(v));
  for (Eigen::Index i = 0; i < g.means.size(); ++i) w.f32(static_cast<float>(g.means.data()[i]));
  for (Eigen::Index i = 0; i < g.variances.size(); ++i) w.f32(static_cast<float>(g.variances.data()[i]));
  w.u8(a.calibration ? 1 : 0);
  w.f64(a.calibration ? a.calibration->scale : 0.0);
  w.f64(a.calibration ? a.calibration->shift : 0.0);
  return w.take();
}

GmmArtifact decode_gmm(std::span<const std::uint8_t> bytes, Provenance* prov) {
  ByteReader r(bytes, "gmm");
  r.expect_magic("RAG1");
  if (const auto v = r.u8(); v != kVersion) r.fail("unsupported RAG1 version " + std::to_string(v));
  Provenance p;
  p.seed = r.u64();
  p.config_hash = r.u64();
  GmmArtifact a;
  auto& g = a.gmm;
  const auto mod = r.u8();
  if (mod > 1) r.fail("unknown modality tag " + std::to_string(mod));
  g.modality = static_cast<Modality>(mod);
  const auto K = get_dim(r, "component count");
  const auto d = get_dim(r, "feature dim");
  if (K * d > (1u << 26)) r.fail("GMM too large");
  const auto w = r.f32s(K);
  const auto mu = r.f32s(K * d);
  const auto var = r.f32s(K * d);
  double total = 0.0;
  for (float x : w) {
    if (!(x >= 0.0f)) r.fail("negative mixture weight");
    total += x;
  }
  if (!(total > 0.0)) r.fail("mixture weights sum to zero");
  for (float x : w) g.weights.push_back(static_cast<double>(x) / total);
  g.means.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(d));
  g.variances.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < K * d; ++i) {
    if (!(var[i] > 0.0f)) r.fail("non-positive variance");
    g.means.data()[i] = mu[i];
    g.variances.data()[i] = std::max(static_cast<double>(var[i]), kVarianceFloor);
  }
  const auto calibrated = r.u8();
  SigmoidCalibration cal;
  cal.scale = r.f64();
  cal.shift = r.f64();
  r.expect_end();
  if (calibrated) {
    if (!(cal.scale > 0.0) || !std::isfinite(cal.scale) || !std::isfinite(cal.shift)) r.fail("invalid calibration");
    a.calibration = cal;
  }
  try {
    validate_gmm(g);
  } catch (const Error& e) {
    r.fail(e.what());
  }
  if (prov) *prov = p;
  return a;
}

void write_gmm(const GmmArtifact& a, const Provenance& prov, const std::filesystem::path& path) {
  write_file_bytes(path, encode_gmm(a, prov), "gmm");
}

GmmArtifact read_gmm(const std::filesystem::path& path, Provenance* prov) {
  return decode_gmm(read_file_bytes(path, "gmm"), prov);
}

}  // namespace robusta
