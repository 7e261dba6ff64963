#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "vxf/layer.h"

namespace vxf {

/// Malformed magic/version/header or truncated payload.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

enum class LayerKind : uint8_t { kTsdf = 0, kEsdf = 1 };

struct LayerFileHeader {
  uint32_t version = 1;
  double voxel_size = 0.0;
  uint32_t voxels_per_side = 0;
  LayerKind kind = LayerKind::kTsdf;
  uint64_t block_count = 0;
};

// Binary layer file, little-endian throughout:
//   magic "VXBLX\0", u32 version=1, f64 voxel_size, u32 voxels_per_side,
//   u8 layer_kind (0=TSDF, 1=ESDF), u64 block_count, then per block
//   3x i64 block index plus the dense voxel payload in x-fastest order.
// TSDF voxel payload: f32 distance, f32 weight, 3x u8 color, u8 pad.
// ESDF voxel payload: f32 distance, u8 flags, 3x i8 parent (Euclidean-mode
// offsets are clamped to the i8 range; exact for d_max/voxel_size <= 127).

void save_layer(const TsdfLayer& layer, std::ostream& out);
void save_layer(const EsdfLayer& layer, std::ostream& out);
void save_layer_file(const TsdfLayer& layer, const std::string& path);
void save_layer_file(const EsdfLayer& layer, const std::string& path);

LayerFileHeader read_layer_header(std::istream& in);
LayerFileHeader read_layer_header_file(const std::string& path);

TsdfLayer load_tsdf_layer(std::istream& in);
EsdfLayer load_esdf_layer(std::istream& in);
TsdfLayer load_tsdf_layer_file(const std::string& path);
EsdfLayer load_esdf_layer_file(const std::string& path);

}  // namespace vxf
