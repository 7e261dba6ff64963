#include "vxf/serialization.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace vxf {

namespace {

constexpr char kMagic[6] = {'V', 'X', 'B', 'L', 'X', '\0'};

void put_bytes(std::ostream& out, const void* data, size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void put_u8(std::ostream& out, uint8_t v) { put_bytes(out, &v, 1); }

void put_u32(std::ostream& out, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
  put_bytes(out, b, 8);
}

void put_i64(std::ostream& out, int64_t v) { put_u64(out, static_cast<uint64_t>(v)); }

void put_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void get_bytes(std::istream& in, void* data, size_t n, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw ParseError(std::string("truncated layer file while reading ") + what);
  }
}

uint8_t get_u8(std::istream& in, const char* what) {
  uint8_t v;
  get_bytes(in, &v, 1, what);
  return v;
}

uint32_t get_u32(std::istream& in, const char* what) {
  uint8_t b[4];
  get_bytes(in, b, 4, what);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::istream& in, const char* what) {
  uint8_t b[8];
  get_bytes(in, b, 8, what);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

int64_t get_i64(std::istream& in, const char* what) {
  return static_cast<int64_t>(get_u64(in, what));
}

float get_f32(std::istream& in, const char* what) {
  uint32_t bits = get_u32(in, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

double get_f64(std::istream& in, const char* what) {
  uint64_t bits = get_u64(in, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

int8_t clamp_i8(int v) {
  return static_cast<int8_t>(std::clamp(v, -128, 127));
}

void write_header(std::ostream& out, const LayerFileHeader& h) {
  put_bytes(out, kMagic, sizeof(kMagic));
  put_u32(out, h.version);
  put_f64(out, h.voxel_size);
  put_u32(out, h.voxels_per_side);
  put_u8(out, static_cast<uint8_t>(h.kind));
  put_u64(out, h.block_count);
}

void write_voxel(std::ostream& out, const TsdfVoxel& v) {
  put_f32(out, v.distance);
  put_f32(out, v.weight);
  put_u8(out, v.color.r);
  put_u8(out, v.color.g);
  put_u8(out, v.color.b);
  put_u8(out, 0);
}

void write_voxel(std::ostream& out, const EsdfVoxel& v) {
  put_f32(out, v.distance);
  put_u8(out, v.flags);
  put_u8(out, static_cast<uint8_t>(clamp_i8(v.parent[0])));
  put_u8(out, static_cast<uint8_t>(clamp_i8(v.parent[1])));
  put_u8(out, static_cast<uint8_t>(clamp_i8(v.parent[2])));
}

void read_voxel(std::istream& in, TsdfVoxel* v) {
  v->distance = get_f32(in, "tsdf voxel distance");
  v->weight = get_f32(in, "tsdf voxel weight");
  v->color.r = get_u8(in, "tsdf voxel color");
  v->color.g = get_u8(in, "tsdf voxel color");
  v->color.b = get_u8(in, "tsdf voxel color");
  get_u8(in, "tsdf voxel pad");
}

void read_voxel(std::istream& in, EsdfVoxel* v) {
  v->distance = get_f32(in, "esdf voxel distance");
  v->flags = get_u8(in, "esdf voxel flags");
  v->parent[0] = static_cast<int8_t>(get_u8(in, "esdf voxel parent"));
  v->parent[1] = static_cast<int8_t>(get_u8(in, "esdf voxel parent"));
  v->parent[2] = static_cast<int8_t>(get_u8(in, "esdf voxel parent"));
}

template <typename VoxelT>
void save_layer_impl(const Layer<VoxelT>& layer, LayerKind kind, std::ostream& out) {
  LayerFileHeader h;
  h.voxel_size = layer.voxel_size();
  h.voxels_per_side = static_cast<uint32_t>(layer.voxels_per_side());
  h.kind = kind;
  h.block_count = layer.block_count();
  write_header(out, h);

  // Sort block indices so identical layers serialize identically.
  std::vector<BlockIndex> order;
  order.reserve(layer.block_count());
  for (const auto& [idx, block] : layer.blocks()) order.push_back(idx);
  std::sort(order.begin(), order.end(), [](const BlockIndex& a, const BlockIndex& b) {
    return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
  });

  for (const BlockIndex& idx : order) {
    const auto* block = layer.block_ptr(idx);
    put_i64(out, idx.x());
    put_i64(out, idx.y());
    put_i64(out, idx.z());
    for (size_t i = 0; i < block->num_voxels(); ++i) {
      write_voxel(out, block->voxel(i));
    }
  }
  if (!out) throw std::runtime_error("failed writing layer stream");
}

LayerFileHeader read_header(std::istream& in) {
  char magic[6];
  get_bytes(in, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("bad magic bytes; not a layer file");
  }
  LayerFileHeader h;
  h.version = get_u32(in, "version");
  if (h.version != 1) {
    throw ParseError("unsupported layer file version " + std::to_string(h.version));
  }
  h.voxel_size = get_f64(in, "voxel_size");
  h.voxels_per_side = get_u32(in, "voxels_per_side");
  const uint8_t kind = get_u8(in, "layer_kind");
  if (kind > 1) throw ParseError("unknown layer kind " + std::to_string(kind));
  h.kind = static_cast<LayerKind>(kind);
  h.block_count = get_u64(in, "block_count");
  if (h.voxel_size <= 0.0 || h.voxels_per_side == 0) {
    throw ParseError("invalid layer geometry in header");
  }
  return h;
}

template <typename VoxelT>
Layer<VoxelT> load_layer_impl(std::istream& in, LayerKind expected) {
  const LayerFileHeader h = read_header(in);
  if (h.kind != expected) {
    throw ParseError("layer kind mismatch: file holds a different voxel type");
  }
  Layer<VoxelT> layer(static_cast<FloatingPoint>(h.voxel_size),
                      static_cast<int>(h.voxels_per_side));
  for (uint64_t b = 0; b < h.block_count; ++b) {
    const int bx = static_cast<int>(get_i64(in, "block index"));
    const int by = static_cast<int>(get_i64(in, "block index"));
    const int bz = static_cast<int>(get_i64(in, "block index"));
    const BlockIndex idx(bx, by, bz);
    auto& block = layer.get_or_allocate_block(idx);
    for (size_t i = 0; i < block.num_voxels(); ++i) {
      read_voxel(in, &block.voxel(i));
    }
  }
  return layer;
}

}  // namespace

void save_layer(const TsdfLayer& layer, std::ostream& out) {
  save_layer_impl(layer, LayerKind::kTsdf, out);
}

void save_layer(const EsdfLayer& layer, std::ostream& out) {
  save_layer_impl(layer, LayerKind::kEsdf, out);
}

LayerFileHeader read_layer_header(std::istream& in) { return read_header(in); }

TsdfLayer load_tsdf_layer(std::istream& in) {
  return load_layer_impl<TsdfVoxel>(in, LayerKind::kTsdf);
}

EsdfLayer load_esdf_layer(std::istream& in) {
  return load_layer_impl<EsdfVoxel>(in, LayerKind::kEsdf);
}

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open layer file: " + path);
  return in;
}

}  // namespace

void save_layer_file(const TsdfLayer& layer, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write layer file: " + path);
  save_layer(layer, out);
}

void save_layer_file(const EsdfLayer& layer, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write layer file: " + path);
  save_layer(layer, out);
}

LayerFileHeader read_layer_header_file(const std::string& path) {
  auto in = open_input(path);
  return read_layer_header(in);
}

TsdfLayer load_tsdf_layer_file(const std::string& path) {
  auto in = open_input(path);
  return load_tsdf_layer(in);
}

EsdfLayer load_esdf_layer_file(const std::string& path) {
  auto in = open_input(path);
  return load_esdf_layer(in);
}

}  // namespace vxf
