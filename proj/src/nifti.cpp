#include "forge/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "forge/error.hpp"

namespace forge {

namespace {

#pragma pack(push, 1)
struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope, scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348);

enum : std::int16_t {
  DT_UINT8 = 2, DT_INT16 = 4, DT_INT32 = 8, DT_FLOAT32 = 16, DT_FLOAT64 = 64,
  DT_INT8 = 256, DT_UINT16 = 512, DT_UINT32 = 768, DT_INT64 = 1024, DT_UINT64 = 1280,
};

int bytes_per_voxel(std::int16_t dt) {
  switch (dt) {
    case DT_UINT8: case DT_INT8: return 1;
    case DT_INT16: case DT_UINT16: return 2;
    case DT_INT32: case DT_UINT32: case DT_FLOAT32: return 4;
    case DT_FLOAT64: case DT_INT64: case DT_UINT64: return 8;
    default: return 0;
  }
}

template <typename T>
void byteswap_inplace(T& v) {
  auto* b = reinterpret_cast<unsigned char*>(&v);
  std::reverse(b, b + sizeof(T));
}

void swap_header(Nifti1Header& h) {
  byteswap_inplace(h.sizeof_hdr);
  byteswap_inplace(h.extents);
  byteswap_inplace(h.session_error);
  for (auto& d : h.dim) byteswap_inplace(d);
  byteswap_inplace(h.intent_p1); byteswap_inplace(h.intent_p2); byteswap_inplace(h.intent_p3);
  byteswap_inplace(h.intent_code);
  byteswap_inplace(h.datatype);
  byteswap_inplace(h.bitpix);
  byteswap_inplace(h.slice_start);
  for (auto& p : h.pixdim) byteswap_inplace(p);
  byteswap_inplace(h.vox_offset);
  byteswap_inplace(h.scl_slope); byteswap_inplace(h.scl_inter);
  byteswap_inplace(h.slice_end);
  byteswap_inplace(h.cal_max); byteswap_inplace(h.cal_min);
  byteswap_inplace(h.slice_duration);
  byteswap_inplace(h.toffset);
  byteswap_inplace(h.glmax); byteswap_inplace(h.glmin);
  byteswap_inplace(h.qform_code); byteswap_inplace(h.sform_code);
  byteswap_inplace(h.quatern_b); byteswap_inplace(h.quatern_c); byteswap_inplace(h.quatern_d);
  byteswap_inplace(h.qoffset_x); byteswap_inplace(h.qoffset_y); byteswap_inplace(h.qoffset_z);
  for (int i = 0; i < 4; ++i) {
    byteswap_inplace(h.srow_x[i]); byteswap_inplace(h.srow_y[i]); byteswap_inplace(h.srow_z[i]);
  }
}

class GzFile {
 public:
  GzFile(const std::filesystem::path& path, const char* mode) : path_(path) {
    f_ = gzopen(path.c_str(), mode);
    if (!f_) throw IoError("cannot open " + path.string());
  }
  ~GzFile() {
    if (f_) gzclose(f_);
  }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;

  void read(void* dst, std::size_t bytes) {
    auto* p = static_cast<char*>(dst);
    while (bytes > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(bytes, 1u << 30));
      const int got = gzread(f_, p, chunk);
      if (got <= 0) throw FormatError(path_.string() + ": truncated NIfTI file");
      p += got;
      bytes -= static_cast<std::size_t>(got);
    }
  }
  void skip(std::size_t bytes) {
    std::vector<char> tmp(bytes);
    if (bytes) read(tmp.data(), bytes);
  }
  void write(const void* src, std::size_t bytes) {
    const auto* p = static_cast<const char*>(src);
    while (bytes > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(bytes, 1u << 30));
      const int put = gzwrite(f_, p, chunk);
      if (put <= 0) throw IoError("write failed for " + path_.string());
      p += put;
      bytes -= static_cast<std::size_t>(put);
    }
  }
  void close() {
    if (f_ && gzclose(f_) != Z_OK) {
      f_ = nullptr;
      throw IoError("close failed for " + path_.string());
    }
    f_ = nullptr;
  }

 private:
  std::filesystem::path path_;
  gzFile f_ = nullptr;
};

bool is_gz(const std::filesystem::path& path) {
  return path.extension() == ".gz";
}

struct RawImage {
  Nifti1Header header{};
  std::vector<double> values;  // scaled, in file (Fortran) order
  Eigen::Matrix4d affine = Eigen::Matrix4d::Identity();
  Dims3 dims{};
  std::size_t frames = 1;
};

Eigen::Matrix4d affine_from_header(const Nifti1Header& h) {
  Eigen::Matrix4d a = Eigen::Matrix4d::Identity();
  if (h.sform_code > 0) {
    for (int c = 0; c < 4; ++c) {
      a(0, c) = h.srow_x[c];
      a(1, c) = h.srow_y[c];
      a(2, c) = h.srow_z[c];
    }
    return a;
  }
  const double dx = h.pixdim[1] > 0 ? h.pixdim[1] : 1.0;
  const double dy = h.pixdim[2] > 0 ? h.pixdim[2] : 1.0;
  const double dz = h.pixdim[3] > 0 ? h.pixdim[3] : 1.0;
  if (h.qform_code > 0) {
    const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    const double a0 = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
    Eigen::Matrix3d r;
    r << a0 * a0 + b * b - c * c - d * d, 2 * (b * c - a0 * d), 2 * (b * d + a0 * c),
        2 * (b * c + a0 * d), a0 * a0 + c * c - b * b - d * d, 2 * (c * d - a0 * b),
        2 * (b * d - a0 * c), 2 * (c * d + a0 * b), a0 * a0 + d * d - c * c - b * b;
    const double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
    Eigen::Matrix3d s = Eigen::Vector3d(dx, dy, dz * qfac).asDiagonal();
    a.topLeftCorner<3, 3>() = r * s;
    a(0, 3) = h.qoffset_x;
    a(1, 3) = h.qoffset_y;
    a(2, 3) = h.qoffset_z;
    return a;
  }
  a(0, 0) = dx;
  a(1, 1) = dy;
  a(2, 2) = dz;
  return a;
}

template <typename T>
void decode(const std::vector<unsigned char>& bytes, bool swap, std::vector<double>& out) {
  const std::size_t n = bytes.size() / sizeof(T);
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, bytes.data() + i * sizeof(T), sizeof(T));
    if (swap) byteswap_inplace(v);
    out[i] = static_cast<double>(v);
  }
}

RawImage read_raw(const std::filesystem::path& path) {
  GzFile f(path, "rb");
  RawImage img;
  auto& h = img.header;
  f.read(&h, sizeof(h));
  bool swap = false;
  if (h.sizeof_hdr != 348) {
    Nifti1Header probe = h;
    swap_header(probe);
    if (probe.sizeof_hdr != 348) {
      throw FormatError(path.string() + ": not a NIfTI-1 file (sizeof_hdr)");
    }
    h = probe;
    swap = true;
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0 && std::memcmp(h.magic, "ni1", 4) != 0) {
    throw FormatError(path.string() + ": bad NIfTI magic");
  }
  if (std::memcmp(h.magic, "ni1", 4) == 0) {
    throw FormatError(path.string() + ": split .hdr/.img pairs are not supported");
  }
  const int ndim = h.dim[0];
  if (ndim < 1 || ndim > 7) throw FormatError(path.string() + ": invalid dim[0]");
  for (int i = 1; i <= ndim; ++i) {
    if (h.dim[i] < 1) throw FormatError(path.string() + ": non-positive dimension");
  }
  for (int a = 0; a < 3; ++a) {
    img.dims[a] = (a + 1 <= ndim) ? static_cast<std::size_t>(h.dim[a + 1]) : 1;
  }
  for (int i = 4; i <= ndim; ++i) img.frames *= static_cast<std::size_t>(h.dim[i]);
  const int bpv = bytes_per_voxel(h.datatype);
  if (bpv == 0) {
    throw DatatypeError(path.string() + ": unsupported NIfTI datatype " +
                        std::to_string(h.datatype));
  }
  if (h.vox_offset < 348) throw FormatError(path.string() + ": invalid vox_offset");
  f.skip(static_cast<std::size_t>(h.vox_offset) - sizeof(h));

  const std::size_t count = img.dims[0] * img.dims[1] * img.dims[2] * img.frames;
  std::vector<unsigned char> bytes(count * static_cast<std::size_t>(bpv));
  f.read(bytes.data(), bytes.size());
  switch (h.datatype) {
    case DT_UINT8: decode<std::uint8_t>(bytes, swap, img.values); break;
    case DT_INT8: decode<std::int8_t>(bytes, swap, img.values); break;
    case DT_INT16: decode<std::int16_t>(bytes, swap, img.values); break;
    case DT_UINT16: decode<std::uint16_t>(bytes, swap, img.values); break;
    case DT_INT32: decode<std::int32_t>(bytes, swap, img.values); break;
    case DT_UINT32: decode<std::uint32_t>(bytes, swap, img.values); break;
    case DT_INT64: decode<std::int64_t>(bytes, swap, img.values); break;
    case DT_UINT64: decode<std::uint64_t>(bytes, swap, img.values); break;
    case DT_FLOAT32: decode<float>(bytes, swap, img.values); break;
    case DT_FLOAT64: decode<double>(bytes, swap, img.values); break;
    default: break;
  }
  if (h.scl_slope != 0.0f && std::isfinite(h.scl_slope) &&
      (h.scl_slope != 1.0f || h.scl_inter != 0.0f)) {
    for (auto& v : img.values) v = v * h.scl_slope + h.scl_inter;
  }
  img.affine = affine_from_header(h);
  return img;
}

/// Permutation/flip bringing stored axes to canonical order.
struct Reorientation {
  std::array<int, 3> source_axis{0, 1, 2};  // canonical axis a reads stored axis source_axis[a]
  std::array<bool, 3> flip{false, false, false};
  bool identity() const {
    return source_axis == std::array<int, 3>{0, 1, 2} && !flip[0] && !flip[1] && !flip[2];
  }
};

Reorientation plan_reorientation(const Eigen::Matrix4d& affine) {
  Reorientation r;
  const Eigen::Matrix3d m = affine.topLeftCorner<3, 3>();
  std::array<bool, 3> world_used{false, false, false};
  std::array<bool, 3> axis_used{false, false, false};
  // Greedy pairing of stored axes with world axes by largest direction cosine.
  for (int pass = 0; pass < 3; ++pass) {
    double best = -1.0;
    int best_axis = 0, best_world = 0;
    for (int ax = 0; ax < 3; ++ax) {
      if (axis_used[ax]) continue;
      const double norm = m.col(ax).norm();
      for (int w = 0; w < 3; ++w) {
        if (world_used[w]) continue;
        const double c = std::abs(m(w, ax)) / norm;
        if (c > best) {
          best = c;
          best_axis = ax;
          best_world = w;
        }
      }
    }
    axis_used[best_axis] = true;
    world_used[best_world] = true;
    r.source_axis[best_world] = best_axis;
    r.flip[best_world] = m(best_world, best_axis) < 0.0;
  }
  return r;
}

/// Reorders file-order frames to canonical order and returns the new geometry.
Geometry reorient(RawImage& img, std::vector<double>& out) {
  const Reorientation r = plan_reorientation(img.affine);
  const Dims3 src = img.dims;
  Dims3 dst{};
  for (int a = 0; a < 3; ++a) dst[a] = src[r.source_axis[a]];

  // canonical index c -> stored index s
  Eigen::Matrix4d perm = Eigen::Matrix4d::Zero();
  perm(3, 3) = 1.0;
  for (int a = 0; a < 3; ++a) {
    const int s = r.source_axis[a];
    if (r.flip[a]) {
      perm(s, a) = -1.0;
      perm(s, 3) = static_cast<double>(src[s] - 1);
    } else {
      perm(s, a) = 1.0;
    }
  }
  Geometry geom(dst, img.affine * perm);
  const std::size_t n = src[0] * src[1] * src[2];
  out.resize(n * img.frames);
  if (r.identity()) {
    out = std::move(img.values);
    return geom;
  }
  for (std::size_t f = 0; f < img.frames; ++f) {
    const double* in = img.values.data() + f * n;
    double* o = out.data() + f * n;
    for (std::size_t z = 0; z < dst[2]; ++z) {
      for (std::size_t y = 0; y < dst[1]; ++y) {
        for (std::size_t x = 0; x < dst[0]; ++x) {
          const std::size_t c[3] = {x, y, z};
          std::size_t s[3];
          for (int a = 0; a < 3; ++a) {
            const int sa = r.source_axis[a];
            s[sa] = r.flip[a] ? src[sa] - 1 - c[a] : c[a];
          }
          o[x + dst[0] * (y + dst[1] * z)] = in[s[0] + src[0] * (s[1] + src[1] * s[2])];
        }
      }
    }
  }
  return geom;
}

void fill_header(Nifti1Header& h, const Geometry& g, int ndim, std::size_t frames,
                 std::int16_t datatype) {
  std::memset(&h, 0, sizeof(h));
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = static_cast<std::int16_t>(ndim);
  for (int a = 0; a < 3; ++a) {
    if (g.dims()[a] > 32767) throw PreconditionError("NIfTI-1 dimension limit exceeded");
    h.dim[a + 1] = static_cast<std::int16_t>(g.dims()[a]);
  }
  h.dim[4] = static_cast<std::int16_t>(frames);
  for (int i = 5; i < 8; ++i) h.dim[i] = 1;
  h.datatype = datatype;
  h.bitpix = static_cast<std::int16_t>(bytes_per_voxel(datatype) * 8);
  const Eigen::Matrix4d& a = g.affine();
  Eigen::Matrix3d m = a.topLeftCorner<3, 3>();
  Eigen::Vector3d vs(g.voxel_size()[0], g.voxel_size()[1], g.voxel_size()[2]);
  Eigen::Matrix3d r = m * vs.cwiseInverse().asDiagonal();
  double qfac = 1.0;
  if (r.determinant() < 0) {
    qfac = -1.0;
    r.col(2) *= -1.0;
  }
  h.pixdim[0] = static_cast<float>(qfac);
  for (int i = 0; i < 3; ++i) h.pixdim[i + 1] = static_cast<float>(vs[i]);
  for (int i = 4; i < 8; ++i) h.pixdim[i] = 1.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.xyzt_units = 2 | 8;  // mm, seconds
  h.qform_code = 1;
  h.sform_code = 1;
  // Rotation to quaternion; r is orthonormal up to rounding.
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  h.quatern_b = static_cast<float>(q.x());
  h.quatern_c = static_cast<float>(q.y());
  h.quatern_d = static_cast<float>(q.z());
  h.qoffset_x = static_cast<float>(a(0, 3));
  h.qoffset_y = static_cast<float>(a(1, 3));
  h.qoffset_z = static_cast<float>(a(2, 3));
  for (int c = 0; c < 4; ++c) {
    h.srow_x[c] = static_cast<float>(a(0, c));
    h.srow_y[c] = static_cast<float>(a(1, c));
    h.srow_z[c] = static_cast<float>(a(2, c));
  }
  std::memcpy(h.magic, "n+1", 4);
}

template <typename Stored>
void write_file(const std::filesystem::path& path, const Nifti1Header& h,
                const std::vector<Stored>& data) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  GzFile f(path, is_gz(path) ? "wb6" : "wbT");
  f.write(&h, sizeof(h));
  const char extension[4] = {0, 0, 0, 0};
  f.write(extension, sizeof(extension));
  f.write(data.data(), data.size() * sizeof(Stored));
  f.close();
}

}  // namespace

NiftiInfo read_nifti_info(const std::filesystem::path& path) {
  GzFile f(path, "rb");
  Nifti1Header h;
  f.read(&h, sizeof(h));
  if (h.sizeof_hdr != 348) {
    swap_header(h);
    if (h.sizeof_hdr != 348) throw FormatError(path.string() + ": not a NIfTI-1 file");
  }
  NiftiInfo info;
  info.ndim = h.dim[0];
  for (int i = 0; i < 7; ++i) info.dim[i] = h.dim[i + 1];
  info.datatype = h.datatype;
  return info;
}

LabelVolume load_label_volume(const std::filesystem::path& path) {
  RawImage img = read_raw(path);
  if (img.frames != 1) {
    throw FormatError(path.string() + ": label volume must be 3D");
  }
  std::vector<double> values;
  Geometry geom = reorient(img, values);
  std::vector<Label> labels(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v) || std::abs(v - std::round(v)) > 1e-9) {
      throw DatatypeError(path.string() + ": non-integer label value " +
                          std::to_string(v) + " at voxel " + std::to_string(i));
    }
    if (v < 0 || v > std::numeric_limits<Label>::max()) {
      throw DatatypeError(path.string() + ": label value " + std::to_string(v) +
                          " outside the 16-bit unsigned range");
    }
    labels[i] = static_cast<Label>(std::lround(v));
  }
  return LabelVolume(std::move(geom), std::move(labels));
}

IntensityVolume load_intensity_volume(const std::filesystem::path& path) {
  RawImage img = read_raw(path);
  if (img.frames != 1) throw FormatError(path.string() + ": expected a 3D volume");
  std::vector<double> values;
  Geometry geom = reorient(img, values);
  std::vector<float> out(values.begin(), values.end());
  return IntensityVolume(std::move(geom), std::move(out));
}

ProbVolume load_prob_volume(const std::filesystem::path& path) {
  RawImage img = read_raw(path);
  const std::size_t frames = img.frames;
  std::vector<double> values;
  Geometry geom = reorient(img, values);
  // float32 storage: renormalize away the rounding so the sum invariant holds.
  const std::size_t n = geom.voxel_count();
  for (std::size_t v = 0; v < n; ++v) {
    double s = 0.0;
    for (std::size_t k = 0; k < frames; ++k) s += values[k * n + v];
    if (s > 0.0 && std::abs(s - 1.0) < 1e-5) {
      for (std::size_t k = 0; k < frames; ++k) values[k * n + v] /= s;
    }
  }
  return ProbVolume(std::move(geom), frames, std::move(values));
}

void save_volume(const LabelVolume& volume, const std::filesystem::path& path) {
  Nifti1Header h;
  fill_header(h, volume.geometry(), 3, 1, DT_UINT16);
  std::vector<Label> data(volume.values().begin(), volume.values().end());
  write_file(path, h, data);
}

void save_volume(const IntensityVolume& volume, const std::filesystem::path& path) {
  Nifti1Header h;
  fill_header(h, volume.geometry(), 3, 1, DT_FLOAT32);
  std::vector<float> data(volume.values().begin(), volume.values().end());
  write_file(path, h, data);
}

void save_volume(const ProbVolume& volume, const std::filesystem::path& path) {
  Nifti1Header h;
  fill_header(h, volume.geometry(), 4, volume.channels(), DT_FLOAT32);
  std::vector<float> data(volume.values().begin(), volume.values().end());
  write_file(path, h, data);
}

}  // namespace forge
