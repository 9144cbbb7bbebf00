#include "occkit/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "occkit/error.hpp"

namespace occkit {
namespace {

constexpr char kMagic[4] = {'U', 'O', 'C', 'C'};
constexpr std::uint16_t kEndianMarker = 0xFEFF;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void vec3(const Vec3& v) {
    for (int i = 0; i < 3; ++i) f64(v[i]);
  }
  void pose(const Pose& p) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) f64(p.rotation()(r, c));
    }
    vec3(p.translation());
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

// Reads one chunk payload; overruns are reported against the chunk.
class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, std::string tag, std::size_t offset)
      : data_(data), tag_(std::move(tag)), base_(offset) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  Vec3 vec3() {
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = f64();
    return v;
  }
  Pose pose() {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
      for (int c = 0; c < 3; ++c) r(i, c) = f64();
    }
    const Vec3 t = vec3();
    return {r, t};
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  void finish() const {
    if (pos_ != data_.size()) fail("payload has " + std::to_string(remaining()) + " trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::InvariantViolation,
                "chunk " + tag_ + " at offset " + std::to_string(base_) + ": " + what);
  }
  void need(std::size_t n) const {
    if (n > remaining()) fail("payload shorter than its contents (" + std::to_string(n) + " bytes needed)");
  }

 private:
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  std::span<const std::uint8_t> data_;
  std::string tag_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

void begin_chunk(Writer& w, const char tag[4], std::size_t& length_at) {
  w.bytes(tag, 4);
  length_at = w.buffer().size();
  w.u64(0);
}

void end_chunk(Writer& w, std::size_t length_at) {
  const std::uint64_t len = w.buffer().size() - length_at - 8;
  for (int i = 0; i < 8; ++i) w.buffer()[length_at + i] = static_cast<std::uint8_t>(len >> (8 * i));
}

template <typename Fn>
void chunk(Writer& w, const char tag[4], Fn&& body) {
  std::size_t at = 0;
  begin_chunk(w, tag, at);
  body();
  end_chunk(w, at);
}

void write_bits(Writer& w, const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint8_t> packed((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  w.bytes(packed.data(), packed.size());
}

std::vector<std::uint8_t> read_bits(Reader& r, std::size_t n) {
  const auto packed = r.take((n + 7) / 8);
  std::vector<std::uint8_t> bits(n);
  for (std::size_t i = 0; i < n; ++i) bits[i] = (packed[i / 8] >> (i % 8)) & 1u;
  if (n % 8 != 0 && (packed.back() >> (n % 8)) != 0) r.fail("non-zero padding bits in bitset");
  return bits;
}

void require_spec(const FrameBundle& b, const GridSpec& s, const char* what) {
  if (!b.spec || !(*b.spec == s)) {
    throw Error(ErrorCode::InvariantViolation, std::string(what) + " spec differs from the bundle spec");
  }
}

void write_spec(Writer& w, const GridSpec& s) {
  for (int d : s.dims) w.u32(static_cast<std::uint32_t>(d));
  w.f64(s.resolution);
  w.vec3(s.origin_offset);
}

void write_box(Writer& w, const OrientedBox& b) {
  w.vec3(b.center);
  w.f64(b.yaw);
  w.f64(b.length);
  w.f64(b.width);
  w.f64(b.height);
}

OrientedBox read_box(Reader& r) {
  OrientedBox b;
  b.center = r.vec3();
  b.yaw = r.f64();
  b.length = r.f64();
  b.width = r.f64();
  b.height = r.f64();
  return b;
}

}  // namespace

const FlowField* FrameBundle::flow(FlowDirection direction) const {
  for (const auto& f : flows) {
    if (f.direction == direction) return &f;
  }
  return nullptr;
}

std::vector<std::uint8_t> encode(const FrameBundle& b) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u16(kContainerVersion);
  w.u16(kEndianMarker);

  if (b.spec) {
    b.spec->validate();
    chunk(w, "GSPC", [&] { write_spec(w, *b.spec); });
  }
  if (b.grid) {
    require_spec(b, b.grid->spec, "SEMG");
    if (b.grid->data.size() != b.spec->voxel_count()) {
      throw Error(ErrorCode::InvariantViolation, "SEMG data size does not match spec");
    }
    if (b.grid->taxonomy.size() > 0xFFFF) throw Error(ErrorCode::InvariantViolation, "taxonomy name too long");
    chunk(w, "SEMG", [&] {
      w.u16(static_cast<std::uint16_t>(b.grid->taxonomy.size()));
      w.bytes(b.grid->taxonomy.data(), b.grid->taxonomy.size());
      w.i64(b.grid->timestamp);
      w.u8(static_cast<std::uint8_t>(b.grid->frame));
      w.bytes(b.grid->data.data(), b.grid->data.size());
    });
  }
  if (b.fov) {
    require_spec(b, b.fov->spec, "FOVM");
    if (b.fov->data.size() != b.spec->voxel_count()) {
      throw Error(ErrorCode::InvariantViolation, "FOVM data size does not match spec");
    }
    chunk(w, "FOVM", [&] { write_bits(w, b.fov->data); });
  }
  for (const auto& f : b.flows) {
    require_spec(b, f.spec, "FLOW");
    f.validate();
    chunk(w, "FLOW", [&] {
      w.u8(static_cast<std::uint8_t>(f.direction));
      w.u8(static_cast<std::uint8_t>(f.frame));
      w.i64(f.timestamp);
      if (f.frame == FlowFrame::Agent) w.pose(*f.reference);
      for (double v : f.data) w.f32(static_cast<float>(v));
      write_bits(w, f.validity);
    });
  }
  if (b.ego_pose) {
    chunk(w, "POSE", [&] { w.pose(*b.ego_pose); });
  }
  if (b.annotations) {
    chunk(w, "ANNO", [&] {
      w.u32(static_cast<std::uint32_t>(b.annotations->size()));
      for (const auto& a : *b.annotations) {
        w.i64(a.agent_id);
        w.u16(a.category);
        w.f64(a.size.length);
        w.f64(a.size.width);
        w.f64(a.size.height);
        w.pose(a.agent_to_ego);
      }
    });
  }
  if (!b.gmms.empty()) {
    chunk(w, "GMMC", [&] {
      w.u32(static_cast<std::uint32_t>(b.gmms.size()));
      for (const auto& g : b.gmms) {
        g.validate();
        w.u16(g.category);
        w.u32(static_cast<std::uint32_t>(g.components.size()));
        for (const auto& c : g.components) {
          w.f64(c.weight);
          w.vec3(c.mean);
          for (int r = 0; r < 3; ++r) {
            for (int k = 0; k < 3; ++k) w.f64(c.covariance(r, k));
          }
        }
      }
    });
  }
  if (b.tracks) {
    chunk(w, "TRAK", [&] {
      w.u32(static_cast<std::uint32_t>(b.tracks->size()));
      for (const auto& t : *b.tracks) {
        w.i64(t.track_id);
        w.u16(t.category);
        w.u32(static_cast<std::uint32_t>(t.frames.size()));
        for (const auto& p : t.frames) {
          w.i64(p.timestamp);
          w.i32(p.object_id);
          w.vec3(p.centroid);
          write_box(w, p.box);
        }
      }
    });
  }
  return std::move(w.buffer());
}

FrameBundle decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "missing UOCC header at offset 0");
  }
  const std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  const std::uint16_t marker = static_cast<std::uint16_t>(bytes[6] | (bytes[7] << 8));
  if (marker != kEndianMarker) throw Error(ErrorCode::BadMagic, "bad endianness marker at offset 6");
  if (version != kContainerVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "container version " + std::to_string(version) + " at offset 4");
  }

  FrameBundle b;
  std::size_t pos = 8;
  while (pos < bytes.size()) {
    const std::size_t chunk_at = pos;
    if (bytes.size() - pos < 12) {
      const std::string which = bytes.size() - pos >= 4
                                    ? "chunk " + std::string(reinterpret_cast<const char*>(bytes.data() + pos), 4) + " header"
                                    : "chunk header";
      throw Error(ErrorCode::TruncatedChunk, which + " cut short at offset " + std::to_string(pos));
    }
    const std::string tag(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(bytes[pos + 4 + i]) << (8 * i);
    pos += 12;
    if (len > bytes.size() - pos) {
      throw Error(ErrorCode::TruncatedChunk, "chunk " + tag + " at offset " + std::to_string(chunk_at) +
                                                 " declares " + std::to_string(len) + " bytes, " +
                                                 std::to_string(bytes.size() - pos) + " available");
    }
    Reader r(bytes.subspan(pos, len), tag, chunk_at);
    pos += len;

    auto spec_for = [&]() -> const GridSpec& {
      if (!b.spec) r.fail("appears before GSPC");
      return *b.spec;
    };

    if (tag == "GSPC") {
      GridSpec s;
      for (auto& d : s.dims) {
        const std::uint32_t v = r.u32();
        if (v == 0 || v > 1u << 20) r.fail("grid dimension out of range");
        d = static_cast<int>(v);
      }
      s.resolution = r.f64();
      s.origin_offset = r.vec3();
      r.finish();
      try {
        s.validate();
      } catch (const Error& e) {
        r.fail(e.what());
      }
      if (s.voxel_count() > (std::size_t{1} << 32)) r.fail("grid too large");
      b.spec = s;
    } else if (tag == "SEMG") {
      const GridSpec& s = spec_for();
      SemanticGrid g;
      g.spec = s;
      const std::uint16_t name_len = r.u16();
      const auto name = r.take(name_len);
      g.taxonomy.assign(name.begin(), name.end());
      g.timestamp = r.i64();
      const std::uint8_t frame = r.u8();
      if (frame > 1) r.fail("unknown frame tag");
      g.frame = static_cast<FrameTag>(frame);
      if (r.remaining() != s.voxel_count()) r.fail("voxel payload does not match the grid spec");
      const auto data = r.take(s.voxel_count());
      g.data.assign(data.begin(), data.end());
      try {
        g.validate(builtin_taxonomy(g.taxonomy));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UnknownTaxonomy) r.fail(e.what());
      }
      b.grid = std::move(g);
    } else if (tag == "FOVM") {
      const GridSpec& s = spec_for();
      FovMask m{s, read_bits(r, s.voxel_count())};
      r.finish();
      b.fov = std::move(m);
    } else if (tag == "FLOW") {
      const GridSpec& s = spec_for();
      const std::uint8_t dir = r.u8();
      const std::uint8_t frame = r.u8();
      if (dir > 1 || frame > 1) r.fail("unknown flow direction or frame");
      FlowField f;
      f.spec = s;
      f.direction = static_cast<FlowDirection>(dir);
      f.frame = static_cast<FlowFrame>(frame);
      f.timestamp = r.i64();
      if (f.frame == FlowFrame::Agent) {
        f.reference = r.pose();
        if (!f.reference->is_valid()) r.fail("reference pose is not a rigid transform");
      }
      const std::size_t n = s.voxel_count();
      if (r.remaining() != n * 12 + (n + 7) / 8) r.fail("flow payload does not match the grid spec");
      f.data.resize(3 * n);
      for (auto& v : f.data) v = r.f32();
      f.validity = read_bits(r, n);
      r.finish();
      try {
        f.validate();
      } catch (const Error& e) {
        r.fail(e.what());
      }
      b.flows.push_back(std::move(f));
    } else if (tag == "POSE") {
      Pose p = r.pose();
      r.finish();
      if (!p.is_valid()) r.fail("ego pose is not a rigid transform");
      b.ego_pose = p;
    } else if (tag == "ANNO") {
      const std::uint32_t count = r.u32();
      if (static_cast<std::uint64_t>(count) * 130 != r.remaining()) r.fail("annotation count does not match payload");
      std::vector<ObjectAnnotation> list;
      list.reserve(count);
      for (std::uint32_t i = 0; i < count; ++i) {
        ObjectAnnotation a;
        a.agent_id = r.i64();
        const std::uint16_t cat = r.u16();
        if (cat > 255) r.fail("annotation category out of range");
        a.category = static_cast<ClassId>(cat);
        a.size.length = r.f64();
        a.size.width = r.f64();
        a.size.height = r.f64();
        a.agent_to_ego = r.pose();
        try {
          a.validate();
        } catch (const Error& e) {
          r.fail(e.what());
        }
        list.push_back(a);
      }
      b.annotations = std::move(list);
    } else if (tag == "GMMC") {
      const std::uint32_t count = r.u32();
      std::vector<GmmModel> models;
      for (std::uint32_t i = 0; i < count; ++i) {
        GmmModel g;
        const std::uint16_t cat = r.u16();
        if (cat > 255) r.fail("GMM category out of range");
        g.category = static_cast<ClassId>(cat);
        const std::uint32_t k = r.u32();
        if (static_cast<std::uint64_t>(k) * 104 > r.remaining()) r.fail("GMM component count exceeds payload");
        for (std::uint32_t c = 0; c < k; ++c) {
          GmmComponent comp;
          comp.weight = r.f64();
          comp.mean = r.vec3();
          for (int row = 0; row < 3; ++row) {
            for (int col = 0; col < 3; ++col) comp.covariance(row, col) = r.f64();
          }
          g.components.push_back(comp);
        }
        try {
          g.validate();
        } catch (const Error& e) {
          r.fail(e.what());
        }
        models.push_back(std::move(g));
      }
      r.finish();
      b.gmms = std::move(models);
    } else if (tag == "TRAK") {
      const std::uint32_t count = r.u32();
      std::vector<Track> tracks;
      for (std::uint32_t i = 0; i < count; ++i) {
        Track t;
        t.track_id = r.i64();
        const std::uint16_t cat = r.u16();
        if (cat > 255) r.fail("track category out of range");
        t.category = static_cast<ClassId>(cat);
        const std::uint32_t n = r.u32();
        if (static_cast<std::uint64_t>(n) * 92 > r.remaining()) r.fail("track length exceeds payload");
        for (std::uint32_t k = 0; k < n; ++k) {
          TrackPoint p;
          p.timestamp = r.i64();
          p.object_id = r.i32();
          p.centroid = r.vec3();
          p.box = read_box(r);
          if (!t.frames.empty() && p.timestamp <= t.frames.back().timestamp) {
            r.fail("track timestamps must increase");
          }
          t.frames.push_back(p);
        }
        tracks.push_back(std::move(t));
      }
      r.finish();
      b.tracks = std::move(tracks);
    }
    // Unknown tags are skipped.
  }
  return b;
}

void write_bundle(const std::filesystem::path& path, const FrameBundle& bundle) {
  const auto bytes = encode(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvariantViolation, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::InvariantViolation, "write failed for " + path.string());
}

FrameBundle read_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvariantViolation, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace occkit
