#include "hybridgan/checkpoint.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

namespace hybridgan {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'H', 'G', 'C', 'K'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const char* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  template <typename T>
  void integer(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
  void string(const std::string& s) {
    integer<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<char>& buffer() { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::size_t end) : buf_(buf), end_(end) {}
  const char* take(std::size_t n) {
    if (n > end_ - pos_) throw IntegrityError("checkpoint is truncated");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename T>
  T integer() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(sizeof(T)));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<T>(v);
  }
  std::string string() {
    const auto n = integer<std::uint32_t>();
    const char* p = take(n);
    return std::string(p, n);
  }
  bool done() const { return pos_ == end_; }

 private:
  const std::vector<char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

const CheckpointFile::Entry& CheckpointFile::find(const std::string& name) const {
  for (const auto& e : tensors)
    if (e.name == name) return e;
  throw CompatibilityError("checkpoint lacks tensor '" + name + "'");
}

void write_checkpoint_file(const CheckpointFile& file, const fs::path& path) {
  Writer w;
  w.bytes(kMagic, 4);
  w.integer<std::uint32_t>(kCheckpointVersion);
  w.integer<std::uint8_t>(file.scalar_bytes);
  w.integer<std::uint32_t>(static_cast<std::uint32_t>(file.metadata.size()));
  for (const auto& [key, value] : file.metadata) {
    w.string(key);
    w.string(value);
  }
  w.integer<std::uint32_t>(static_cast<std::uint32_t>(file.tensors.size()));
  for (const auto& t : file.tensors) {
    w.string(t.name);
    w.integer<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
    for (std::int64_t d : t.shape) w.integer<std::int64_t>(d);
    w.integer<std::uint64_t>(t.bytes.size());
    w.bytes(t.bytes.data(), t.bytes.size());
  }
  w.integer<std::uint32_t>(crc_of(w.buffer().data(), w.buffer().size()));

  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

CheckpointFile read_checkpoint_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path.string() + "'");
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 13 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw IntegrityError("'" + path.string() + "' is not a checkpoint");
  }
  Reader header(buf, buf.size());
  header.take(4);
  const auto version = header.integer<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CompatibilityError("checkpoint format version " + std::to_string(version) + ", expected " +
                             std::to_string(kCheckpointVersion));
  }
  const std::size_t body = buf.size() - 4;
  Reader trailer(buf, buf.size());
  trailer.take(body);
  if (trailer.integer<std::uint32_t>() != crc_of(buf.data(), body)) {
    throw IntegrityError("checksum mismatch in '" + path.string() + "'");
  }

  Reader r(buf, body);
  r.take(8);
  CheckpointFile f;
  f.scalar_bytes = r.integer<std::uint8_t>();
  const auto meta_count = r.integer<std::uint32_t>();
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    std::string key = r.string();
    f.metadata[key] = r.string();
  }
  const auto tensor_count = r.integer<std::uint32_t>();
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    CheckpointFile::Entry e;
    e.name = r.string();
    const auto ndim = r.integer<std::uint32_t>();
    for (std::uint32_t d = 0; d < ndim; ++d) e.shape.push_back(r.integer<std::int64_t>());
    const auto n = r.integer<std::uint64_t>();
    const char* p = r.take(n);
    e.bytes.assign(p, p + n);
    f.tensors.push_back(std::move(e));
  }
  if (!r.done()) throw IntegrityError("trailing bytes in '" + path.string() + "'");
  return f;
}

}  // namespace hybridgan
