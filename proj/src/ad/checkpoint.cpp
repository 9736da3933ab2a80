#include "hirpcn/ad/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "hirpcn/corpus.hpp"
#include "hirpcn/error.hpp"

namespace hirpcn::ad {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'H', 'I', 'R', 'P', 'C', 'N', 'C', 'K'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}

  template <typename T>
  T get() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, s_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  void read_doubles(double* dst, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(dst, s_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }

  bool done() const noexcept { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (s_.size() - pos_ < n) throw Error(ErrorCode::CheckpointFormat, "truncated checkpoint");
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::map<std::string, Matrix>& values) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, values.size());
  for (const auto& [name, m] : values) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, m.rows());
    put<std::uint64_t>(out, m.cols());
    out.append(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(double));
  }
  return out;
}

std::map<std::string, Matrix> decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw Error(ErrorCode::CheckpointFormat, "bad magic");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::CheckpointFormat, "unsupported version " + std::to_string(version));
  }
  const auto count = r.get<std::uint64_t>();
  std::map<std::string, Matrix> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    if (rank != 2) throw Error(ErrorCode::CheckpointFormat, "'" + name + "' has rank " + std::to_string(rank));
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (cols != 0 && rows > (bytes.size() / sizeof(double)) / cols) {
      throw Error(ErrorCode::CheckpointFormat, "'" + name + "' is larger than the file");
    }
    Matrix m(rows, cols);
    r.read_doubles(m.data(), m.size());
    if (!out.emplace(name, std::move(m)).second) {
      throw Error(ErrorCode::CheckpointFormat, "duplicate entry '" + name + "'");
    }
  }
  if (!r.done()) throw Error(ErrorCode::CheckpointFormat, "trailing bytes");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::map<std::string, Matrix>& values) {
  write_file_atomic(path, encode_checkpoint(values));
}

std::map<std::string, Matrix> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace hirpcn::ad
