#include "tkg/tensor/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tkg/error.hpp"

namespace tkg::tensor {
namespace {

constexpr char kMagic[8] = {'T', 'K', 'G', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint is truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string describe(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace

std::string encode_checkpoint(const NamedTensors& tensors) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    put<std::uint64_t>(out, name.size());
    out += name;
    put<std::uint64_t>(out, t.shape().size());
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    for (double v : t.values()) put<double>(out, v);
  }
  return out;
}

NamedTensors decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw DataError("not a checkpoint file");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = in.get<std::uint64_t>();
  NamedTensors out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = in.get<std::uint64_t>();
    std::string name = in.take(name_len);
    const auto rank = in.get<std::uint64_t>();
    if (rank > 8) throw DataError("checkpoint tensor '" + name + "' has implausible rank");
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = in.get<std::uint64_t>();
      n *= d;
    }
    std::vector<double> values(n);
    for (auto& v : values) v = in.get<double>();
    out.emplace_back(std::move(name), Tensor::from_shape(std::move(shape), std::move(values)));
  }
  if (!in.done()) throw DataError("checkpoint has trailing bytes");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
  const std::string bytes = encode_checkpoint(params.entries());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

NamedTensors read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

void assign_parameters(const NamedTensors& stored, ParameterSet& params) {
  if (stored.size() != params.size()) {
    throw DataError("checkpoint holds " + std::to_string(stored.size()) + " tensors, model expects " +
                    std::to_string(params.size()));
  }
  for (const auto& [name, t] : stored) {
    if (!params.contains(name)) throw DataError("checkpoint tensor '" + name + "' is not a model parameter");
    Tensor p = params.at(name);
    if (p.shape() != t.shape()) {
      throw DataError("checkpoint tensor '" + name + "' has shape " + describe(t.shape()) + ", model expects " +
                      describe(p.shape()));
    }
    auto dst = p.mutable_values();
    const auto src = t.values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

void load_checkpoint(const std::filesystem::path& path, ParameterSet& params) {
  assign_parameters(read_checkpoint(path), params);
}

}  // namespace tkg::tensor
