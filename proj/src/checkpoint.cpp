#include "swa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "swa/crc32.hpp"

namespace swa {

namespace {

constexpr char kMagic[4] = {'S', 'W', 'A', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_f64(std::vector<unsigned char>& out, double d) {
  const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

class Reader {
public:
  explicit Reader(const std::vector<unsigned char>& b) : b_(b) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  std::size_t pos() const { return pos_; }

private:
  void need(std::size_t n) {
    if (pos_ + n > b_.size())
      throw CheckpointError(CheckpointFault::truncated, "checkpoint truncated");
  }
  const std::vector<unsigned char>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_checkpoint(const MlpState& state) {
  state.spec.validate();
  const MlpLayout layout(state.spec);
  if (state.params.size() != layout.total)
    throw CheckpointError(CheckpointFault::bad_layout,
                          "checkpoint: parameter length mismatch");
  std::vector<unsigned char> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(layout.layers.size()));
  for (const auto& lo : layout.layers) {
    put_u32(out, static_cast<std::uint32_t>(lo.in));
    put_u32(out, static_cast<std::uint32_t>(lo.out));
    out.push_back(lo.bn ? 1 : 0);
  }
  for (double v : state.params) put_f64(out, v);
  for (int l = 0; l < state.spec.n_hidden(); ++l) {
    if (!state.spec.has_bn(l)) continue;
    const auto& bn = state.bn[l];
    const int f = state.spec.layer_dims[l + 1];
    if (static_cast<int>(bn.mean.size()) != f ||
        static_cast<int>(bn.var.size()) != f)
      throw CheckpointError(CheckpointFault::bad_layout,
                            "checkpoint: BN stats length mismatch");
    for (double v : bn.mean) put_f64(out, v);
    for (double v : bn.var) put_f64(out, v);
  }
  put_u32(out, crc32_bytes(out.data(), out.size()));
  return out;
}

MlpState decode_checkpoint(const std::vector<unsigned char>& bytes,
                           Activation activation, double l2_coeff) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw CheckpointError(CheckpointFault::bad_magic, "checkpoint: bad magic");
  for (int i = 0; i < 4; ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw CheckpointError(CheckpointFault::bad_version,
                          "checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t n_layers = r.u32();
  if (n_layers == 0 || n_layers > 1000)
    throw CheckpointError(CheckpointFault::bad_layout,
                          "checkpoint: implausible layer count");
  MlpSpec spec;
  spec.activation = activation;
  spec.l2_coeff = l2_coeff;
  std::vector<bool> bn_flags;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::uint32_t in = r.u32();
    const std::uint32_t out = r.u32();
    const std::uint8_t bn = r.u8();
    if (l == 0) spec.layer_dims.push_back(static_cast<int>(in));
    else if (spec.layer_dims.back() != static_cast<int>(in))
      throw CheckpointError(CheckpointFault::bad_layout,
                            "checkpoint: layer dims do not chain");
    spec.layer_dims.push_back(static_cast<int>(out));
    if (l + 1 < n_layers) bn_flags.push_back(bn != 0);
    else if (bn != 0)
      throw CheckpointError(CheckpointFault::bad_layout,
                            "checkpoint: output layer cannot carry batch norm");
  }
  spec.batchnorm = bn_flags;
  spec.validate();

  MlpState st;
  st.spec = spec;
  const MlpLayout layout(spec);
  st.params.resize(layout.total);
  for (std::size_t i = 0; i < layout.total; ++i) st.params[i] = r.f64();
  st.bn.resize(spec.n_hidden());
  for (int l = 0; l < spec.n_hidden(); ++l) {
    if (!spec.has_bn(l)) continue;
    const int f = spec.layer_dims[l + 1];
    st.bn[l].mean.resize(f);
    st.bn[l].var.resize(f);
    for (int j = 0; j < f; ++j) st.bn[l].mean[j] = r.f64();
    for (int j = 0; j < f; ++j) st.bn[l].var[j] = r.f64();
  }
  const std::size_t payload_end = r.pos();
  const std::uint32_t stored_crc = r.u32();
  if (r.pos() != bytes.size())
    throw CheckpointError(CheckpointFault::truncated,
                          "checkpoint: trailing bytes after CRC");
  if (crc32_bytes(bytes.data(), payload_end) != stored_crc)
    throw CheckpointError(CheckpointFault::bad_crc, "checkpoint: CRC mismatch");
  return st;
}

void save_checkpoint(const MlpState& state, const std::string& path) {
  const auto bytes = encode_checkpoint(state);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write: " + path);
}

MlpState load_checkpoint(const std::string& path, Activation activation,
                         double l2_coeff) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, activation, l2_coeff);
}

}  // namespace swa
