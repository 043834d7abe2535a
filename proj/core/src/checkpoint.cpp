#include "sshg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "sshg/errors.hpp"

namespace sshg {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'H', 'G', '0', '0', '0', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      std::ostringstream os;
      os << "checkpoint truncated at byte " << pos_ << " (needed " << n << " more, have "
         << bytes_.size() - pos_ << ")";
      fail(ErrorKind::format, os.str());
    }
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const CheckpointState& state) {
  const std::size_t np = state.geometry.points();
  std::string out(kMagic, sizeof kMagic);
  out.push_back(static_cast<char>(kCheckpointVersion));
  put_f64(out, state.geometry.side_length);
  put_u32(out, static_cast<std::uint32_t>(state.geometry.grid_n));
  put_f64(out, state.geometry.spin_delta[0]);
  put_f64(out, state.geometry.spin_delta[1]);
  put_f64(out, state.rho);
  put_u32(out, static_cast<std::uint32_t>(state.points.size()));
  for (const auto& p : state.points) {
    if (p.u.size() != np || p.psi.size() != 2 * np)
      fail(ErrorKind::shape, "checkpoint point does not match the geometry header");
    for (double x : p.u.values) put_f64(out, x);
    for (const auto& z : p.psi.coeffs) {
      put_f64(out, z.real());
      put_f64(out, z.imag());
    }
    put_f64(out, p.constraint_norm);
  }
  return out;
}

CheckpointState decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    fail(ErrorKind::format, "not a checkpoint file (bad magic)");
  in.take(sizeof kMagic);
  const auto version = in.u8();
  if (version != kCheckpointVersion) {
    std::ostringstream os;
    os << "checkpoint version " << int(version) << " is not supported (expected "
       << int(kCheckpointVersion) << ")";
    fail(ErrorKind::format, os.str());
  }
  CheckpointState s;
  s.geometry.side_length = in.f64();
  s.geometry.grid_n = static_cast<int>(in.u32());
  s.geometry.spin_delta[0] = in.f64();
  s.geometry.spin_delta[1] = in.f64();
  s.rho = in.f64();
  const std::uint32_t count = in.u32();
  if (s.geometry.grid_n <= 0 || s.geometry.grid_n > (1 << 14))
    fail(ErrorKind::format, "checkpoint header has an implausible grid size");
  const std::size_t np = s.geometry.points();
  // Reject absurd headers before allocating.
  if (count > (std::size_t{1} << 40) / (np * 5 + 1)) fail(ErrorKind::format, "checkpoint header has an implausible point count");
  in.need(count * (np * 5 + 1) * 8);
  s.points.resize(count);
  for (auto& p : s.points) {
    p.u = ScalarField(np);
    for (auto& x : p.u.values) x = in.f64();
    p.psi = SpinorField(2 * np);
    for (auto& z : p.psi.coeffs) {
      const double re = in.f64();
      const double im = in.f64();
      z = cd(re, im);
    }
    p.constraint_norm = in.f64();
  }
  if (!in.done()) fail(ErrorKind::format, "trailing bytes after checkpoint payload");
  return s;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::internal, "cannot open " + tmp.string() + " for writing");
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    f.flush();
    if (!f) fail(ErrorKind::internal, "write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::internal, "cannot rename into " + path.string());
  }
}

std::filesystem::path checkpoint_save(const CheckpointState& state, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(state));
  return path;
}

CheckpointState checkpoint_load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::format, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

CheckpointState checkpoint_load(const std::filesystem::path& path, const TorusGeometry& expected) {
  auto s = checkpoint_load(path);
  if (!(s.geometry == expected)) {
    std::ostringstream os;
    os << "checkpoint grid " << s.geometry.grid_n << " (L=" << s.geometry.side_length << ", delta=("
       << s.geometry.spin_delta[0] << "," << s.geometry.spin_delta[1] << ")) is incompatible with grid "
       << expected.grid_n << " (L=" << expected.side_length << ", delta=(" << expected.spin_delta[0]
       << "," << expected.spin_delta[1] << "))";
    fail(ErrorKind::compatibility, os.str());
  }
  return s;
}

}  // namespace sshg
