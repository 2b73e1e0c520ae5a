#include "pvc/container.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace pvc {

namespace {

constexpr char kMagic[4] = {'P', 'V', 'C', 'S'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("container: truncated file");
  return v;
}

}  // namespace

void write_container(const std::filesystem::path& path, const StreamHeader& header,
                     const std::vector<PairPacket>& packets) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write(kMagic, sizeof(kMagic));
  put<uint32_t>(os, kVersion);
  put<int32_t>(os, header.width);
  put<int32_t>(os, header.height);
  put<int64_t>(os, header.frame_count);
  put<int32_t>(os, header.base_qp);
  put<uint8_t>(os, static_cast<uint8_t>(header.mode));
  put<int32_t>(os, header.refresh_period);
  put<int32_t>(os, header.intra_period);
  put<int32_t>(os, header.latent_channels);
  put<uint32_t>(os, static_cast<uint32_t>(packets.size()));

  for (const PairPacket& p : packets) {
    const Tensor& v = p.latent.values;
    const uint32_t n = static_cast<uint32_t>(v.size());
    const uint32_t payload = 4u + 1 + 1 + 8 + 8 + 4 + 4 + 4 + 4 + 4 * n;
    put<uint32_t>(os, payload);
    put<uint32_t>(os, static_cast<uint32_t>(p.pair_index));
    put<uint8_t>(os, static_cast<uint8_t>(p.qp.qp_first));
    put<uint8_t>(os, static_cast<uint8_t>(p.qp.qp_second));
    put<double>(os, p.rate.total_bits);
    put<uint64_t>(os, p.prior_digest);
    put<int32_t>(os, v.c());
    put<int32_t>(os, v.h());
    put<int32_t>(os, v.w());
    put<uint32_t>(os, n);
    for (size_t i = 0; i < v.size(); i++) {
      const float f = v[i];
      if (std::fabs(f) > 2.0e9f) throw NumericError("latent symbol out of int32 range");
      put<int32_t>(os, static_cast<int32_t>(std::llround(f)));
    }
  }
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

std::pair<StreamHeader, std::vector<PairPacket>> read_container(
    const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  char magic[4];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError("'" + path.string() + "' is not a packet container");
  const uint32_t version = get<uint32_t>(is);
  if (version != kVersion)
    throw FormatError("container version " + std::to_string(version) + " unsupported");

  StreamHeader h;
  h.version = version;
  h.width = get<int32_t>(is);
  h.height = get<int32_t>(is);
  h.frame_count = get<int64_t>(is);
  h.base_qp = get<int32_t>(is);
  h.mode = static_cast<CodingMode>(get<uint8_t>(is));
  h.refresh_period = get<int32_t>(is);
  h.intra_period = get<int32_t>(is);
  h.latent_channels = get<int32_t>(is);

  const uint32_t count = get<uint32_t>(is);
  if (count > (1u << 24)) throw FormatError("container: unreasonable packet count");
  std::vector<PairPacket> packets(count);
  for (uint32_t i = 0; i < count; i++) {
    PairPacket& p = packets[i];
    const uint32_t payload = get<uint32_t>(is);
    p.pair_index = static_cast<int>(get<uint32_t>(is));
    p.qp.qp_first = get<uint8_t>(is);
    p.qp.qp_second = get<uint8_t>(is);
    p.rate.total_bits = get<double>(is);
    p.rate.per_frame_bits = {p.rate.total_bits / 2.0, p.rate.total_bits / 2.0};
    p.prior_digest = get<uint64_t>(is);
    const int32_t c = get<int32_t>(is);
    const int32_t hh = get<int32_t>(is);
    const int32_t ww = get<int32_t>(is);
    const uint32_t n = get<uint32_t>(is);
    if (c <= 0 || hh <= 0 || ww <= 0 ||
        static_cast<uint64_t>(c) * hh * ww != n)
      throw FormatError("container: bad latent shape in packet " + std::to_string(i));
    if (payload != 4u + 1 + 1 + 8 + 8 + 4 + 4 + 4 + 4 + 4 * n)
      throw FormatError("container: payload length mismatch in packet " + std::to_string(i));
    p.latent.values = Tensor(c, hh, ww);
    for (uint32_t j = 0; j < n; j++)
      p.latent.values[j] = static_cast<float>(get<int32_t>(is));
  }
  return {h, std::move(packets)};
}

}  // namespace pvc
