#include "vsf/dataset.hpp"

#include <cstring>
#include <fstream>

#include "vsf/errors.hpp"

namespace vsf {

namespace {

constexpr char kMagic[4] = {'V', 'S', 'F', '1'};

template <typename T>
void put(std::string& buf, T v) {
  // little-endian host assumed (x86); fields are fixed-width integers
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.append(tmp, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& off) {
  if (off + sizeof(T) > buf.size())
    throw FormatError(FormatError::Kind::Truncated, "truncated dataset file");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& ds) {
  const DatasetHeader& h = ds.header;
  if (ds.samples.size() != h.n_samples)
    throw FormatError(FormatError::Kind::Inconsistent,
                      "sample count does not match header");
  std::string buf;
  buf.reserve(kDatasetHeaderBytes +
              ds.samples.size() *
                  (std::size_t(h.height) * h.width + 4u * h.state_dim +
                   4u * h.label_dim + 2u));
  buf.append(kMagic, 4);
  put(buf, h.version);
  put(buf, h.n_samples);
  put(buf, h.height);
  put(buf, h.width);
  put(buf, h.state_dim);
  put(buf, h.label_dim);
  put(buf, h.n_groups);
  for (const Sample& s : ds.samples) {
    if (s.image.size() != std::size_t(h.height) * h.width ||
        s.state.size() != h.state_dim || s.label.size() != h.label_dim)
      throw FormatError(FormatError::Kind::Inconsistent,
                        "sample shape does not match header");
    buf.append(reinterpret_cast<const char*>(s.image.data()), s.image.size());
    buf.append(reinterpret_cast<const char*>(s.state.data()),
               4u * s.state.size());
    buf.append(reinterpret_cast<const char*>(s.label.data()),
               4u * s.label.size());
    put(buf, s.group_id);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  f.write(buf.data(), std::streamsize(buf.size()));
  if (!f) throw FormatError(FormatError::Kind::Io, "write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  std::size_t off = 0;
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw FormatError(FormatError::Kind::BadMagic, "bad dataset magic");
  off = 4;
  Dataset ds;
  DatasetHeader& h = ds.header;
  h.version = take<std::uint32_t>(buf, off);
  if (h.version != 1)
    throw FormatError(FormatError::Kind::BadVersion,
                      "unsupported dataset version " + std::to_string(h.version));
  h.n_samples = take<std::uint32_t>(buf, off);
  h.height = take<std::uint16_t>(buf, off);
  h.width = take<std::uint16_t>(buf, off);
  h.state_dim = take<std::uint16_t>(buf, off);
  h.label_dim = take<std::uint16_t>(buf, off);
  h.n_groups = take<std::uint16_t>(buf, off);
  const std::size_t img = std::size_t(h.height) * h.width;
  const std::size_t rec = img + 4u * h.state_dim + 4u * h.label_dim + 2u;
  if (buf.size() - off != rec * h.n_samples)
    throw FormatError(FormatError::Kind::Truncated,
                      "dataset payload size mismatch");
  ds.samples.resize(h.n_samples);
  for (Sample& s : ds.samples) {
    s.image.resize(img);
    std::memcpy(s.image.data(), buf.data() + off, img);
    off += img;
    s.state.resize(h.state_dim);
    std::memcpy(s.state.data(), buf.data() + off, 4u * h.state_dim);
    off += 4u * h.state_dim;
    s.label.resize(h.label_dim);
    std::memcpy(s.label.data(), buf.data() + off, 4u * h.label_dim);
    off += 4u * h.label_dim;
    s.group_id = take<std::uint16_t>(buf, off);
  }
  return ds;
}

}  // namespace vsf
