#include "vsf/model_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "net_detail.hpp"
#include "vsf/errors.hpp"

namespace vsf {

namespace {

constexpr char kMagic[4] = {'V', 'S', 'F', 'M'};

template <typename T>
void put(std::string& buf, T v) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.append(tmp, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& off) {
  if (off + sizeof(T) > buf.size())
    throw FormatError(FormatError::Kind::Truncated, "truncated model file");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

void put_bytes(std::string& buf, const void* p, std::size_t n) {
  buf.append(reinterpret_cast<const char*>(p), n);
}

void take_bytes(const std::string& buf, std::size_t& off, void* p,
                std::size_t n) {
  if (off + n > buf.size())
    throw FormatError(FormatError::Kind::Truncated, "truncated model file");
  std::memcpy(p, buf.data() + off, n);
  off += n;
}

void write_header(std::string& buf, const ArchSpec& arch, FusionVariant v,
                  int state_dim, std::uint16_t flags) {
  buf.append(kMagic, 4);
  put<std::uint32_t>(buf, 1);  // version
  put<std::uint16_t>(buf, arch_id(arch));
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(v));
  put<std::uint16_t>(buf, std::uint16_t(state_dim));
  put<std::uint16_t>(buf, flags);
}

void write_tensors(std::string& buf, Model<float>& m) {
  for (const auto& t : m.state_tensors())
    put_bytes(buf, t.value, std::size_t(t.size) * 4);
}

void read_tensors(const std::string& buf, std::size_t& off, Model<float>& m) {
  for (const auto& t : m.state_tensors())
    take_bytes(buf, off, t.value, std::size_t(t.size) * 4);
}

void flush(const std::string& path, const std::string& buf) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  f.write(buf.data(), std::streamsize(buf.size()));
  if (!f) throw FormatError(FormatError::Kind::Io, "write failed: " + path);
}

ArchSpec strip_batchnorm(ArchSpec arch) {
  arch.layers.erase(std::remove_if(arch.layers.begin(), arch.layers.end(),
                                   [](const LayerSpec& l) {
                                     return l.kind == LayerKind::BatchNorm;
                                   }),
                    arch.layers.end());
  return arch;
}

}  // namespace

void save_model(const std::string& path, const Model<float>& model) {
  std::string buf;
  auto& m = const_cast<Model<float>&>(model);
  write_header(buf, model.arch(), model.variant(), model.state_dim(), 0);
  write_tensors(buf, m);
  flush(path, buf);
}

void save_quant_model(const std::string& path, const QuantModel& qm) {
  std::string buf;
  auto& m = const_cast<Model<float>&>(qm.folded);
  write_header(buf, qm.folded.arch(), qm.folded.variant(),
               qm.folded.state_dim(), 1);
  write_tensors(buf, m);
  for (const auto& cw : qm.conv_weights) {
    put<float>(buf, cw.scale);
    put_bytes(buf, cw.q.data(), cw.q.size());
  }
  for (const auto& r : qm.act_ranges) {
    put<float>(buf, r.min);
    put<float>(buf, r.max);
  }
  flush(path, buf);
}

ModelFile load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw FormatError(FormatError::Kind::BadMagic, "bad model magic");
  std::size_t off = 4;
  const auto version = take<std::uint32_t>(buf, off);
  if (version != 1)
    throw FormatError(FormatError::Kind::BadVersion,
                      "unsupported model version " + std::to_string(version));
  const auto aid = take<std::uint16_t>(buf, off);
  const auto vid = take<std::uint16_t>(buf, off);
  const auto state_dim = take<std::uint16_t>(buf, off);
  const auto flags = take<std::uint16_t>(buf, off);
  if (vid > 4)
    throw FormatError(FormatError::Kind::Inconsistent, "bad variant id");
  const auto variant = static_cast<FusionVariant>(vid);

  ModelFile out;
  if (flags == 0) {
    Model<float> m(arch_by_id(aid), variant, state_dim, 0);
    read_tensors(buf, off, m);
    out.model.emplace(std::move(m));
  } else {
    QuantModel qm{
        Model<float>(strip_batchnorm(arch_by_id(aid)), variant, state_dim, 0),
        {},
        {}};
    read_tensors(buf, off, qm.folded);
    auto& net = qm.folded.net();
    for (auto& blk : net.blocks) {
      QuantConvWeights cw;
      cw.scale = take<float>(buf, off);
      cw.q.resize(blk.conv.w.size());
      take_bytes(buf, off, cw.q.data(), cw.q.size());
      qm.conv_weights.push_back(std::move(cw));
    }
    qm.act_ranges.resize(net.blocks.size() + 1);
    for (auto& r : qm.act_ranges) {
      r.min = take<float>(buf, off);
      r.max = take<float>(buf, off);
    }
    out.qmodel.emplace(std::move(qm));
  }
  if (off != buf.size())
    throw FormatError(FormatError::Kind::Truncated,
                      "model file has trailing bytes");
  return out;
}

}  // namespace vsf
