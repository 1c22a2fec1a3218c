#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vsf {

/// One record: grayscale image, state vector, label vector, group id.
struct Sample {
  std::vector<std::uint8_t> image;  // row-major, height*width
  std::vector<float> state;
  std::vector<float> label;
  std::uint16_t group_id = 0;
};

/// Binary container header. Magic "VSF1", little-endian fields.
struct DatasetHeader {
  std::uint32_t version = 1;
  std::uint32_t n_samples = 0;
  std::uint16_t height = 0;
  std::uint16_t width = 0;
  std::uint16_t state_dim = 0;
  std::uint16_t label_dim = 0;
  std::uint16_t n_groups = 1;
};

// magic(4) + version(4) + n_samples(4) + 5 u16 fields
inline constexpr std::size_t kDatasetHeaderBytes = 22;

struct Dataset {
  DatasetHeader header;
  std::vector<Sample> samples;
  std::vector<std::string> state_schema;  // not serialized; runtime metadata
};

/// Writes the container; throws FormatError on I/O failure or when samples
/// are inconsistent with the header.
void write_dataset(const std::string& path, const Dataset& ds);

/// Reads the container; throws FormatError (BadMagic / BadVersion /
/// Truncated) on malformed input.
Dataset read_dataset(const std::string& path);

}  // namespace vsf
