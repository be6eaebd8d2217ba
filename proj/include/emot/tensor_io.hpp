#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "emot/nn_blocks.hpp"

namespace emot::nn {

/// One entry of a tensor file. Values are held as double regardless of the stored dtype.
struct NamedTensor {
  std::vector<std::int64_t> shape;
  std::vector<double> values;
};

/// Weight/tensor container. On disk: an 8-byte little-endian header length, a JSON header
///   {"__metadata__": {...}, "<name>": {"dtype": "F32"|"F64", "shape": [...],
///                                      "data_offsets": [begin, end]}, ...}
/// and the raw little-endian payload, offsets relative to the end of the header.
struct TensorFile {
  std::map<std::string, NamedTensor> tensors;
  std::map<std::string, std::string> metadata;

  const NamedTensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors.count(name) != 0; }
};

enum class DType { f32, f64 };

TensorFile read_tensor_file(const std::filesystem::path& path);
TensorFile decode_tensor_file(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_tensor_file(const TensorFile& file, DType dtype = DType::f32);
void write_tensor_file(const std::filesystem::path& path, const TensorFile& file, DType dtype = DType::f32);

NamedTensor to_named(const Tensor3<double>& t);
Tensor3<double> to_tensor3(const NamedTensor& t);

/// Keys: <prefix>.conv.{weight,bias}, <prefix>.deconv.{weight,bias},
/// <prefix>.bn.{gamma,beta,mean,var}; slope from metadata "leaky_slope".
MCDWeights<double> load_mcd_weights(const TensorFile& file, const std::string& prefix = "mcd");
void store_mcd_weights(TensorFile& file, const MCDWeights<double>& w, const std::string& prefix = "mcd");

/// Keys: <prefix>.{cls,reg,obj}.{reduce,conv,project}.{weight,bias}.
HeadWeights<double> load_head_weights(const TensorFile& file, const std::string& prefix = "head");
void store_head_weights(TensorFile& file, const HeadWeights<double>& w, const std::string& prefix = "head");

/// FNV-1a over the float32 encodings of the values, in storage order.
std::uint64_t checksum(const Tensor3<double>& t);

}  // namespace emot::nn
