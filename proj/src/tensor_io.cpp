#include "emot/tensor_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace emot::nn {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) {
    if (d < 0) throw ParseError("negative tensor dimension");
    n *= d;
  }
  return n;
}

ConvWeights<double> conv_from(const TensorFile& f, const std::string& key) {
  const NamedTensor& w = f.at(key + ".weight");
  const NamedTensor& b = f.at(key + ".bias");
  if (w.shape.size() != 4 || w.shape[2] != w.shape[3])
    throw ShapeError(key + ".weight must be [out, in, k, k]");
  ConvWeights<double> c(static_cast<int>(w.shape[0]), static_cast<int>(w.shape[1]), static_cast<int>(w.shape[2]));
  if (b.shape != std::vector<std::int64_t>{w.shape[0]}) throw ShapeError(key + ".bias must be [out]");
  for (Eigen::Index i = 0; i < c.weight.size(); ++i) c.weight.data()[i] = w.values[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 0; i < c.bias.size(); ++i) c.bias(i) = b.values[static_cast<std::size_t>(i)];
  return c;
}

void conv_to(TensorFile& f, const std::string& key, const ConvWeights<double>& c) {
  NamedTensor w{{c.out_channels, c.in_channels, c.kernel, c.kernel},
                std::vector<double>(c.weight.data(), c.weight.data() + c.weight.size())};
  NamedTensor b{{c.out_channels}, std::vector<double>(c.bias.data(), c.bias.data() + c.bias.size())};
  f.tensors[key + ".weight"] = std::move(w);
  f.tensors[key + ".bias"] = std::move(b);
}

Eigen::VectorXd vector_from(const TensorFile& f, const std::string& key, std::int64_t n) {
  const NamedTensor& t = f.at(key);
  if (t.shape != std::vector<std::int64_t>{n})
    throw ShapeError(key + " must have " + std::to_string(n) + " entries");
  return Eigen::Map<const Eigen::VectorXd>(t.values.data(), static_cast<Eigen::Index>(n));
}

NamedTensor vector_to(const Eigen::VectorXd& v) {
  return {{v.size()}, std::vector<double>(v.data(), v.data() + v.size())};
}

}  // namespace

const NamedTensor& TensorFile::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ShapeError("missing tensor '" + name + "'");
  return it->second;
}

TensorFile decode_tensor_file(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) throw ParseError("tensor file shorter than its header length field");
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data(), 8);
  if (header_len > bytes.size() - 8) throw ParseError("corrupt header: length exceeds file size");
  const std::size_t payload = 8 + static_cast<std::size_t>(header_len);

  json header;
  try {
    header = json::parse(bytes.begin() + 8, bytes.begin() + static_cast<std::ptrdiff_t>(payload));
  } catch (const json::exception& e) {
    throw ParseError(std::string("corrupt header: ") + e.what());
  }
  if (!header.is_object()) throw ParseError("corrupt header: not a JSON object");

  TensorFile out;
  for (auto& [name, entry] : header.items()) {
    if (name == "__metadata__") {
      if (!entry.is_object()) throw ParseError("corrupt header: __metadata__ must be an object");
      for (auto& [k, v] : entry.items())
        out.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
      continue;
    }
    try {
      const std::string dtype = entry.at("dtype").get<std::string>();
      const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto offsets = entry.at("data_offsets").get<std::vector<std::uint64_t>>();
      std::size_t width = 0;
      if (dtype == "F32") width = 4;
      else if (dtype == "F64") width = 8;
      else throw ParseError("tensor '" + name + "': unsupported dtype " + dtype);
      if (offsets.size() != 2 || offsets[0] > offsets[1] || payload + offsets[1] > bytes.size())
        throw ParseError("tensor '" + name + "': data offsets out of range");
      const std::int64_t n = element_count(shape);
      if (offsets[1] - offsets[0] != static_cast<std::uint64_t>(n) * width)
        throw ParseError("tensor '" + name + "': byte size does not match shape");
      NamedTensor t{shape, std::vector<double>(static_cast<std::size_t>(n))};
      const std::uint8_t* src = bytes.data() + payload + offsets[0];
      for (std::int64_t i = 0; i < n; ++i) {
        if (width == 4) {
          float v;
          std::memcpy(&v, src + i * 4, 4);
          t.values[static_cast<std::size_t>(i)] = v;
        } else {
          std::memcpy(&t.values[static_cast<std::size_t>(i)], src + i * 8, 8);
        }
      }
      out.tensors.emplace(name, std::move(t));
    } catch (const json::exception& e) {
      throw ParseError("corrupt header entry '" + name + "': " + e.what());
    }
  }
  return out;
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open tensor file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor_file(bytes);
}

std::vector<std::uint8_t> encode_tensor_file(const TensorFile& file, DType dtype) {
  const std::size_t width = dtype == DType::f32 ? 4 : 8;
  json header = json::object();
  if (!file.metadata.empty()) header["__metadata__"] = file.metadata;
  std::vector<std::uint8_t> payload;
  for (const auto& [name, t] : file.tensors) {
    if (element_count(t.shape) != static_cast<std::int64_t>(t.values.size()))
      throw ShapeError("tensor '" + name + "': value count does not match shape");
    const std::size_t begin = payload.size();
    payload.resize(begin + t.values.size() * width);
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      if (width == 4) {
        const float v = static_cast<float>(t.values[i]);
        std::memcpy(payload.data() + begin + i * 4, &v, 4);
      } else {
        std::memcpy(payload.data() + begin + i * 8, &t.values[i], 8);
      }
    }
    header[name] = {{"dtype", width == 4 ? "F32" : "F64"},
                    {"shape", t.shape},
                    {"data_offsets", {begin, payload.size()}}};
  }
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(8);
  const std::uint64_t len = text.size();
  std::memcpy(out.data(), &len, 8);
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file, DType dtype) {
  const auto bytes = encode_tensor_file(file, dtype);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

NamedTensor to_named(const Tensor3<double>& t) {
  return {{t.channels(), t.height(), t.width()},
          std::vector<double>(t.data().data(), t.data().data() + t.data().size())};
}

Tensor3<double> to_tensor3(const NamedTensor& t) {
  if (t.shape.size() != 3) throw ShapeError("expected a [C, H, W] tensor");
  Tensor3<double> out(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]), static_cast<int>(t.shape[2]));
  for (Eigen::Index i = 0; i < out.data().size(); ++i) out.data()(i) = t.values[static_cast<std::size_t>(i)];
  return out;
}

MCDWeights<double> load_mcd_weights(const TensorFile& f, const std::string& prefix) {
  MCDWeights<double> w;
  w.conv = conv_from(f, prefix + ".conv");
  if (w.conv.kernel != 3) throw ShapeError(prefix + ".conv must be 3x3");
  const NamedTensor& dw = f.at(prefix + ".deconv.weight");
  if (dw.shape.size() != 4 || dw.shape[2] != 2 || dw.shape[3] != 2)
    throw ShapeError(prefix + ".deconv.weight must be [in, out, 2, 2]");
  w.deconv = DeconvWeights<double>(static_cast<int>(dw.shape[0]), static_cast<int>(dw.shape[1]));
  for (Eigen::Index i = 0; i < w.deconv.weight.size(); ++i)
    w.deconv.weight.data()[i] = dw.values[static_cast<std::size_t>(i)];
  w.deconv.bias = vector_from(f, prefix + ".deconv.bias", dw.shape[1]);
  w.bn = BatchNorm<double>(static_cast<int>(dw.shape[1]));
  w.bn.gamma = vector_from(f, prefix + ".bn.gamma", dw.shape[1]);
  w.bn.beta = vector_from(f, prefix + ".bn.beta", dw.shape[1]);
  w.bn.mean = vector_from(f, prefix + ".bn.mean", dw.shape[1]);
  w.bn.var = vector_from(f, prefix + ".bn.var", dw.shape[1]);
  if (auto it = f.metadata.find("leaky_slope"); it != f.metadata.end()) {
    try {
      w.leaky_slope = std::stod(it->second);
    } catch (const std::exception&) {
      throw ParseError("metadata leaky_slope is not a number");
    }
  }
  return w;
}

void store_mcd_weights(TensorFile& f, const MCDWeights<double>& w, const std::string& prefix) {
  conv_to(f, prefix + ".conv", w.conv);
  f.tensors[prefix + ".deconv.weight"] = {
      {w.deconv.in_channels, w.deconv.out_channels, 2, 2},
      std::vector<double>(w.deconv.weight.data(), w.deconv.weight.data() + w.deconv.weight.size())};
  f.tensors[prefix + ".deconv.bias"] = vector_to(w.deconv.bias);
  f.tensors[prefix + ".bn.gamma"] = vector_to(w.bn.gamma);
  f.tensors[prefix + ".bn.beta"] = vector_to(w.bn.beta);
  f.tensors[prefix + ".bn.mean"] = vector_to(w.bn.mean);
  f.tensors[prefix + ".bn.var"] = vector_to(w.bn.var);
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof buf, w.leaky_slope).ptr;
  f.metadata["leaky_slope"] = std::string(buf, end);
}

HeadWeights<double> load_head_weights(const TensorFile& f, const std::string& prefix) {
  auto branch = [&](const std::string& name) {
    const std::string k = prefix + "." + name;
    return HeadBranch<double>{conv_from(f, k + ".reduce"), conv_from(f, k + ".conv"), conv_from(f, k + ".project")};
  };
  return {branch("cls"), branch("reg"), branch("obj")};
}

void store_head_weights(TensorFile& f, const HeadWeights<double>& w, const std::string& prefix) {
  auto branch = [&](const std::string& name, const HeadBranch<double>& b) {
    const std::string k = prefix + "." + name;
    conv_to(f, k + ".reduce", b.reduce);
    conv_to(f, k + ".conv", b.conv);
    conv_to(f, k + ".project", b.project);
  };
  branch("cls", w.cls);
  branch("reg", w.reg);
  branch("obj", w.obj);
}

std::uint64_t checksum(const Tensor3<double>& t) {
  std::uint64_t hash = 1469598103934665603ull;
  for (Eigen::Index i = 0; i < t.data().size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(t.data()(i)));
    for (int b = 0; b < 4; ++b) {
      hash ^= (bits >> (8 * b)) & 0xffu;
      hash *= 1099511628211ull;
    }
  }
  return hash;
}

}  // namespace emot::nn
