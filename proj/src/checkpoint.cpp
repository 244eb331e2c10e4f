// Copyright 2026 The tiger-retrieval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tiger/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "tiger/io.hpp"

namespace tiger {

using json = nlohmann::json;

namespace {

constexpr char kMagic[4] = {'T', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class U>
  U le(const char* what) {
    need(sizeof(U), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }

  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kVersion);
  std::string body;
  std::uint32_t count = 0;
  visit_params(ck.params, [&](const std::string& name, const Tensor& t) {
    ++count;
    put_le<std::uint16_t>(body, static_cast<std::uint16_t>(name.size()));
    body += name;
    put_le<std::uint8_t>(body, static_cast<std::uint8_t>(t.rank()));
    for (const std::size_t d : t.shape()) put_le<std::uint32_t>(body, static_cast<std::uint32_t>(d));
    for (const float v : t.data()) put_le<std::uint32_t>(body, std::bit_cast<std::uint32_t>(v));
  });
  put_le<std::uint32_t>(out, count);
  out += body;

  json cfg;
  cfg["format_version"] = kVersion;
  cfg["dims"] = ck.params.dims;
  cfg["model"] = ck.params.arch;
  cfg["train"] = ck.train;
  cfg["loss_history"] = ck.loss_history;
  cfg["meta"] = ck.meta;
  const std::string text = cfg.dump();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(4, "magic") != std::string(kMagic, 4)) {
    throw FormatError("checkpoint has bad magic (expected TGCK)");
  }
  const auto version = in.le<std::uint32_t>("version");
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = in.le<std::uint32_t>("tensor count");
  std::map<std::string, Tensor> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = in.le<std::uint16_t>("tensor name length");
    std::string name = in.take(name_len, "tensor name");
    const auto rank = in.le<std::uint8_t>("tensor rank");
    Shape shape(rank);
    for (auto& d : shape) d = in.le<std::uint32_t>("tensor dims");
    std::vector<float> data(shape_numel(shape));
    for (auto& v : data) v = std::bit_cast<float>(in.le<std::uint32_t>("tensor data"));
    if (!tensors.emplace(name, Tensor(std::move(shape), std::move(data))).second) {
      throw FormatError("checkpoint repeats tensor '" + name + "'");
    }
  }
  const auto json_len = in.le<std::uint32_t>("config length");
  const std::string text = in.take(json_len, "config JSON");
  if (!in.done()) throw FormatError("checkpoint has trailing bytes");

  json cfg;
  try {
    cfg = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  Checkpoint ck;
  try {
    if (cfg.at("format_version").get<std::uint32_t>() != kVersion) {
      throw FormatError("checkpoint config format_version mismatch");
    }
    const InputDims dims = cfg.at("dims").get<InputDims>();
    const Architecture arch = cfg.at("model").get<Architecture>();
    ck.train = cfg.at("train").get<TrainConfig>();
    ck.loss_history = cfg.at("loss_history").get<std::vector<double>>();
    ck.meta = cfg.value("meta", json::object());
    ck.params = init_model(dims, arch, 0);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  } catch (const ConfigError& e) {
    throw ConsistencyError(std::string("checkpoint config: ") + e.what());
  }

  std::size_t matched = 0;
  visit_params(ck.params, [&](const std::string& name, Tensor& t) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw ConsistencyError("checkpoint lacks tensor '" + name + "'");
    }
    if (it->second.shape() != t.shape()) {
      throw ConsistencyError("checkpoint tensor '" + name + "' has shape " +
                             shape_str(it->second.shape()) + ", architecture expects " +
                             shape_str(t.shape()));
    }
    t = std::move(it->second);
    ++matched;
  });
  if (matched != tensors.size()) {
    throw ConsistencyError("checkpoint holds tensors the architecture does not use");
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace tiger
