// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "disc/error.hpp"

namespace disc {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

void Container::put(std::string name, Tensor tensor) {
  for (auto& [n, t] : tensors) {
    if (n == name) {
      t = std::move(tensor);
      return;
    }
  }
  tensors.emplace_back(std::move(name), std::move(tensor));
}

bool Container::has(std::string_view name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return true;
  }
  return false;
}

const Tensor& Container::get(std::string_view name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw CheckpointError("container has no tensor named '" + std::string(name) + "'");
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }
  std::string_view take(std::uint64_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw CheckpointError("container is truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_container(const Container& container) {
  std::string out(kContainerMagic);
  put_u64(out, container.config.size());
  out += container.config;
  put_u64(out, container.tensors.size());
  for (const auto& [name, t] : container.tensors) {
    put_u64(out, name.size());
    out += name;
    put_u64(out, t.rank());
    for (std::size_t d : t.shape()) put_u64(out, d);
    const auto data = t.data();
    out.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(float));
  }
  return out;
}

Container decode_container(std::string_view bytes) {
  if (bytes.size() < kContainerMagic.size() || bytes.substr(0, kContainerMagic.size()) != kContainerMagic) {
    throw CheckpointError("bad magic: not a DISCVC01 container");
  }
  Reader in(bytes.substr(kContainerMagic.size()));
  Container c;
  c.config = std::string(in.take(in.u64()));
  const std::uint64_t count = in.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name(in.take(in.u64()));
    const std::uint64_t rank = in.u64();
    if (rank == 0 || rank > 8) throw CheckpointError("tensor '" + name + "' has invalid rank");
    Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& d : shape) {
      d = in.u64();
      if (d == 0 || d > (std::uint64_t{1} << 32)) throw CheckpointError("tensor '" + name + "' has invalid shape");
      numel *= d;
    }
    const auto raw = in.take(numel * sizeof(float));
    std::vector<float> values(numel);
    std::memcpy(values.data(), raw.data(), raw.size());
    c.tensors.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(values)));
  }
  if (!in.done()) throw CheckpointError("trailing bytes after tensor table");
  return c;
}

void save_container(const std::filesystem::path& path, const Container& container) {
  const std::string bytes = encode_container(container);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot write " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw CheckpointError("write failed for " + path.string());
}

Container load_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_container(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace disc
