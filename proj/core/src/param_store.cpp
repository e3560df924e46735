#include "delrank/param_store.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace delrank {

namespace {

constexpr char kMagic[8] = {'D', 'R', 'P', 'K', '0', '0', '0', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64(os, bits);
}

double read_f64(std::istream& is) {
  const std::uint64_t bits = read_u64(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

void ParamStore::add(const std::string& name, Tensor value) {
  if (name.empty()) throw std::invalid_argument("ParamStore::add: empty name");
  auto [it, inserted] = params_.emplace(name, std::move(value));
  if (!inserted) throw std::invalid_argument("ParamStore::add: duplicate parameter '" + name + "'");
}

bool ParamStore::contains(const std::string& name) const { return params_.count(name) != 0; }

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

void save_checkpoint(const ParamStore& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, 8);
  write_u64(os, params.size());
  for (const auto& [name, t] : params) {
    write_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, t.rank());
    for (std::size_t d : t.shape()) write_u64(os, d);
    for (std::size_t i = 0; i < t.numel(); ++i) write_f64(os, t[i]);
  }
  if (!os) throw std::runtime_error("save_checkpoint: write failed for '" + path + "'");
}

ParamStore load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("load_checkpoint: '" + path + "' is not a parameter checkpoint");
  }
  const std::uint64_t count = read_u64(is);
  ParamStore store;
  for (std::uint64_t p = 0; p < count; ++p) {
    const std::uint64_t name_len = read_u64(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    const std::uint64_t rank = read_u64(is);
    std::vector<std::size_t> shape(rank);
    for (std::uint64_t d = 0; d < rank; ++d) shape[d] = read_u64(is);
    Tensor t = Tensor::zeros(shape);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = read_f64(is);
    if (!is) throw std::runtime_error("load_checkpoint: truncated file '" + path + "'");
    store.add(name, std::move(t));
  }
  return store;
}

}  // namespace delrank
