#include "scope/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

namespace scope {

namespace {

constexpr char kMagic[] = {'S', 'C', 'O', 'P', 'E', 'v', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload encoding assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
  in.read(reinterpret_cast<char*>(&v), 4);
  return in.gcount() == 4;
}

bool get_u64(std::istream& in, std::uint64_t& v) {
  in.read(reinterpret_cast<char*>(&v), 8);
  return in.gcount() == 8;
}

void write_tensor(std::ostream& out, const std::string& name, const Scalar* data,
                  Index rows, Index cols) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(out, 2);
  put_u64(out, static_cast<std::uint64_t>(rows));
  put_u64(out, static_cast<std::uint64_t>(cols));
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(rows * cols * sizeof(Scalar)));
}

}  // namespace

void save_checkpoint(const ScopeNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open for write " + path);
  out.write(kMagic, sizeof kMagic);

  const Scalar patch = static_cast<Scalar>(net.patch);
  write_tensor(out, "meta.patch_size", &patch, 1, 1);
  for (const NamedParam& p : named_params(const_cast<ScopeNet&>(net))) {
    write_tensor(out, p.name, p.data, p.rows, p.cols);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

void load_checkpoint(ScopeNet& net, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);

  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }

  struct Entry {
    std::uint64_t rows, cols;
    std::vector<Scalar> data;
  };
  std::map<std::string, Entry> entries;
  for (;;) {
    std::uint32_t name_len = 0;
    if (!get_u32(in, name_len)) break;  // clean EOF
    if (name_len == 0 || name_len > 256) {
      throw std::runtime_error("checkpoint: bad name length in " + path);
    }
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    std::uint32_t rank = 0;
    if (in.gcount() != static_cast<std::streamsize>(name_len) ||
        !get_u32(in, rank) || rank != 2) {
      throw std::runtime_error("checkpoint: malformed entry in " + path);
    }
    Entry e;
    if (!get_u64(in, e.rows) || !get_u64(in, e.cols) ||
        e.rows * e.cols > (1u << 26)) {
      throw std::runtime_error("checkpoint: malformed extents in " + path);
    }
    e.data.resize(e.rows * e.cols);
    in.read(reinterpret_cast<char*>(e.data.data()),
            static_cast<std::streamsize>(e.data.size() * sizeof(Scalar)));
    if (in.gcount() !=
        static_cast<std::streamsize>(e.data.size() * sizeof(Scalar))) {
      throw std::runtime_error("checkpoint: truncated payload in " + path);
    }
    entries.emplace(std::move(name), std::move(e));
  }

  const auto take = [&](const std::string& name, Index rows, Index cols) -> const Entry& {
    const auto it = entries.find(name);
    if (it == entries.end()) {
      throw std::runtime_error("checkpoint: missing tensor " + name);
    }
    const Entry& e = it->second;
    if (e.rows != static_cast<std::uint64_t>(rows) ||
        e.cols != static_cast<std::uint64_t>(cols)) {
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    }
    return e;
  };

  const Entry& patch = take("meta.patch_size", 1, 1);
  const auto stored_patch = static_cast<Index>(patch.data[0]);
  if (stored_patch != net.patch) {
    throw std::runtime_error("checkpoint: patch size mismatch (model " +
                             std::to_string(stored_patch) + ", config " +
                             std::to_string(net.patch) + ")");
  }

  std::vector<NamedParam> params = named_params(net);
  if (entries.size() != params.size() + 1) {
    throw std::runtime_error("checkpoint: unexpected tensor count in " + path);
  }
  for (const NamedParam& p : params) {
    const Entry& e = take(p.name, p.rows, p.cols);
    std::memcpy(p.data, e.data.data(), e.data.size() * sizeof(Scalar));
  }
}

}  // namespace scope
