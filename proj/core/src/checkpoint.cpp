#include "attnorm/model.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace attnorm {
namespace {

constexpr std::array<char, 8> kMagic{'A', 'T', 'N', 'R', 'M', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open checkpoint for writing: " + path.string());
  }
  template <class T>
  void put(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_matrix(const Matrix& m) {
    put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw Error("failed writing checkpoint: " + path.string());
  }

private:
  std::ofstream out_;
};

class Reader {
public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw Error("cannot open checkpoint: " + path.string());
  }
  template <class T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw Error("truncated checkpoint: " + path_.string());
    return v;
  }
  Matrix get_matrix(Eigen::Index rows, Eigen::Index cols) {
    const auto r = get<std::uint64_t>();
    const auto c = get<std::uint64_t>();
    if (r != static_cast<std::uint64_t>(rows) || c != static_cast<std::uint64_t>(cols)) {
      throw Error("checkpoint tensor shape does not match its config: " + path_.string());
    }
    Matrix m(rows, cols);
    in_.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in_) throw Error("truncated checkpoint: " + path_.string());
    return m;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

private:
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  Writer w(path);
  for (char c : kMagic) w.put(c);
  w.put(kVersion);
  const auto& c = params.config;
  w.put(c.k);
  w.put(c.feature_dim);
  w.put(c.heads);
  for (auto v : c.mlp_widths) w.put(v);
  w.put(c.ffn_hidden);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.fc_widths.size()));
  for (auto v : c.fc_widths) w.put(v);
  w.put(c.seed);
  w.put<std::uint8_t>(c.learn_temperature ? 1 : 0);
  for (const auto* t : params.tensors()) w.put_matrix(*t);
  w.finish(path);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  for (char expected : kMagic) {
    if (r.get<char>() != expected) throw Error("not a model checkpoint: " + path.string());
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw Error("unsupported checkpoint version " + std::to_string(version));

  ModelConfig c;
  c.k = r.get<std::uint32_t>();
  c.feature_dim = r.get<std::uint32_t>();
  c.heads = r.get<std::uint32_t>();
  for (auto& v : c.mlp_widths) v = r.get<std::uint32_t>();
  c.ffn_hidden = r.get<std::uint32_t>();
  const auto fc_layers = r.get<std::uint32_t>();
  if (fc_layers == 0 || fc_layers > 64) throw Error("corrupt checkpoint header: " + path.string());
  c.fc_widths.resize(fc_layers);
  for (auto& v : c.fc_widths) v = r.get<std::uint32_t>();
  c.seed = r.get<std::uint64_t>();
  c.learn_temperature = r.get<std::uint8_t>() != 0;
  c.validate();

  // Shapes come from a freshly initialised model of the same config.
  ModelParams params = init_params(c);
  for (auto* t : params.tensors()) *t = r.get_matrix(t->rows(), t->cols());
  if (!r.at_end()) throw Error("trailing bytes in checkpoint: " + path.string());
  return params;
}

}  // namespace attnorm
