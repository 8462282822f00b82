#include "softcoord/checkpoint.hpp"

#include "softcoord/csv.hpp"

#include <fstream>
#include <sstream>

namespace softcoord::nn {

namespace {
constexpr const char* kMagic = "softcoord-checkpoint";
constexpr int kVersion = 1;
}  // namespace

void Checkpoint::put(const std::string& name, const Matrix& m) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw CheckpointError("bad array name '" + name + "'");
  }
  arrays_[name] = m;
}

const Matrix& Checkpoint::get(const std::string& name) const {
  const auto it = arrays_.find(name);
  if (it == arrays_.end()) throw CheckpointError("checkpoint has no array '" + name + "'");
  return it->second;
}

std::string Checkpoint::meta(const std::string& key) const {
  const auto it = meta_.find(key);
  if (it == meta_.end()) throw CheckpointError("checkpoint has no metadata '" + key + "'");
  return it->second;
}

void Checkpoint::write(const std::filesystem::path& path) const {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out << kMagic << ' ' << kVersion << '\n';
    for (const auto& [k, v] : meta_) out << "meta " << k << ' ' << v << '\n';
    for (const auto& [name, m] : arrays_) {
      out << "array " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << csv::format(m(i, j));
        out << '\n';
      }
    }
    out.flush();
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic) throw CheckpointError(path.string() + " is not a checkpoint");
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  std::string tag;
  while (in >> tag) {
    if (tag == "meta") {
      std::string key, value;
      in >> key;
      std::getline(in >> std::ws, value);
      ck.meta_[key] = value;
    } else if (tag == "array") {
      std::string name;
      Eigen::Index rows = -1, cols = -1;
      in >> name >> rows >> cols;
      if (!in || rows < 0 || cols < 0) throw CheckpointError("bad array header in " + path.string());
      Matrix m(rows, cols);
      std::string token;
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
          if (!(in >> token)) throw CheckpointError("truncated array " + name);
          if (!csv::parse_double(token, m(i, j))) throw CheckpointError("bad number '" + token + "' in " + name);
        }
      }
      ck.arrays_[name] = std::move(m);
    } else {
      throw CheckpointError("unexpected token '" + tag + "' in " + path.string());
    }
  }
  return ck;
}

}  // namespace softcoord::nn
