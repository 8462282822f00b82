#pragma once

#include "softcoord/nn.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

namespace softcoord::nn {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named parameter arrays. Stored as text with shortest round-trip decimal
/// digits, so write-then-read reproduces every bit.
class Checkpoint {
 public:
  void put(const std::string& name, const Matrix& m);
  const Matrix& get(const std::string& name) const;
  bool contains(const std::string& name) const { return arrays_.count(name) != 0; }
  const std::map<std::string, Matrix>& arrays() const { return arrays_; }

  void set_meta(const std::string& key, const std::string& value) { meta_[key] = value; }
  std::string meta(const std::string& key) const;

  template <typename Params>
  void store(const std::string& prefix, const Params& p) {
    p.visit([&](const std::string& name, const Matrix& m) { put(prefix + "." + name, m); });
  }
  /// Shapes must match the stored arrays exactly.
  template <typename Params>
  void load(const std::string& prefix, Params& p) const {
    p.visit([&](const std::string& name, Matrix& m) {
      const Matrix& src = get(prefix + "." + name);
      if (src.rows() != m.rows() || src.cols() != m.cols()) {
        throw CheckpointError("shape mismatch for " + prefix + "." + name);
      }
      m = src;
    });
  }

  void write(const std::filesystem::path& path) const;
  static Checkpoint read(const std::filesystem::path& path);

 private:
  std::map<std::string, Matrix> arrays_;
  std::map<std::string, std::string> meta_;
};

}  // namespace softcoord::nn
