#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "simpfem/mesh.hpp"
#include "simpfem/optimizer.hpp"

namespace simpfem {

/// Writes `content` to a sibling temp file and renames it over `path`, so
/// readers see either the old file or the complete new one.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot rename onto " + path.string());
  }
}

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_escape(const std::string& field) {
  const bool quote = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// One record terminated by CRLF.
inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(fields[i]);
  }
  out += "\r\n";
  return out;
}

inline std::string iteration_csv(const std::vector<IterationRecord>& history) {
  std::string out = csv_row({"iter", "objective", "compliance", "regularizer", "volume",
                             "residual", "step", "basin_exit"});
  for (const auto& r : history) {
    out += csv_row({std::to_string(r.iter), format_double(r.objective),
                    format_double(r.compliance), format_double(r.regularizer),
                    format_double(r.volume), format_double(r.residual), format_double(r.step),
                    r.basin_exit ? "1" : "0"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Legacy ASCII VTK, structured grid.

class VtkWriter {
 public:
  explicit VtkWriter(MeshPtr mesh, std::string title = "simpfem")
      : mesh_(std::move(mesh)), title_(std::move(title)) {}

  VtkWriter& point_scalar(const std::string& name, const Eigen::VectorXd& v) {
    check(v.size(), mesh_->num_nodes(), name);
    point_.push_back({name, v, 1});
    return *this;
  }

  /// Interleaved (x, y) nodal values, written as 3-vectors.
  VtkWriter& point_vector(const std::string& name, const Eigen::VectorXd& v) {
    check(v.size(), 2 * static_cast<Eigen::Index>(mesh_->num_nodes()), name);
    point_.push_back({name, v, 2});
    return *this;
  }

  VtkWriter& cell_scalar(const std::string& name, const Eigen::VectorXd& v) {
    check(v.size(), mesh_->num_elements(), name);
    cell_.push_back({name, v, 1});
    return *this;
  }

  /// Adds a scalar field to point or cell data according to its space.
  VtkWriter& field(const std::string& name, const ScalarField& f) {
    return f.space == Space::Q1 ? point_scalar(name, f.coeffs) : cell_scalar(name, f.coeffs);
  }

  std::string str() const {
    const Mesh& m = *mesh_;
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    os << "# vtk DataFile Version 3.0\n" << title_ << "\nASCII\nDATASET STRUCTURED_GRID\n";
    os << "DIMENSIONS " << m.nx() + 1 << ' ' << m.ny() + 1 << " 1\n";
    os << "POINTS " << m.num_nodes() << " double\n";
    for (int n = 0; n < m.num_nodes(); ++n) {
      const Vec2 p = m.node(n);
      os << p.x << ' ' << p.y << " 0\n";
    }
    if (!point_.empty()) {
      os << "POINT_DATA " << m.num_nodes() << '\n';
      for (const auto& a : point_) write_array(os, a);
    }
    if (!cell_.empty()) {
      os << "CELL_DATA " << m.num_elements() << '\n';
      for (const auto& a : cell_) write_array(os, a);
    }
    return os.str();
  }

  void write(const std::filesystem::path& path) const { atomic_write(path, str()); }

 private:
  struct Array {
    std::string name;
    Eigen::VectorXd values;
    int components;
  };

  static void check(Eigen::Index got, Eigen::Index want, const std::string& name) {
    if (got != want) throw InvalidArgument("vtk array '" + name + "' has the wrong length");
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
      throw InvalidArgument("vtk array names must be non-empty without whitespace");
    }
  }

  static void write_array(std::ostream& os, const Array& a) {
    if (a.components == 1) {
      os << "SCALARS " << a.name << " double 1\nLOOKUP_TABLE default\n";
      for (Eigen::Index i = 0; i < a.values.size(); ++i) os << a.values[i] << '\n';
    } else {
      os << "VECTORS " << a.name << " double\n";
      for (Eigen::Index i = 0; i + 1 < a.values.size(); i += 2) {
        os << a.values[i] << ' ' << a.values[i + 1] << " 0\n";
      }
    }
  }

  MeshPtr mesh_;
  std::string title_;
  std::vector<Array> point_;
  std::vector<Array> cell_;
};

// ---------------------------------------------------------------------------
// Coordinate-format sparse matrix export.

template <typename Sparse>
std::string matrix_market(const Sparse& A) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  for (int k = 0; k < A.outerSize(); ++k) {
    for (typename Sparse::InnerIterator it(A, k); it; ++it) {
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
  return os.str();
}

}  // namespace simpfem
