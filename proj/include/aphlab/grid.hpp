#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "aphlab/coeff_field.hpp"
#include "aphlab/errors.hpp"

namespace aphlab {

/// Uniform periodic box [0, extent)^d with n_per_dim nodes per axis.
struct TorusGrid {
  int d = 1;
  double extent = 1.0;
  int n_per_dim = 16;

  double h() const { return extent / n_per_dim; }

  long num_nodes() const {
    long n = 1;
    for (int k = 0; k < d; ++k) n *= n_per_dim;
    return n;
  }

  // node index = sum_k j_k * stride_k, last axis fastest
  long stride(int axis) const {
    long s = 1;
    for (int k = d - 1; k > axis; --k) s *= n_per_dim;
    return s;
  }

  void coords(long node, int* j) const {
    for (int k = d - 1; k >= 0; --k) {
      j[k] = static_cast<int>(node % n_per_dim);
      node /= n_per_dim;
    }
  }

  void point(long node, double* x) const {
    int j[4];
    coords(node, j);
    for (int k = 0; k < d; ++k) x[k] = j[k] * h();
  }

  bool operator==(const TorusGrid& o) const {
    return d == o.d && extent == o.extent && n_per_dim == o.n_per_dim;
  }
};

/// Dense vector field on a TorusGrid; `components` values per node, node-major.
struct GridField {
  TorusGrid grid;
  int components = 1;
  std::vector<double> values;

  GridField() = default;
  GridField(const TorusGrid& g, int comps) : grid(g), components(comps) {
    values.assign(g.num_nodes() * comps, 0.0);
  }

  double& at(long node, int c) { return values[node * components + c]; }
  double at(long node, int c) const { return values[node * components + c]; }
  long size() const { return static_cast<long>(values.size()); }

  GridField& operator+=(const GridField& o) {
    for (size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
  }
  GridField& operator-=(const GridField& o) {
    for (size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
  }
  GridField& operator*=(double s) {
    for (auto& v : values) v *= s;
    return *this;
  }

  /// Debug dump, row-major over dimensions, component-innermost. Not a stable format.
  void to_csv(std::ostream& os) const {
    os << "# d=" << grid.d << " extent=" << grid.extent << " n_per_dim=" << grid.n_per_dim
       << " components=" << components << "\n";
    const long N = grid.num_nodes();
    std::vector<double> x(grid.d);
    for (long p = 0; p < N; ++p) {
      grid.point(p, x.data());
      for (int k = 0; k < grid.d; ++k) os << x[k] << ",";
      for (int c = 0; c < components; ++c) os << (c ? "," : "") << at(p, c);
      os << "\n";
    }
  }
};

inline double dot(const GridField& a, const GridField& b) {
  double s = 0;
  for (size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

/// node x -> field((x + offset) / scale), exact evaluation at nodes.
inline GridField sample_on_grid(const TensorFieldFn& f, const TorusGrid& grid, double scale = 1.0,
                                const std::vector<double>& offset = {}) {
  if (scale <= 0) throw ConfigError("sample_on_grid needs scale > 0");
  if (f.d != grid.d) throw ShapeMismatch("field/grid dimension");
  GridField out(grid, f.entries);
  const long N = grid.num_nodes();
  std::vector<double> x(grid.d), y(grid.d);
  for (long p = 0; p < N; ++p) {
    grid.point(p, x.data());
    for (int k = 0; k < grid.d; ++k)
      y[k] = (x[k] + (offset.empty() ? 0.0 : offset[k])) / scale;
    f.eval(y.data(), &out.values[p * f.entries]);
  }
  return out;
}

inline GridField sample_on_grid(const CoeffField& f, const TorusGrid& grid, double scale = 1.0,
                                const std::vector<double>& offset = {}) {
  return sample_on_grid(f.as_fn(), grid, scale, offset);
}

/// Grid average per component (compensated summation).
inline std::vector<double> grid_mean(const GridField& u) {
  const long N = u.grid.num_nodes();
  std::vector<double> mean(u.components, 0.0);
  for (int c = 0; c < u.components; ++c) {
    double sum = 0.0, comp = 0.0;
    for (long p = 0; p < N; ++p) {
      double y = u.at(p, c) - comp;
      double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    mean[c] = sum / N;
  }
  return mean;
}

}  // namespace aphlab
