#pragma once

#include "corrugator/basis.hpp"
#include "corrugator/expr.hpp"
#include "corrugator/numeric.hpp"
#include "corrugator/taylor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace corrugator {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluable map R^2 -> R returning its Taylor expansion at a point.
template <class T>
class ScalarField {
 public:
  using Fn = std::function<Taylor2<T>(const Vec2<T>&, int)>;

  ScalarField() : fn_([](const Vec2<T>&, int order) { return Taylor2<T>(order); }) {}
  explicit ScalarField(Fn fn) : fn_(std::move(fn)) {}

  static ScalarField from_expr(const Expr& e) {
    return ScalarField([e](const Vec2<T>& p, int order) { return corrugator::eval<T>(e, p, order); });
  }
  static ScalarField constant(const T& c) {
    return ScalarField([c](const Vec2<T>&, int order) { return Taylor2<T>::constant(order, c); });
  }

  Taylor2<T> eval(const Vec2<T>& p, int order) const { return fn_(p, order); }
  T value(const Vec2<T>& p) const { return fn_(p, 0).value(); }
  Jet<T> jet(const Vec2<T>& p, int order) const { return to_jet(fn_(p, order), order); }

 private:
  Fn fn_;
};

template <class T>
struct VectorField2 {
  ScalarField<T> c1, c2;
};

template <class T>
struct SymMatField {
  ScalarField<T> b11, b12, b22;

  Sym2<Taylor2<T>> eval(const Vec2<T>& p, int order) const {
    return {b11.eval(p, order), b12.eval(p, order), b22.eval(p, order)};
  }
  Sym2<T> value(const Vec2<T>& p) const { return {b11.value(p), b12.value(p), b22.value(p)}; }
};

template <class T>
Sym2<T> values(const Sym2<Taylor2<T>>& m) {
  return {m.b11.value(), m.b12.value(), m.b22.value()};
}

// A - (1/2 grad v (x) grad v + sym grad w) at p, expanded to `order`. The
// fields v and w are evaluated at order + 1.
template <class T>
Sym2<Taylor2<T>> defect_at(const SymMatField<T>& a, const ScalarField<T>& v, const VectorField2<T>& w,
                           const Vec2<T>& p, int order) {
  const Taylor2<T> vt = v.eval(p, order + 1);
  const Taylor2<T> w1 = w.c1.eval(p, order + 1);
  const Taylor2<T> w2 = w.c2.eval(p, order + 1);
  const Taylor2<T> vx = vt.dx(), vy = vt.dy();
  const Sym2<Taylor2<T>> am = a.eval(p, order);
  return {am.b11 - vx * vx / T(2) - w1.dx(), am.b12 - vx * vy / T(2) - (w1.dy() + w2.dx()) / T(2),
          am.b22 - vy * vy / T(2) - w2.dy()};
}

// The defect as a field, together with its frame coefficients.
template <class T>
struct Defect {
  SymMatField<T> d;

  Sym2<T> value(const Vec2<T>& p) const { return d.value(p); }
  Coefficients<T> coefficients(const Vec2<T>& p) const { return decompose(value(p)); }
};

template <class T>
Defect<T> assemble_defect(const SymMatField<T>& a, const ScalarField<T>& v, const VectorField2<T>& w) {
  auto component = [a, v, w](int c) {
    return ScalarField<T>([a, v, w, c](const Vec2<T>& p, int order) {
      const Sym2<Taylor2<T>> m = defect_at(a, v, w, p, order);
      return c == 0 ? m.b11 : c == 1 ? m.b12 : m.b22;
    });
  };
  return Defect<T>{SymMatField<T>{component(0), component(1), component(2)}};
}

// Uniform grid on rect with nodes x_i = x_min + i h, i = 0..nx-1, row-major
// in y (index j * nx + i).
template <class T>
class GridField {
 public:
  GridField() = default;
  GridField(const Rect<T>& rect, const T& h) : rect_(rect), h_(h) {
    validate_rect(rect);
    if (!(h > 0)) throw ConfigError("grid step must be positive");
    if (h > rect.x_max - rect.x_min || h > rect.y_max - rect.y_min)
      throw ConfigError("grid step exceeds the rectangle side");
    using std::round;
    nx_ = static_cast<int>(to_double(round((rect.x_max - rect.x_min) / h))) + 1;
    ny_ = static_cast<int>(to_double(round((rect.y_max - rect.y_min) / h))) + 1;
    if (nx_ < 2 || ny_ < 2) throw ConfigError("grid step exceeds the rectangle side");
    values_.assign(static_cast<std::size_t>(nx_) * ny_, T(0));
  }

  const Rect<T>& rect() const { return rect_; }
  const T& h() const { return h_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return values_.size(); }
  T x(int i) const { return rect_.x_min + h_ * T(i); }
  T y(int j) const { return rect_.y_min + h_ * T(j); }
  Vec2<T> point(int i, int j) const { return {x(i), y(j)}; }
  T& at(int i, int j) { return values_[static_cast<std::size_t>(j) * nx_ + i]; }
  const T& at(int i, int j) const { return values_[static_cast<std::size_t>(j) * nx_ + i]; }
  std::vector<T>& data() { return values_; }
  const std::vector<T>& data() const { return values_; }

  bool same_shape(const GridField& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && rect_.x_min == o.rect_.x_min && rect_.y_min == o.rect_.y_min &&
           h_ == o.h_;
  }

 private:
  Rect<T> rect_{};
  T h_{};
  int nx_ = 0, ny_ = 0;
  std::vector<T> values_;
};

template <class T>
GridField<T> sample_fn(const std::function<T(const Vec2<T>&)>& f, const Rect<T>& rect, const T& h) {
  GridField<T> g(rect, h);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) g.at(i, j) = f(g.point(i, j));
  return g;
}

template <class T>
GridField<T> sample(const ScalarField<T>& f, const Rect<T>& rect, const T& h) {
  return sample_fn<T>([&f](const Vec2<T>& p) { return f.value(p); }, rect, h);
}

// Fourth-order first derivative: centered 5-point stencil in the interior,
// one-sided 5-point stencils on the two outermost layers.
template <class T>
GridField<T> fd_partial(const GridField<T>& g, int axis) {
  const int n = axis == 0 ? g.nx() : g.ny();
  if (n < 5) throw ShapeError("finite differences need at least 5 grid points along the axis");
  GridField<T> out = g;
  const T inv = T(1) / (T(12) * g.h());
  const int m = axis == 0 ? g.ny() : g.nx();
  std::vector<T> f(n), d(n);
  for (int line = 0; line < m; ++line) {
    for (int k = 0; k < n; ++k) f[k] = axis == 0 ? g.at(k, line) : g.at(line, k);
    d[0] = (T(-25) * f[0] + T(48) * f[1] - T(36) * f[2] + T(16) * f[3] - T(3) * f[4]) * inv;
    d[1] = (T(-3) * f[0] - T(10) * f[1] + T(18) * f[2] - T(6) * f[3] + f[4]) * inv;
    for (int k = 2; k < n - 2; ++k) d[k] = (f[k - 2] - T(8) * f[k - 1] + T(8) * f[k + 1] - f[k + 2]) * inv;
    d[n - 2] = (T(3) * f[n - 1] + T(10) * f[n - 2] - T(18) * f[n - 3] + T(6) * f[n - 4] - f[n - 5]) * inv;
    d[n - 1] =
        (T(25) * f[n - 1] - T(48) * f[n - 2] + T(36) * f[n - 3] - T(16) * f[n - 4] + T(3) * f[n - 5]) * inv;
    for (int k = 0; k < n; ++k) (axis == 0 ? out.at(k, line) : out.at(line, k)) = d[k];
  }
  return out;
}

template <class T>
struct GridSym {
  GridField<T> b11, b12, b22;
  Sym2<T> at(int i, int j) const { return {b11.at(i, j), b12.at(i, j), b22.at(i, j)}; }
};

// Defect on a grid from sampled A, v, w using finite differences.
template <class T>
GridSym<T> assemble_defect_grid(const GridSym<T>& a, const GridField<T>& v, const GridField<T>& w1,
                                const GridField<T>& w2) {
  for (const GridField<T>* g : {&a.b11, &a.b12, &a.b22, &w1, &w2})
    if (!g->same_shape(v)) throw ShapeError("defect inputs live on different grids");
  const GridField<T> vx = fd_partial(v, 0), vy = fd_partial(v, 1);
  const GridField<T> w1x = fd_partial(w1, 0), w1y = fd_partial(w1, 1);
  const GridField<T> w2x = fd_partial(w2, 0), w2y = fd_partial(w2, 1);
  GridSym<T> d{a.b11, a.b12, a.b22};
  for (std::size_t k = 0; k < v.size(); ++k) {
    const T gx = vx.data()[k], gy = vy.data()[k];
    d.b11.data()[k] -= gx * gx / T(2) + w1x.data()[k];
    d.b12.data()[k] -= gx * gy / T(2) + (w1y.data()[k] + w2x.data()[k]) / T(2);
    d.b22.data()[k] -= gy * gy / T(2) + w2y.data()[k];
  }
  return d;
}

template <class T>
T grid_max_abs(const GridField<T>& g) {
  using std::abs;
  T m = T(0);
  for (const T& v : g.data())
    if (abs(v) > m) m = abs(v);
  return m;
}

template <class T>
T grid_max_frobenius(const GridSym<T>& g) {
  T m = T(0);
  for (int j = 0; j < g.b11.ny(); ++j)
    for (int i = 0; i < g.b11.nx(); ++i) {
      const T f = frobenius(g.at(i, j));
      if (f > m) m = f;
    }
  return m;
}

// CSV "x,y,value" in lexicographic order (x outer, y inner).
void write_grid_csv(const GridField<double>& g, const std::string& path, int decimals);
void write_grid_csv(const GridField<Real>& g, const std::string& path, int decimals);

// Wavefront OBJ heightfield; quads split into two triangles. Coordinates are
// written relative to `origin`, which is recorded in a header comment.
void write_grid_obj(const GridField<double>& g, const std::string& path, int decimals,
                    const Vec2<double>& origin = {0.0, 0.0});
void write_grid_obj(const GridField<Real>& g, const std::string& path, int decimals, const Vec2<Real>& origin);

}  // namespace corrugator
