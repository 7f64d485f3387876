#include "corrugator/field.hpp"

#include <fstream>

namespace corrugator {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
  return out;
}

template <class T>
void csv_impl(const GridField<T>& g, const std::string& path, int decimals) {
  std::ofstream out = open_out(path);
  out << "x,y,value\n";
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      out << format_real(g.x(i), decimals) << ',' << format_real(g.y(j), decimals) << ','
          << format_real(g.at(i, j), decimals) << '\n';
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

template <class T>
void obj_impl(const GridField<T>& g, const std::string& path, int decimals, const Vec2<T>& origin) {
  std::ofstream out = open_out(path);
  out << "# heightfield " << g.nx() << " x " << g.ny() << "\n";
  out << "# origin " << format_real(origin.x, decimals) << ' ' << format_real(origin.y, decimals) << "\n";
  out << "# step " << format_real(g.h(), decimals) << "\n";
  // Offsets from the origin are formed before adding i h so that windows far
  // from the origin keep their full relative resolution.
  const T x0 = g.rect().x_min - origin.x, y0 = g.rect().y_min - origin.y;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      out << "v " << format_real(T(x0 + g.h() * T(i)), decimals) << ' ' << format_real(T(y0 + g.h() * T(j)), decimals)
          << ' ' << format_real(g.at(i, j), decimals) << '\n';
  // OBJ vertex indices are 1-based.
  auto idx = [&](int i, int j) { return static_cast<long long>(j) * g.nx() + i + 1; };
  for (int j = 0; j + 1 < g.ny(); ++j)
    for (int i = 0; i + 1 < g.nx(); ++i) {
      out << "f " << idx(i, j) << ' ' << idx(i + 1, j) << ' ' << idx(i + 1, j + 1) << '\n';
      out << "f " << idx(i, j) << ' ' << idx(i + 1, j + 1) << ' ' << idx(i, j + 1) << '\n';
    }
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

}  // namespace

void write_grid_csv(const GridField<double>& g, const std::string& path, int decimals) {
  csv_impl(g, path, decimals);
}
void write_grid_csv(const GridField<Real>& g, const std::string& path, int decimals) {
  csv_impl(g, path, decimals);
}
void write_grid_obj(const GridField<double>& g, const std::string& path, int decimals,
                    const Vec2<double>& origin) {
  obj_impl(g, path, decimals, origin);
}
void write_grid_obj(const GridField<Real>& g, const std::string& path, int decimals, const Vec2<Real>& origin) {
  obj_impl(g, path, decimals, origin);
}

}  // namespace corrugator
