#include "shearbayes/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shearbayes/errors.hpp"

namespace shearbayes {

std::shared_ptr<const Mesh> Mesh::build(const Rect& domain, double dx) {
  if (dx <= 0.0) throw ConfigError("mesh step dx must be positive");
  const double w = domain.width();
  const double h = domain.height();
  if (w <= 0.0 || h <= 0.0) throw ConfigError("domain rectangle is degenerate");
  if (dx > w * (1.0 + 1e-12) || dx > h * (1.0 + 1e-12))
    throw ConfigError("mesh step dx=" + std::to_string(dx) +
                      " exceeds a domain side length");

  auto mesh = std::shared_ptr<Mesh>(new Mesh());
  mesh->domain_ = domain;
  mesh->nx_ = static_cast<int>(std::max<long long>(1, std::llround(w / dx)));
  mesh->ny_ = static_cast<int>(std::max<long long>(1, std::llround(h / dx)));
  mesh->hx_ = w / mesh->nx_;
  mesh->hy_ = h / mesh->ny_;

  const int nx = mesh->nx_, ny = mesh->ny_;
  mesh->sigma_.reserve(static_cast<std::size_t>(nx));
  mesh->artificial_.reserve(static_cast<std::size_t>(nx + 2 * ny));
  for (int i = 0; i < nx; ++i) {
    mesh->sigma_.push_back({mesh->node_id(i, ny), mesh->node_id(i + 1, ny), mesh->hx_});
    mesh->artificial_.push_back({mesh->node_id(i, 0), mesh->node_id(i + 1, 0), mesh->hx_});
  }
  for (int j = 0; j < ny; ++j) {
    mesh->artificial_.push_back({mesh->node_id(0, j), mesh->node_id(0, j + 1), mesh->hy_});
    mesh->artificial_.push_back({mesh->node_id(nx, j), mesh->node_id(nx, j + 1), mesh->hy_});
  }
  return mesh;
}

Vec2 Mesh::node(int id) const {
  const int stride = nx_ + 1;
  return node(id % stride, id / stride);
}

Vec2 Mesh::node(int i, int j) const {
  return {domain_.x_min + i * hx_, domain_.y_min + j * hy_};
}

std::array<int, 3> Mesh::element(int e) const {
  const int cell = e / 2;
  const int ci = cell % nx_;
  const int cj = cell / nx_;
  const int n00 = node_id(ci, cj);
  const int n10 = node_id(ci + 1, cj);
  const int n11 = node_id(ci + 1, cj + 1);
  const int n01 = node_id(ci, cj + 1);
  if (e % 2 == 0) return {n00, n10, n11};
  return {n00, n11, n01};
}

Vec2 Mesh::centroid(int e) const {
  const auto nodes = element(e);
  const Vec2 p0 = node(nodes[0]);
  const Vec2 p1 = node(nodes[1]);
  const Vec2 p2 = node(nodes[2]);
  return {(p0.x + p1.x + p2.x) / 3.0, (p0.y + p1.y + p2.y) / 3.0};
}

Mesh::InterpStencil Mesh::locate(const Vec2& p) const {
  const double tol = 1e-12 * std::max({1.0, std::abs(domain_.x_max), std::abs(domain_.y_max),
                                       std::abs(domain_.x_min), std::abs(domain_.y_min)});
  if (p.x < domain_.x_min - tol || p.x > domain_.x_max + tol ||
      p.y < domain_.y_min - tol || p.y > domain_.y_max + tol)
    throw DomainError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                      ") lies outside the mesh domain");

  int ci = static_cast<int>(std::floor((p.x - domain_.x_min) / hx_));
  int cj = static_cast<int>(std::floor((p.y - domain_.y_min) / hy_));
  ci = std::clamp(ci, 0, nx_ - 1);
  cj = std::clamp(cj, 0, ny_ - 1);

  const double xi = (p.x - (domain_.x_min + ci * hx_)) / hx_;
  const double eta = (p.y - (domain_.y_min + cj * hy_)) / hy_;

  InterpStencil s;
  if (xi >= eta) {
    // lower-right triangle (n00, n10, n11)
    s.nodes = {node_id(ci, cj), node_id(ci + 1, cj), node_id(ci + 1, cj + 1)};
    s.weights = {1.0 - xi, xi - eta, eta};
  } else {
    // upper-left triangle (n00, n11, n01)
    s.nodes = {node_id(ci, cj), node_id(ci + 1, cj + 1), node_id(ci, cj + 1)};
    s.weights = {1.0 - eta, xi, eta - xi};
  }
  return s;
}

}  // namespace shearbayes
