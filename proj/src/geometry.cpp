#include "dilatio/geometry.hpp"

#include "dilatio/quadrature.hpp"

#include <numeric>
#include <random>

namespace dilatio {

namespace {

double unit_ball_volume(Index n) {
  return std::pow(kPi, 0.5 * double(n)) / std::tgamma(0.5 * double(n) + 1.0);
}

Vector direction(double theta) {
  Vector u(2);
  u << std::cos(theta), std::sin(theta);
  return u;
}

// Largest boundary distance over directions, by sampling and local refinement.
double sampled_circumradius(const Body& body) {
  const Index n = body.dim();
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  Vector best_u = Vector::Zero(n);
  double best = 0.0;
  auto radius_of = [&](const Vector& u) { return ray_radius(body, u); };
  for (int k = 0; k < 20000; ++k) {
    Vector u(n);
    for (Index i = 0; i < n; ++i) u[i] = normal(rng);
    u.normalize();
    const double r = radius_of(u);
    if (r > best) {
      best = r;
      best_u = u;
    }
  }
  if (!std::isfinite(best)) throw UnsupportedError("radii: body is unbounded");
  for (double step = 0.05; step > 1e-12; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (Index i = 0; i < n; ++i) {
        for (double sign : {1.0, -1.0}) {
          Vector u = best_u;
          u[i] += sign * step;
          u.normalize();
          const double r = radius_of(u);
          if (r > best) {
            best = r;
            best_u = u;
            improved = true;
          }
        }
      }
    }
  }
  return best;
}

// Inradius that stays meaningful for unbounded polytope members (slabs).
double slab_inradius(const Body& body) {
  if (body.kind() == BodyKind::Polytope) {
    double inner = kInf;
    for (Index i = 0; i < body.normals().rows(); ++i)
      inner = std::min(inner, body.offsets()[i] / body.normals().row(i).norm());
    return inner;
  }
  if (body.kind() == BodyKind::Scaled) return body.factor() * slab_inradius(body.children().front());
  if (body.kind() == BodyKind::Intersection) {
    double inner = kInf;
    for (const auto& c : body.children()) inner = std::min(inner, slab_inradius(c));
    return inner;
  }
  return radii(body).inner;
}

// Vertices of a bounded symmetric polytope by enumerating n-subsets of the
// facet pairs; feasible only while the enumeration stays small.
std::vector<Vector> enumerate_vertices(const Body& body) {
  const Matrix& a = body.normals();
  const Vector& b = body.offsets();
  const Index m = a.rows();
  const Index n = body.dim();
  double combos = 1.0;
  for (Index i = 0; i < n; ++i) combos *= double(m - i) / double(i + 1);
  if (combos * std::pow(2.0, double(n)) > 2e5) return {};
  std::vector<Vector> out;
  std::vector<int> pick(n);
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    Matrix sub(n, n);
    for (Index i = 0; i < n; ++i) sub.row(i) = a.row(pick[i]);
    Eigen::FullPivLU<Matrix> lu(sub);
    if (lu.rank() == n) {
      for (long mask = 0; mask < (1L << n); ++mask) {
        Vector rhs(n);
        for (Index i = 0; i < n; ++i) rhs[i] = ((mask >> i) & 1) ? -b[pick[i]] : b[pick[i]];
        Vector v = lu.solve(rhs);
        if (gauge(body, v) <= 1.0 + 1e-10) out.push_back(v);
      }
    }
    Index i = n - 1;
    while (i >= 0 && pick[i] == m - n + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (Index j = i + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return out;
}

std::vector<BoundaryElement> polygon_rule(const Body& body, int resolution) {
  const std::vector<Vector> verts = polygon_vertices(body);
  const quad::Rule rule = quad::gauss_legendre(std::max(resolution, 2), 0.0, 1.0);
  std::vector<BoundaryElement> out;
  for (std::size_t k = 0; k < verts.size(); ++k) {
    const Vector& v0 = verts[k];
    const Vector& v1 = verts[(k + 1) % verts.size()];
    const Vector edge = v1 - v0;
    const double len = edge.norm();
    Vector normal(2);
    normal << edge[1] / len, -edge[0] / len;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j)
      out.push_back({v0 + rule.nodes[j] * edge, normal, rule.weights[j] * len});
  }
  return out;
}

// Polar parametrisation x(theta) = rho(theta) u(theta) with a periodic
// trapezoid rule; rho' = -rho^2 <grad g(u), u_perp>.
std::vector<BoundaryElement> polar_rule(const Body& body, int resolution) {
  const int count = std::max(resolution, 8);
  const double h = 2.0 * kPi / count;
  std::vector<BoundaryElement> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double theta = h * k;
    const Vector u = direction(theta);
    Vector perp(2);
    perp << -u[1], u[0];
    const double rho = ray_radius(body, u);
    const double drho = -rho * rho * gauge_gradient(body, u).dot(perp);
    const Vector point = rho * u;
    Vector normal = gauge_gradient(body, point);
    normal.normalize();
    out.push_back({point, normal, h * std::hypot(rho, drho)});
  }
  return out;
}

std::vector<BoundaryElement> ellipsoid_rule_3d(const Vector& axes, int resolution) {
  const int polar = std::max(resolution, 4);
  const int azimuth = 2 * polar;
  const quad::Rule rule = quad::gauss_legendre(polar, 0.0, kPi);
  const double hphi = 2.0 * kPi / azimuth;
  Vector a2 = axes.cwiseProduct(axes);
  std::vector<BoundaryElement> out;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double th = rule.nodes[i];
    for (int j = 0; j < azimuth; ++j) {
      const double ph = hphi * j;
      Eigen::Vector3d p(axes[0] * std::sin(th) * std::cos(ph), axes[1] * std::sin(th) * std::sin(ph),
                        axes[2] * std::cos(th));
      Eigen::Vector3d dth(axes[0] * std::cos(th) * std::cos(ph), axes[1] * std::cos(th) * std::sin(ph),
                          -axes[2] * std::sin(th));
      Eigen::Vector3d dph(-axes[0] * std::sin(th) * std::sin(ph), axes[1] * std::sin(th) * std::cos(ph), 0.0);
      Vector normal = p.cwiseQuotient(Eigen::Vector3d(a2));
      normal.normalize();
      out.push_back({Vector(p), normal, dth.cross(dph).norm() * rule.weights[i] * hphi});
    }
  }
  return out;
}

std::vector<BoundaryElement> box_rule(const Vector& half, int resolution) {
  const Index n = half.size();
  const int per_dim = std::max(resolution, 1);
  if (std::pow(double(per_dim), double(n - 1)) > 1e6)
    throw UnsupportedError("boundary_quadrature: box resolution too large for this dimension");
  std::vector<quad::Rule> rules;
  for (Index i = 0; i < n; ++i) rules.push_back(quad::gauss_legendre(per_dim, -half[i], half[i]));
  std::vector<BoundaryElement> out;
  for (Index face = 0; face < n; ++face) {
    for (double sign : {1.0, -1.0}) {
      std::vector<int> idx(n, 0);
      while (true) {
        Vector p(n);
        double w = 1.0;
        for (Index i = 0; i < n; ++i) {
          if (i == face) {
            p[i] = sign * half[i];
          } else {
            p[i] = rules[i].nodes[idx[i]];
            w *= rules[i].weights[idx[i]];
          }
        }
        Vector normal = Vector::Zero(n);
        normal[face] = sign;
        out.push_back({p, normal, w});
        Index k = 0;
        while (k < n) {
          if (k == face) {
            ++k;
            continue;
          }
          if (++idx[k] < per_dim) break;
          idx[k] = 0;
          ++k;
        }
        if (k >= n) break;
      }
    }
  }
  return out;
}

}  // namespace

Radii radii(const Body& body) {
  if (!body.bounded()) throw UnsupportedError("radii: body is unbounded");
  const Index n = body.dim();
  if (n == 1) {
    Vector e(1);
    e << 1.0;
    const double r = ray_radius(body, e);
    return {r, r};
  }
  switch (body.kind()) {
    case BodyKind::Ball:
      return {body.radius(), body.radius()};
    case BodyKind::Ellipsoid:
      return {body.semi_axes().minCoeff(), body.semi_axes().maxCoeff()};
    case BodyKind::LpBall: {
      const double diag = std::pow(double(n), 0.5 - 1.0 / body.exponent());
      return {body.radius() * std::min(1.0, diag), body.radius() * std::max(1.0, diag)};
    }
    case BodyKind::Polytope: {
      double inner = kInf;
      for (Index i = 0; i < body.normals().rows(); ++i)
        inner = std::min(inner, body.offsets()[i] / body.normals().row(i).norm());
      if (body.is_axis_box()) return {inner, body.offsets().norm()};
      const std::vector<Vector> verts = enumerate_vertices(body);
      if (verts.empty()) return {inner, sampled_circumradius(body)};
      double outer = 0.0;
      for (const auto& v : verts) outer = std::max(outer, v.norm());
      return {inner, outer};
    }
    case BodyKind::Scaled: {
      const Radii child = radii(body.children().front());
      return {child.inner * body.factor(), child.outer * body.factor()};
    }
    case BodyKind::Intersection: {
      double inner = kInf;
      for (const auto& c : body.children()) inner = std::min(inner, slab_inradius(c));
      return {inner, sampled_circumradius(body)};
    }
  }
  throw UnsupportedError("radii: unknown body kind");
}

std::vector<Vector> polygon_vertices(const Body& body) {
  if (body.dim() != 2 || body.kind() != BodyKind::Polytope)
    throw UnsupportedError("polygon_vertices: needs a 2-d polytope");
  if (!body.bounded()) throw UnsupportedError("polygon_vertices: polytope is unbounded");
  std::vector<Vector> raw = enumerate_vertices(body);
  std::vector<Vector> verts;
  for (const auto& v : raw) {
    const bool dup = std::any_of(verts.begin(), verts.end(), [&](const Vector& w) {
      return (w - v).norm() <= 1e-10 * (1.0 + v.norm());
    });
    if (!dup) verts.push_back(v);
  }
  std::sort(verts.begin(), verts.end(), [](const Vector& a, const Vector& b) {
    return std::atan2(a[1], a[0]) < std::atan2(b[1], b[0]);
  });
  return verts;
}

std::vector<double> corner_angles(const Body& body) {
  if (body.dim() != 2) return {};
  std::vector<double> out;
  auto wrap = [](double a) { return a < 0 ? a + 2.0 * kPi : a; };
  switch (body.kind()) {
    case BodyKind::Polytope:
      if (!body.bounded()) break;
      for (const auto& v : polygon_vertices(body)) out.push_back(wrap(std::atan2(v[1], v[0])));
      break;
    case BodyKind::LpBall:
      for (int k = 0; k < 4; ++k) out.push_back(0.5 * kPi * k);
      break;
    case BodyKind::Scaled:
      return corner_angles(body.children().front());
    case BodyKind::Intersection: {
      for (const auto& c : body.children()) {
        auto sub = corner_angles(c);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      // Angles where the active member changes.
      const int grid = 4096;
      auto active = [&](double th) {
        const Vector u = direction(th);
        std::size_t best = 0;
        double value = -1.0;
        for (std::size_t i = 0; i < body.children().size(); ++i) {
          const double g = gauge(body.children()[i], u);
          if (g > value) {
            value = g;
            best = i;
          }
        }
        return best;
      };
      for (int k = 0; k < grid; ++k) {
        double lo = 2.0 * kPi * k / grid;
        double hi = 2.0 * kPi * (k + 1) / grid;
        const std::size_t a0 = active(lo);
        if (active(hi) == a0) continue;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (active(mid) == a0 ? lo : hi) = mid;
        }
        out.push_back(0.5 * (lo + hi));
      }
      break;
    }
    default:
      break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<BoundaryElement> boundary_quadrature(const Body& body, int resolution) {
  if (resolution < 1) throw DomainError("boundary_quadrature: resolution must be positive");
  if (!body.bounded()) throw UnsupportedError("boundary_quadrature: body is unbounded");
  const Index n = body.dim();
  if (n == 1) {
    Vector e(1);
    e << 1.0;
    const double r = ray_radius(body, e);
    Vector plus(1), minus(1), np(1), nm(1);
    plus << r;
    minus << -r;
    np << 1.0;
    nm << -1.0;
    return {{plus, np, 1.0}, {minus, nm, 1.0}};
  }
  if (body.kind() == BodyKind::Scaled) {
    const double c = body.factor();
    auto rule = boundary_quadrature(body.children().front(), resolution);
    const double jac = std::pow(c, double(n - 1));
    for (auto& e : rule) {
      e.point *= c;
      e.weight *= jac;
    }
    return rule;
  }
  if (body.kind() == BodyKind::Intersection)
    throw UnsupportedError("boundary_quadrature: intersections are not supported");
  if (n == 2) {
    switch (body.kind()) {
      case BodyKind::Polytope:
        return polygon_rule(body, resolution);
      case BodyKind::LpBall:
        if (body.exponent() < 1.0) throw UnsupportedError("boundary_quadrature: non-convex lp-ball");
        if (body.exponent() == 1.0) {
          Matrix a(2, 2);
          a << 1, 1, 1, -1;
          return polygon_rule(Body::polytope(a, Vector::Constant(2, body.radius())), resolution);
        }
        return polar_rule(body, 4 * resolution);
      default:
        return polar_rule(body, 4 * resolution);
    }
  }
  if (n == 3 && (body.kind() == BodyKind::Ball || body.kind() == BodyKind::Ellipsoid)) {
    const Vector axes = body.kind() == BodyKind::Ball ? Vector::Constant(3, body.radius()) : body.semi_axes();
    return ellipsoid_rule_3d(axes, resolution);
  }
  if (body.kind() == BodyKind::Polytope && body.is_axis_box()) return box_rule(body.offsets(), resolution);
  throw UnsupportedError("boundary_quadrature: unsupported body " + body.describe());
}

double volume(const Body& body) {
  if (!body.bounded()) throw UnsupportedError("volume: body is unbounded");
  const Index n = body.dim();
  if (n == 1) {
    Vector e(1);
    e << 1.0;
    return 2.0 * ray_radius(body, e);
  }
  switch (body.kind()) {
    case BodyKind::Ball:
      return unit_ball_volume(n) * std::pow(body.radius(), double(n));
    case BodyKind::Ellipsoid:
      return unit_ball_volume(n) * body.semi_axes().prod();
    case BodyKind::LpBall: {
      const double p = body.exponent();
      return std::pow(2.0 * body.radius() * std::tgamma(1.0 + 1.0 / p), double(n)) /
             std::tgamma(1.0 + double(n) / p);
    }
    case BodyKind::Scaled:
      return std::pow(body.factor(), double(n)) * volume(body.children().front());
    case BodyKind::Polytope:
      if (body.is_axis_box()) return (2.0 * body.offsets()).prod();
      if (n == 2) {
        const auto v = polygon_vertices(body);
        double area = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) {
          const Vector& a = v[k];
          const Vector& b = v[(k + 1) % v.size()];
          area += a[0] * b[1] - a[1] * b[0];
        }
        return 0.5 * std::abs(area);
      }
      break;
    case BodyKind::Intersection:
      if (n == 2) {
        const auto breaks = corner_angles(body);
        auto r2 = [&](double th) {
          const double r = ray_radius(body, direction(th));
          return 0.5 * r * r;
        };
        return quad::adaptive_piecewise(r2, 0.0, 2.0 * kPi, breaks).value;
      }
      break;
  }
  throw UnsupportedError("volume: unsupported body " + body.describe());
}

}  // namespace dilatio
