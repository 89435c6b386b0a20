#pragma once

// Symmetric open convex bodies represented through their gauge function.

#include "dilatio/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace dilatio {

enum class BodyKind { Ball, Ellipsoid, LpBall, Polytope, Scaled, Intersection };

template <typename Scalar>
class ConvexBody {
 public:
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  static ConvexBody ball(Index dim, Scalar radius = Scalar(1)) {
    if (dim < 1) throw ConstructionError("ball: dimension must be positive");
    if (!(radius > 0) || !std::isfinite(double(radius)))
      throw ConstructionError("ball: radius must be positive");
    ConvexBody b(BodyKind::Ball, dim);
    b.radius_ = radius;
    return b;
  }

  static ConvexBody interval(Scalar half_width) { return ball(1, half_width); }

  static ConvexBody ellipsoid(const VectorS& semi_axes) {
    if (semi_axes.size() < 1) throw ConstructionError("ellipsoid: empty semi-axes");
    for (Index i = 0; i < semi_axes.size(); ++i)
      if (!(semi_axes[i] > 0) || !std::isfinite(double(semi_axes[i])))
        throw ConstructionError("ellipsoid: semi-axes must be positive");
    ConvexBody b(BodyKind::Ellipsoid, semi_axes.size());
    b.axes_ = semi_axes;
    return b;
  }

  /// {x : (sum |x_i|^p)^(1/p) < radius}; convex only for p >= 1.
  static ConvexBody lp_ball(Index dim, Scalar p, Scalar radius = Scalar(1)) {
    if (dim < 1) throw ConstructionError("lp-ball: dimension must be positive");
    if (!(p > 0) || !std::isfinite(double(p))) throw ConstructionError("lp-ball: exponent must be positive");
    if (!(radius > 0)) throw ConstructionError("lp-ball: radius must be positive");
    ConvexBody b(BodyKind::LpBall, dim);
    b.exponent_ = p;
    b.radius_ = radius;
    return b;
  }

  /// {x : |<a_i, x>| < b_i for all rows a_i}; each row stands for the pair of
  /// halfspaces with normals +a_i and -a_i.
  static ConvexBody polytope(const MatrixS& normals, const VectorS& offsets) {
    if (normals.rows() != offsets.size() || normals.rows() == 0 || normals.cols() == 0)
      throw ConstructionError("polytope: normals and offsets disagree in size");
    for (Index i = 0; i < offsets.size(); ++i) {
      if (!(offsets[i] > 0) || !std::isfinite(double(offsets[i])))
        throw ConstructionError("polytope: offsets must be positive");
      if (!(normals.row(i).norm() > 0)) throw ConstructionError("polytope: zero normal");
    }
    ConvexBody b(BodyKind::Polytope, normals.cols());
    b.normals_ = normals;
    b.offsets_ = offsets;
    return b;
  }

  static ConvexBody box(const VectorS& half_widths) {
    const Index n = half_widths.size();
    if (n < 1) throw ConstructionError("box: empty half-widths");
    ConvexBody b = polytope(MatrixS::Identity(n, n), half_widths);
    b.axis_box_ = true;
    return b;
  }

  static ConvexBody scaled(const ConvexBody& child, Scalar factor) {
    if (!(factor > 0) || !std::isfinite(double(factor)))
      throw ConstructionError("scaled: factor must be positive");
    if (child.kind_ == BodyKind::Scaled) return scaled(child.children_.front(), child.factor_ * factor);
    ConvexBody b(BodyKind::Scaled, child.dim_);
    b.factor_ = factor;
    b.children_.push_back(child);
    return b;
  }

  static ConvexBody intersection(const std::vector<ConvexBody>& members) {
    if (members.empty()) throw ConstructionError("intersection: no members");
    for (const auto& m : members)
      if (m.dim_ != members.front().dim_) throw ConstructionError("intersection: dimension mismatch");
    ConvexBody b(BodyKind::Intersection, members.front().dim_);
    b.children_ = members;
    return b;
  }

  BodyKind kind() const { return kind_; }
  Index dim() const { return dim_; }
  Scalar radius() const { return radius_; }
  const VectorS& semi_axes() const { return axes_; }
  Scalar exponent() const { return exponent_; }
  const MatrixS& normals() const { return normals_; }
  const VectorS& offsets() const { return offsets_; }
  Scalar factor() const { return factor_; }
  const std::vector<ConvexBody>& children() const { return children_; }
  bool is_axis_box() const { return axis_box_; }

  /// False only for lp-balls with p < 1 (star-shaped, still 1-homogeneous gauge).
  bool convex() const {
    if (kind_ == BodyKind::LpBall) return exponent_ >= 1;
    for (const auto& c : children_)
      if (!c.convex()) return false;
    return true;
  }

  bool bounded() const {
    switch (kind_) {
      case BodyKind::Polytope: {
        Eigen::FullPivLU<MatrixS> lu(normals_);
        return lu.rank() == dim_;
      }
      case BodyKind::Intersection:
        return std::any_of(children_.begin(), children_.end(),
                           [](const ConvexBody& c) { return c.bounded(); });
      case BodyKind::Scaled:
        return children_.front().bounded();
      default:
        return true;
    }
  }

  /// Invariant under every coordinate sign flip.
  bool unconditional() const {
    switch (kind_) {
      case BodyKind::Ball:
      case BodyKind::Ellipsoid:
      case BodyKind::LpBall:
        return true;
      case BodyKind::Polytope:
        return polytope_unconditional();
      default:
        return std::all_of(children_.begin(), children_.end(),
                           [](const ConvexBody& c) { return c.unconditional(); });
    }
  }

  std::string describe() const;

 private:
  ConvexBody(BodyKind kind, Index dim) : kind_(kind), dim_(dim) {}

  bool polytope_unconditional() const {
    for (Index i = 0; i < normals_.rows(); ++i) {
      for (Index j = 0; j < dim_; ++j) {
        if (normals_(i, j) == Scalar(0)) continue;
        VectorS flipped = normals_.row(i).transpose();
        flipped[j] = -flipped[j];
        bool found = false;
        for (Index k = 0; k < normals_.rows() && !found; ++k) {
          const double tol = 1e-12 * double(flipped.norm());
          const bool same = double((normals_.row(k).transpose() - flipped).norm()) <= tol ||
                            double((normals_.row(k).transpose() + flipped).norm()) <= tol;
          found = same && std::abs(double(offsets_[k] - offsets_[i])) <= 1e-12 * double(offsets_[i]);
        }
        if (!found) return false;
      }
    }
    return true;
  }

  BodyKind kind_;
  Index dim_;
  Scalar radius_{1};
  VectorS axes_;
  Scalar exponent_{2};
  MatrixS normals_;
  VectorS offsets_;
  Scalar factor_{1};
  std::vector<ConvexBody> children_;
  bool axis_box_ = false;
};

using Body = ConvexBody<double>;

/// Minkowski functional inf{t > 0 : x in tK}.
template <typename Scalar, typename Derived>
Scalar gauge(const ConvexBody<Scalar>& body, const Eigen::MatrixBase<Derived>& x) {
  using std::abs;
  using std::pow;
  using std::sqrt;
  switch (body.kind()) {
    case BodyKind::Ball:
      return x.norm() / body.radius();
    case BodyKind::Ellipsoid:
      return x.cwiseQuotient(body.semi_axes()).norm();
    case BodyKind::LpBall: {
      const Scalar p = body.exponent();
      const Scalar scale = x.cwiseAbs().maxCoeff();
      if (scale == Scalar(0)) return Scalar(0);
      Scalar sum(0);
      for (Index i = 0; i < x.size(); ++i) sum += pow(abs(x[i]) / scale, p);
      return scale * pow(sum, Scalar(1) / p) / body.radius();
    }
    case BodyKind::Polytope:
      return ((body.normals() * x).cwiseAbs().cwiseQuotient(body.offsets())).maxCoeff();
    case BodyKind::Scaled:
      return gauge(body.children().front(), x) / body.factor();
    case BodyKind::Intersection: {
      Scalar best(0);
      for (const auto& c : body.children()) best = std::max<Scalar>(best, gauge(c, x));
      return best;
    }
  }
  return Scalar(0);
}

/// Gradient of the gauge at x != 0 (an element of the subdifferential at kinks).
template <typename Scalar, typename Derived>
typename ConvexBody<Scalar>::VectorS gauge_gradient(const ConvexBody<Scalar>& body,
                                                    const Eigen::MatrixBase<Derived>& x) {
  using VectorS = typename ConvexBody<Scalar>::VectorS;
  using std::abs;
  using std::pow;
  const Index n = x.size();
  switch (body.kind()) {
    case BodyKind::Ball: {
      const Scalar r = x.norm();
      if (r == Scalar(0)) return VectorS::Zero(n);
      return x / (r * body.radius());
    }
    case BodyKind::Ellipsoid: {
      const Scalar g = gauge(body, x);
      if (g == Scalar(0)) return VectorS::Zero(n);
      VectorS a2 = body.semi_axes().cwiseProduct(body.semi_axes());
      return x.cwiseQuotient(a2) / g;
    }
    case BodyKind::LpBall: {
      const Scalar g = gauge(body, x) * body.radius();
      if (g == Scalar(0)) return VectorS::Zero(n);
      const Scalar p = body.exponent();
      VectorS out(n);
      for (Index i = 0; i < n; ++i) {
        const Scalar ax = abs(x[i]);
        out[i] = ax == Scalar(0) ? Scalar(0)
                                 : (x[i] > 0 ? Scalar(1) : Scalar(-1)) * pow(ax / g, p - Scalar(1));
      }
      return out / body.radius();
    }
    case BodyKind::Polytope: {
      VectorS ratios = (body.normals() * x).cwiseQuotient(body.offsets());
      Index best = 0;
      ratios.cwiseAbs().maxCoeff(&best);
      if (ratios[best] == Scalar(0)) return VectorS::Zero(n);
      const Scalar sign = ratios[best] > 0 ? Scalar(1) : Scalar(-1);
      return sign * body.normals().row(best).transpose() / body.offsets()[best];
    }
    case BodyKind::Scaled:
      return gauge_gradient(body.children().front(), x) / body.factor();
    case BodyKind::Intersection: {
      std::size_t best = 0;
      Scalar value(-1);
      for (std::size_t i = 0; i < body.children().size(); ++i) {
        const Scalar g = gauge(body.children()[i], x);
        if (g > value) {
          value = g;
          best = i;
        }
      }
      return gauge_gradient(body.children()[best], x);
    }
  }
  return VectorS::Zero(n);
}

template <typename Scalar, typename Derived>
bool contains(const ConvexBody<Scalar>& body, const Eigen::MatrixBase<Derived>& x) {
  return gauge(body, x) < Scalar(1);
}

/// Distance from the origin to the boundary along the unit direction u.
template <typename Scalar, typename Derived>
Scalar ray_radius(const ConvexBody<Scalar>& body, const Eigen::MatrixBase<Derived>& u) {
  const Scalar g = gauge(body, u);
  return g > Scalar(0) ? Scalar(1) / g : Scalar(kInf);
}

template <typename Scalar>
Scalar dilation_factor(Scalar eps) {
  if (!(eps > 0 && eps < 1)) throw DomainError("dilation parameter must lie in (0, 1)");
  return (Scalar(1) + eps) / (Scalar(1) - eps);
}

/// K_eps = (1+eps)/(1-eps) K.
template <typename Scalar>
ConvexBody<Scalar> dilate(const ConvexBody<Scalar>& body, Scalar eps) {
  return ConvexBody<Scalar>::scaled(body, dilation_factor(eps));
}

struct Radii {
  double inner;
  double outer;
};

/// Inradius r(K) and circumradius R(K).
Radii radii(const Body& body);

struct BoundaryElement {
  Vector point;
  Vector normal;
  double weight;
};

/// Quadrature rule for the surface measure of the boundary.
std::vector<BoundaryElement> boundary_quadrature(const Body& body, int resolution);

/// Lebesgue volume (closed forms; 2-d polytopes and intersections via the ray integral).
double volume(const Body& body);

/// Angles in [0, 2pi) of boundary kinks of a 2-d body (polytope vertices).
std::vector<double> corner_angles(const Body& body);

/// Vertices of a bounded 2-d polytope in counter-clockwise order.
std::vector<Vector> polygon_vertices(const Body& body);

template <typename Scalar>
std::string ConvexBody<Scalar>::describe() const {
  auto num = [](Scalar v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", double(v));
    return std::string(buf);
  };
  switch (kind_) {
    case BodyKind::Ball:
      return dim_ == 1 ? "interval(" + num(radius_) + ")"
                       : "ball(n=" + std::to_string(dim_) + ", r=" + num(radius_) + ")";
    case BodyKind::Ellipsoid: {
      std::string s = "ellipsoid(";
      for (Index i = 0; i < axes_.size(); ++i) s += (i ? "," : "") + num(axes_[i]);
      return s + ")";
    }
    case BodyKind::LpBall:
      return "lp-ball(n=" + std::to_string(dim_) + ", p=" + num(exponent_) + ", r=" + num(radius_) + ")";
    case BodyKind::Polytope:
      if (axis_box_) {
        std::string s = "box(";
        for (Index i = 0; i < offsets_.size(); ++i) s += (i ? "," : "") + num(offsets_[i]);
        return s + ")";
      }
      return "polytope(" + std::to_string(normals_.rows()) + " pairs)";
    case BodyKind::Scaled:
      return num(factor_) + "*" + children_.front().describe();
    case BodyKind::Intersection: {
      std::string s = "intersection(";
      for (std::size_t i = 0; i < children_.size(); ++i) s += (i ? "," : "") + children_[i].describe();
      return s + ")";
    }
  }
  return "body";
}

}  // namespace dilatio
