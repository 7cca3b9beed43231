#pragma once
// Attainable Virtual Control Set analysis.
//
// The AVCS is the image of the actuator box under G — a zonotope in
// (M_roll, M_pitch, M_yaw, F_z). Halfspaces come from generator-subset
// normals, vertices from box corners filtered by a separating-direction LP,
// and the controllability margins are inscribed-disk radii of the feasible
// tilt-moment polygon at fixed thrust, computed exactly from support LPs on
// the box preimage.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftckit/linprog.hpp"
#include "ftckit/vehicle.hpp"

namespace ftc {

struct Halfspace {
  Eigen::VectorXd normal;
  double offset = 0.0;  // normal . x <= offset
};

struct ControlSet {
  std::vector<std::string> dims;
  Eigen::MatrixXd vertices;  // one vertex per row
  std::vector<Halfspace> halfspaces;
  // Generating box (kept for support/feasibility LPs). Empty for derived
  // sets such as slices, which are no longer zonotopes.
  Eigen::MatrixXd generators;  // d x n
  Eigen::VectorXd u_lo, u_hi;

  bool empty() const { return vertices.rows() == 0; }
};

struct ControllabilityVerdict {
  int case_id = 3;
  double tilt_margin_at_zero_yaw = 0.0;   // N*m
  double tilt_margin_with_free_yaw = 0.0; // N*m
  double tilt_margin_at_probe = 0.0;      // N*m, at yaw_fraction_probe
  double required_yaw_fraction = 1.0;     // in [0, 1]
  double hover_thrust = 0.0;              // N
  double tolerance = 0.0;                 // interior tolerance used
};

namespace detail {

// Vector orthogonal to three 4-vectors (generalized cross product).
inline Eigen::Vector4d perp4(const Eigen::Vector4d& a, const Eigen::Vector4d& b,
                             const Eigen::Vector4d& c) {
  Eigen::Vector4d n;
  Eigen::Matrix3d M;
  double sign = 1.0;
  for (int i = 0; i < 4; ++i) {
    int r = 0;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      M(r, 0) = a[j];
      M(r, 1) = b[j];
      M(r, 2) = c[j];
      ++r;
    }
    n[i] = sign * M.determinant();
    sign = -sign;
  }
  return n;
}

// Support value of the box image in direction d.
inline double box_support(const Eigen::VectorXd& d, const Eigen::MatrixXd& G,
                          const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  double h = 0.0;
  for (int i = 0; i < G.cols(); ++i) {
    double g = d.dot(G.col(i));
    h += g >= 0.0 ? g * hi[i] : g * lo[i];
  }
  return h;
}

}  // namespace detail

inline ControlSet build_avcs(const EffectivenessModel& model) {
  ControlSet set;
  set.dims = {"M_roll", "M_pitch", "M_yaw", "F_z"};
  set.generators = model.G;
  set.u_lo = model.u_lo;
  set.u_hi = model.u_hi;

  // Active generators: nonzero column with nonzero box width.
  std::vector<int> act;
  for (int i = 0; i < model.n(); ++i)
    if (model.G.col(i).norm() > 0.0 && model.u_hi[i] - model.u_lo[i] > 0.0) act.push_back(i);
  const int k = static_cast<int>(act.size());
  Eigen::Vector4d p0 = Eigen::Vector4d::Zero();  // image of the box lower corner
  for (int i = 0; i < model.n(); ++i) p0 += model.G.col(i) * model.u_lo[i];

  Eigen::MatrixXd gw(4, k);  // generator segments, scaled by box width
  for (int j = 0; j < k; ++j)
    gw.col(j) = model.G.col(act[j]) * (model.u_hi[act[j]] - model.u_lo[act[j]]);
  double scale = p0.norm();
  for (int j = 0; j < k; ++j) scale = std::max(scale, gw.col(j).norm());
  if (scale <= 0.0) scale = 1.0;

  // Rank and orthogonal complement of the generator span.
  int rank = 0;
  std::vector<Eigen::Vector4d> perp;
  if (k > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gw, Eigen::ComputeFullU);
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0]) ++rank;
    for (int i = rank; i < 4; ++i) perp.push_back(svd.matrixU().col(i));
  } else {
    for (int i = 0; i < 4; ++i) perp.push_back(Eigen::Vector4d::Unit(i));
  }

  auto add_halfspace = [&](const Eigen::Vector4d& n_raw) {
    double nn = n_raw.norm();
    if (nn < 1e-12) return;
    Eigen::Vector4d n = n_raw / nn;
    for (const auto& h : set.halfspaces)
      if ((h.normal - n).norm() < 1e-9) return;
    Halfspace h;
    h.normal = n;
    h.offset = detail::box_support(n, set.generators, set.u_lo, set.u_hi);
    set.halfspaces.push_back(h);
  };

  // Flat directions first: the set lies in p0 + span(gw), expressed as
  // opposing halfspace pairs.
  for (const auto& v : perp) {
    add_halfspace(v);
    add_halfspace(-v);
  }

  // Facet normals: orthogonal to (rank-1) generators plus the complement.
  const int pick = rank - 1;
  if (pick >= 0 && pick <= 3) {
    std::vector<int> idx(pick);
    std::function<void(int, int)> rec = [&](int start, int depth) {
      if (depth == pick) {
        Eigen::Vector4d cols[3];
        int cnt = 0;
        for (int t = 0; t < pick; ++t) cols[cnt++] = gw.col(idx[t]);
        for (const auto& v : perp)
          if (cnt < 3) cols[cnt++] = v;
        if (cnt != 3) return;
        Eigen::Vector4d n = detail::perp4(cols[0], cols[1], cols[2]);
        if (n.norm() < 1e-10 * scale * scale * scale) return;
        add_halfspace(n);
        add_halfspace(-n);
        return;
      }
      for (int i = start; i < k; ++i) {
        idx[depth] = i;
        rec(i + 1, depth + 1);
      }
    };
    rec(0, 0);
  }

  // Vertices: box-corner images that admit a separating direction. The LP
  // asks for d with sign_i*(d.g_i) >= margin*|g_i| and |d|_inf <= 1.
  std::vector<Eigen::Vector4d> verts;
  for (long mask = 0; mask < (1L << k); ++mask) {
    Eigen::VectorXd clp(5);
    clp << 0, 0, 0, 0, 1;
    Eigen::MatrixXd A(k, 5);
    std::vector<char> rel(k, '>');
    Eigen::VectorXd bb = Eigen::VectorXd::Zero(k);
    for (int j = 0; j < k; ++j) {
      double s = (mask >> j) & 1 ? 1.0 : -1.0;
      A.row(j).head(4) = s * gw.col(j).transpose();
      A(j, 4) = -gw.col(j).norm();
    }
    Eigen::VectorXd llo(5), lhi(5);
    llo << -1, -1, -1, -1, 0;
    lhi << 1, 1, 1, 1, detail::kInf;
    LpResult r = solve_lp(clp, A, rel, bb, llo, lhi);
    if (r.status != LpStatus::Optimal || r.objective <= 1e-9) continue;
    Eigen::Vector4d v = p0;
    for (int j = 0; j < k; ++j)
      if ((mask >> j) & 1) v += gw.col(j);
    bool dup = false;
    for (const auto& u : verts)
      if ((u - v).norm() < 1e-9 * scale) {
        dup = true;
        break;
      }
    if (!dup) verts.push_back(v);
  }
  if (k == 0) verts.push_back(p0);  // fully pinned box maps to one point
  set.vertices.resize(verts.size(), 4);
  for (size_t i = 0; i < verts.size(); ++i) set.vertices.row(i) = verts[i];
  return set;
}

// Exact volume of the 4-D zonotope (zero when the generators are not full
// rank): sum of |det| of generator 4-subsets times the box widths.
inline double zonotope_volume(const ControlSet& set) {
  if (set.generators.rows() != 4 || set.generators.cols() == 0) return 0.0;
  std::vector<int> act;
  for (int i = 0; i < set.generators.cols(); ++i)
    if (set.generators.col(i).norm() > 0.0 && set.u_hi[i] - set.u_lo[i] > 0.0) act.push_back(i);
  const int k = static_cast<int>(act.size());
  double vol = 0.0;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      for (int c = b + 1; c < k; ++c)
        for (int d = c + 1; d < k; ++d) {
          Eigen::Matrix4d M;
          M.col(0) = set.generators.col(act[a]);
          M.col(1) = set.generators.col(act[b]);
          M.col(2) = set.generators.col(act[c]);
          M.col(3) = set.generators.col(act[d]);
          double w = (set.u_hi[act[a]] - set.u_lo[act[a]]) * (set.u_hi[act[b]] - set.u_lo[act[b]]) *
                     (set.u_hi[act[c]] - set.u_lo[act[c]]) * (set.u_hi[act[d]] - set.u_lo[act[d]]);
          vol += std::abs(M.determinant()) * w;
        }
  return vol;
}

inline double max_halfspace_violation(const ControlSet& set, const Eigen::VectorXd& point) {
  double worst = -detail::kInf;
  for (const auto& h : set.halfspaces)
    worst = std::max(worst, h.normal.dot(point) - h.offset);
  return worst;
}

// 3-D polytope {(M_roll, M_pitch, F_z) : (M_roll, M_pitch, 0, F_z) in set}.
inline ControlSet slice_zero_yaw(const ControlSet& set) {
  if (set.dims.size() != 4) throw std::invalid_argument("slice_zero_yaw: expected a 4-D set");
  ControlSet out;
  out.dims = {"M_roll", "M_pitch", "F_z"};

  double scale = 0.0;
  for (const auto& h : set.halfspaces) scale = std::max(scale, std::abs(h.offset));
  if (scale <= 0.0) scale = 1.0;

  bool infeasible = false;
  for (const auto& h : set.halfspaces) {
    Eigen::Vector3d n(h.normal[0], h.normal[1], h.normal[3]);
    if (n.norm() < 1e-12) {
      if (h.offset < -1e-9 * scale) infeasible = true;  // 0 <= negative: empty slice
      continue;
    }
    double nn = n.norm();
    Halfspace g;
    g.normal = n / nn;
    g.offset = h.offset / nn;
    bool dup = false;
    for (auto& e : out.halfspaces)
      if ((e.normal - g.normal).norm() < 1e-9) {
        e.offset = std::min(e.offset, g.offset);
        dup = true;
        break;
      }
    if (!dup) out.halfspaces.push_back(g);
  }
  if (infeasible) {
    out.halfspaces.clear();
    return out;
  }

  // Vertex enumeration from halfspace triples.
  const int m = static_cast<int>(out.halfspaces.size());
  std::vector<Eigen::Vector3d> verts;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      for (int c = b + 1; c < m; ++c) {
        Eigen::Matrix3d M;
        M.row(0) = out.halfspaces[a].normal.transpose();
        M.row(1) = out.halfspaces[b].normal.transpose();
        M.row(2) = out.halfspaces[c].normal.transpose();
        if (std::abs(M.determinant()) < 1e-9) continue;
        Eigen::Vector3d rhs(out.halfspaces[a].offset, out.halfspaces[b].offset,
                            out.halfspaces[c].offset);
        Eigen::Vector3d v = M.partialPivLu().solve(rhs);
        bool inside = true;
        for (const auto& h : out.halfspaces)
          if (h.normal.dot(v) > h.offset + 1e-7 * scale) {
            inside = false;
            break;
          }
        if (!inside) continue;
        bool dup = false;
        for (const auto& u : verts)
          if ((u - v).norm() < 1e-8 * scale) {
            dup = true;
            break;
          }
        if (!dup) verts.push_back(v);
      }
  out.vertices.resize(verts.size(), 3);
  for (size_t i = 0; i < verts.size(); ++i) out.vertices.row(i) = verts[i];
  return out;
}

namespace detail {

// Support LP over the box preimage: maximize d.(M_roll, M_pitch) subject to
// thrust fixed, yaw constrained (|yaw| <= yaw_bound; infinite = free;
// exactly zero = equality), box bounds. Returns the optimal tilt point, or
// false when infeasible.
inline bool support_tilt_point(const Eigen::MatrixXd& G, const Eigen::VectorXd& u_lo,
                               const Eigen::VectorXd& u_hi, double thrust, double yaw_bound,
                               const Eigen::Vector2d& dir, Eigen::Vector2d& point) {
  const int n = static_cast<int>(G.cols());
  std::vector<char> rel;
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  rows.push_back(G.row(3).transpose());
  rel.push_back('=');
  rhs.push_back(thrust);
  if (yaw_bound == 0.0) {
    rows.push_back(G.row(2).transpose());
    rel.push_back('=');
    rhs.push_back(0.0);
  } else if (std::isfinite(yaw_bound)) {
    rows.push_back(G.row(2).transpose());
    rel.push_back('<');
    rhs.push_back(yaw_bound);
    rows.push_back(G.row(2).transpose());
    rel.push_back('>');
    rhs.push_back(-yaw_bound);
  }
  const int m = static_cast<int>(rows.size());
  Eigen::MatrixXd A(m, n);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    A.row(i) = rows[i].transpose();
    b[i] = rhs[i];
  }
  Eigen::VectorXd c = (dir[0] * G.row(0) + dir[1] * G.row(1)).transpose();
  LpResult r = solve_lp(c, A, std::vector<char>(rel), b, u_lo, u_hi);
  if (r.status != LpStatus::Optimal) return false;
  point[0] = G.row(0).dot(r.x);
  point[1] = G.row(1).dot(r.x);
  return true;
}

// Feasible tilt polygon at fixed thrust/yaw mode, as an ordered (CCW) vertex
// list discovered by adaptive support-direction refinement.
inline bool tilt_polygon(const Eigen::MatrixXd& G, const Eigen::VectorXd& u_lo,
                         const Eigen::VectorXd& u_hi, double thrust, double yaw_bound,
                         std::vector<Eigen::Vector2d>& poly) {
  poly.clear();
  double scale = 0.0;
  for (int i = 0; i < G.cols(); ++i)
    scale += std::hypot(G(0, i), G(1, i)) * std::max(std::abs(u_lo[i]), std::abs(u_hi[i]));
  if (scale <= 0.0) scale = 1.0;
  const double same_tol = 1e-9 * scale;

  const int seed = 8;
  std::vector<std::pair<double, Eigen::Vector2d>> pts;
  for (int i = 0; i < seed; ++i) {
    double th = 2.0 * M_PI * i / seed;
    Eigen::Vector2d v;
    if (!support_tilt_point(G, u_lo, u_hi, thrust, yaw_bound, {std::cos(th), std::sin(th)}, v))
      return false;
    pts.push_back({th, v});
  }
  // Refine every arc whose endpoint vertices differ.
  std::function<void(double, const Eigen::Vector2d&, double, const Eigen::Vector2d&, int,
                     std::vector<std::pair<double, Eigen::Vector2d>>&)>
      refine = [&](double ta, const Eigen::Vector2d& va, double tb, const Eigen::Vector2d& vb,
                   int depth, std::vector<std::pair<double, Eigen::Vector2d>>& acc) {
        if ((va - vb).norm() <= same_tol || depth >= 26) return;
        double tm = 0.5 * (ta + tb);
        Eigen::Vector2d vm;
        if (!support_tilt_point(G, u_lo, u_hi, thrust, yaw_bound, {std::cos(tm), std::sin(tm)},
                                vm))
          return;
        refine(ta, va, tm, vm, depth + 1, acc);
        acc.push_back({tm, vm});
        refine(tm, vm, tb, vb, depth + 1, acc);
      };
  std::vector<std::pair<double, Eigen::Vector2d>> all;
  for (int i = 0; i < seed; ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % seed];
    all.push_back(a);
    refine(a.first, a.second, i + 1 < seed ? b.first : b.first + 2.0 * M_PI, b.second, 0, all);
  }
  for (const auto& p : all) {
    if (!poly.empty() && (poly.back() - p.second).norm() <= same_tol) continue;
    poly.push_back(p.second);
  }
  while (poly.size() > 1 && (poly.front() - poly.back()).norm() <= same_tol) poly.pop_back();
  return true;
}

// Radius of the largest disk centered at the origin inside the polygon
// (ordered CCW). Zero when the polygon is degenerate or excludes the origin.
inline double polygon_inradius(const std::vector<Eigen::Vector2d>& poly) {
  if (poly.size() < 3) {
    // Point or segment: a positive-radius disk never fits.
    return 0.0;
  }
  double r = detail::kInf;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    Eigen::Vector2d e = poly[(i + 1) % n] - poly[i];
    double en = e.norm();
    if (en < 1e-15) continue;
    Eigen::Vector2d out(e[1] / en, -e[0] / en);  // outward for CCW order
    r = std::min(r, out.dot(poly[i]));
  }
  if (!std::isfinite(r)) return 0.0;
  return std::max(0.0, r);
}

inline double tilt_margin(const Eigen::MatrixXd& G, const Eigen::VectorXd& u_lo,
                          const Eigen::VectorXd& u_hi, double thrust, double yaw_bound) {
  std::vector<Eigen::Vector2d> poly;
  if (!tilt_polygon(G, u_lo, u_hi, thrust, yaw_bound, poly)) return 0.0;
  return polygon_inradius(poly);
}

}  // namespace detail

// Max s >= 0 with (s*direction, M_yaw, thrust) in the set for some
// |M_yaw| <= yaw_bound. Solved on the box preimage; 0 when infeasible.
inline double max_moment_in_direction(const ControlSet& set, const Eigen::Vector2d& direction,
                                      double thrust, double yaw_bound) {
  if (set.generators.rows() != 4)
    throw std::invalid_argument("max_moment_in_direction: set has no 4-D generator box");
  double dn = direction.norm();
  if (dn < 1e-12) throw std::invalid_argument("max_moment_in_direction: zero direction");
  Eigen::Vector2d d = direction / dn;

  const int n = static_cast<int>(set.generators.cols());
  std::vector<Eigen::VectorXd> rows;
  std::vector<char> rel;
  std::vector<double> rhs;
  Eigen::VectorXd row(n + 1);

  row.head(n) = set.generators.row(0).transpose();
  row[n] = -d[0];
  rows.push_back(row);
  rel.push_back('=');
  rhs.push_back(0.0);
  row.head(n) = set.generators.row(1).transpose();
  row[n] = -d[1];
  rows.push_back(row);
  rel.push_back('=');
  rhs.push_back(0.0);
  row.head(n) = set.generators.row(3).transpose();
  row[n] = 0.0;
  rows.push_back(row);
  rel.push_back('=');
  rhs.push_back(thrust);
  if (std::isfinite(yaw_bound)) {
    row.head(n) = set.generators.row(2).transpose();
    row[n] = 0.0;
    rows.push_back(row);
    rel.push_back('<');
    rhs.push_back(yaw_bound);
    rows.push_back(row);
    rel.push_back('>');
    rhs.push_back(-yaw_bound);
  }
  const int m = static_cast<int>(rows.size());
  Eigen::MatrixXd A(m, n + 1);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    A.row(i) = rows[i].transpose();
    b[i] = rhs[i];
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
  c[n] = 1.0;
  Eigen::VectorXd lo(n + 1), hi(n + 1);
  lo.head(n) = set.u_lo;
  hi.head(n) = set.u_hi;
  lo[n] = 0.0;
  hi[n] = detail::kInf;
  LpResult r = solve_lp(c, A, rel, b, lo, hi);
  if (r.status != LpStatus::Optimal) return 0.0;
  return r.objective;
}

inline ControllabilityVerdict classify(const EffectivenessModel& model, double hover_thrust,
                                       double yaw_fraction_probe = 0.10) {
  if (yaw_fraction_probe < 0.0 || yaw_fraction_probe > 1.0)
    throw std::invalid_argument("classify: yaw_fraction_probe must be in [0, 1]");
  const Eigen::MatrixXd& G = model.G;
  const Eigen::VectorXd& lo = model.u_lo;
  const Eigen::VectorXd& hi = model.u_hi;

  double fz_min = 0.0, fz_max = 0.0;
  for (int i = 0; i < model.n(); ++i) {
    fz_min += G(3, i) * lo[i];  // kappa > 0
    fz_max += G(3, i) * hi[i];
  }
  if (hover_thrust < fz_min - 1e-12 || hover_thrust > fz_max + 1e-12)
    throw std::invalid_argument("classify: hover thrust outside the AVCS thrust range");

  // One-sided max |M_yaw| over the box.
  double yaw_pos = 0.0, yaw_neg = 0.0;
  for (int i = 0; i < model.n(); ++i) {
    double g = G(2, i);
    yaw_pos += g >= 0.0 ? g * hi[i] : g * lo[i];
    yaw_neg += g >= 0.0 ? g * lo[i] : g * hi[i];
  }
  double max_yaw = std::max(yaw_pos, -yaw_neg);

  double tilt_scale = 0.0;
  for (int i = 0; i < model.n(); ++i)
    tilt_scale += std::hypot(G(0, i), G(1, i)) * std::max(std::abs(lo[i]), std::abs(hi[i]));
  const double tol = 1e-6 * (tilt_scale > 0.0 ? tilt_scale : 1.0);

  ControllabilityVerdict v;
  v.hover_thrust = hover_thrust;
  v.tolerance = tol;
  v.tilt_margin_at_zero_yaw = detail::tilt_margin(G, lo, hi, hover_thrust, 0.0);
  v.tilt_margin_with_free_yaw = detail::tilt_margin(G, lo, hi, hover_thrust, detail::kInf);
  v.tilt_margin_at_probe =
      detail::tilt_margin(G, lo, hi, hover_thrust, yaw_fraction_probe * max_yaw);

  if (v.tilt_margin_at_zero_yaw > tol) {
    v.case_id = 1;
    v.required_yaw_fraction = 0.0;
  } else if (v.tilt_margin_with_free_yaw > tol) {
    v.case_id = 2;
    double a = 0.0, b = 1.0;
    for (int it = 0; it < 30; ++it) {
      double mid = 0.5 * (a + b);
      if (detail::tilt_margin(G, lo, hi, hover_thrust, mid * max_yaw) > tol)
        b = mid;
      else
        a = mid;
    }
    v.required_yaw_fraction = b;
  } else {
    v.case_id = 3;
    v.required_yaw_fraction = 1.0;
  }
  return v;
}

}  // namespace ftc
