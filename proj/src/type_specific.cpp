#include "conicfit/type_specific.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace conicfit {

namespace {

// Bounds |G^T Q G| up to a factor 2 and stays nonzero for axis-aligned parabolas.
double quadric_scale(const ConicVector& g) { return g.head<3>().squaredNorm(); }

ConicVector c_normalized(const ConicVector& g, const SymMatrix6& c) {
  const double n2 = g.dot(c * g);
  if (!(n2 > 0)) fail_numerical("projection left the normalisation surface");
  return g / std::sqrt(n2);
}

// Newton step on G^T Q G = 0 along Y0 Q G; stays on the plane G0^T C G = 1
// because Y0 C G0 = 0.
ConicVector first_order_step(const ConicVector& g, const SymMatrix6& y0, const SymMatrix6& q) {
  const ConicVector dir = y0 * (q * g);
  const double denom = 2 * g.dot(q * dir);
  if (!(std::abs(denom) > 0) || !std::isfinite(denom)) fail_numerical("projection direction undefined");
  return g - (g.dot(q * g) / denom) * dir;
}

// C^+ : inverse of the 5x5 block padded with zeros.
SymMatrix6 constraint_pinv(const SymMatrix6& c) {
  SymMatrix6 out = SymMatrix6::Zero();
  const Eigen::Matrix<double, kConicRank, kConicRank> block = c.topLeftCorner<kConicRank, kConicRank>();
  out.topLeftCorner<kConicRank, kConicRank>() =
      block.llt().solve(Eigen::Matrix<double, kConicRank, kConicRank>::Identity());
  return detail::symmetrized(out);
}

}  // namespace

ParabolicFit project_to_parabola(const GenericFit& fit) {
  const SymMatrix6 q = parabolic_quadric();
  const SymMatrix6& s = fit.scatter;
  const SymMatrix6& c = fit.constraint;
  const SymMatrix6& y0 = fit.y0;
  const ConicVector g0 = fit.g0_raw;
  const ConicVector cg0 = c * g0;

  ParabolicFit out;
  ConicVector g = g0;
  // Already parabolic to the convergence tolerance: nothing to project.
  if (std::abs(g0.dot(q * g0)) >= 1e-12 * quadric_scale(g0)) {
    g = c_normalized(first_order_step(g0, y0, q), c);
    bool converged = false;
    double q_rel = 0, align = 0;
    for (int it = 1; it <= kParabolaMaxIterations; ++it) {
      out.iterations = it;
      // Back onto the tangent plane of the normalisation surface at G0.
      const ConicVector gt = g / cg0.dot(g);
      ConicVector d = gt - g0;
      const ConicVector n = y0 * (q * gt);
      const double nsn = n.dot(s * n);
      if (!(nsn > 0)) fail_numerical("projection direction undefined");
      const ConicVector d_proj = n * (n.dot(s * d) / nsn);
      const ConicVector off = d - d_proj;
      const double dsd = d.dot(s * d);
      align = dsd > 0 ? std::sqrt(std::max(off.dot(s * off), 0.0) / dsd) : 0.0;
      q_rel = std::abs(g.dot(q * g)) / quadric_scale(g);
      // Once G0 is within roundoff of the cone the offset direction is noise.
      const bool settled = align < 1e-10 || off.norm() <= 1e-14 * gt.norm();
      if (q_rel < 1e-12 && settled) {
        converged = true;
        break;
      }
      d = d_proj;
      g = c_normalized(first_order_step(g0 + d, y0, q), c);
    }
    if (!converged) {
      std::ostringstream msg;
      msg << "parabolic projection did not converge: relative residual " << q_rel
          << ", alignment " << align;
      fail_numerical(msg.str());
    }
  }
  out.g_bar_raw = g;
  out.residual = std::abs(g.dot(q * g));

  const SymMatrix6 t = fit.correction();
  out.g_bar = t * g;

  // Deviations must respect both the normalisation and the parabolic constraint.
  const SymMatrix6 c_pinv = constraint_pinv(c);
  const ConicVector qg = q * g;
  const double norm_q = qg.dot(c_pinv * qg);
  if (!(norm_q > 0)) fail_numerical("projection direction undefined");
  const SymMatrix6 p0 = g * (c * g).transpose();
  const SymMatrix6 p_bar = (c_pinv * qg) * qg.transpose() / norm_q;
  const SymMatrix6 keep = SymMatrix6::Identity() - p0 - p_bar;
  out.s_bar = detail::symmetrized((keep.transpose() * s * keep).eval());

  Eigen::Matrix<double, kConicDim, Eigen::Dynamic> normals(kConicDim, 2);
  normals.col(0) = c * g;
  normals.col(1) = qg;
  const SymMatrix6 y_bar = restricted_inverse<double, kConicDim>(out.s_bar, normals);
  const SymMatrix6 v_raw = covariance_optimal<double, kConicDim>(y_bar, fit.sigma2_hat, fit.n_points);
  out.v_bar = detail::symmetrized((t * v_raw * t.transpose()).eval());
  out.rank = 4;
  return out;
}

double truncated_mean_factor(double x0) {
  if (!std::isfinite(x0)) fail_input("non-finite truncation point");
  constexpr double k = 0.79788456080286535588;  // sqrt(2/pi)
  if (x0 <= 0) return k * std::exp(-0.5 * x0 * x0) / std::erfc(x0 / std::numbers::sqrt2);
  const double t = x0 / std::numbers::sqrt2;
  double erfcx;
  if (t < 26) {
    erfcx = std::exp(t * t) * std::erfc(t);
  } else {
    // Asymptotic series of exp(t^2) erfc(t); remaining terms are below 1e-16.
    const double u = 1 / (2 * t * t);
    erfcx = (1 - u * (1 - 3 * u * (1 - 5 * u * (1 - 7 * u)))) /
            (t * std::sqrt(std::numbers::pi));
  }
  return k / erfcx;
}

TruncatedPosterior type_constrained_mean(const GenericFit& fit, const ParabolicFit& pf,
                                         ConicClass target) {
  if (target != ConicClass::Ellipse && target != ConicClass::Hyperbola)
    fail_config("truncated posterior target must be ellipse or hyperbola");

  TruncatedPosterior out;
  out.g0 = fit.g0;
  out.v0 = fit.v0;
  out.g_bar = pf.g_bar;
  out.target = target;

  const ConicVector& g0 = fit.g0_raw;
  const ConicVector& gb = pf.g_bar_raw;
  const SymMatrix6 q = parabolic_quadric();
  const double disc = conic_discriminant(g0);
  const bool right_side = target == ConicClass::Ellipse ? disc > 0 : disc < 0;
  const double n = static_cast<double>(fit.n_points);
  const double s2 = fit.sigma2_hat;

  ConicVector mean_raw;
  if (!(s2 > 0)) {
    // No spread: the posterior collapses onto whichever point is admissible;
    // x0 is left at 0 since the standardised offset is undefined.
    mean_raw = right_side ? g0 : gb;
  } else {
    const double radicand = n * (gb.dot(fit.scatter * gb) / s2 - 1);
    const double mag = std::sqrt(std::max(radicand, 0.0));
    out.x0 = right_side ? -mag : mag;
    if (mag > 0 && (gb - g0).norm() > 1e-12 * g0.norm()) {
      mean_raw = g0 + (truncated_mean_factor(out.x0) / out.x0) * (gb - g0);
    } else {
      // G0 sits on the boundary: step off along the constraint normal.
      out.boundary_case = true;
      out.x0 = 0;
      ConicVector dir = fit.y0 * (q * g0);
      const double dsd = dir.dot(fit.scatter * dir);
      if (!(dsd > 0)) fail_numerical("projection direction undefined");
      const double slope = g0.dot(q * dir);  // d(G^T Q G)/dt / 2
      const bool toward_ellipse = target == ConicClass::Ellipse;
      if ((slope > 0) != toward_ellipse) dir = -dir;
      mean_raw = g0 + truncated_mean_factor(0.0) * std::sqrt(s2 / (n * dsd)) * dir;
    }
  }

  out.mean_unnormalized = fit.correction() * mean_raw;
  out.mean = c_normalized(out.mean_unnormalized, fit.constraint);
  return out;
}

}  // namespace conicfit
