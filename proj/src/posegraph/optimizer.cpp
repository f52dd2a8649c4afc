#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Cholesky>

#include "navscale/posegraph.hpp"

namespace navscale::posegraph {
namespace {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

struct NormalEquations {
  std::vector<Mat3> diag;
  std::vector<Mat3> upper;  // block (i, i+1)
  std::vector<Vec3> gradient;
};

NormalEquations assemble(const FusionProblem& p, const std::vector<PoseSE2>& x) {
  const std::size_t n = x.size();
  NormalEquations ne{std::vector<Mat3>(n, Mat3::Zero()), std::vector<Mat3>(n > 0 ? n - 1 : 0, Mat3::Zero()),
                     std::vector<Vec3>(n, Vec3::Zero())};
  for (const auto& f : p.gps) {
    const auto lin = linearize(f, x[f.node]);
    ne.diag[f.node] += lin.jacobian.transpose() * lin.jacobian;
    ne.gradient[f.node] += lin.jacobian.transpose() * lin.residual;
  }
  for (const auto& f : p.heading) {
    const auto lin = linearize(f, x[f.node]);
    ne.diag[f.node] += lin.jacobian.transpose() * lin.jacobian;
    ne.gradient[f.node] += lin.jacobian.transpose() * lin.residual;
  }
  for (const auto& f : p.odometry) {
    const std::size_t i = f.from;
    const auto lin = linearize(f, x[i], x[i + 1]);
    ne.diag[i] += lin.jacobian_from.transpose() * lin.jacobian_from;
    ne.diag[i + 1] += lin.jacobian_to.transpose() * lin.jacobian_to;
    ne.upper[i] += lin.jacobian_from.transpose() * lin.jacobian_to;
    ne.gradient[i] += lin.jacobian_from.transpose() * lin.residual;
    ne.gradient[i + 1] += lin.jacobian_to.transpose() * lin.residual;
  }
  return ne;
}

// Solves (H + lambda I) dx = -g for block-tridiagonal H. Returns false if a
// pivot block is not positive definite.
bool solve_block_tridiagonal(const NormalEquations& ne, const std::vector<bool>& fixed, double lambda,
                             std::vector<Vec3>& dx) {
  const std::size_t n = ne.diag.size();
  std::vector<Mat3> diag = ne.diag;
  std::vector<Mat3> upper = ne.upper;
  std::vector<Vec3> rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    rhs[i] = -ne.gradient[i];
    diag[i] += lambda * Mat3::Identity();
    if (fixed[i]) {
      diag[i] = Mat3::Identity();
      rhs[i].setZero();
      if (i > 0) upper[i - 1].setZero();
      if (i + 1 < n) upper[i].setZero();
    }
  }

  std::vector<Eigen::LLT<Mat3>> pivots(n);
  std::vector<Vec3> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    Mat3 s = diag[i];
    Vec3 r = rhs[i];
    if (i > 0) {
      const Mat3 w = pivots[i - 1].solve(upper[i - 1]);  // S_{i-1}^{-1} U_{i-1}
      s -= upper[i - 1].transpose() * w;
      r -= w.transpose() * y[i - 1];
    }
    pivots[i].compute(s);
    if (pivots[i].info() != Eigen::Success) return false;
    y[i] = r;
  }
  dx.assign(n, Vec3::Zero());
  for (std::size_t i = n; i-- > 0;) {
    Vec3 r = y[i];
    if (i + 1 < n) r -= upper[i] * dx[i + 1];
    dx[i] = pivots[i].solve(r);
    if (!dx[i].allFinite()) return false;
  }
  return true;
}

struct ChainResult {
  std::vector<PoseSE2> poses;
  bool converged{false};
  int iterations{0};
  double cost{0.0};
  std::vector<double> cost_log;
};

ChainResult solve_chain(const FusionProblem& p, std::vector<PoseSE2> x, const std::vector<bool>& fixed,
                        const OptimizeOptions& options) {
  ChainResult out;
  double cost = total_cost(p, x);
  double lambda = 0.0;
  out.cost_log.push_back(cost);
  for (int iter = 0; iter < options.max_iters; ++iter) {
    if (cost <= std::numeric_limits<double>::min()) {
      out.converged = true;
      break;
    }
    const NormalEquations ne = assemble(p, x);
    double mean_diag = 0.0;
    for (const auto& d : ne.diag) mean_diag += d.trace();
    mean_diag = std::max(mean_diag / (3.0 * static_cast<double>(ne.diag.size())), 1e-12);

    bool accepted = false;
    std::vector<Vec3> dx;
    std::vector<PoseSE2> trial(x.size());
    double trial_cost = cost;
    while (true) {
      if (solve_block_tridiagonal(ne, fixed, lambda, dx)) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          trial[i] = {x[i].x + dx[i](0), x[i].y + dx[i](1), wrap_angle(x[i].theta + dx[i](2))};
        }
        trial_cost = total_cost(p, trial);
        if (trial_cost <= cost) {
          accepted = true;
          break;
        }
      }
      lambda = lambda == 0.0 ? 1e-6 * mean_diag : lambda * 10.0;
      if (lambda > 1e12 * mean_diag) break;
    }
    out.iterations = iter + 1;
    if (!accepted) {
      // No descent direction left at machine precision.
      out.converged = true;
      break;
    }
    const double rel = (cost - trial_cost) / std::max(cost, std::numeric_limits<double>::min());
    x.swap(trial);
    cost = trial_cost;
    out.cost_log.push_back(cost);
    lambda = lambda < 1e-9 * mean_diag ? 0.0 : lambda / 10.0;
    if (rel < options.tol) {
      out.converged = true;
      break;
    }
  }
  out.poses = std::move(x);
  out.cost = cost;
  return out;
}

FusionProblem extract_window(const FusionProblem& p, std::size_t begin, std::size_t end) {
  FusionProblem w;
  w.origin = p.origin;
  w.timestamps.assign(p.timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                      p.timestamps.begin() + static_cast<std::ptrdiff_t>(end));
  w.initial.assign(p.initial.begin() + static_cast<std::ptrdiff_t>(begin),
                   p.initial.begin() + static_cast<std::ptrdiff_t>(end));
  for (auto f : p.gps) {
    if (f.node >= begin && f.node < end) {
      f.node -= begin;
      w.gps.push_back(f);
    }
  }
  for (auto f : p.heading) {
    if (f.node >= begin && f.node < end) {
      f.node -= begin;
      w.heading.push_back(f);
    }
  }
  for (auto f : p.odometry) {
    if (f.from >= begin && f.from + 1 < end) {
      f.from -= begin;
      w.odometry.push_back(f);
    }
  }
  return w;
}

}  // namespace

GpsLinearization linearize(const GpsFactor& f, const PoseSE2& pose) {
  GpsLinearization lin;
  lin.residual = Eigen::Vector2d(pose.x - f.observed.x, pose.y - f.observed.y) / f.sigma;
  lin.jacobian.setZero();
  lin.jacobian(0, 0) = 1.0 / f.sigma;
  lin.jacobian(1, 1) = 1.0 / f.sigma;
  return lin;
}

HeadingLinearization linearize(const HeadingFactor& f, const PoseSE2& pose) {
  HeadingLinearization lin;
  lin.residual = wrap_angle(pose.theta - f.observed) / f.sigma;
  lin.jacobian << 0.0, 0.0, 1.0 / f.sigma;
  return lin;
}

OdometryLinearization linearize(const OdometryFactor& f, const PoseSE2& from, const PoseSE2& to) {
  const double c = std::cos(from.theta), s = std::sin(from.theta);
  const double dx = to.x - from.x, dy = to.y - from.y;
  const double ix = 1.0 / f.sigma_xy, it = 1.0 / f.sigma_theta;

  OdometryLinearization lin;
  lin.residual << (c * dx + s * dy - f.delta.x) * ix, (-s * dx + c * dy - f.delta.y) * ix,
      wrap_angle(to.theta - from.theta - f.delta.theta) * it;
  lin.jacobian_from << -c * ix, -s * ix, (-s * dx + c * dy) * ix,  //
      s * ix, -c * ix, (-c * dx - s * dy) * ix,                    //
      0.0, 0.0, -it;
  lin.jacobian_to << c * ix, s * ix, 0.0,  //
      -s * ix, c * ix, 0.0,                //
      0.0, 0.0, it;
  return lin;
}

double total_cost(const FusionProblem& p, const std::vector<PoseSE2>& x) {
  double cost = 0.0;
  for (const auto& f : p.gps) cost += linearize(f, x[f.node]).residual.squaredNorm();
  for (const auto& f : p.heading) {
    const double r = linearize(f, x[f.node]).residual;
    cost += r * r;
  }
  for (const auto& f : p.odometry) cost += linearize(f, x[f.from], x[f.from + 1]).residual.squaredNorm();
  return cost;
}

FusionResult optimize(const FusionProblem& problem, const OptimizeOptions& options) {
  const std::size_t n = problem.node_count();
  FusionResult result;
  if (n == 0) {
    result.converged = true;
    return result;
  }
  const std::size_t window = std::max<std::size_t>(options.window, 2);
  const std::size_t overlap = std::min(options.overlap, window - 1);

  if (n <= window) {
    auto chain = solve_chain(problem, problem.initial, std::vector<bool>(n, false), options);
    result.poses = std::move(chain.poses);
    result.converged = chain.converged;
    result.iterations = chain.iterations;
    result.final_cost = chain.cost;
    result.cost_log = std::move(chain.cost_log);
    return result;
  }

  result.poses = problem.initial;
  result.converged = true;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = std::min(begin + window, n);
    FusionProblem w = extract_window(problem, begin, end);
    std::vector<bool> fixed(end - begin, false);
    std::vector<PoseSE2> init = w.initial;
    if (begin > 0) {
      // Anchor on the previous window's estimate and warm-start the overlap.
      for (std::size_t i = begin; i < std::min(begin + overlap, end); ++i) init[i - begin] = result.poses[i];
      fixed[0] = true;
    }
    auto chain = solve_chain(w, std::move(init), fixed, options);
    for (std::size_t i = begin; i < end; ++i) result.poses[i] = chain.poses[i - begin];
    result.converged = result.converged && chain.converged;
    result.iterations += chain.iterations;
    result.cost_log.insert(result.cost_log.end(), chain.cost_log.begin(), chain.cost_log.end());
    if (end == n) break;
    begin = end - overlap;
  }
  result.final_cost = total_cost(problem, result.poses);
  return result;
}

void write_cost_log_csv(std::ostream& out, const FusionResult& result) {
  out << "iteration,cost\n";
  for (std::size_t i = 0; i < result.cost_log.size(); ++i) out << i << ',' << result.cost_log[i] << '\n';
}

}  // namespace navscale::posegraph
