#ifndef KAHLERLAB_ERRORS_HPP
#define KAHLERLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kahlerlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Positivity of the metric lost: smallest eigenvalue of g_phi relative to
/// the background fell below the configured floor.
struct NotKahler : Error {
  double min_eigenvalue;
  explicit NotKahler(double min_eig)
      : Error("potential is not Kahler: min relative eigenvalue " +
              std::to_string(min_eig)),
        min_eigenvalue(min_eig) {}
};

struct NoConvergence : Error {
  double residual;
  int iterations;
  NoConvergence(const std::string& what, double res, int iters)
      : Error(what + " did not converge: residual " + std::to_string(res) +
              " after " + std::to_string(iters) + " iterations"),
        residual(res),
        iterations(iters) {}
};

struct IllPosedParams : Error {
  IllPosedParams() : Error("Cauchy solving requires beta > 0 or gamma > 0") {}
};

struct PositivityLoss : Error {
  double t;
  explicit PositivityLoss(double time, double min_eig)
      : Error("positivity margin lost at t = " + std::to_string(time) +
              " (min eigenvalue " + std::to_string(min_eig) + ")"),
        t(time) {}
};

struct LeftPositiveCone : Error {
  LeftPositiveCone() : Error("sphere-model state left the positive cone") {}
};

struct ConvexityLoss : Error {
  explicit ConvexityLoss(double margin)
      : Error("strict convexity lost: margin " + std::to_string(margin)) {}
};

struct DegeneratePlane : Error {
  DegeneratePlane() : Error("tangent plane is numerically degenerate") {}
};

struct ShockDetected : Error {
  double s;
  explicit ShockDetected(double time)
      : Error("Hamilton-Jacobi step aborted before shock at s = " +
              std::to_string(time)),
        s(time) {}
};

struct WrongParams : Error {
  using Error::Error;
};

struct IncompatibleSource : Error {
  using Error::Error;
};

struct Unsupported : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace kahlerlab

#endif
