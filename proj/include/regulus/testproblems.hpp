#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "regulus/linop.hpp"

namespace regulus {

struct NoiseOpts {
  enum class Kind { gaussian, laplace, impulse };
  Kind kind = Kind::gaussian;
  double level = 0.01;     // gaussian/laplace: ||e|| / ||b_true||
  double fraction = 0.05;  // impulse: fraction of corrupted entries
  std::uint64_t seed = 0;

  static NoiseOpts gaussian(double level, std::uint64_t seed = 0) {
    NoiseOpts n;
    n.kind = Kind::gaussian;
    n.level = level;
    n.seed = seed;
    return n;
  }
  static NoiseOpts laplace(double level, std::uint64_t seed = 0) {
    NoiseOpts n;
    n.kind = Kind::laplace;
    n.level = level;
    n.seed = seed;
    return n;
  }
  static NoiseOpts impulse(double fraction, std::uint64_t seed = 0) {
    NoiseOpts n;
    n.kind = Kind::impulse;
    n.fraction = fraction;
    n.seed = seed;
    return n;
  }
  const char* kind_name() const {
    switch (kind) {
      case Kind::gaussian: return "gaussian";
      case Kind::laplace: return "laplace";
      case Kind::impulse: return "impulse";
    }
    return "?";
  }
};

struct PsfSpec {
  int w1 = 0, w2 = 0;          // odd window sizes (w2 unused in 1D)
  double beta1 = 0, beta2 = 0; // spreads; larger beta = wider blur
};

struct CtGeometry {
  Index nx = 0, ny = 0;
  Index n_detectors = 0;
  std::vector<double> angles;      // radians, per view (solver operator)
  double data_angle_offset = 0.0;  // radians added for the data operator
};

/// A generated inverse problem: solver operator A, data-generation operator
/// A_data (== A only when the inverse crime is committed), optional ground
/// truth, clean and noisy data, and the realized noise norm delta.
struct TestProblem {
  LinOpPtr A;
  LinOpPtr A_data;
  std::optional<Vector> x_true;
  Vector b_true;
  Vector b;
  double delta = 0;

  std::string type;
  Index nx = 0, ny = 1, nt = 1;
  std::optional<PsfSpec> psf;
  std::optional<CtGeometry> geometry;
  std::vector<std::vector<double>> angles_per_frame;  // dynamic only
  NoiseOpts noise;
  bool commit_crime = false;
};

/// Adds noise of the requested kind. Gaussian/Laplace perturbations are
/// rescaled so that ||e|| = level * ||b_true|| exactly; impulse noise
/// replaces the given fraction of entries with uniform values in
/// [min(b_true), max(b_true)]. Deterministic for a fixed seed.
std::pair<Vector, double> add_noise(const Vector& b_true,
                                    const NoiseOpts& opts);

// Signal / image / phantom catalogs (values in [0, 1]).
Vector make_signal_1d(const std::string& name, Index n);
Matrix make_image_2d(const std::string& name, Index nx, Index ny);
Matrix make_phantom(const std::string& name, Index nx, Index ny);

/// 1D Gaussian deblurring. The solver operator uses reflective boundary
/// conditions; the data operator uses zero boundary conditions unless the
/// crime is committed. Signals: piecewise, sigma, curve0..curve3.
TestProblem deblur1d(Index n, const std::string& signal, double spread,
                     const NoiseOpts& noise, bool commit_crime = false);

/// 2D separable Gaussian deblurring with a truncated (w1 x w2) kernel.
/// Images: satellite, blobs, edges, grain.
TestProblem deblur2d(Index nx, Index ny, const std::string& image,
                     std::pair<int, int> window,
                     std::pair<double, double> spreads,
                     const NoiseOpts& noise, bool commit_crime = false);

/// Parallel-beam tomography with exact line-pixel intersection lengths,
/// ceil(sqrt(2) nx) detectors spaced one pixel apart and views equispaced
/// in [0, pi). The data operator's angles are shifted by +0.5 degrees
/// unless the crime is committed. Phantoms: shepp, tectonic, blocks, disk.
TestProblem tomo(Index nx, Index ny, int views, const std::string& phantom,
                 const NoiseOpts& noise, bool commit_crime = false);

struct AngleSchedule {
  double start_deg = 0.0;
  double spacing_deg = -1.0;  // < 0: equispaced, 180/views
  double shift_deg = 1.0;     // added per time step
};

/// Dynamic tomography: block-diagonal per-frame projectors with a shifting
/// angle schedule. Motions: translating-disk, rotating-bars.
TestProblem dynamic_tomo(Index nx, Index ny, Index nt, int views_per_t,
                         const std::string& motion,
                         const AngleSchedule& schedule,
                         const NoiseOpts& noise);

/// Matrix-free 1D convolution operator (exposed for tests).
LinOpPtr gaussian_blur_1d(Index n, double spread, int window,
                          bool zero_boundary);

/// Parallel-beam projector for a square image (exposed for tests).
LinOpPtr radon_operator(Index nx, Index ny,
                        const std::vector<double>& angles_rad);

/// Writes the problem as a directory bundle: vectors as CSV, the operator
/// as CSV when small enough, and problem.json metadata.
void export_problem_bundle(const TestProblem& prob, const std::string& dir);

}  // namespace regulus
