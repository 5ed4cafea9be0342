#include "regulus/testproblems.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "regulus/csv.hpp"
#include "regulus/rng.hpp"

namespace regulus {

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// 1D convolution with reflective or zero boundary conditions.

class Conv1D final : public LinOp {
 public:
  Conv1D(Index n, Vector kernel, bool zero_boundary)
      : LinOp(n, n), kernel_(std::move(kernel)), zero_(zero_boundary) {
    check_param(kernel_.size() % 2 == 1, "conv1d: window must be odd");
    half_ = (kernel_.size() - 1) / 2;
  }

 protected:
  Vector do_apply(const Vector& x) const override {
    const Index n = cols();
    Vector y = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
      double acc = 0;
      for (Index t = -half_; t <= half_; ++t) {
        Index j = i + t;
        if (j < 0) {
          if (zero_) continue;
          j = -1 - j;  // half-sample reflection
        } else if (j >= n) {
          if (zero_) continue;
          j = 2 * n - 1 - j;
        }
        if (j < 0 || j >= n) continue;  // window wider than the signal
        acc += kernel_[t + half_] * x[j];
      }
      y[i] = acc;
    }
    return y;
  }

  Vector do_apply_transpose(const Vector& y) const override {
    const Index n = cols();
    Vector x = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
      for (Index t = -half_; t <= half_; ++t) {
        Index j = i + t;
        if (j < 0) {
          if (zero_) continue;
          j = -1 - j;
        } else if (j >= n) {
          if (zero_) continue;
          j = 2 * n - 1 - j;
        }
        if (j < 0 || j >= n) continue;
        x[j] += kernel_[t + half_] * y[i];
      }
    }
    return x;
  }

 private:
  Vector kernel_;
  bool zero_;
  Index half_;
};

Vector gaussian_kernel(double spread, int window) {
  check_param(spread > 0, "gaussian kernel: spread must be > 0");
  check_param(window >= 1 && window % 2 == 1,
              "gaussian kernel: window must be odd and >= 1");
  const int half = (window - 1) / 2;
  Vector k(window);
  for (int t = -half; t <= half; ++t)
    k[t + half] = std::exp(-0.5 * (double(t) * t) / (spread * spread));
  k /= k.sum();
  return k;
}

// ---------------------------------------------------------------------------
// Parallel-beam projector with exact line-pixel intersection lengths,
// precomputed per ray (Siddon traversal).

class RadonOp final : public LinOp {
 public:
  RadonOp(Index nx, Index ny, std::vector<double> angles)
      : LinOp(static_cast<Index>(angles.size()) * n_det(nx), nx * ny),
        nx_(nx),
        ny_(ny),
        angles_(std::move(angles)) {
    build();
  }

  static Index n_det(Index nx) {
    return static_cast<Index>(std::ceil(std::sqrt(2.0) * double(nx)));
  }

  Index detectors() const { return n_det(nx_); }

 protected:
  Vector do_apply(const Vector& x) const override {
    Vector y = Vector::Zero(rows());
    for (Index r = 0; r < rows(); ++r) {
      double acc = 0;
      for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k)
        acc += weights_[k] * x[pixels_[k]];
      y[r] = acc;
    }
    return y;
  }

  Vector do_apply_transpose(const Vector& y) const override {
    Vector x = Vector::Zero(cols());
    for (Index r = 0; r < rows(); ++r)
      for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k)
        x[pixels_[k]] += weights_[k] * y[r];
    return x;
  }

 private:
  void build() {
    const Index nd = detectors();
    const double u0 = -double(nx_) / 2.0, v0 = -double(ny_) / 2.0;
    offsets_.assign(rows() + 1, 0);
    std::vector<double> ts;
    for (size_t a = 0; a < angles_.size(); ++a) {
      const double cb = std::cos(angles_[a]), sb = std::sin(angles_[a]);
      for (Index d = 0; d < nd; ++d) {
        const double c = double(d) - double(nd - 1) / 2.0;
        // ray: p(t) = c*(cb, sb) + t*(-sb, cb)
        const double pu = c * cb, pv = c * sb;
        const double du = -sb, dv = cb;
        double t_enter = -1e30, t_exit = 1e30;
        bool miss = false;
        if (std::abs(du) > 1e-12) {
          double t1 = (u0 - pu) / du, t2 = (u0 + nx_ - pu) / du;
          t_enter = std::max(t_enter, std::min(t1, t2));
          t_exit = std::min(t_exit, std::max(t1, t2));
        } else if (pu < u0 || pu > u0 + nx_) {
          miss = true;
        }
        if (std::abs(dv) > 1e-12) {
          double t1 = (v0 - pv) / dv, t2 = (v0 + ny_ - pv) / dv;
          t_enter = std::max(t_enter, std::min(t1, t2));
          t_exit = std::min(t_exit, std::max(t1, t2));
        } else if (pv < v0 || pv > v0 + ny_) {
          miss = true;
        }
        const Index row = static_cast<Index>(a) * nd + d;
        if (miss || t_enter >= t_exit - 1e-12) {
          offsets_[row + 1] = offsets_[row];
          continue;
        }
        ts.clear();
        ts.push_back(t_enter);
        ts.push_back(t_exit);
        if (std::abs(du) > 1e-12)
          for (Index i = 0; i <= nx_; ++i) {
            double t = (u0 + i - pu) / du;
            if (t > t_enter + 1e-12 && t < t_exit - 1e-12) ts.push_back(t);
          }
        if (std::abs(dv) > 1e-12)
          for (Index i = 0; i <= ny_; ++i) {
            double t = (v0 + i - pv) / dv;
            if (t > t_enter + 1e-12 && t < t_exit - 1e-12) ts.push_back(t);
          }
        std::sort(ts.begin(), ts.end());
        for (size_t k = 0; k + 1 < ts.size(); ++k) {
          double len = ts[k + 1] - ts[k];
          if (len <= 1e-12) continue;
          double tm = 0.5 * (ts[k] + ts[k + 1]);
          Index ix = static_cast<Index>(std::floor(pu + tm * du - u0));
          Index iy = static_cast<Index>(std::floor(pv + tm * dv - v0));
          ix = std::clamp<Index>(ix, 0, nx_ - 1);
          iy = std::clamp<Index>(iy, 0, ny_ - 1);
          pixels_.push_back(ix + iy * nx_);
          weights_.push_back(len);
        }
        offsets_[row + 1] = static_cast<Index>(pixels_.size());
      }
    }
  }

  Index nx_, ny_;
  std::vector<double> angles_;
  std::vector<Index> offsets_;
  std::vector<Index> pixels_;
  std::vector<double> weights_;
};

double deg2rad(double d) { return d * kPi / 180.0; }

std::vector<double> equispaced_angles(int views, double offset_rad) {
  std::vector<double> a(static_cast<size_t>(views));
  for (int v = 0; v < views; ++v)
    a[static_cast<size_t>(v)] = offset_rad + double(v) * kPi / double(views);
  return a;
}

// ---------------------------------------------------------------------------
// Procedural signals, images and phantoms (values in [0, 1]).

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double bump(double t, double center, double width) {
  double z = (t - center) / width;
  return std::exp(-0.5 * z * z);
}

}  // namespace

Vector make_signal_1d(const std::string& name, Index n) {
  check_param(n >= 8, "make_signal_1d: n must be >= 8");
  Vector x = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    double t = (double(i) + 0.5) / double(n);
    double v = 0;
    if (name == "piecewise") {
      if (t >= 0.12 && t < 0.32) v = 0.75;
      else if (t >= 0.40 && t < 0.60) v = 1.0;
      else if (t >= 0.68 && t < 0.88) v = 0.35;
    } else if (name == "sigma") {
      v = 1.0 / (1.0 + std::exp(-18.0 * (t - 0.5)));
    } else if (name == "curve0") {
      v = bump(t, 0.5, 0.08);
    } else if (name == "curve1") {
      v = clamp01(0.85 * bump(t, 0.35, 0.06) + 0.6 * bump(t, 0.72, 0.09));
    } else if (name == "curve2") {
      v = clamp01(0.5 + 0.3 * std::sin(2 * kPi * t) +
                  0.15 * std::sin(6 * kPi * t));
    } else if (name == "curve3") {
      v = clamp01(0.9 * bump(t, 0.3, 0.07) + (t > 0.6 && t < 0.9 ? 0.5 : 0.0));
    } else {
      throw ParameterError("make_signal_1d: unknown signal '" + name + "'");
    }
    x[i] = v;
  }
  return x;
}

Matrix make_image_2d(const std::string& name, Index nx, Index ny) {
  check_param(nx >= 8 && ny >= 8, "make_image_2d: nx, ny must be >= 8");
  Matrix img = Matrix::Zero(nx, ny);
  auto uv = [&](Index ix, Index iy) {
    return std::pair<double, double>{(double(ix) + 0.5) / double(nx),
                                     (double(iy) + 0.5) / double(ny)};
  };
  if (name == "satellite") {
    for (Index ix = 0; ix < nx; ++ix)
      for (Index iy = 0; iy < ny; ++iy) {
        auto [u, v] = uv(ix, iy);
        double val = 0;
        double r = std::hypot(u - 0.5, v - 0.5);
        if (r < 0.12) val = 1.0;                                   // body
        if (std::abs(v - 0.5) < 0.035 && u > 0.18 && u < 0.82)
          val = std::max(val, 0.75);                               // panel arm
        if (std::abs(u - 0.5) < 0.02 && v > 0.3 && v < 0.7)
          val = std::max(val, 0.55);                               // antenna
        if (r > 0.13 && r < 0.16 && u > 0.5) val = std::max(val, 0.4);
        img(ix, iy) = val;
      }
  } else if (name == "blobs") {
    for (Index ix = 0; ix < nx; ++ix)
      for (Index iy = 0; iy < ny; ++iy) {
        auto [u, v] = uv(ix, iy);
        double val = 0.9 * bump(u, 0.35, 0.1) * bump(v, 0.4, 0.12) +
                     0.7 * bump(u, 0.65, 0.09) * bump(v, 0.65, 0.08) +
                     0.5 * bump(u, 0.5, 0.18) * bump(v, 0.3, 0.07);
        img(ix, iy) = clamp01(val);
      }
  } else if (name == "edges") {
    for (Index ix = 0; ix < nx; ++ix)
      for (Index iy = 0; iy < ny; ++iy) {
        auto [u, v] = uv(ix, iy);
        double val = 0;
        if (u > 0.22 && u < 0.78 && v > 0.22 && v < 0.78) val = 0.45;
        if (u > 0.3 && u < 0.55 && v > 0.34 && v < 0.62) val = 0.95;
        if (u > 0.6 && u < 0.74 && v > 0.28 && v < 0.72) val = 0.7;
        img(ix, iy) = val;
      }
  } else if (name == "grain") {
    CounterRng rng(1234);
    struct Blob { double u, v, a, b, phi, val; };
    std::vector<Blob> blobs;
    for (int k = 0; k < 14; ++k) {
      Blob bl;
      bl.u = 0.2 + 0.6 * rng.next_uniform();
      bl.v = 0.2 + 0.6 * rng.next_uniform();
      bl.a = 0.02 + 0.05 * rng.next_uniform();
      bl.b = 0.02 + 0.05 * rng.next_uniform();
      bl.phi = kPi * rng.next_uniform();
      bl.val = 0.5 + 0.5 * rng.next_uniform();
      blobs.push_back(bl);
    }
    for (Index ix = 0; ix < nx; ++ix)
      for (Index iy = 0; iy < ny; ++iy) {
        auto [u, v] = uv(ix, iy);
        double val = 0;
        for (const auto& bl : blobs) {
          double du = u - bl.u, dv = v - bl.v;
          double c = std::cos(bl.phi), s = std::sin(bl.phi);
          double e1 = (c * du + s * dv) / bl.a;
          double e2 = (-s * du + c * dv) / bl.b;
          if (e1 * e1 + e2 * e2 < 1.0) val = std::max(val, bl.val);
        }
        img(ix, iy) = val;
      }
  } else {
    throw ParameterError("make_image_2d: unknown image '" + name + "'");
  }
  return img;
}

namespace {

struct Ellipse {
  double cu, cv, a, b, phi, add;
};

double eval_ellipses(const std::vector<Ellipse>& es, double u, double v) {
  double val = 0;
  for (const auto& e : es) {
    double du = u - e.cu, dv = v - e.cv;
    double c = std::cos(e.phi), s = std::sin(e.phi);
    double e1 = (c * du + s * dv) / e.a;
    double e2 = (-s * du + c * dv) / e.b;
    if (e1 * e1 + e2 * e2 <= 1.0) val += e.add;
  }
  return clamp01(val);
}

}  // namespace

Matrix make_phantom(const std::string& name, Index nx, Index ny) {
  check_param(nx >= 8 && ny >= 8, "make_phantom: nx, ny must be >= 8");
  Matrix img = Matrix::Zero(nx, ny);
  auto fill = [&](auto&& f) {
    for (Index ix = 0; ix < nx; ++ix)
      for (Index iy = 0; iy < ny; ++iy) {
        double u = (double(ix) + 0.5) / double(nx) - 0.5;
        double v = (double(iy) + 0.5) / double(ny) - 0.5;
        img(ix, iy) = f(u, v);
      }
  };
  if (name == "disk") {
    fill([](double u, double v) {
      return std::hypot(u, v) < 0.35 ? 1.0 : 0.0;
    });
  } else if (name == "shepp") {
    std::vector<Ellipse> es = {
        {0.0, 0.0, 0.42, 0.36, 0.0, 0.6},
        {0.0, 0.02, 0.36, 0.3, 0.0, 0.25},
        {-0.1, -0.05, 0.1, 0.06, 0.4, -0.35},
        {0.1, -0.05, 0.08, 0.05, -0.4, -0.35},
        {0.0, 0.16, 0.05, 0.08, 0.0, 0.3},
        {0.02, -0.2, 0.03, 0.03, 0.0, 0.35},
    };
    fill([&](double u, double v) { return eval_ellipses(es, u, v); });
  } else if (name == "tectonic") {
    fill([](double u, double v) {
      if (std::hypot(u, v) > 0.45) return 0.0;
      double val = 0.2;
      double s1 = u * std::cos(0.5) + v * std::sin(0.5);
      double s2 = u * std::cos(2.1) + v * std::sin(2.1);
      if (s1 > -0.12 && s1 < 0.02) val += 0.45;
      if (s2 > 0.03 && s2 < 0.16) val += 0.3;
      return clamp01(val);
    });
  } else if (name == "blocks") {
    fill([](double u, double v) {
      if (std::hypot(u, v) > 0.47) return 0.0;
      double val = 0;
      if (u > -0.3 && u < -0.05 && v > -0.25 && v < 0.15) val = 0.55;
      if (u > 0.0 && u < 0.3 && v > -0.1 && v < 0.3) val = 0.95;
      if (u > -0.15 && u < 0.1 && v > -0.35 && v < -0.18) val = 0.75;
      return val;
    });
  } else {
    throw ParameterError("make_phantom: unknown phantom '" + name + "'");
  }
  return img;
}

std::pair<Vector, double> add_noise(const Vector& b_true,
                                    const NoiseOpts& opts) {
  require_finite(b_true, "add_noise b_true");
  CounterRng rng(opts.seed);
  switch (opts.kind) {
    case NoiseOpts::Kind::gaussian:
    case NoiseOpts::Kind::laplace: {
      check_param(opts.level > 0, "add_noise: level must be > 0");
      Vector g(b_true.size());
      for (Index i = 0; i < g.size(); ++i)
        g[i] = opts.kind == NoiseOpts::Kind::gaussian ? rng.next_normal()
                                                      : rng.next_laplace();
      double gn = g.norm();
      check_param(gn > 0, "add_noise: degenerate noise draw");
      double delta = opts.level * b_true.norm();
      Vector e = (delta / gn) * g;
      return {b_true + e, delta};
    }
    case NoiseOpts::Kind::impulse: {
      check_param(opts.fraction > 0 && opts.fraction < 1,
                  "add_noise: impulse fraction must lie in (0,1)");
      const Index m = b_true.size();
      Index count = static_cast<Index>(
          std::max<double>(1.0, std::floor(opts.fraction * double(m))));
      std::vector<Index> idx(static_cast<size_t>(m));
      std::iota(idx.begin(), idx.end(), Index(0));
      for (Index i = 0; i < count; ++i) {
        Index j = i + static_cast<Index>(
                          rng.next_below(static_cast<std::uint64_t>(m - i)));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
      }
      double lo = b_true.minCoeff(), hi = b_true.maxCoeff();
      Vector b = b_true;
      for (Index i = 0; i < count; ++i)
        b[idx[static_cast<size_t>(i)]] = lo + (hi - lo) * rng.next_uniform();
      double delta = (b - b_true).norm();
      return {b, delta};
    }
  }
  throw ParameterError("add_noise: unknown noise kind");
}

LinOpPtr gaussian_blur_1d(Index n, double spread, int window,
                          bool zero_boundary) {
  return std::make_shared<Conv1D>(n, gaussian_kernel(spread, window),
                                  zero_boundary);
}

LinOpPtr radon_operator(Index nx, Index ny,
                        const std::vector<double>& angles_rad) {
  return std::make_shared<RadonOp>(nx, ny, angles_rad);
}

TestProblem deblur1d(Index n, const std::string& signal, double spread,
                     const NoiseOpts& noise, bool commit_crime) {
  check_param(n >= 8, "deblur1d: n must be >= 8");
  check_param(spread > 0, "deblur1d: spread must be > 0");
  // Full-support window (odd length close to n).
  int window = static_cast<int>(n % 2 == 1 ? n : n - 1);

  TestProblem prob;
  prob.type = "deblur1d";
  prob.nx = n;
  prob.commit_crime = commit_crime;
  prob.noise = noise;
  prob.psf = PsfSpec{window, 0, spread, 0};
  prob.A = gaussian_blur_1d(n, spread, window, /*zero_boundary=*/false);
  prob.A_data = commit_crime
                    ? prob.A
                    : gaussian_blur_1d(n, spread, window, /*zero=*/true);
  prob.x_true = make_signal_1d(signal, n);
  prob.b_true = prob.A_data->apply(*prob.x_true);
  auto [b, delta] = add_noise(prob.b_true, noise);
  prob.b = std::move(b);
  prob.delta = delta;
  return prob;
}

TestProblem deblur2d(Index nx, Index ny, const std::string& image,
                     std::pair<int, int> window,
                     std::pair<double, double> spreads,
                     const NoiseOpts& noise, bool commit_crime) {
  check_param(window.first % 2 == 1 && window.second % 2 == 1,
              "deblur2d: window sizes must be odd");
  check_param(nx >= window.first && ny >= window.second,
              "deblur2d: image must be at least the window size");
  auto make_op = [&](bool zero) {
    LinOpPtr cx = gaussian_blur_1d(nx, spreads.first, window.first, zero);
    LinOpPtr cy = gaussian_blur_1d(ny, spreads.second, window.second, zero);
    return kron_op(cy, cx);
  };

  TestProblem prob;
  prob.type = "deblur2d";
  prob.nx = nx;
  prob.ny = ny;
  prob.commit_crime = commit_crime;
  prob.noise = noise;
  prob.psf = PsfSpec{window.first, window.second, spreads.first,
                     spreads.second};
  prob.A = make_op(false);
  prob.A_data = commit_crime ? prob.A : make_op(true);
  Matrix img = make_image_2d(image, nx, ny);
  prob.x_true = Eigen::Map<const Vector>(img.data(), nx * ny);
  prob.b_true = prob.A_data->apply(*prob.x_true);
  auto [b, delta] = add_noise(prob.b_true, noise);
  prob.b = std::move(b);
  prob.delta = delta;
  return prob;
}

TestProblem tomo(Index nx, Index ny, int views, const std::string& phantom,
                 const NoiseOpts& noise, bool commit_crime) {
  check_param(nx == ny, "tomo: requires nx == ny");
  check_param(views >= 1, "tomo: views must be >= 1");

  TestProblem prob;
  prob.type = "tomo";
  prob.nx = nx;
  prob.ny = ny;
  prob.commit_crime = commit_crime;
  prob.noise = noise;

  CtGeometry geom;
  geom.nx = nx;
  geom.ny = ny;
  geom.n_detectors = RadonOp::n_det(nx);
  geom.angles = equispaced_angles(views, 0.0);
  geom.data_angle_offset = commit_crime ? 0.0 : deg2rad(0.5);
  prob.geometry = geom;

  prob.A = radon_operator(nx, ny, geom.angles);
  if (commit_crime) {
    prob.A_data = prob.A;
  } else {
    prob.A_data =
        radon_operator(nx, ny, equispaced_angles(views, geom.data_angle_offset));
  }
  Matrix img = make_phantom(phantom, nx, ny);
  prob.x_true = Eigen::Map<const Vector>(img.data(), nx * ny);
  prob.b_true = prob.A_data->apply(*prob.x_true);
  auto [b, delta] = add_noise(prob.b_true, noise);
  prob.b = std::move(b);
  prob.delta = delta;
  return prob;
}

namespace {

Matrix motion_frame(const std::string& motion, Index nx, Index ny, Index t,
                    Index nt) {
  Matrix img = Matrix::Zero(nx, ny);
  double phase = nt > 1 ? double(t) / double(nt - 1) : 0.0;
  if (motion == "translating-disk") {
    double cu = -0.18 + 0.36 * phase;
    double cv = -0.15 + 0.30 * phase;
    for (Index ix = 0; ix < nx; ++ix)
      for (Index iy = 0; iy < ny; ++iy) {
        double u = (double(ix) + 0.5) / double(nx) - 0.5;
        double v = (double(iy) + 0.5) / double(ny) - 0.5;
        img(ix, iy) = std::hypot(u - cu, v - cv) < 0.14 ? 1.0 : 0.0;
      }
  } else if (motion == "rotating-bars") {
    double phi = phase * kPi / 2.0;
    double c = std::cos(phi), s = std::sin(phi);
    for (Index ix = 0; ix < nx; ++ix)
      for (Index iy = 0; iy < ny; ++iy) {
        double u = (double(ix) + 0.5) / double(nx) - 0.5;
        double v = (double(iy) + 0.5) / double(ny) - 0.5;
        double r1 = c * u + s * v, r2 = -s * u + c * v;
        bool bar1 = std::abs(r1) < 0.3 && std::abs(r2) < 0.05;
        bool bar2 = std::abs(r2) < 0.22 && std::abs(r1) < 0.04;
        img(ix, iy) = bar1 ? 1.0 : (bar2 ? 0.6 : 0.0);
      }
  } else {
    throw ParameterError("dynamic_tomo: unknown motion '" + motion + "'");
  }
  return img;
}

}  // namespace

TestProblem dynamic_tomo(Index nx, Index ny, Index nt, int views_per_t,
                         const std::string& motion,
                         const AngleSchedule& schedule,
                         const NoiseOpts& noise) {
  check_param(nx == ny, "dynamic_tomo: requires nx == ny");
  check_param(nt >= 2, "dynamic_tomo: nt must be >= 2");
  check_param(views_per_t >= 1, "dynamic_tomo: views_per_t must be >= 1");

  const double spacing = schedule.spacing_deg > 0
                             ? schedule.spacing_deg
                             : 180.0 / double(views_per_t);

  TestProblem prob;
  prob.type = "dynamic_tomo";
  prob.nx = nx;
  prob.ny = ny;
  prob.nt = nt;
  prob.noise = noise;
  prob.commit_crime = true;  // per-frame schedules already differ

  std::vector<LinOpPtr> blocks;
  Vector x_true(nx * ny * nt);
  for (Index t = 0; t < nt; ++t) {
    std::vector<double> angles(static_cast<size_t>(views_per_t));
    for (int v = 0; v < views_per_t; ++v) {
      double deg = schedule.start_deg + double(t) * schedule.shift_deg +
                   double(v) * spacing;
      angles[static_cast<size_t>(v)] = deg2rad(deg);
    }
    prob.angles_per_frame.push_back(angles);
    blocks.push_back(radon_operator(nx, ny, angles));
    Matrix img = motion_frame(motion, nx, ny, t, nt);
    x_true.segment(t * nx * ny, nx * ny) =
        Eigen::Map<const Vector>(img.data(), nx * ny);
  }
  auto block_op = block_diag_op(std::move(blocks));
  prob.A = block_op;
  prob.A_data = block_op;
  prob.x_true = std::move(x_true);
  prob.b_true = prob.A->apply(*prob.x_true);
  auto [b, delta] = add_noise(prob.b_true, noise);
  prob.b = std::move(b);
  prob.delta = delta;
  return prob;
}

void export_problem_bundle(const TestProblem& prob, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_vector_csv(dir + "/b.csv", prob.b);
  write_vector_csv(dir + "/b_true.csv", prob.b_true);
  if (prob.x_true) write_vector_csv(dir + "/x_true.csv", *prob.x_true);
  bool operator_csv = prob.A->rows() * prob.A->cols() <= LinOp::kDenseCap;
  if (operator_csv) write_matrix_csv(dir + "/operator.csv", prob.A->to_dense());

  nlohmann::json meta;
  meta["type"] = prob.type;
  meta["dims"] = {{"nx", prob.nx}, {"ny", prob.ny}, {"nt", prob.nt}};
  if (prob.geometry) {
    meta["angles"] = prob.geometry->angles;
    meta["n_detectors"] = prob.geometry->n_detectors;
    meta["data_angle_offset"] = prob.geometry->data_angle_offset;
  }
  if (!prob.angles_per_frame.empty()) meta["angles"] = prob.angles_per_frame;
  if (prob.psf) {
    meta["psf"] = {{"window", {prob.psf->w1, prob.psf->w2}},
                   {"spreads", {prob.psf->beta1, prob.psf->beta2}}};
  }
  meta["noise"] = {{"kind", prob.noise.kind_name()},
                   {"level", prob.noise.level},
                   {"seed", prob.noise.seed},
                   {"delta", prob.delta}};
  if (prob.noise.kind == NoiseOpts::Kind::impulse)
    meta["noise"]["fraction"] = prob.noise.fraction;
  meta["commit_crime"] = prob.commit_crime;
  meta["operator_csv"] = operator_csv;

  std::ofstream out(dir + "/problem.json");
  out << meta.dump(2) << "\n";
}

}  // namespace regulus
