#include "regulus/testproblems.hpp"

#include <filesystem>
#include <fstream>

#include "regulus/csv.hpp"
#include "test_support.hpp"

using namespace regulus;
using namespace regulus::testing;

TEST_CASE("counter rng is deterministic and matches the quantile") {
  CounterRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(normal_quantile(0.0013498980316300945) ==
        doctest::Approx(-3.0).epsilon(1e-9));
}

TEST_CASE("add_noise gaussian hits the level exactly") {
  Vector b_true = randv(200, 1);
  auto [b, delta] = add_noise(b_true, NoiseOpts::gaussian(0.01, 7));
  CHECK(delta == doctest::Approx(0.01 * b_true.norm()).epsilon(1e-14));
  CHECK((b - b_true).norm() == doctest::Approx(delta).epsilon(1e-12));
  auto [b2, delta2] = add_noise(b_true, NoiseOpts::gaussian(0.01, 7));
  CHECK((b - b2).norm() == 0.0);  // determinism
  auto [b3, delta3] = add_noise(b_true, NoiseOpts::gaussian(0.01, 8));
  CHECK((b - b3).norm() > 0.0);
  (void)delta2;
  (void)delta3;
}

TEST_CASE("add_noise laplace and impulse") {
  Vector b_true = randv(150, 2);
  auto [bl, dl] = add_noise(b_true, NoiseOpts::laplace(0.05, 3));
  CHECK(dl == doctest::Approx(0.05 * b_true.norm()).epsilon(1e-14));
  CHECK((bl - b_true).norm() == doctest::Approx(dl).epsilon(1e-12));

  auto [bi, di] = add_noise(b_true, NoiseOpts::impulse(0.1, 4));
  Index changed = 0;
  for (Index i = 0; i < b_true.size(); ++i)
    if (bi[i] != b_true[i]) ++changed;
  CHECK(changed <= 15);
  CHECK(changed >= 10);  // a replacement may coincide only rarely
  CHECK(di == doctest::Approx((bi - b_true).norm()));
  double lo = b_true.minCoeff(), hi = b_true.maxCoeff();
  for (Index i = 0; i < b_true.size(); ++i) {
    CHECK(bi[i] >= lo - 1e-12);
    CHECK(bi[i] <= hi + 1e-12);
  }
}

TEST_CASE("add_noise rejects bad levels") {
  Vector b = randv(10, 5);
  CHECK_THROWS_AS(add_noise(b, NoiseOpts::gaussian(0.0, 1)), ParameterError);
  CHECK_THROWS_AS(add_noise(b, NoiseOpts::impulse(1.5, 1)), ParameterError);
}

TEST_CASE("signal catalog") {
  for (const char* name :
       {"piecewise", "sigma", "curve0", "curve1", "curve2", "curve3"}) {
    Vector x = make_signal_1d(name, 200);
    CHECK(x.minCoeff() >= 0.0);
    CHECK(x.maxCoeff() <= 1.0);
    CHECK(x.maxCoeff() > 0.1);
  }
  CHECK_THROWS_AS(make_signal_1d("nope", 100), ParameterError);
}

TEST_CASE("deblur1d matches the noise contract") {
  TestProblem prob =
      deblur1d(200, "curve2", 30.0, NoiseOpts::gaussian(0.01, 11), false);
  CHECK(prob.delta == doctest::Approx(0.01 * prob.b_true.norm()).epsilon(1e-12));
  CHECK((prob.b - prob.b_true).norm() == doctest::Approx(prob.delta));
  check_adjoint(*prob.A);
  check_adjoint(*prob.A_data);
}

TEST_CASE("deblur1d narrow spread approaches the identity kernel") {
  // spreads scale the kernel width, so a tiny spread concentrates all mass
  // in the center tap
  TestProblem prob =
      deblur1d(64, "curve0", 0.05, NoiseOpts::gaussian(0.01, 12), true);
  CHECK((prob.b_true - *prob.x_true).norm() <= 1e-10 * prob.x_true->norm());
}

TEST_CASE("deblur1d crime flag") {
  TestProblem crime =
      deblur1d(64, "piecewise", 4.0, NoiseOpts::gaussian(0.01, 13), true);
  Vector probe = randv(64, 14);
  CHECK((crime.A->apply(probe) - crime.A_data->apply(probe)).norm() == 0.0);

  TestProblem fair =
      deblur1d(64, "piecewise", 4.0, NoiseOpts::gaussian(0.01, 13), false);
  CHECK((fair.A->apply(*fair.x_true) - fair.A_data->apply(*fair.x_true))
            .norm() > 1e-8);
}

TEST_CASE("deblur2d kernel is reproduced by a delta image") {
  const Index nx = 32, ny = 32;
  TestProblem prob = deblur2d(nx, ny, "edges", {9, 7}, {3.0, 2.0},
                              NoiseOpts::gaussian(0.01, 15), true);
  Vector delta_img = Vector::Zero(nx * ny);
  const Index cx = 16, cy = 15;
  delta_img[cx + cy * nx] = 1.0;
  Vector blurred = prob.A->apply(delta_img);
  // oracle: separable stencil from the definition
  auto kern = [](double spread, int half, int t) {
    return std::exp(-0.5 * t * t / (spread * spread));
  };
  double sx = 0, sy = 0;
  for (int t = -4; t <= 4; ++t) sx += kern(3.0, 4, t);
  for (int t = -3; t <= 3; ++t) sy += kern(2.0, 3, t);
  for (int dx = -4; dx <= 4; ++dx)
    for (int dy = -3; dy <= 3; ++dy) {
      double expect = kern(3.0, 4, dx) / sx * kern(2.0, 3, dy) / sy;
      CHECK(blurred[(cx + dx) + (cy + dy) * nx] ==
            doctest::Approx(expect).epsilon(1e-12));
    }
  // center is the max, symmetric under dx -> -dx
  CHECK(blurred.maxCoeff() == doctest::Approx(blurred[cx + cy * nx]));
  CHECK(blurred[(cx + 2) + cy * nx] ==
        doctest::Approx(blurred[(cx - 2) + cy * nx]));
  check_adjoint(*prob.A);
}

TEST_CASE("deblur2d accepts the large-scale configuration") {
  TestProblem prob = deblur2d(256, 256, "satellite", {9, 9}, {3.0, 3.0},
                              NoiseOpts::gaussian(0.01, 16), false);
  CHECK(prob.A->rows() == 65536);
  CHECK(prob.A->cols() == 65536);
  CHECK(prob.x_true->minCoeff() >= 0.0);
  CHECK(prob.x_true->maxCoeff() <= 1.0);
}

TEST_CASE("deblur2d rejects even windows") {
  CHECK_THROWS_AS(deblur2d(32, 32, "edges", {8, 9}, {3.0, 3.0},
                           NoiseOpts::gaussian(0.01, 1), false),
                  ParameterError);
}

TEST_CASE("tomo mass conservation on the unit disk") {
  const Index nx = 64;
  TestProblem prob =
      tomo(nx, nx, 12, "disk", NoiseOpts::gaussian(0.001, 17), true);
  double mass = prob.x_true->sum();  // pixel area 1
  const Index nd = prob.geometry->n_detectors;
  for (int v = 0; v < 12; ++v) {
    double angle_sum = prob.b_true.segment(v * nd, nd).sum();
    CHECK(angle_sum == doctest::Approx(mass).epsilon(0.01));
  }
}

TEST_CASE("tomo zero phantom gives a zero sinogram") {
  auto op = radon_operator(16, 16, {0.1, 0.7, 1.3});
  CHECK(op->apply(Vector::Zero(256)).norm() == 0.0);
  check_adjoint(*op);
}

TEST_CASE("tomo crime avoidance shifts the data operator angles") {
  TestProblem prob =
      tomo(32, 32, 10, "shepp", NoiseOpts::gaussian(0.001, 18), false);
  CHECK((prob.A->apply(*prob.x_true) - prob.A_data->apply(*prob.x_true))
            .norm() > 1e-8);
  CHECK(prob.geometry->data_angle_offset > 0);
  CHECK(prob.b_true.minCoeff() >= -1e-12);  // nonneg phantom, nonneg weights
}

TEST_CASE("tomo accepts the large-scale configuration") {
  TestProblem prob =
      tomo(256, 256, 50, "tectonic", NoiseOpts::gaussian(0.001, 19), false);
  CHECK(prob.A->rows() == 50 * prob.geometry->n_detectors);
  CHECK(prob.geometry->n_detectors == 363);  // ceil(sqrt(2) * 256)
}

TEST_CASE("dynamic_tomo angle schedule reproduces the shifted pattern") {
  AngleSchedule sched;
  sched.start_deg = 1.0;
  sched.spacing_deg = 14.0;
  sched.shift_deg = 1.0;
  TestProblem prob = dynamic_tomo(32, 32, 16, 15, "translating-disk", sched,
                                  NoiseOpts::gaussian(0.01, 20));
  REQUIRE(prob.angles_per_frame.size() == 16);
  // frame 0: [1, 15, 29, ...]; frame 1: [2, 16, 30, ...] (degrees)
  for (int v = 0; v < 15; ++v) {
    CHECK(prob.angles_per_frame[0][v] * 180.0 / 3.14159265358979323846 ==
          doctest::Approx(1.0 + 14.0 * v).epsilon(1e-12));
    CHECK(prob.angles_per_frame[1][v] * 180.0 / 3.14159265358979323846 ==
          doctest::Approx(2.0 + 14.0 * v).epsilon(1e-12));
  }
}

TEST_CASE("dynamic_tomo block structure and per-frame mass conservation") {
  AngleSchedule sched;  // equispaced with 1 degree shift per frame
  TestProblem prob = dynamic_tomo(32, 32, 4, 8, "translating-disk", sched,
                                  NoiseOpts::gaussian(0.01, 21));
  const Index ns = 32 * 32;
  const Index nd = static_cast<Index>(std::ceil(std::sqrt(2.0) * 32));
  const Index rows_per_frame = 8 * nd;
  CHECK(prob.A->rows() == 4 * rows_per_frame);
  CHECK(prob.A->cols() == 4 * ns);

  // identical frames + identical angles: per-block outputs coincide
  AngleSchedule fixed = sched;
  fixed.shift_deg = 0.0;
  TestProblem stat = dynamic_tomo(32, 32, 4, 8, "translating-disk", fixed,
                                  NoiseOpts::gaussian(0.01, 22));
  Vector frame0 = stat.x_true->segment(0, ns);
  Vector stacked(4 * ns);
  for (int t = 0; t < 4; ++t) stacked.segment(t * ns, ns) = frame0;
  Vector out = stat.A->apply(stacked);
  for (int t = 1; t < 4; ++t)
    CHECK((out.segment(t * rows_per_frame, rows_per_frame) -
           out.segment(0, rows_per_frame))
              .norm() <= 1e-12);

  // per-frame mass conservation; the small disk leaves a larger ray
  // quadrature bias than the 64x64 phantoms, hence the 3% bound
  for (int t = 0; t < 4; ++t) {
    double mass = prob.x_true->segment(t * ns, ns).sum();
    for (int v = 0; v < 8; ++v) {
      double s =
          prob.b_true.segment(t * rows_per_frame + v * nd, nd).sum();
      CHECK(s == doctest::Approx(mass).epsilon(0.03));
    }
  }
  check_adjoint(*prob.A);
}

TEST_CASE("phantoms stay in range") {
  for (const char* name : {"shepp", "tectonic", "blocks", "disk"}) {
    Matrix p = make_phantom(name, 48, 48);
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.maxCoeff() <= 1.0);
    CHECK(p.maxCoeff() > 0.3);
  }
  for (const char* name : {"satellite", "blobs", "edges", "grain"}) {
    Matrix p = make_image_2d(name, 48, 48);
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.maxCoeff() <= 1.0);
  }
}

TEST_CASE("export bundle round trips") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "regulus_bundle_test";
  fs::remove_all(dir);
  TestProblem prob =
      deblur1d(32, "piecewise", 3.0, NoiseOpts::gaussian(0.01, 23), false);
  export_problem_bundle(prob, dir.string());
  CHECK(fs::exists(dir / "problem.json"));
  CHECK(fs::exists(dir / "b.csv"));
  CHECK(fs::exists(dir / "x_true.csv"));
  Vector b_back = read_vector_csv((dir / "b.csv").string());
  CHECK((b_back - prob.b).norm() == 0.0);
  Matrix op_back = read_matrix_csv((dir / "operator.csv").string());
  CHECK((op_back - prob.A->to_dense()).norm() == 0.0);
  std::ifstream meta(dir / "problem.json");
  std::string contents((std::istreambuf_iterator<char>(meta)),
                       std::istreambuf_iterator<char>());
  CHECK(contents.find("\"type\"") != std::string::npos);
  CHECK(contents.find("deblur1d") != std::string::npos);
  fs::remove_all(dir);
}
