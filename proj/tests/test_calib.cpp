#include "decktrack/calib.hpp"
#include "decktrack/scene.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace testing;
using namespace decktrack::calib;

namespace {

// Points in front of the camera, inside the image, at depths [near, far].
std::vector<Correspondence> visible_points(std::mt19937_64& rng, const CameraModel& cam, int n, double near,
                                           double far, double sigma = 0.0) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto& k = cam.intrinsics();
  std::vector<Correspondence> out;
  while (static_cast<int>(out.size()) < n) {
    const Vec2 px(uniform(rng, 0.0, k.width), uniform(rng, 0.0, k.height));
    const Ray ray = backproject(cam, px);
    const Vec3 world = ray.at(uniform(rng, near, far));
    const Vec2 exact = *project(cam, world);
    out.push_back({"p" + std::to_string(out.size()), world, exact + sigma * Vec2(noise(rng), noise(rng))});
  }
  return out;
}

Mat34 unit(const Mat34& p) { return p / p.norm(); }

double relative_error(const ProjectionMatrix& a, const ProjectionMatrix& b) {
  return (unit(a.matrix()) - unit(b.matrix())).norm();
}

CameraModel deck_camera() {
  return scene::build_panoramic_rig(scene::RigConfig{})[2].camera;
}

}  // namespace

TEST_CASE("exact correspondences recover the forward-constructed matrix") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto cam = random_camera(rng, 20.0);
    const auto pts = visible_points(rng, cam, 30, 2.0, 40.0);
    const auto p = estimate_projection_dlt(pts);
    CHECK(reprojection_rmse(p, pts) < 1e-8);
    CHECK(relative_error(p, compose_projection(cam)) < 1e-9);
  }
}

TEST_CASE("ProjectionMatrix normalization is scale and sign free") {
  std::mt19937_64 rng(22);
  const auto cam = random_camera(rng);
  const Mat34 p0 = compose_projection(cam).matrix();
  CHECK(p0.block<1, 3>(2, 0).norm() == doctest::Approx(1.0));
  CHECK(p0.leftCols<3>().determinant() > 0.0);
  for (double s : {-3.0, 0.01, 1e6, -1e-4}) {
    CHECK((ProjectionMatrix(s * p0).matrix() - p0).norm() < 1e-14 * p0.norm());
  }
  CHECK(error_of([] { ProjectionMatrix(Mat34::Zero()); }) == ErrorCode::SingularCamera);
}

TEST_CASE("too few and degenerate correspondences") {
  std::mt19937_64 rng(23);
  const auto cam = random_camera(rng);
  auto pts = visible_points(rng, cam, 5, 2.0, 30.0);
  CHECK(error_of([&] { estimate_projection_dlt(pts); }) == ErrorCode::TooFewPoints);

  // All on the plane z = 0.
  std::vector<Correspondence> planar;
  for (int i = 0; i < 20; ++i) {
    const Vec3 w(uniform(rng, -5, 5), uniform(rng, -5, 5), 0.0);
    const CameraModel above = CameraModel::from_center(
        {800, 800, 400, 300, 800, 600}, Rotation::from_matrix((Mat3() << 1, 0, 0, 0, -1, 0, 0, 0, -1).finished()),
        Vec3(0, 0, 20));
    planar.push_back({"q", w, *project(above, w)});
  }
  CHECK(error_of([&] { estimate_projection_dlt(planar); }) == ErrorCode::DegenerateConfiguration);

  pts = visible_points(rng, cam, 10, 2.0, 30.0);
  pts[3].pixel = pts[7].pixel;
  CHECK(error_of([&] { estimate_projection_dlt(pts); }) == ErrorCode::DegenerateConfiguration);
}

TEST_CASE("noisy calibration stays near the noise floor") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const auto cam = random_camera(rng, 20.0);
    const auto pts = visible_points(rng, cam, 30, 2.0, 40.0, 0.5);
    const double rmse = reprojection_rmse(estimate_projection_dlt(pts), pts);
    // 30 points, 11 parameters: the residual sits a little under sigma.
    CHECK(rmse <= 1.0);
    CHECK(rmse > 0.2);
  }
}

TEST_CASE("normalization at deck scale") {
  // 300 m of depth, 3000 px of image. Near the origin an SVD solve of the raw
  // system is already at rounding level, so the two agree to ~1e-14; with the
  // deck far from the world origin only the normalized solver survives.
  DltOptions raw;
  raw.normalize = false;
  raw.degenerate_ratio = 1.0;
  auto signless = [](const ProjectionMatrix& a, const ProjectionMatrix& b) {
    return std::min(relative_error(a, b), (unit(a.matrix()) + unit(b.matrix())).norm());
  };
  auto raw_rmse = [&](std::span<const Correspondence> fit, std::span<const Correspondence> check) {
    try {
      return reprojection_rmse(estimate_projection_dlt(fit, raw), check);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  scene::RigConfig rc;
  rc.intrinsics = {2400, 2400, 1500, 1000, 3000, 2000};
  std::mt19937_64 rng(25);
  {
    const auto cam = scene::build_panoramic_rig(rc)[2].camera;
    const auto p0 = compose_projection(cam);
    int not_worse = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto pts = visible_points(rng, cam, 30, 20.0, 300.0);
      const double e_norm = signless(estimate_projection_dlt(pts), p0);
      const double e_raw = signless(estimate_projection_dlt(pts, raw), p0);
      CHECK(e_norm < 1e-12);
      not_worse += e_norm <= e_raw + 1e-12;
    }
    CHECK(not_worse == 100);
  }
  {
    rc.mount += Vec3(1e5, 1e5, 0.0);
    const auto cam = scene::build_panoramic_rig(rc)[2].camera;
    for (int trial = 0; trial < 100; ++trial) {
      const auto pts = visible_points(rng, cam, 30, 20.0, 300.0);
      const auto held_out = visible_points(rng, cam, 100, 20.0, 300.0);
      const double e_norm = reprojection_rmse(estimate_projection_dlt(pts), held_out);
      CHECK(e_norm < 1e-6);
      CHECK(e_norm < raw_rmse(pts, held_out));
    }
  }
}

TEST_CASE("decompose inverts compose") {
  std::mt19937_64 rng(26);
  for (int i = 0; i < 1000; ++i) {
    const auto cam = random_camera(rng, 100.0);
    const Mat3 k = cam.intrinsics().matrix();
    const auto dec = decompose_projection(compose_projection(k, cam.rotation(), cam.translation()));
    CHECK((dec.k - k).cwiseAbs().maxCoeff() < 1e-9 * k.cwiseAbs().maxCoeff());
    CHECK((dec.rotation.matrix() - cam.rotation().matrix()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((dec.translation - cam.translation()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("identity-like camera and negated matrix") {
  Mat3 k;
  k << 1000, 0, 500, 0, 1000, 500, 0, 0, 1;
  const auto p = compose_projection(k, Rotation(), Vec3::Zero());
  const auto dec = decompose_projection(p);
  CHECK((dec.k - k).norm() == 0.0);
  CHECK((dec.rotation.matrix() - Mat3::Identity()).norm() == 0.0);
  CHECK(dec.translation.norm() == 0.0);

  std::mt19937_64 rng(27);
  const auto cam = random_camera(rng);
  const Mat34 m = compose_projection(cam).matrix();
  const auto a = decompose_projection(ProjectionMatrix(m));
  const auto b = decompose_projection(ProjectionMatrix(-m));
  CHECK((a.k - b.k).norm() == 0.0);
  CHECK((a.rotation.matrix() - b.rotation.matrix()).norm() == 0.0);
  CHECK((a.translation - b.translation).norm() == 0.0);
}

TEST_CASE("singular leading block") {
  Mat34 m = Mat34::Zero();
  m(0, 0) = 1.0;
  m(1, 0) = 1.0;
  m(2, 2) = 1.0;
  CHECK(error_of([&] { decompose_projection(ProjectionMatrix(m)); }) == ErrorCode::SingularCamera);
}

TEST_CASE("reprojection rmse") {
  std::mt19937_64 rng(28);
  const auto cam = random_camera(rng);
  auto pts = visible_points(rng, cam, 9, 2.0, 30.0);
  const auto p = compose_projection(cam);
  CHECK(reprojection_rmse(p, pts) < 1e-9);
  pts[4].pixel += Vec2(3.0, 4.0);
  CHECK(reprojection_rmse(p, pts) == doctest::Approx(5.0 / 3.0).epsilon(1e-9));
  CHECK(error_of([&] { reprojection_rmse(p, {}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("to_camera_model drops skew and keeps the projection") {
  std::mt19937_64 rng(29);
  const auto cam = random_camera(rng);
  const auto& in = cam.intrinsics();
  const auto back = to_camera_model(decompose_projection(compose_projection(cam)), in.width, in.height);
  const auto pts = visible_points(rng, cam, 10, 2.0, 30.0);
  for (const auto& c : pts) CHECK((*project(back, c.world) - c.pixel).norm() < 1e-6);
  CHECK(error_of([&] { to_camera_model(decompose_projection(compose_projection(cam)), 10, 10); }) ==
        ErrorCode::InvalidArgument);
}
