#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "cutstokes/stabilization.hpp"
#include "cutstokes/timestepper.hpp"
#include "cutstokes/verification.hpp"

using namespace cutstokes;

namespace {

// Unit square split along (0,0)-(1,1) into cells {0,1,3} and {0,3,2}, with a
// single half plane {levelset <= 0} as the domain.
struct TwoCells {
  BackgroundMesh mesh;
  std::unique_ptr<DofMap> dofs;
  DomainMotion motion;
  ActiveSlabMesh slab;
  SystemLayout layout;

  TwoCells(int degree, std::function<double(const Point&)> ls) {
    mesh = build_background(Box{Point(0, 0), Point(1, 1)}, 1, 1);
    dofs = std::make_unique<DofMap>(mesh, degree);
    motion.name = "test";
    motion.pieces = {{[ls](const Point& x, double) { return ls(x); }, BoundaryTag::dirichlet,
                      "cut"}};
    slab = classify_active(mesh, *dofs, motion, 0.0, 0.0);
    layout = make_layout(*dofs, slab);
  }
  SlabView view() const { return {mesh, *dofs, slab, layout}; }
};

struct ChannelSlab {
  BackgroundMesh mesh;
  std::unique_ptr<TimeStepper> stepper;
  std::unique_ptr<StepSystem> ss;

  ChannelSlab(int degree, double h, double t, GhostVariant v = GhostVariant::jump) {
    const Problem problem = make_problem(channel2d_case());
    const Box box = problem.motion.background_box(h);
    const auto n = cells_for_size(box, h);
    mesh = build_background(box, n[0], n[1]);
    SchemeParameters params;
    params.degree = degree;
    params.dt = 0.8 * h;
    params.ghost = v;
    stepper = std::make_unique<TimeStepper>(mesh, problem, params);
    ss = std::make_unique<StepSystem>(stepper->assemble(1, t, {}, {}));
  }
  SlabView view() const { return {mesh, stepper->dofs(), ss->slab, ss->system.layout}; }
  int nb() const { return stepper->dofs().n_dofs(); }
};

Eigen::VectorXd random_background(int nb, std::mt19937& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd v(3 * nb);
  for (int i = 0; i < v.size(); ++i) v[i] = uni(rng);
  return v;
}

// Zero outside the active dofs, so that gather/scatter round trips exactly.
Eigen::VectorXd restrict_active(const SystemLayout& l, const Eigen::VectorXd& bg) {
  return l.scatter(l.gather(bg));
}

const GhostVariant kVariants[] = {GhostVariant::jump, GhostVariant::projection,
                                  GhostVariant::direct};

}  // namespace

TEST_CASE("ghost variant names") {
  for (GhostVariant v : kVariants) CHECK(parse_ghost_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_ghost_variant("jumps"), Error);
}

TEST_CASE("two cell patch: hat function of the far node") {
  // both cells cut by x = 1/2, so the diagonal is a ghost face
  const TwoCells p(1, [](const Point& x) { return x.x() - 0.5; });
  REQUIRE(p.slab.faces_ghost.size() == 1);
  Eigen::VectorXd bg = Eigen::VectorXd::Zero(3 * 4);
  bg[2] = 1.0;  // vertex (0, 1), opposite the diagonal in cell {0, 3, 2}
  const double h = p.mesh.h_min;
  CHECK(h == 1.0);

  // u_1 = 0, u_2 = y - x on the square: int (y - x)^2 = 1/6
  CHECK(std::abs(ghost_energy(p.view(), GhostVariant::direct, bg, h) - 1.0 / 6.0) <= 1e-14);
  // [d_n u] = sqrt 2 on a face of length sqrt 2
  CHECK(std::abs(ghost_energy(p.view(), GhostVariant::jump, bg, h) - 2.0 * std::sqrt(2.0)) <=
        1e-14);
  // ||(y - x)_+ - pi (y - x)_+||^2 over the square with pi onto P1: 1/72
  CHECK(std::abs(ghost_energy(p.view(), GhostVariant::projection, bg, h) - 1.0 / 72.0) <= 1e-14);

  for (GhostVariant v : kVariants) {
    const SparseMatrix g = assemble_ghost_penalty(p.view(), v, 1.0, h);
    const Eigen::VectorXd x = p.layout.gather(bg);
    CHECK(x.dot(g * x) == doctest::Approx(ghost_energy(p.view(), v, bg, h)).epsilon(1e-13));
  }
}

TEST_CASE("cip on a single interior face") {
  const TwoCells p(1, [](const Point& x) { return x.x() - 5.0; });
  REQUIRE(p.slab.faces_int.size() == 1);
  REQUIRE(p.slab.faces_cip.size() == 1);
  CHECK(p.slab.faces_ghost.empty());
  // p = (y - x)_+ / sqrt 2: unit jump of d_n p across a face of length sqrt 2
  Eigen::VectorXd bg = Eigen::VectorXd::Zero(3 * 4);
  bg[2 * 4 + 2] = 1.0 / std::sqrt(2.0);
  for (double h : {1.0, 0.5}) {
    CHECK(std::abs(cip_energy(p.view(), bg, h) - h * h * h * std::sqrt(2.0)) <= 1e-14);
    const SparseMatrix s = assemble_cip(p.view(), 2.0, h);
    const Eigen::VectorXd x = p.layout.gather(bg);
    CHECK(x.dot(s * x) == doctest::Approx(2.0 * h * h * h * std::sqrt(2.0)).epsilon(1e-13));
  }
}

TEST_CASE("face normals point from the first into the second cell") {
  const BackgroundMesh m = build_background(Box{Point(0, 0), Point(1, 1)}, 1, 1);
  REQUIRE(m.faces.size() == 1);
  const Vec2 n = face_normal(m, m.faces[0]);
  CHECK((n - Vec2(-1, 1) / std::sqrt(2.0)).norm() <= 1e-15);
}

TEST_CASE("stabilization forms vanish on global polynomials") {
  for (int degree : {1, 2}) {
    const ChannelSlab c(degree, 0.25, 0.4);
    const int nb = c.nb();
    Eigen::VectorXd bg(3 * nb);
    for (int d = 0; d < nb; ++d) {
      const Point& x = c.stepper->dofs().support_point(d);
      const double q = degree == 2 ? 0.5 * x.x() * x.x() - 2.0 * x.x() * x.y() : 0.0;
      bg[d] = 0.3 - x.x() + 2.0 * x.y() + q;
      bg[nb + d] = 1.0 + x.x() - q;
      bg[2 * nb + d] = -2.0 + 0.5 * x.y() + 3.0 * q;
    }
    for (GhostVariant v : kVariants)
      CHECK(std::abs(ghost_energy(c.view(), v, bg, c.mesh.h_min)) <= 1e-12);
    CHECK(std::abs(cip_energy(c.view(), bg, c.mesh.h_min)) <= 1e-12);
  }
}

TEST_CASE("matrix and field evaluation of the stabilization forms agree") {
  std::mt19937 rng(5);
  for (int degree : {1, 2}) {
    const ChannelSlab c(degree, 0.25, 0.9);
    const SlabView view = c.view();
    const double h = c.mesh.h_min;
    const SparseMatrix s = assemble_cip(view, 1.0, h);
    for (GhostVariant v : kVariants) {
      const SparseMatrix g = assemble_ghost_penalty(view, v, 1.0, h);
      for (int k = 0; k < 5; ++k) {
        const Eigen::VectorXd bg = restrict_active(view.layout, random_background(c.nb(), rng));
        const Eigen::VectorXd x = view.layout.gather(bg);
        CHECK(x.dot(g * x) == doctest::Approx(ghost_energy(view, v, bg, h)).epsilon(1e-10));
        CHECK(x.dot(s * x) == doctest::Approx(cip_energy(view, bg, h)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("stabilization matrices are symmetric, semidefinite and linear in gamma") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const ChannelSlab c(2, 0.25, 0.2);
  const SlabView view = c.view();
  const double h = c.mesh.h_min;
  std::vector<SparseMatrix> forms{assemble_cip(view, 1.0, h)};
  for (GhostVariant v : kVariants) forms.push_back(assemble_ghost_penalty(view, v, 1.0, h));
  for (const SparseMatrix& s : forms) {
    const double scale = Eigen::MatrixXd(s).cwiseAbs().maxCoeff();
    CHECK((Eigen::MatrixXd(s) - Eigen::MatrixXd(s.transpose())).cwiseAbs().maxCoeff() <=
          1e-14 * scale);
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd x(s.rows()), y(s.rows());
      for (int i = 0; i < x.size(); ++i) x[i] = uni(rng), y[i] = uni(rng);
      const double xx = x.dot(s * x), yy = y.dot(s * y), xy = x.dot(s * y);
      CHECK(xx >= -1e-10);
      CHECK(std::abs(xy) <= std::sqrt(std::max(xx, 0.0) * std::max(yy, 0.0)) + 1e-10);
    }
  }
  for (GhostVariant v : kVariants) {
    const SparseMatrix a = assemble_ghost_penalty(view, v, 1e-3, h);
    const SparseMatrix b = assemble_ghost_penalty(view, v, 2e-3, h);
    CHECK(Eigen::MatrixXd(b - 2.0 * a).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("cip is weakly consistent for smooth pressures") {
  std::vector<double> ratio;
  for (double h : {0.25, 0.125, 0.0625}) {
    const ChannelSlab c(1, h, 0.0);
    const int nb = c.nb();
    Eigen::VectorXd bg = Eigen::VectorXd::Zero(3 * nb);
    for (int d = 0; d < nb; ++d) {
      const Point& x = c.stepper->dofs().support_point(d);
      bg[2 * nb + d] = std::sin(x.x() + x.y());
    }
    ratio.push_back(cip_energy(c.view(), bg, c.mesh.h_min) / (c.mesh.h_min * c.mesh.h_min));
  }
  CHECK(ratio[0] > 0.0);
  CHECK(ratio[2] <= 2.0 * ratio[0]);
}

TEST_CASE("triple norm") {
  SUBCASE("zero field") {
    const ChannelSlab c(1, 0.25, 0.3);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3 * c.nb());
    CHECK(triple_norm(c.ss->system, c.ss->system.layout.gather(zero)) == 0.0);
    CHECK(triple_norm(c.view(), c.ss->quad, zero, 500.0, 1e-3, GhostVariant::jump,
                      c.mesh.h_min) == 0.0);
  }
  SUBCASE("constant field on the all-Dirichlet box") {
    const ManufacturedCase zc = zero_case("stationary_box2d");
    const Problem problem = make_problem(zc);
    const BackgroundMesh mesh = build_background(problem.motion.background_box(0.1), 16, 16);
    SchemeParameters params;
    params.degree = 2;
    const TimeStepper stepper(mesh, problem, params);
    const StepSystem ss = stepper.assemble(1, 0.0, {}, {});
    const int nb = stepper.dofs().n_dofs();
    Eigen::VectorXd bg = Eigen::VectorXd::Zero(3 * nb);
    bg.segment(0, nb).setConstant(0.6);
    bg.segment(nb, nb).setConstant(-0.8);
    const double h = mesh.h_min;
    const double expected = std::sqrt(500.0 / h * 4.0);
    const Eigen::VectorXd x = ss.system.layout.gather(bg);
    CHECK(triple_norm(ss.system, x) == doctest::Approx(expected).epsilon(1e-12));
    const SlabView view{mesh, stepper.dofs(), ss.slab, ss.system.layout};
    CHECK(triple_norm(view, ss.quad, ss.system.layout.scatter(x), 500.0, 1e-3,
                      GhostVariant::jump, h) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("assembled parts and direct evaluation agree") {
    std::mt19937 rng(2);
    for (GhostVariant v : kVariants) {
      const ChannelSlab c(2, 0.25, 1.1, v);
      const AssembledSystem& sys = c.ss->system;
      for (int k = 0; k < 5; ++k) {
        const Eigen::VectorXd bg = restrict_active(sys.layout, random_background(c.nb(), rng));
        const Eigen::VectorXd x = sys.layout.gather(bg);
        const double direct = triple_norm(c.view(), c.ss->quad, bg, 500.0, sys.gamma_g, v,
                                          c.mesh.h_min);
        CHECK(triple_norm(sys, x) == doctest::Approx(direct).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("ghost penalty controls the gradient on the strip") {
  std::mt19937 rng(4);
  for (double h : {0.25, 0.125}) {
    const ChannelSlab c(1, h, 0.5);
    const AssembledSystem& sys = c.ss->system;
    const int nv = sys.layout.n_velocity();
    const double delta = strip_width(c.stepper->problem().motion, 1, 0.8 * h).delta;
    // gradient energy on Omega_delta: assemble over the enlarged domain
    const DomainMotion enlarged = enlarged_motion(c.stepper->problem().motion, delta);
    const ActiveSlabMesh big = classify_active(c.mesh, c.stepper->dofs(), enlarged, 0.5, 0.0);
    const SlabQuadrature bq = build_quadrature(c.mesh, big, enlarged, 2, 3);
    const SystemLayout bl = make_layout(c.stepper->dofs(), big);
    const SparseMatrix stokes_big = assemble_stokes({c.mesh, c.stepper->dofs(), big, bl}, bq);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd bg = restrict_active(sys.layout, random_background(c.nb(), rng));
      const Eigen::VectorXd x = sys.layout.gather(bg), y = bl.gather(bg);
      const Eigen::VectorXd xu = x.head(2 * nv);
      const double inner = xu.dot(block(sys.stokes, 0, 2 * nv, 0, 2 * nv) * xu);
      const double ghost = x.dot(sys.ghost * x);
      const Eigen::VectorXd yu = y.head(2 * bl.n_velocity());
      const double outer =
          yu.dot(block(stokes_big, 0, yu.size(), 0, yu.size()) * yu);
      worst = std::max(worst, outer / (inner + (1.0 + delta / h) * ghost));
    }
    CHECK(worst <= 100.0);
  }
}
