#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cutstokes {

using Point = Eigen::Vector2d;
using Vec2 = Eigen::Vector2d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BoundaryTag { dirichlet, do_nothing };

const char* to_string(BoundaryTag tag);

using ScalarField = std::function<double(const Point&, double)>;
using VectorField = std::function<Vec2(const Point&, double)>;

// One planar (or at least smooth) piece of the boundary. The domain is the
// intersection of the sublevel sets {levelset < 0} of all pieces, so the
// combined level set is their pointwise maximum.
struct BoundaryPiece {
  ScalarField levelset;
  BoundaryTag tag = BoundaryTag::dirichlet;
  std::string name;
};

struct Box {
  Point lower;
  Point upper;
};

struct DomainMotion {
  std::string name;
  std::vector<BoundaryPiece> pieces;
  VectorField dirichlet_data;
  double w_max = 0.0;
  int dim = 2;
  // Background box for a target mesh size h; always strictly contains the
  // closure of Omega(t) for all t of interest.
  std::function<Box(double h)> background_box;

  double levelset(const Point& x, double t) const;
  // Index of the piece realizing the maximum, i.e. the piece whose boundary
  // segment x lies on when levelset(x, t) == 0.
  std::size_t active_piece(const Point& x, double t) const;
  BoundaryTag boundary_tag(const Point& x, double t) const;
  bool has_do_nothing() const;
};

struct StripParams {
  int order = 1;
  double dt = 0.0;
  double delta = 0.0;
  double c_delta = 1.0;
};

/// Half-height of the moving channel, g(t) = 1 - sin(t)/10.
double channel_half_height(double t);

/// Omega(t) = (0,4) x (-g(t), g(t)); inflow and walls Dirichlet, outflow
/// at x = 4 do-nothing. Dirichlet data defaults to zero.
DomainMotion make_channel_2d(VectorField dirichlet_data = {});

/// Omega = (0,1)^2, all Dirichlet, no motion.
DomainMotion make_stationary_box_2d(VectorField dirichlet_data = {});

/// Looks up a built-in motion by its CLI name ("channel2d", "stationary_box2d").
DomainMotion make_motion(const std::string& name, VectorField dirichlet_data = {});

StripParams strip_width(const DomainMotion& motion, int order, double dt,
                        double c_delta = 1.0);

inline double enlarged_levelset(const DomainMotion& motion, double t, double delta,
                                const Point& x) {
  return motion.levelset(x, t) - delta;
}

}  // namespace cutstokes
