#include "cutstokes/geometry.hpp"

#include <cmath>
#include <limits>

namespace cutstokes {

const char* to_string(BoundaryTag tag) {
  return tag == BoundaryTag::dirichlet ? "dirichlet" : "do_nothing";
}

double DomainMotion::levelset(const Point& x, double t) const {
  double value = -std::numeric_limits<double>::infinity();
  for (const auto& piece : pieces) value = std::max(value, piece.levelset(x, t));
  return value;
}

std::size_t DomainMotion::active_piece(const Point& x, double t) const {
  std::size_t best = 0;
  double value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const double v = pieces[i].levelset(x, t);
    if (v > value) {
      value = v;
      best = i;
    }
  }
  return best;
}

BoundaryTag DomainMotion::boundary_tag(const Point& x, double t) const {
  return pieces.at(active_piece(x, t)).tag;
}

bool DomainMotion::has_do_nothing() const {
  for (const auto& p : pieces)
    if (p.tag == BoundaryTag::do_nothing) return true;
  return false;
}

double channel_half_height(double t) { return 1.0 - std::sin(t) / 10.0; }

namespace {

VectorField zero_field() {
  return [](const Point&, double) { return Vec2::Zero().eval(); };
}

}  // namespace

DomainMotion make_channel_2d(VectorField dirichlet_data) {
  DomainMotion m;
  m.name = "channel2d";
  m.pieces = {
      {[](const Point& x, double) { return -x.x(); }, BoundaryTag::dirichlet, "inflow"},
      {[](const Point& x, double) { return x.x() - 4.0; }, BoundaryTag::do_nothing,
       "outflow"},
      {[](const Point& x, double t) { return x.y() - channel_half_height(t); },
       BoundaryTag::dirichlet, "upper_wall"},
      {[](const Point& x, double t) { return -x.y() - channel_half_height(t); },
       BoundaryTag::dirichlet, "lower_wall"},
  };
  m.dirichlet_data = dirichlet_data ? std::move(dirichlet_data) : zero_field();
  m.w_max = 0.1;
  // One cell of margin in x, and y in [-1.125, 1.125] so that h = 2^-k gives
  // square cells and the walls (|y| <= 1 + delta) stay inside.
  m.background_box = [](double h) {
    return Box{Point(-h, -1.125), Point(4.0 + h, 1.125)};
  };
  return m;
}

DomainMotion make_stationary_box_2d(VectorField dirichlet_data) {
  DomainMotion m;
  m.name = "stationary_box2d";
  m.pieces = {
      {[](const Point& x, double) { return -x.x(); }, BoundaryTag::dirichlet, "left"},
      {[](const Point& x, double) { return x.x() - 1.0; }, BoundaryTag::dirichlet, "right"},
      {[](const Point& x, double) { return -x.y(); }, BoundaryTag::dirichlet, "bottom"},
      {[](const Point& x, double) { return x.y() - 1.0; }, BoundaryTag::dirichlet, "top"},
  };
  m.dirichlet_data = dirichlet_data ? std::move(dirichlet_data) : zero_field();
  m.w_max = 0.0;
  m.background_box = [](double) { return Box{Point(-0.3, -0.3), Point(1.3, 1.3)}; };
  return m;
}

DomainMotion make_motion(const std::string& name, VectorField dirichlet_data) {
  if (name == "channel2d") return make_channel_2d(std::move(dirichlet_data));
  if (name == "stationary_box2d") return make_stationary_box_2d(std::move(dirichlet_data));
  throw Error("unknown motion '" + name + "' (expected channel2d or stationary_box2d)");
}

StripParams strip_width(const DomainMotion& motion, int order, double dt, double c_delta) {
  if (!(dt > 0.0)) throw Error("strip_width: time step must be positive");
  if (order != 1 && order != 2) throw Error("strip_width: BDF order must be 1 or 2");
  if (c_delta < 1.0) throw Error("strip_width: c_delta must be >= 1");
  StripParams p;
  p.order = order;
  p.dt = dt;
  p.c_delta = c_delta;
  p.delta = c_delta * order * motion.w_max * dt;
  return p;
}

}  // namespace cutstokes
