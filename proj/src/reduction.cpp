#include "msa/reduction.hpp"

#include "msa/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace msa {

namespace {

double norm(const Point& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

Point cross(const Point& a, const Point& b)
{
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Source cell to evaluate each target dof in, or -1 to use the locator.
std::vector<int> side_cells(const FunctionSpace& source, const FunctionSpace& target)
{
  std::vector<int> side(target.dim(), -1);
  const auto& parent = target.mesh()->parent();
  if (!parent || parent->mesh->id() != source.mesh()->id())
    return side;
  for (int c = 0; c < target.mesh()->num_cells(); ++c)
    for (int dof : target.cell_dofs(c))
      if (side[dof] < 0)
        side[dof] = parent->cell[c];
  return side;
}

[[noreturn]] void rethrow_for_dof(const OutOfDomain& e, int dof, const Point& x, const char* what)
{
  std::ostringstream msg;
  msg.precision(17);
  msg << what << ": target dof " << dof << " at (" << x[0] << ", " << x[1] << ", " << x[2]
      << ") is outside the source mesh (" << e.what() << ")";
  throw OutOfDomain(msg.str(), x[0], x[1], x[2]);
}

SparseMatrix point_evaluation(const FunctionSpace& source, const FunctionSpace& target, const char* what)
{
  if (source.mesh()->gdim() != target.mesh()->gdim())
    throw UnsupportedReduction(std::string(what) + ": meshes have different geometric dimensions");
  if (source.value_size() != target.value_size())
    throw UnsupportedReduction(std::string(what) + ": value shapes differ");
  const std::vector<int> side = side_cells(source, target);
  TripletBuilder builder(target.dim(), source.dim());
  for (int i = 0; i < target.dim(); ++i) {
    const Point& x = target.dof_coordinate(i);
    std::vector<SparseRow> rows;
    try {
      rows = basis_row(source, x, side[i]);
    } catch (const OutOfDomain& e) {
      rethrow_for_dof(e, i, x, what);
    }
    for (auto [j, v] : rows[target.dof_component(i)])
      builder.add(i, j, v);
  }
  return builder.finalize();
}

} // namespace

SpacePtr deduce_reduced_space(const SpacePtr& source, const MeshPtr& target, ReductionKind kind)
{
  const Element& e = source->element();
  const int sd = source->mesh()->tdim();
  const int td = target->tdim();
  if (source->mesh()->gdim() != target->gdim())
    throw UnsupportedReduction("reduction between meshes of different geometric dimension");
  switch (kind) {
  case ReductionKind::Restrict:
    if (td != sd)
      throw UnsupportedReduction("restriction needs a target of the same topological dimension");
    return FunctionSpace::build(target, e);
  case ReductionKind::Trace:
    if (td >= sd)
      throw UnsupportedReduction("trace needs a lower-dimensional target");
    if (e.family == Family::RaviartThomas)
      return FunctionSpace::build(target, Element::VectorDG0());
    return FunctionSpace::build(target, e);
  case ReductionKind::Average:
    if (sd != 3 || td != 1)
      throw UnsupportedReduction("average maps 3d spaces to curves only");
    if (!(e == Element::P(1)))
      throw UnsupportedReduction("average supports scalar P1 sources only, got " + e.str());
    return FunctionSpace::build(target, e);
  }
  throw UnsupportedReduction("unknown reduction");
}

SparseMatrix trace_matrix(const FunctionSpace& source, const FunctionSpace& target)
{
  if (source.element().family != Family::RaviartThomas)
    return point_evaluation(source, target, "trace");
  if (!(target.element() == Element::VectorDG0()))
    throw UnsupportedReduction("the trace of RT0 lives in vector P0");
  // The RT0 basis is Piola-mapped inside tabulate; its dof coordinate is the target cell midpoint.
  return point_evaluation(source, target, "trace");
}

SparseMatrix restriction_matrix(const FunctionSpace& source, const FunctionSpace& target)
{
  if (!(source.element() == target.element()))
    throw UnsupportedReduction("restriction keeps the element");
  if (source.element().family == Family::RaviartThomas)
    throw UnsupportedReduction("restriction of RT0 is not supported");
  return point_evaluation(source, target, "restriction");
}

std::pair<Point, Point> circle_frame(const Point& tangent)
{
  int axis = 0;
  for (int d = 1; d < 3; ++d)
    if (std::abs(tangent[d]) < std::abs(tangent[axis]))
      axis = d;
  Point a{0, 0, 0};
  a[axis] = 1.0;
  Point e1 = cross(tangent, a);
  const double l = norm(e1);
  for (double& v : e1)
    v /= l;
  return {e1, cross(tangent, e1)};
}

std::vector<Point> circle_points(const Point& center, const Point& tangent, double radius, int n)
{
  const auto [e1, e2] = circle_frame(tangent);
  std::vector<Point> pts(n);
  for (int j = 0; j < n; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / n;
    const double c = std::cos(theta), s = std::sin(theta);
    for (int d = 0; d < 3; ++d)
      pts[j][d] = center[d] + radius * (c * e1[d] + s * e2[d]);
  }
  return pts;
}

double circle_average(const Field& field, const Point& center, const Point& tangent, double radius, int n)
{
  if (field.shape.size() != 1)
    throw InvalidArgument("circle_average: field must be scalar");
  double sum = 0.0;
  double v = 0.0;
  for (const Point& y : circle_points(center, tangent, radius, n)) {
    field.eval(y, std::span<double>(&v, 1));
    sum += v;
  }
  return sum / n;
}

std::vector<Point> dof_tangents(const FunctionSpace& space)
{
  const Mesh& m = *space.mesh();
  if (m.tdim() != 1)
    throw InvalidArgument("dof_tangents: space does not live on a curve");
  std::vector<Point> t(space.dim(), Point{0, 0, 0});
  for (int c = 0; c < m.num_cells(); ++c) {
    const Point tc = interval_tangent(m, c);
    for (int dof : space.cell_dofs(c))
      for (int d = 0; d < 3; ++d)
        t[dof][d] += tc[d];
  }
  for (Point& p : t) {
    const double l = norm(p);
    if (l == 0.0)
      throw InvalidArgument("dof_tangents: curve folds back on itself");
    for (double& v : p)
      v /= l;
  }
  return t;
}

SparseMatrix average_matrix(const FunctionSpace& source, const FunctionSpace& target, double radius, int n_quad)
{
  if (radius <= 0.0 || n_quad < 1)
    throw InvalidArgument("average_matrix: need R > 0 and n_quad >= 1");
  if (source.mesh()->tdim() != 3 || target.mesh()->tdim() != 1 || source.value_size() != 1)
    throw UnsupportedReduction("average_matrix: needs a scalar 3d source and a curve target");
  const std::vector<Point> tangents = dof_tangents(target);
  TripletBuilder builder(target.dim(), source.dim());
  const double w = 1.0 / n_quad;
  for (int i = 0; i < target.dim(); ++i) {
    const Point& x = target.dof_coordinate(i);
    for (const Point& y : circle_points(x, tangents[i], radius, n_quad)) {
      std::vector<SparseRow> rows;
      try {
        rows = basis_row(source, y);
      } catch (const OutOfDomain& e) {
        rethrow_for_dof(e, i, x, "average (circle point out of domain)");
      }
      for (auto [j, v] : rows[0])
        builder.add(i, j, w * v);
    }
  }
  return builder.finalize();
}

ReductionPtr ReductionCache::get_or_build(const SpacePtr& source, const Reduction& r)
{
  const bool avg = r.kind == ReductionKind::Average;
  const Key key{source->id(), r.target->id(), static_cast<int>(r.kind), avg ? r.radius : 0.0, avg ? r.n_quad : 0};
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(key); it != entries_.end())
    return it->second;
  auto out = std::make_shared<ReductionMatrix>();
  out->kind = r.kind;
  out->source = source;
  out->target = deduce_reduced_space(source, r.target, r.kind);
  switch (r.kind) {
  case ReductionKind::Trace: out->matrix = trace_matrix(*source, *out->target); break;
  case ReductionKind::Average: out->matrix = average_matrix(*source, *out->target, r.radius, r.n_quad); break;
  case ReductionKind::Restrict: out->matrix = restriction_matrix(*source, *out->target); break;
  }
  ++builds_;
  entries_.emplace(key, out);
  return out;
}

int ReductionCache::build_count() const
{
  std::lock_guard lock(mutex_);
  return builds_;
}

std::size_t ReductionCache::size() const
{
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::vector<ReductionPtr> ReductionCache::entries() const
{
  std::lock_guard lock(mutex_);
  std::vector<ReductionPtr> out;
  for (const auto& [key, r] : entries_)
    out.push_back(r);
  return out;
}

void ReductionCache::clear()
{
  std::lock_guard lock(mutex_);
  entries_.clear();
  builds_ = 0;
}

ReductionCache& ReductionCache::global()
{
  static ReductionCache cache;
  return cache;
}

} // namespace msa
