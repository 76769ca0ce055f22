#pragma once

#include "msa/form.hpp"
#include "msa/linalg.hpp"
#include "msa/space.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace msa {

/// Sparse realization of a reduction: rows are target dofs, columns source dofs.
struct ReductionMatrix
{
  ReductionKind kind = ReductionKind::Trace;
  SpacePtr source;
  SpacePtr target;
  SparseMatrix matrix;
};

using ReductionPtr = std::shared_ptr<const ReductionMatrix>;

/// Space on the target mesh that receives the reduction of `source`.
SpacePtr deduce_reduced_space(const SpacePtr& source, const MeshPtr& target, ReductionKind kind);

/// Point evaluation of the source basis at the target dof coordinates.
SparseMatrix trace_matrix(const FunctionSpace& source, const FunctionSpace& target);
SparseMatrix restriction_matrix(const FunctionSpace& source, const FunctionSpace& target);

/// Average of the source basis over circles of radius R normal to the curve.
SparseMatrix average_matrix(const FunctionSpace& source, const FunctionSpace& target, double radius,
                            int n_quad = 16);

/// Orthonormal (e1, e2) spanning the plane normal to the unit vector `tangent`.
std::pair<Point, Point> circle_frame(const Point& tangent);

/// The n uniform points of the circle of radius R around `center` normal to `tangent`.
std::vector<Point> circle_points(const Point& center, const Point& tangent, double radius, int n);

/// Uniform-rule average of a scalar field over that circle.
double circle_average(const Field& field, const Point& center, const Point& tangent, double radius, int n = 16);

/// Unit tangents of an interval mesh at the dofs of a space on it.
std::vector<Point> dof_tangents(const FunctionSpace& space);

/// Build-once store of reduction matrices.
class ReductionCache
{
public:
  ReductionPtr get_or_build(const SpacePtr& source, const Reduction& reduction);

  int build_count() const;
  std::size_t size() const;
  /// Cached reductions in key order.
  std::vector<ReductionPtr> entries() const;
  void clear();

  /// The cache used when callers do not pass one.
  static ReductionCache& global();

private:
  using Key = std::tuple<std::uint64_t, std::uint64_t, int, double, int>;

  mutable std::mutex mutex_;
  std::map<Key, ReductionPtr> entries_;
  int builds_ = 0;
};

} // namespace msa
