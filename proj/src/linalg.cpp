#include "msa/linalg.hpp"

#include "msa/error.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace msa {

void TripletBuilder::append(const TripletBuilder& other)
{
  if (other.rows_ != rows_ || other.cols_ != cols_)
    throw InvalidArgument("TripletBuilder::append: shape mismatch");
  triplets_.insert(triplets_.end(), other.triplets_.begin(), other.triplets_.end());
}

SparseMatrix TripletBuilder::finalize() const
{
  SparseMatrix a(rows_, cols_);
  a.setFromTriplets(triplets_.begin(), triplets_.end());
  a.makeCompressed();
  return a;
}

SparseMatrix identity_matrix(int n)
{
  SparseMatrix a(n, n);
  a.setIdentity();
  a.makeCompressed();
  return a;
}

SparseMatrix diagonal_matrix(const Vector& d)
{
  TripletBuilder b(static_cast<int>(d.size()), static_cast<int>(d.size()));
  for (int i = 0; i < d.size(); ++i)
    b.add(i, i, d[i]);
  return b.finalize();
}

double max_relative_difference(const DenseMatrix& a, const DenseMatrix& b)
{
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument("max_relative_difference: shape mismatch");
  const double scale = b.size() ? b.cwiseAbs().maxCoeff() : 0.0;
  const double diff = a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
  return scale > 0 ? diff / scale : diff;
}

void write_matrix_market(const SparseMatrix& a, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open " + path.string() + " for writing");
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  out << std::setprecision(17);
  for (int r = 0; r < a.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(a, r); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

void write_matrix_market(const Vector& v, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open " + path.string() + " for writing");
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n";
  out << std::setprecision(17);
  for (int i = 0; i < v.size(); ++i)
    out << v[i] << '\n';
}

SparseMatrix read_matrix_market(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("%%MatrixMarket", 0) != 0)
    throw Error(path.string() + ": missing MatrixMarket banner");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (object != "matrix" || format != "coordinate" || (field != "real" && field != "integer"))
    throw Error(path.string() + ": only real coordinate matrices are supported");
  const bool symmetric = symmetry == "symmetric";

  while (std::getline(in, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream header(line);
  long rows = 0, cols = 0, nnz = 0;
  if (!(header >> rows >> cols >> nnz))
    throw Error(path.string() + ": bad size line");

  TripletBuilder b(static_cast<int>(rows), static_cast<int>(cols));
  b.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  for (long k = 0; k < nnz; ++k) {
    long i, j;
    double v;
    if (!(in >> i >> j >> v))
      throw Error(path.string() + ": truncated entry list");
    b.add(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
    if (symmetric && i != j)
      b.add(static_cast<int>(j - 1), static_cast<int>(i - 1), v);
  }
  return b.finalize();
}

} // namespace msa
