#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace eelink {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One observed unit: outcome, binary treatment, covariate vector.
// z is kept as an integer in {0,1} because every estimating function
// uses it arithmetically.
struct Observation {
  double y = 0.0;
  int z = 0;
  Vec x;
};

struct Dataset {
  std::vector<Observation> rows;
  int q = 0;  // covariate dimension shared by all rows

  int n() const { return static_cast<int>(rows.size()); }
  int treated_count() const;
};

struct ValidationIssue {
  int row = -1;  // -1 for dataset-level issues
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

// Pure check of every Dataset invariant: binary z, finite values,
// consistent covariate dimension, n >= 2, both treatment arms present.
// Returns an empty report iff the dataset is usable.
ValidationReport validate_dataset(const Dataset& d);

// Throws ValidationError carrying the full report when the dataset is invalid.
void ensure_valid(const Dataset& d);

// Row i is x_i, prefixed by a constant 1 when intercept is set.
Mat design_matrix(const Dataset& d, bool intercept);

// A point on the n-simplex. Construction validates non-negativity,
// finiteness, and |sum - 1| <= 1e-12.
class WeightVector {
 public:
  static WeightVector from(Vec w);
  static WeightVector equal(int n);  // every entry exactly 1.0/n

  const Vec& values() const { return w_; }
  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int i) const { return w_[i]; }

  static constexpr double kSumTolerance = 1e-12;

 private:
  explicit WeightVector(Vec w) : w_(std::move(w)) {}
  Vec w_;
};

// Result of a nuisance (logistic) fit.
struct NuisanceFit {
  Vec h;
  int iterations = 0;
  double score_sup_norm = 0.0;
  bool converged = false;
};

enum class PosteriorMethod { known_h, plugin, linked, augmented, llb };

std::string to_string(PosteriorMethod m);

// B joint posterior draws with provenance. h is populated only by the
// linked and augmented engines, which resample the nuisance per draw.
struct PosteriorDraws {
  Mat theta;              // B x p
  std::optional<Mat> h;   // B x q_nuis
  PosteriorMethod method = PosteriorMethod::linked;
  std::uint64_t seed = 0;
  long retries_total = 0;

  int draws() const { return static_cast<int>(theta.rows()); }
  int dim() const { return static_cast<int>(theta.cols()); }
};

// Numeric columns of a dataset cached once so weighted solves can run
// without touching row objects. xt carries the intercept column when
// requested.
struct DesignView {
  Mat xt;  // n x (q or q+1)
  Vec y;
  Vec z;
  bool intercept = false;

  static DesignView build(const Dataset& d, bool intercept);
  int n() const { return static_cast<int>(xt.rows()); }
  int k() const { return static_cast<int>(xt.cols()); }
};

}  // namespace eelink
