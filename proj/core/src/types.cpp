#include "eelink/types.hpp"

#include <cmath>
#include <sstream>

#include "eelink/errors.hpp"

namespace eelink {

int Dataset::treated_count() const {
  int c = 0;
  for (const auto& r : rows) c += (r.z == 1) ? 1 : 0;
  return c;
}

std::string ValidationReport::to_string() const {
  if (issues.empty()) return "ok";
  std::ostringstream os;
  for (size_t i = 0; i < issues.size(); ++i) {
    if (i) os << "; ";
    if (issues[i].row >= 0) os << "row " << issues[i].row << ": ";
    os << issues[i].message;
  }
  return os.str();
}

ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport rep;
  const int n = d.n();
  if (n < 2) {
    rep.issues.push_back({-1, "dataset must have at least 2 rows, got " + std::to_string(n)});
  }
  int treated = 0, control = 0;
  for (int i = 0; i < n; ++i) {
    const Observation& o = d.rows[i];
    if (o.z == 1) {
      ++treated;
    } else if (o.z == 0) {
      ++control;
    } else {
      rep.issues.push_back({i, "non-binary z value " + std::to_string(o.z)});
    }
    if (!std::isfinite(o.y)) rep.issues.push_back({i, "non-finite outcome"});
    if (static_cast<int>(o.x.size()) != d.q) {
      rep.issues.push_back({i, "covariate vector has length " + std::to_string(o.x.size()) +
                                   ", expected " + std::to_string(d.q)});
    } else if (!o.x.allFinite()) {
      rep.issues.push_back({i, "non-finite covariate at row " + std::to_string(i)});
    }
  }
  if (n >= 2 && treated == 0) rep.issues.push_back({-1, "single treatment arm (no treated rows)"});
  if (n >= 2 && control == 0) rep.issues.push_back({-1, "single treatment arm (no control rows)"});
  return rep;
}

void ensure_valid(const Dataset& d) {
  ValidationReport rep = validate_dataset(d);
  if (!rep.ok()) throw ValidationError("invalid dataset: " + rep.to_string());
}

Mat design_matrix(const Dataset& d, bool intercept) {
  const int n = d.n();
  const int k = d.q + (intercept ? 1 : 0);
  Mat x(n, k);
  for (int i = 0; i < n; ++i) {
    if (intercept) {
      x(i, 0) = 1.0;
      x.row(i).tail(d.q) = d.rows[i].x.transpose();
    } else {
      x.row(i) = d.rows[i].x.transpose();
    }
  }
  return x;
}

WeightVector WeightVector::from(Vec w) {
  if (w.size() < 1) throw ValidationError("weight vector must be non-empty");
  double sum = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw ValidationError("weight " + std::to_string(i) + " is negative or non-finite");
    }
    sum += w[i];
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ValidationError("weights sum to " + std::to_string(sum) + ", not 1");
  }
  return WeightVector(std::move(w));
}

WeightVector WeightVector::equal(int n) {
  if (n < 1) throw ValidationError("weight vector must be non-empty");
  return WeightVector(Vec::Constant(n, 1.0 / n));
}

std::string to_string(PosteriorMethod m) {
  switch (m) {
    case PosteriorMethod::known_h: return "known_h";
    case PosteriorMethod::plugin: return "plugin";
    case PosteriorMethod::linked: return "linked";
    case PosteriorMethod::augmented: return "augmented";
    case PosteriorMethod::llb: return "llb";
  }
  return "?";
}

DesignView DesignView::build(const Dataset& d, bool intercept) {
  DesignView dv;
  dv.intercept = intercept;
  dv.xt = design_matrix(d, intercept);
  const int n = d.n();
  dv.y.resize(n);
  dv.z.resize(n);
  for (int i = 0; i < n; ++i) {
    dv.y[i] = d.rows[i].y;
    dv.z[i] = static_cast<double>(d.rows[i].z);
  }
  return dv;
}

}  // namespace eelink
