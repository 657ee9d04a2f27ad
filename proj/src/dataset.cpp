#include "fqr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "fqr/io.hpp"

namespace fqr {

Index FunctionalDataset::min_obs() const {
  Index m = subjects.empty() ? 0 : subjects[0].num_obs();
  for (const auto& s : subjects) m = std::min(m, s.num_obs());
  return m;
}

Index FunctionalDataset::max_obs() const {
  Index m = 0;
  for (const auto& s : subjects) m = std::max(m, s.num_obs());
  return m;
}

Index FunctionalDataset::total_obs() const {
  Index m = 0;
  for (const auto& s : subjects) m += s.num_obs();
  return m;
}

bool FunctionalDataset::common_design() const {
  if (subjects.size() < 2) return true;
  const Vector& t0 = subjects[0].t;
  for (const auto& s : subjects) {
    if (s.t.size() != t0.size()) return false;
    if ((s.t - t0).cwiseAbs().maxCoeff() > 0.0) return false;
  }
  return true;
}

const char* design_name(Design d) { return d == Design::Dense ? "dense" : "sparse"; }

FunctionalDataset make_dataset(std::vector<SubjectRecord> subjects, Vector responses) {
  if (static_cast<Index>(subjects.size()) != responses.size()) {
    raise(ErrorCode::InvalidSize, "responses length (" + std::to_string(responses.size()) +
                                      ") does not match subject count (" +
                                      std::to_string(subjects.size()) + ")");
  }
  for (auto& s : subjects) {
    if (s.num_obs() < 1)
      raise(ErrorCode::InvalidSize, "subject " + std::to_string(s.id) + " has no observations");
    if (s.t.size() != s.w.size())
      raise(ErrorCode::InvalidSize, "subject " + std::to_string(s.id) + ": t/w length mismatch");
    for (Index j = 0; j < s.num_obs(); ++j) {
      if (!(s.t[j] >= 0.0 && s.t[j] <= 1.0)) {
        raise(ErrorCode::OutOfRangeTime, "subject " + std::to_string(s.id) + ": t=" +
                                             std::to_string(s.t[j]) + " outside [0,1]");
      }
      if (!std::isfinite(s.w[j]))
        raise(ErrorCode::NonFiniteValue, "subject " + std::to_string(s.id) + ": non-finite w");
    }
    // sort by time, stable in w for duplicate times
    std::vector<Index> order(s.num_obs());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return s.t[a] < s.t[b]; });
    Vector t(s.num_obs()), w(s.num_obs());
    for (Index j = 0; j < s.num_obs(); ++j) {
      t[j] = s.t[order[j]];
      w[j] = s.w[order[j]];
    }
    s.t = std::move(t);
    s.w = std::move(w);
  }
  for (Index i = 0; i < responses.size(); ++i) {
    if (!std::isfinite(responses[i]))
      raise(ErrorCode::NonFiniteValue,
            "subject " + std::to_string(subjects[i].id) + ": non-finite response");
  }
  FunctionalDataset data;
  data.subjects = std::move(subjects);
  data.responses = std::move(responses);
  return data;
}

FunctionalDataset load_dataset(const std::string& covariate_csv, const std::string& response_csv) {
  CsvTable cov = read_csv(covariate_csv);
  CsvTable resp = read_csv(response_csv);
  Index c_id = cov.column_index("subject_id");
  Index c_t = cov.column_index("t");
  Index c_w = cov.column_index("w");
  Index r_id = resp.column_index("subject_id");
  Index r_y = resp.column_index("y");

  std::map<std::int64_t, std::pair<std::vector<double>, std::vector<double>>> by_subject;
  for (const auto& row : cov.rows) {
    auto id = static_cast<std::int64_t>(std::llround(row[c_id]));
    by_subject[id].first.push_back(row[c_t]);
    by_subject[id].second.push_back(row[c_w]);
  }
  std::map<std::int64_t, double> y_by_subject;
  for (const auto& row : resp.rows) {
    auto id = static_cast<std::int64_t>(std::llround(row[r_id]));
    if (y_by_subject.count(id))
      raise(ErrorCode::FileFormat, response_csv + ": duplicate subject " + std::to_string(id));
    y_by_subject[id] = row[r_y];
  }
  for (const auto& [id, y] : y_by_subject) {
    (void)y;
    if (!by_subject.count(id))
      raise(ErrorCode::MissingSubject, "subject " + std::to_string(id) + " has a response but no covariates");
  }
  for (const auto& [id, tw] : by_subject) {
    (void)tw;
    if (!y_by_subject.count(id))
      raise(ErrorCode::MissingSubject, "subject " + std::to_string(id) + " has covariates but no response");
  }

  std::vector<SubjectRecord> subjects;
  Vector responses(static_cast<Index>(by_subject.size()));
  Index i = 0;
  for (auto& [id, tw] : by_subject) {
    SubjectRecord s;
    s.id = id;
    s.t = Eigen::Map<Vector>(tw.first.data(), static_cast<Index>(tw.first.size()));
    s.w = Eigen::Map<Vector>(tw.second.data(), static_cast<Index>(tw.second.size()));
    responses[i++] = y_by_subject[id];
    subjects.push_back(std::move(s));
  }
  return make_dataset(std::move(subjects), std::move(responses));
}

void write_dataset(const FunctionalDataset& data, const std::string& covariate_csv,
                   const std::string& response_csv) {
  std::ostringstream cov;
  cov << "subject_id,t,w\n";
  for (const auto& s : data.subjects) {
    for (Index j = 0; j < s.num_obs(); ++j) {
      cov << s.id << ',' << format_double(s.t[j]) << ',' << format_double(s.w[j]) << '\n';
    }
  }
  std::ostringstream resp;
  resp << "subject_id,y\n";
  for (Index i = 0; i < data.n(); ++i) {
    resp << data.subjects[i].id << ',' << format_double(data.responses[i]) << '\n';
  }
  write_file_atomic(covariate_csv, cov.str());
  write_file_atomic(response_csv, resp.str());
}

Design classify_design(const FunctionalDataset& data, const Grid& grid) {
  Index threshold = (grid.size() + 1) / 2;  // ceil(grid_size / 2)
  return data.min_obs() >= threshold ? Design::Dense : Design::Sparse;
}

}  // namespace fqr
