#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fqr/grid.hpp"
#include "fqr/types.hpp"

namespace fqr {

/// One subject's irregular observations (t_j, w_j), times sorted ascending.
struct SubjectRecord {
  std::int64_t id = 0;
  Vector t;
  Vector w;

  Index num_obs() const { return t.size(); }
};

/// Functional covariates plus scalar responses, aligned by subject.
struct FunctionalDataset {
  std::vector<SubjectRecord> subjects;
  Vector responses;

  Index n() const { return static_cast<Index>(subjects.size()); }

  Index min_obs() const;
  Index max_obs() const;
  Index total_obs() const;

  /// True when every subject shares the same observation times.
  bool common_design() const;
};

/// Validates invariants and sorts observations within subject by time.
FunctionalDataset make_dataset(std::vector<SubjectRecord> subjects, Vector responses);

/// Long-format loader: covariate CSV (subject_id,t,w), response CSV (subject_id,y).
FunctionalDataset load_dataset(const std::string& covariate_csv, const std::string& response_csv);

void write_dataset(const FunctionalDataset& data, const std::string& covariate_csv,
                   const std::string& response_csv);

enum class Design { Dense, Sparse };

const char* design_name(Design d);

/// Advisory label: dense iff min_i m_i >= ceil(grid_size / 2).
Design classify_design(const FunctionalDataset& data, const Grid& grid);

}  // namespace fqr
