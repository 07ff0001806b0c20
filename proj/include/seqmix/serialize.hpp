#pragma once

#include <string>
#include <vector>

#include "seqmix/ecm.hpp"
#include "seqmix/selection.hpp"
#include "seqmix/wlbs.hpp"

namespace seqmix {

// Reals in CSV output are written with 17 significant digits so files
// round-trip exactly.
std::string format_real(double x);

std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);  // Z is restored from z.csv separately

void write_model_json(const FittedModel& model, const std::string& path);
FittedModel read_model_json(const std::string& path);

void write_z_csv(const FittedModel& model, const std::vector<std::string>& ids,
                 const std::string& path);

struct ZTable {
  std::vector<std::string> ids;
  Eigen::MatrixXd Z;
  std::vector<int> map_labels;
};
ZTable read_z_csv(const std::string& path);

void write_grid_csv(const GridResult& grid, const std::string& path);
void write_stepwise_csv(const StepwiseTrace& trace, const std::string& path);
void write_se_csv(const FittedModel& model, const BootstrapResult& boot, const std::string& path);
void write_gating_csv(const FittedModel& model, const std::string& path);

// Generic numeric table with a header row and optional row-label column.
void write_table_csv(const std::string& path, const std::vector<std::string>& column_names,
                     const Eigen::MatrixXd& values, const std::string& row_label_name = "",
                     const std::vector<std::string>& row_labels = {});

}  // namespace seqmix
