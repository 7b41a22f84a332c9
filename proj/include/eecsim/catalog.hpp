#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace eecsim {

enum class Precision : uint8_t { FP32, Int8 };

std::string to_string(Precision p);
Precision precision_from_string(const std::string& s);

// Footprint rule: 4 units per M-MAC for FP32 weights, 1 for Int8.
double footprint_for(double macs, Precision p);

struct InferenceModel {
  int id{0};  // 0..7, rendered "d0".."d7"
  double macs{0.0};  // millions of multiply-accumulates per inference
  Precision precision{Precision::FP32};
  double accuracy{0.0};  // top-1, percent
  double mem_footprint{0.0};

  std::string name() const;
};

// Accuracy values live on a coarse decimal lattice (tenths of a percent and
// their n-way means), so a 1e-9 slack makes >= behave like exact decimal
// comparison despite binary floating point.
bool accuracy_meets(double value, double threshold);

class ModelCatalog {
 public:
  static ModelCatalog standard();
  // Override file: one "id,macs,precision,accuracy[,mem_footprint]" row per
  // model, '#' comments allowed. Must still describe exactly d0..d7.
  static ModelCatalog from_csv(const std::string& path);

  const InferenceModel& model(int id) const;
  const std::vector<InferenceModel>& models() const { return models_; }
  double max_accuracy() const;
  // Models meeting the threshold, highest accuracy first.
  std::vector<InferenceModel> feasible(double threshold) const;

 private:
  explicit ModelCatalog(std::vector<InferenceModel> models);
  std::vector<InferenceModel> models_;
};

double average_accuracy(const std::vector<InferenceModel>& selection);

enum class ConstraintLabel : uint8_t { Min, P80, P85, P89, Max };

struct AccuracyConstraint {
  ConstraintLabel label{ConstraintLabel::Min};
  double threshold{0.0};  // percent of mean accuracy the window must reach

  std::string name() const;
  static AccuracyConstraint make(ConstraintLabel label, const ModelCatalog& catalog);
  // Accepts "Min", "Max", "80", "85", "89", plus "P80"/"80%" spellings.
  static AccuracyConstraint parse(const std::string& text, const ModelCatalog& catalog);
};

std::vector<AccuracyConstraint> all_constraints(const ModelCatalog& catalog);

}  // namespace eecsim
