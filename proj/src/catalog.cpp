#include "eecsim/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace eecsim {

std::string to_string(Precision p) { return p == Precision::FP32 ? "FP32" : "Int8"; }

Precision precision_from_string(const std::string& s) {
  if (s == "FP32" || s == "fp32") return Precision::FP32;
  if (s == "Int8" || s == "int8" || s == "INT8") return Precision::Int8;
  throw std::invalid_argument("unknown precision: " + s);
}

double footprint_for(double macs, Precision p) {
  return macs * (p == Precision::FP32 ? 4.0 : 1.0);
}

std::string InferenceModel::name() const { return "d" + std::to_string(id); }

bool accuracy_meets(double value, double threshold) { return value >= threshold - 1e-9; }

ModelCatalog::ModelCatalog(std::vector<InferenceModel> models) : models_(std::move(models)) {
  if (models_.size() != 8) throw std::invalid_argument("catalog must hold exactly 8 models");
  std::sort(models_.begin(), models_.end(),
            [](const InferenceModel& a, const InferenceModel& b) { return a.id < b.id; });
  for (int i = 0; i < 8; ++i) {
    const InferenceModel& m = models_[static_cast<size_t>(i)];
    if (m.id != i) throw std::invalid_argument("catalog ids must be d0..d7");
    if (!(m.macs > 0.0)) throw std::invalid_argument(m.name() + ": macs must be positive");
    if (!(m.accuracy > 0.0 && m.accuracy <= 100.0))
      throw std::invalid_argument(m.name() + ": accuracy outside (0,100]");
    if (std::abs(m.mem_footprint - footprint_for(m.macs, m.precision)) > 1e-9)
      throw std::invalid_argument(m.name() + ": mem_footprint inconsistent with precision rule");
  }
}

ModelCatalog ModelCatalog::standard() {
  auto row = [](int id, double macs, Precision p, double acc) {
    return InferenceModel{id, macs, p, acc, footprint_for(macs, p)};
  };
  return ModelCatalog({
      row(0, 569.0, Precision::FP32, 89.9),
      row(1, 317.0, Precision::FP32, 88.2),
      row(2, 150.0, Precision::FP32, 84.9),
      row(3, 41.0, Precision::FP32, 74.2),
      row(4, 569.0, Precision::Int8, 88.9),
      row(5, 317.0, Precision::Int8, 87.0),
      row(6, 150.0, Precision::Int8, 83.2),
      row(7, 41.0, Precision::Int8, 72.8),
  });
}

ModelCatalog ModelCatalog::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open catalog file: " + path);
  std::vector<InferenceModel> models;
  std::string line;
  while (std::getline(in, line)) {
    const size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::stringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 4 && fields.size() != 5)
      throw std::runtime_error("catalog row needs 4 or 5 fields: " + line);
    InferenceModel m;
    std::string id = fields[0];
    id.erase(0, id.find_first_not_of(" \t"));
    id.erase(id.find_last_not_of(" \t\r") + 1);
    if (id.size() == 2 && id[0] == 'd') id = id.substr(1);
    m.id = std::stoi(id);
    m.macs = std::stod(fields[1]);
    std::string prec = fields[2];
    prec.erase(0, prec.find_first_not_of(" \t"));
    prec.erase(prec.find_last_not_of(" \t\r") + 1);
    m.precision = precision_from_string(prec);
    m.accuracy = std::stod(fields[3]);
    m.mem_footprint = fields.size() == 5 ? std::stod(fields[4]) : footprint_for(m.macs, m.precision);
    models.push_back(m);
  }
  return ModelCatalog(std::move(models));
}

const InferenceModel& ModelCatalog::model(int id) const {
  if (id < 0 || id >= static_cast<int>(models_.size()))
    throw std::out_of_range("model id out of range: " + std::to_string(id));
  return models_[static_cast<size_t>(id)];
}

double ModelCatalog::max_accuracy() const {
  double best = 0.0;
  for (const auto& m : models_) best = std::max(best, m.accuracy);
  return best;
}

std::vector<InferenceModel> ModelCatalog::feasible(double threshold) const {
  std::vector<InferenceModel> out;
  for (const auto& m : models_)
    if (accuracy_meets(m.accuracy, threshold)) out.push_back(m);
  std::stable_sort(out.begin(), out.end(), [](const InferenceModel& a, const InferenceModel& b) {
    return a.accuracy > b.accuracy;
  });
  return out;
}

double average_accuracy(const std::vector<InferenceModel>& selection) {
  if (selection.empty()) throw std::invalid_argument("average_accuracy over empty selection");
  double sum = 0.0;
  for (const auto& m : selection) sum += m.accuracy;
  return sum / static_cast<double>(selection.size());
}

std::string AccuracyConstraint::name() const {
  switch (label) {
    case ConstraintLabel::Min: return "Min";
    case ConstraintLabel::P80: return "80%";
    case ConstraintLabel::P85: return "85%";
    case ConstraintLabel::P89: return "89%";
    case ConstraintLabel::Max: return "Max";
  }
  return "?";
}

AccuracyConstraint AccuracyConstraint::make(ConstraintLabel label, const ModelCatalog& catalog) {
  switch (label) {
    case ConstraintLabel::Min: return {label, 0.0};
    case ConstraintLabel::P80: return {label, 80.0};
    case ConstraintLabel::P85: return {label, 85.0};
    case ConstraintLabel::P89: return {label, 89.0};
    case ConstraintLabel::Max: return {label, catalog.max_accuracy()};
  }
  throw std::invalid_argument("bad constraint label");
}

AccuracyConstraint AccuracyConstraint::parse(const std::string& text, const ModelCatalog& catalog) {
  std::string t = text;
  if (!t.empty() && (t.front() == 'P' || t.front() == 'p')) t = t.substr(1);
  if (!t.empty() && t.back() == '%') t.pop_back();
  if (t == "Min" || t == "min") return make(ConstraintLabel::Min, catalog);
  if (t == "Max" || t == "max") return make(ConstraintLabel::Max, catalog);
  if (t == "80") return make(ConstraintLabel::P80, catalog);
  if (t == "85") return make(ConstraintLabel::P85, catalog);
  if (t == "89") return make(ConstraintLabel::P89, catalog);
  throw std::invalid_argument("unknown accuracy constraint: " + text);
}

std::vector<AccuracyConstraint> all_constraints(const ModelCatalog& catalog) {
  return {AccuracyConstraint::make(ConstraintLabel::Min, catalog),
          AccuracyConstraint::make(ConstraintLabel::P80, catalog),
          AccuracyConstraint::make(ConstraintLabel::P85, catalog),
          AccuracyConstraint::make(ConstraintLabel::P89, catalog),
          AccuracyConstraint::make(ConstraintLabel::Max, catalog)};
}

}  // namespace eecsim
