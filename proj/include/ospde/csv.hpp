#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ospde/capacity.hpp"
#include "ospde/stepper.hpp"
#include "ospde/verify.hpp"

namespace ospde {

/// Shortest decimal that reads back to the same double.
std::string format_double(double value);

struct NumericTable {
    std::vector<std::string> header;
    std::size_t columns = 0;
    std::vector<double> values;  // row-major

    std::size_t rows() const { return columns == 0 ? 0 : values.size() / columns; }
};

/// Comma-separated numbers; a first row that does not parse is taken as the header.
NumericTable read_numeric_csv(const std::string& path);

/// k,t,node,x[,y],u,nu_mass
void write_trajectory_csv(std::ostream& out, const SolutionPath& path, const ReflectionMeasure& nu,
                          const SpatialGrid& grid, const TimeGrid& time);
/// t,x[,y],value
void write_field_csv(std::ostream& out, const FieldPath& fields, const SpatialGrid& grid, const TimeGrid& time);
/// level,nodes,steps,penalty,mass,error_indicator
void write_capacity_csv(std::ostream& out, const CapacityEstimate& estimate);
/// check,path,value
void write_residual_csv(std::ostream& out, const VerificationReport& report);

}  // namespace ospde
