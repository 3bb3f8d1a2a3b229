#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "verifem/config.hpp"

namespace verifem {

enum class Command { solve, estimate, adapt, study };

std::optional<Command> command_from(const std::string& name);
std::string to_string(Command command);

struct ProblemSetup {
  DiffusionProblem problem;
  MeshPtr mesh;
  bool projected = false;
};

// Builds the problem and its initial mesh; a pointwise source is projected onto the mesh
// when an analytic flux is requested (source_projection=auto) or always (on).
ProblemSetup make_problem(const RunConfig& config, Command command);

// Contract checks on one set of estimates against a reference error (when known).
std::vector<std::string> check_estimates(const std::vector<EstimateReport>& reports, std::optional<double> ref_error);
std::vector<std::string> check_goal(const std::vector<GoalBounds>& bounds, std::optional<double> reference);

// Runs a pipeline and writes report.json, study.csv and mesh_NN.vtk into out_dir.
// Returns 0 on success, 1 on input errors and 2 on contract violations. Messages go to err.
int run(Command command, const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& err);

}  // namespace verifem
