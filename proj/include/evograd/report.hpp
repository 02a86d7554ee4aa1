#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evograd/conditions.hpp"
#include "evograd/solver.hpp"
#include "evograd/verify.hpp"

namespace evograd {

// 17 significant digits; round-trips doubles exactly.
std::string format_float(double v);

std::uint64_t fnv1a_hash(std::string_view text);

std::string key_value_block(const ConditionReport& rep, int dimension);
std::string key_value_block(const VerificationReport& rep, int dimension);

// One row per condition: condition,pass,extremal,t,x1..xd,samples,tol,eta_mode,seed
std::string conditions_csv(const std::vector<ConditionReport>& reports, int dimension);

// Per-snapshot margins of verification reports: kind,time,margin,x1..xd
std::string margins_csv(const std::vector<VerificationReport>& reports, int dimension);

// Pattern table of the necessity probe: family,i,j,k,inferred,tensor_violation,cross_check
std::string patterns_csv(const std::vector<NecessityPattern>& patterns);

// x1..xd,u rows for one snapshot.
std::string snapshot_csv(const ScalarField& field);

// Nested-domain convergence table: radius_pair,time,difference
std::string convergence_csv(const ConvergenceTable& table);

struct RunManifest {
    std::string command_line;
    std::uint64_t spec_hash = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> entries;  // tolerances etc.
    std::vector<std::string> output_files;
    double wall_seconds = 0.0;
};

std::string manifest_text(const RunManifest& manifest);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace evograd
