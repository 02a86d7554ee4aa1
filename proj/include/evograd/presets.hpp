#pragma once

#include <map>
#include <string>
#include <vector>

#include "evograd/operator_family.hpp"

namespace evograd {

struct PresetInfo {
    std::string name;
    std::string summary;
    std::map<std::string, double> defaults;  // overridable numeric parameters
};

class PresetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// heat, ou, example41, block2d, wang-counterexample
const std::vector<PresetInfo>& preset_catalog();

// Renders the operator document for a preset with numeric parameter overrides.
// Parameter ranges are validated (e.g. the drift strength of example41 must
// exceed max{abar, psi, 2 psi^2/abar}).
std::string instantiate(const std::string& name,
                        const std::map<std::string, double>& overrides = {});

// Same, with parameters given as expression strings (e.g. a1 = "2 + sin(t)").
// Range checks run only when every parameter is a plain number.
std::string instantiate_expr(const std::string& name,
                             const std::map<std::string, std::string>& overrides);

OperatorFamily build_preset(const std::string& name,
                            const std::map<std::string, double>& overrides = {});

}  // namespace evograd
