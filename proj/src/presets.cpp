#include "evograd/presets.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace evograd {

namespace {

std::string format_value(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::map<std::string, std::string> merge_params(const PresetInfo& info,
                                                const std::map<std::string, std::string>& overrides) {
    std::map<std::string, std::string> merged;
    for (const auto& [k, v] : info.defaults) merged[k] = format_value(v);
    for (const auto& [k, v] : overrides) {
        if (!info.defaults.count(k))
            throw PresetError("preset " + info.name + " has no parameter '" + k + "'");
        merged[k] = v;
    }
    return merged;
}

bool numeric(const std::string& s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

// gamma > max{abar, psi, 2 psi^2 / abar} with abar = min_i a_i; checked when
// the parameters are plain numbers.
void validate_ramp_family(const std::string& name, const std::map<std::string, std::string>& p,
                          const std::vector<std::string>& a_names) {
    std::vector<double> a;
    double psi = 0.0, gamma = 0.0, beta = 0.0;
    for (const auto& an : a_names) {
        double v;
        if (!numeric(p.at(an), v)) return;
        if (!(v > 0.0)) throw PresetError(name + " requires " + an + " > 0");
        a.push_back(v);
    }
    if (!numeric(p.at("psi"), psi) || !numeric(p.at("gamma"), gamma) ||
        !numeric(p.at("beta"), beta))
        return;
    if (!(psi > 0.0)) throw PresetError(name + " requires psi > 0");
    if (!(beta >= 1.0)) throw PresetError(name + " requires beta >= 1");
    double abar = a[0];
    for (double v : a) abar = std::min(abar, v);
    double bound = std::max(abar, std::max(psi, 2.0 * psi * psi / abar));
    if (!(gamma > bound))
        throw PresetError(name + " requires gamma > " + format_value(bound) +
                          " (gamma > max{abar, psi, 2*psi^2/abar})");
}

std::string render_params(const std::map<std::string, std::string>& p) {
    std::string out;
    for (const auto& [k, v] : p) out += k + " = " + v + "\n";
    return out;
}

}  // namespace

const std::vector<PresetInfo>& preset_catalog() {
    static const std::vector<PresetInfo> catalog = {
        {"heat", "constant identity diffusion, zero drift (d=1)", {}},
        {"ou", "constant diffusion with linear restoring drift (d=1)", {}},
        {"example41",
         "d=3 rotation-structured diffusion a_i + psi x^2 with polynomial confining drift",
         {{"a1", 1.0}, {"a2", 1.0}, {"a3", 1.0}, {"psi", 1.0}, {"gamma", 3.0}, {"beta", 1.0},
          {"lyap_gamma", 6.0}}},
        {"block2d",
         "d=2 block of the rotation-structured family with the same drift",
         {{"a1", 1.0}, {"a2", 1.0}, {"psi", 1.0}, {"gamma", 3.0}, {"beta", 1.0},
          {"lyap_gamma", 4.0}}},
        {"wang-counterexample",
         "d=2 isotropic diffusion (1 + x1^2) Id with drift -4x; the derivative identity for "
         "the diffusion fails while ellipticity and the Lyapunov bound hold",
         {}},
    };
    return catalog;
}

std::string instantiate_expr(const std::string& name,
                             const std::map<std::string, std::string>& overrides) {
    const PresetInfo* info = nullptr;
    for (const auto& p : preset_catalog())
        if (p.name == name) info = &p;
    if (!info) {
        std::string names;
        for (const auto& p : preset_catalog()) names += (names.empty() ? "" : ", ") + p.name;
        throw PresetError("unknown preset '" + name + "' (available: " + names + ")");
    }

    if (name == "heat") {
        if (!overrides.empty()) throw PresetError("heat has no parameters");
        return "# heat: identity diffusion, zero drift\n"
               "[meta]\n"
               "d = 1\n"
               "t_lo = -10\n"
               "t_hi = 10\n"
               "[diffusion]\n"
               "q11 = 1\n"
               "eta = 1\n"
               "[drift]\n"
               "b1 = 0\n"
               "[lyapunov]\n"
               "phi = 1 + norm2(x)\n"
               "gamma = 2\n";
    }
    if (name == "ou") {
        if (!overrides.empty()) throw PresetError("ou has no parameters");
        return "# ou: unit diffusion, drift -x\n"
               "[meta]\n"
               "d = 1\n"
               "t_lo = -10\n"
               "t_hi = 10\n"
               "[diffusion]\n"
               "q11 = 1\n"
               "eta = 1\n"
               "[drift]\n"
               "b1 = -x1\n"
               "[lyapunov]\n"
               "phi = 1 + norm2(x)\n"
               "gamma = 2\n";
    }
    if (name == "wang-counterexample") {
        if (!overrides.empty()) throw PresetError("wang-counterexample has no parameters");
        return "# wang-counterexample: q = (1 + x1^2) Id, b = -4x\n"
               "[meta]\n"
               "d = 2\n"
               "t_lo = 0\n"
               "t_hi = 10\n"
               "[diffusion]\n"
               "q11 = 1 + x1^2\n"
               "q12 = 0\n"
               "q22 = 1 + x1^2\n"
               "eta = 1 + x1^2\n"
               "[drift]\n"
               "b1 = -4*x1\n"
               "b2 = -4*x2\n"
               "[lyapunov]\n"
               "phi = 1 + norm2(x)\n"
               "gamma = 4\n";
    }

    std::map<std::string, std::string> p = merge_params(*info, overrides);
    std::string lyap_gamma = p.at("lyap_gamma");
    p.erase("lyap_gamma");

    if (name == "example41") {
        validate_ramp_family(name, p, {"a1", "a2", "a3"});
        return "# example41: a_i + psi x^2 diffusion blocks, drift -gamma x |x|^(2 beta)\n"
               "[meta]\n"
               "d = 3\n"
               "t_lo = 0\n"
               "t_hi = 10\n"
               "[params]\n" +
               render_params(p) +
               "abar = min(a1, min(a2, a3))\n"
               "[diffusion]\n"
               "q11 = a1 + psi*x2^2\n"
               "q12 = -psi*x1*x2\n"
               "q13 = 0\n"
               "q22 = a2 + psi*x1^2\n"
               "q23 = 0\n"
               "q33 = a3\n"
               "eta = abar\n"
               "[drift]\n"
               "b1 = -gamma*x1*norm2(x)^beta\n"
               "b2 = -gamma*x2*norm2(x)^beta\n"
               "b3 = -gamma*x3*norm2(x)^beta\n"
               "[lyapunov]\n"
               "phi = 1 + norm2(x)\n"
               "gamma = " +
               lyap_gamma + "\n";
    }
    if (name == "block2d") {
        validate_ramp_family(name, p, {"a1", "a2"});
        return "# block2d: two-dimensional block of the example41 family\n"
               "[meta]\n"
               "d = 2\n"
               "t_lo = 0\n"
               "t_hi = 10\n"
               "[params]\n" +
               render_params(p) +
               "abar = min(a1, a2)\n"
               "[diffusion]\n"
               "q11 = a1 + psi*x2^2\n"
               "q12 = -psi*x1*x2\n"
               "q22 = a2 + psi*x1^2\n"
               "eta = abar\n"
               "[drift]\n"
               "b1 = -gamma*x1*norm2(x)^beta\n"
               "b2 = -gamma*x2*norm2(x)^beta\n"
               "[lyapunov]\n"
               "phi = 1 + norm2(x)\n"
               "gamma = " +
               lyap_gamma + "\n";
    }
    throw PresetError("unhandled preset '" + name + "'");
}

std::string instantiate(const std::string& name, const std::map<std::string, double>& overrides) {
    std::map<std::string, std::string> as_text;
    for (const auto& [k, v] : overrides) as_text[k] = format_value(v);
    return instantiate_expr(name, as_text);
}

OperatorFamily build_preset(const std::string& name,
                            const std::map<std::string, double>& overrides) {
    return build_operator_from_text(instantiate(name, overrides));
}

}  // namespace evograd
