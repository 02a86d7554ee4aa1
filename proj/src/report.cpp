#include "evograd/report.hpp"

#include <cstdio>
#include <fstream>

namespace evograd {

std::string format_float(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a_hash(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

std::string witness_fields(double t, const std::vector<double>& x, int dimension) {
    std::string out = format_float(t);
    for (int a = 0; a < dimension; ++a) {
        out += ',';
        out += a < static_cast<int>(x.size()) ? format_float(x[static_cast<std::size_t>(a)]) : "";
    }
    return out;
}

std::string x_header(int dimension) {
    std::string out;
    for (int a = 1; a <= dimension; ++a) out += ",x" + std::to_string(a);
    return out;
}

}  // namespace

std::string key_value_block(const ConditionReport& rep, int dimension) {
    std::string out;
    out += "condition=" + rep.condition + "\n";
    out += std::string("pass=") + (rep.pass ? "true" : "false") + "\n";
    out += "extremal=" + format_float(rep.extremal) + "\n";
    out += "witness_t=" + format_float(rep.witness_t) + "\n";
    for (int a = 0; a < dimension; ++a)
        out += "witness_x" + std::to_string(a + 1) + "=" +
               (a < static_cast<int>(rep.witness_x.size())
                    ? format_float(rep.witness_x[static_cast<std::size_t>(a)])
                    : "") +
               "\n";
    out += "samples=" + std::to_string(rep.samples) + "\n";
    out += "tol=" + format_float(rep.tol) + "\n";
    if (rep.eta_mode) out += "eta_mode=" + std::string(to_string(*rep.eta_mode)) + "\n";
    out += "seed=" + std::to_string(rep.seed) + "\n";
    for (const auto& n : rep.notes) out += "note=" + n + "\n";
    return out;
}

std::string key_value_block(const VerificationReport& rep, int dimension) {
    std::string out;
    out += "kind=" + rep.kind + "\n";
    out += std::string("pass=") + (rep.pass ? "true" : "false") + "\n";
    out += "worst_margin=" + format_float(rep.worst_margin) + "\n";
    out += "witness_t=" + format_float(rep.witness_t) + "\n";
    for (int a = 0; a < dimension; ++a)
        out += "witness_x" + std::to_string(a + 1) + "=" +
               (a < static_cast<int>(rep.witness_x.size())
                    ? format_float(rep.witness_x[static_cast<std::size_t>(a)])
                    : "") +
               "\n";
    out += "tol=" + format_float(rep.tol) + "\n";
    out += "c0=" + format_float(rep.c0) + "\n";
    out += "epsilon=" + format_float(rep.epsilon) + "\n";
    out += "inner_fraction=" + format_float(rep.inner_fraction) + "\n";
    out += "grid_n=" + std::to_string(rep.grid_n) + "\n";
    out += "grid_R=" + format_float(rep.grid_R) + "\n";
    out += "seed=" + std::to_string(rep.seed) + "\n";
    for (const auto& n : rep.notes) out += "note=" + n + "\n";
    return out;
}

std::string conditions_csv(const std::vector<ConditionReport>& reports, int dimension) {
    std::string out = "condition,pass,extremal,t" + x_header(dimension) +
                      ",samples,tol,eta_mode,seed\n";
    for (const auto& rep : reports) {
        out += rep.condition;
        out += rep.pass ? ",true," : ",false,";
        out += format_float(rep.extremal) + ",";
        out += witness_fields(rep.witness_t, rep.witness_x, dimension);
        out += "," + std::to_string(rep.samples);
        out += "," + format_float(rep.tol);
        out += ",";
        if (rep.eta_mode) out += std::string(to_string(*rep.eta_mode));
        out += "," + std::to_string(rep.seed) + "\n";
    }
    return out;
}

std::string margins_csv(const std::vector<VerificationReport>& reports, int dimension) {
    std::string out = "kind,time,margin" + x_header(dimension) + "\n";
    for (const auto& rep : reports)
        for (const auto& s : rep.series) {
            out += rep.kind + "," + format_float(s.time) + "," + format_float(s.margin);
            for (int a = 0; a < dimension; ++a) {
                out += ',';
                out += a < static_cast<int>(s.witness_x.size())
                           ? format_float(s.witness_x[static_cast<std::size_t>(a)])
                           : "";
            }
            out += "\n";
        }
    return out;
}

std::string patterns_csv(const std::vector<NecessityPattern>& patterns) {
    std::string out = "family,i,j,k,inferred,tensor_violation,cross_check\n";
    for (const auto& p : patterns) {
        out += p.family + "," + std::to_string(p.i) + "," + std::to_string(p.j) + "," +
               std::to_string(p.k) + "," + format_float(p.inferred) + "," +
               format_float(p.tensor_violation) + "," + format_float(p.cross_check) + "\n";
    }
    return out;
}

std::string snapshot_csv(const ScalarField& field) {
    const Grid& g = *field.grid;
    const int d = g.dimension();
    std::string out = x_header(d).substr(1) + ",u\n";
    std::vector<double> x;
    for (std::int64_t p = 0; p < g.total_nodes(); ++p) {
        g.node_coords(p, x);
        for (int a = 0; a < d; ++a) {
            if (a) out += ',';
            out += format_float(x[static_cast<std::size_t>(a)]);
        }
        out += ',';
        out += format_float(field.values[static_cast<std::size_t>(p)]);
        out += '\n';
    }
    return out;
}

std::string convergence_csv(const ConvergenceTable& table) {
    std::string out = "radius_from,radius_to,time,difference\n";
    for (std::size_t k = 0; k < table.differences.size(); ++k)
        for (std::size_t m = 0; m < table.times.size(); ++m) {
            out += format_float(table.radii[k]) + "," + format_float(table.radii[k + 1]) + "," +
                   format_float(table.times[m]) + "," + format_float(table.differences[k][m]) +
                   "\n";
        }
    return out;
}

std::string manifest_text(const RunManifest& manifest) {
    std::string out;
    out += "command=" + manifest.command_line + "\n";
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(manifest.spec_hash));
    out += std::string("spec_hash=") + hex + "\n";
    out += "seed=" + std::to_string(manifest.seed) + "\n";
    out += "version=evograd 0.1.0\n";
    for (const auto& [k, v] : manifest.entries) out += k + "=" + v + "\n";
    for (const auto& f : manifest.output_files) out += "output=" + f + "\n";
    out += "wall_seconds=" + format_float(manifest.wall_seconds) + "\n";
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace evograd
