#include "kgs/cli_runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "kgs/estimate_harness.hpp"
#include "kgs/kgs_solver.hpp"
#include "kgs/resonance_analysis.hpp"

namespace kgs {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---- experiments ------------------------------------------------------------------------

namespace {

struct ExperimentInfo {
    Experiment e;
    const char* name;
    const char* summary;
    bool randomized;
};

const ExperimentInfo kExperiments[] = {
    {Experiment::ResonanceVerify, "resonance-verify", "minimum of |Phi+-| and |Psi| over dyadic regions", false},
    {Experiment::StrichartzSweep, "strichartz-sweep", "weighted L^p L^q norms of random free waves across k", true},
    {Experiment::BilinearSweep, "bilinear-sweep", "normalized bilinear L^{8/5} L^{3/2} ratios and their log2-slope", true},
    {Experiment::TrilinearSweep, "trilinear-sweep", "normalized trilinear pairings on dyadic triples", true},
    {Experiment::Transversality, "transversality", "V_max, H_j, d0 and the curvature/transversality margins", false},
    {Experiment::SummationCheck, "summation-check", "dyadic summation constant on random l2 triples", true},
    {Experiment::Solve, "solve", "time-step the system from Gaussian data", false},
    {Experiment::Picard, "picard", "Picard iteration of the Duhamel form", false},
    {Experiment::ScatterDiag, "scatter-diag", "Cauchy increments of the pulled-back solution and delta scaling", false},
    {Experiment::VnormSelftest, "vnorm-selftest", "p-variation DP against enumeration, atom V^2 bounds", true},
};

const ExperimentInfo& info(Experiment e) {
    for (const auto& i : kExperiments)
        if (i.e == e) return i;
    throw std::logic_error("unknown experiment");
}

}  // namespace

const char* experiment_name(Experiment e) { return info(e).name; }
const char* experiment_summary(Experiment e) { return info(e).summary; }

Experiment parse_experiment(const std::string& s) {
    for (const auto& i : kExperiments)
        if (s == i.name) return i.e;
    std::string names;
    for (const auto& i : kExperiments) names += std::string(names.empty() ? "" : ", ") + i.name;
    throw config_error("unknown experiment '" + s + "' (expected one of: " + names + ")");
}

std::vector<Experiment> all_experiments() {
    std::vector<Experiment> v;
    for (const auto& i : kExperiments) v.push_back(i.e);
    return v;
}

bool ExperimentConfig::randomized() const { return experiment && info(*experiment).randomized; }

// ---- value parsing ------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "inf" || s == "+inf") return INFINITY;
    const auto slash = s.find('/');
    if (slash != std::string::npos) return to_double(s.substr(0, slash)) / to_double(s.substr(slash + 1));
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(v)) throw config_error("'" + s + "' is not a number");
    return v;
}

long long to_int(const std::string& raw) {
    const std::string s = trim(raw);
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0') throw config_error("'" + s + "' is not an integer");
    return v;
}

bool to_bool(const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw config_error("'" + s + "' is not a boolean");
}

// Splits "[a, (b, c), d]" at top-level commas; a bare value is a one-element list.
std::vector<std::string> list_items(const std::string& raw) {
    std::string s = trim(raw);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']') throw config_error("unterminated list '" + s + "'");
        s = s.substr(1, s.size() - 2);
    }
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (depth < 0) throw config_error("unbalanced parentheses in '" + raw + "'");
        if (c == ',' && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (depth != 0) throw config_error("unbalanced parentheses in '" + raw + "'");
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    for (const auto& x : out)
        if (x.empty()) throw config_error("empty list element in '" + raw + "'");
    return out;
}

std::vector<int> to_int_list(const std::string& raw) {
    std::vector<int> v;
    for (const auto& item : list_items(raw)) {
        const auto dots = item.find("..");
        if (dots != std::string::npos) {
            const long long a = to_int(item.substr(0, dots)), b = to_int(item.substr(dots + 2));
            if (b < a) throw config_error("empty range '" + item + "'");
            for (long long x = a; x <= b; ++x) v.push_back(static_cast<int>(x));
        } else {
            v.push_back(static_cast<int>(to_int(item)));
        }
    }
    return v;
}

std::vector<double> to_double_list(const std::string& raw) {
    std::vector<double> v;
    for (const auto& item : list_items(raw)) v.push_back(to_double(item));
    return v;
}

std::vector<std::string> tuple_items(const std::string& item, std::size_t n) {
    if (item.size() < 2 || item.front() != '(' || item.back() != ')') throw config_error("expected a tuple, got '" + item + "'");
    auto parts = list_items(item.substr(1, item.size() - 2));
    if (parts.size() != n) throw config_error("expected " + std::to_string(n) + " entries in '" + item + "'");
    return parts;
}

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "]";
}

}  // namespace

// ---- parsing --------------------------------------------------------------------------------

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, Setter> keys = {
        {"experiment", [&](const std::string& v) { c.experiment = parse_experiment(trim(v)); }},
        {"r_max", [&](const std::string& v) { c.r_max = to_double(v); }},
        {"n_points", [&](const std::string& v) { c.n_points = static_cast<std::size_t>(std::max(0LL, to_int(v))); }},
        {"T", [&](const std::string& v) { c.T = to_double(v); }},
        {"dt", [&](const std::string& v) { c.dt = to_double(v); }},
        {"window", [&](const std::string& v) { c.window = trim(v); }},
        {"t_max", [&](const std::string& v) { c.t_max = to_double(v); }},
        {"trials", [&](const std::string& v) { c.trials = static_cast<int>(to_int(v)); }},
        {"seed", [&](const std::string& v) {
             const long long s = to_int(v);
             if (s < 0) throw config_error("seed must be non-negative");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"epsilon", [&](const std::string& v) { c.epsilon = to_double(v); }},
        {"out", [&](const std::string& v) { c.out = trim(v); }},
        {"threads", [&](const std::string& v) { c.threads = static_cast<int>(to_int(v)); }},
        {"k", [&](const std::string& v) { c.k = to_int_list(v); }},
        {"k1", [&](const std::string& v) { c.k1 = to_int_list(v); }},
        {"k2", [&](const std::string& v) { c.k2 = to_int_list(v); }},
        {"triples", [&](const std::string& v) {
             for (const auto& it : list_items(v)) {
                 auto p = tuple_items(it, 3);
                 c.triples.push_back({static_cast<int>(to_int(p[0])), static_cast<int>(to_int(p[1])), static_cast<int>(to_int(p[2]))});
             }
         }},
        {"instances", [&](const std::string& v) {
             for (const auto& it : list_items(v)) {
                 auto p = tuple_items(it, 3);
                 c.instances.push_back({static_cast<int>(to_int(p[0])), static_cast<int>(to_int(p[1])), static_cast<int>(to_int(p[2]))});
             }
         }},
        {"pairs", [&](const std::string& v) {
             for (const auto& it : list_items(v)) {
                 auto p = tuple_items(it, 2);
                 c.pairs.emplace_back(to_double(p[0]), to_double(p[1]));
             }
         }},
        {"case", [&](const std::string& v) { c.which = trim(v); }},
        {"flow", [&](const std::string& v) { c.flow = trim(v); }},
        {"weight", [&](const std::string& v) { c.weight = trim(v); }},
        {"kind", [&](const std::string& v) { c.kind = trim(v); }},
        {"atom_mode", [&](const std::string& v) { c.atom_mode = to_bool(v); }},
        {"conj_u2", [&](const std::string& v) { c.conj_u2 = to_bool(v); }},
        {"conj_N", [&](const std::string& v) { c.conj_N = to_bool(v); }},
        {"gap", [&](const std::string& v) { c.gap = static_cast<int>(to_int(v)); }},
        {"resolution", [&](const std::string& v) { c.resolution = static_cast<int>(to_int(v)); }},
        {"refinements", [&](const std::string& v) { c.refinements = static_cast<int>(to_int(v)); }},
        {"stability", [&](const std::string& v) { c.stability = to_double(v); }},
        {"ratio_bound", [&](const std::string& v) { c.ratio_bound = to_double(v); }},
        {"slope_band", [&](const std::string& v) { c.slope_band = to_double(v); }},
        {"lengths", [&](const std::string& v) { c.lengths = to_int_list(v); }},
        {"delta", [&](const std::string& v) { c.delta = to_double(v); }},
        {"deltas", [&](const std::string& v) { c.deltas = to_double_list(v); }},
        {"method", [&](const std::string& v) { c.method = trim(v); }},
        {"iterations", [&](const std::string& v) { c.iterations = static_cast<int>(to_int(v)); }},
        {"save_every", [&](const std::string& v) { c.save_every = static_cast<int>(to_int(v)); }},
        {"dump_every", [&](const std::string& v) { c.dump_every = static_cast<int>(to_int(v)); }},
        {"coupling", [&](const std::string& v) { c.coupling = to_double(v); }},
        {"kg_sign", [&](const std::string& v) { c.kg_sign = static_cast<int>(to_int(v)); }},
        {"width", [&](const std::string& v) { c.width = to_double(v); }},
        {"mass_tol", [&](const std::string& v) { c.mass_tol = to_double(v); }},
        {"residual_tol", [&](const std::string& v) { c.residual_tol = to_double(v); }},
        {"regime_tol", [&](const std::string& v) { c.regime_tol = to_double(v); }},
        {"contraction", [&](const std::string& v) { c.contraction = to_double(v); }},
        {"summation_bound", [&](const std::string& v) { c.summation_bound = to_double(v); }},
        {"sequences", [&](const std::string& v) { c.sequences = static_cast<int>(to_int(v)); }},
        {"max_length", [&](const std::string& v) { c.max_length = static_cast<int>(to_int(v)); }},
    };

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto colon = line.find(':');
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (colon == std::string::npos) throw config_error(where + "expected 'key: value'");
        const std::string key = trim(line.substr(0, colon));
        const std::string value = trim(line.substr(colon + 1));
        const auto it = keys.find(key);
        if (it == keys.end()) throw config_error(where + "unknown key '" + key + "'");
        if (c.explicit_keys.count(key)) throw config_error(where + "duplicate key '" + key + "'");
        if (value.empty()) throw config_error(where + "missing value for '" + key + "'");
        try {
            it->second(value);
        } catch (const config_error& e) {
            throw config_error(where + key + ": " + e.what());
        } catch (const std::exception& e) {
            throw config_error(where + key + ": " + e.what());
        }
        c.explicit_keys[key] = value;
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

// ---- validation -----------------------------------------------------------------------------

namespace {

constexpr int kAdaptiveLow = -14, kAdaptiveHigh = 12;

bool has(const ExperimentConfig& c, const char* key) { return c.explicit_keys.count(key) > 0; }

std::vector<int> range(int a, int b) {
    std::vector<int> v;
    for (int x = a; x <= b; ++x) v.push_back(x);
    return v;
}

void default_list(std::vector<int>& v, std::vector<int> d) {
    if (v.empty()) v = std::move(d);
}

void require_single(const std::vector<int>& v, const char* key, const std::string& what) {
    if (v.size() != 1) throw config_error(what + " expects exactly one value for '" + key + "'");
}

// Frequencies used by a grid-based sweep must lie in resolvable annuli.
void check_octaves(const ExperimentConfig& c, const std::vector<int>& ks) {
    if (c.window == "adaptive") {
        for (int k : ks)
            if (k < kAdaptiveLow || k > kAdaptiveHigh)
                throw config_error("k = " + std::to_string(k) + " is outside the adaptive grid limit [" + std::to_string(kAdaptiveLow) +
                                   ", " + std::to_string(kAdaptiveHigh) + "]");
        return;
    }
    const auto g = make_grid(c.r_max, c.n_points);
    const int top = nyquist_octave(*g);
    const std::string grid = " of the grid (r_max = " + num(c.r_max) + ", n_points = " + std::to_string(c.n_points) + ")";
    for (int k : ks)
        if (k > top)
            throw config_error("k = " + std::to_string(k) + " exceeds the Nyquist octave limit " + std::to_string(top) + grid +
                               "; raise n_points or use window: adaptive");
    for (int k : ks)
        if (annulus_nodes(*g, k) < 8) {
            int low = top;
            while (low > -60 && annulus_nodes(*g, low - 1) >= 8) --low;
            throw config_error("k = " + std::to_string(k) + " is below the lowest resolvable octave " + std::to_string(low) + grid +
                               " (fewer than 8 dual nodes in the annulus); raise r_max or use window: adaptive");
        }
}

}  // namespace

void validate(ExperimentConfig& c) {
    if (!c.experiment) throw config_error("experiment required");
    const std::string name = experiment_name(*c.experiment);
    if (!(c.r_max > 0.0)) throw config_error("r_max must be positive");
    if (c.n_points < 16) throw config_error("n_points must be >= 16");
    if (!(c.T > 0.0)) throw config_error("T must be positive");
    if (!(c.dt > 0.0)) throw config_error("dt must be positive");
    if (c.window != "fixed" && c.window != "adaptive") throw config_error("window must be 'fixed' or 'adaptive'");
    if (c.trials < 1) throw config_error("trials must be >= 1");
    if (c.threads < 1) throw config_error("threads must be >= 1");
    if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw config_error("epsilon must lie in (0, 1)");
    if (c.randomized() && !c.seed) throw config_error("seed required for experiment " + name);

    switch (*c.experiment) {
        case Experiment::ResonanceVerify: {
            if (c.which.empty()) c.which = "sch-i";
            const LemmaCase lc = parse_lemma_case(c.which);
            switch (lc) {
                case LemmaCase::Sch_i: default_list(c.k, range(-8, -3)); default_list(c.k1, range(-8, -3)); break;
                case LemmaCase::Sch_ii: default_list(c.k, range(8, 12)); break;
                case LemmaCase::Sch_iii: default_list(c.k, range(4, 10)); break;
                case LemmaCase::KG_i: default_list(c.k1, range(-8, -3)); default_list(c.k2, range(-8, -3)); break;
                default: default_list(c.k1, range(11, 15)); break;
            }
            if (c.resolution < 10) throw config_error("resolution must be >= 10");
            break;
        }
        case Experiment::StrichartzSweep: {
            const Flow f = parse_flow(c.flow);
            if (c.weight.empty()) c.weight = f == Flow::Schrodinger ? "sigma-s" : "sigma-w";
            if (c.weight != "sigma-s" && c.weight != "sigma-w") throw config_error("weight must be sigma-s or sigma-w");
            if (f == Flow::Schrodinger)
                default_list(c.k, range(-4, 6));
            else
                default_list(c.k, c.weight == "sigma-w" ? range(0, 6) : range(-6, 0));
            for (auto [p, q] : c.pairs)
                if (!(p >= 2.0 && q >= 2.0)) throw config_error("pairs need p, q >= 2");
            check_octaves(c, c.k);
            break;
        }
        case Experiment::BilinearSweep: {
            if (c.which.empty()) c.which = "i";
            const BilinearCase bc = parse_bilinear_case(c.which);
            if (bc == BilinearCase::III) {
                default_list(c.k1, {0});
                default_list(c.k2, range(-10, -8));
                require_single(c.k1, "k1", "bilinear-sweep case iii");
                if (c.k2.size() < 3) throw config_error("bilinear-sweep needs >= 3 values of k2");
                std::vector<int> ks = c.k2;
                ks.push_back(c.k1[0]);
                check_octaves(c, ks);
            } else {
                default_list(c.k, {bc == BilinearCase::I ? 0 : -10});
                default_list(c.k1, bc == BilinearCase::I ? range(-10, -8) : range(-2, 0));
                require_single(c.k, "k", "bilinear-sweep case " + c.which);
                if (c.k1.size() < 3) throw config_error("bilinear-sweep needs >= 3 values of k1");
                std::vector<int> ks = c.k1;
                ks.push_back(c.k[0]);
                check_octaves(c, ks);
            }
            break;
        }
        case Experiment::TrilinearSweep: {
            if (c.kind != "schrodinger" && c.kind != "kg") throw config_error("kind must be schrodinger or kg");
            if (c.triples.empty())
                for (int k = 2; k <= 6; ++k) c.triples.push_back({k, k, k});
            if (!has(c, "ratio_bound")) c.ratio_bound = 8.0;
            std::vector<int> ks;
            for (const auto* list : {&c.triples, &c.instances})
                for (const auto& t : *list) ks.insert(ks.end(), {t.k, t.k1, t.k2});
            check_octaves(c, ks);
            break;
        }
        case Experiment::Transversality: {
            if (c.which.empty()) c.which = "i";
            switch (parse_bilinear_case(c.which)) {
                case BilinearCase::I:
                    default_list(c.k, {0});
                    default_list(c.k1, range(-12, -9));
                    require_single(c.k, "k", "transversality case i");
                    break;
                case BilinearCase::II:
                    default_list(c.k1, {4});
                    default_list(c.k, range(-12, -9));
                    require_single(c.k1, "k1", "transversality case ii");
                    break;
                case BilinearCase::III:
                    default_list(c.k1, {0});
                    default_list(c.k2, range(-12, -9));
                    require_single(c.k1, "k1", "transversality case iii");
                    break;
            }
            break;
        }
        case Experiment::SummationCheck:
            if (!has(c, "delta")) c.delta = 0.1;
            if (!has(c, "trials")) c.trials = 200;
            if (!has(c, "ratio_bound")) c.ratio_bound = 0.25;  // tolerance on the control growth exponent
            if (c.lengths.empty()) c.lengths = {6, 10, 16, 24, 40};
            for (int L : c.lengths)
                if (L < 1) throw config_error("lengths must be positive");
            if (c.delta < 0.0) throw config_error("delta must be >= 0");
            break;
        case Experiment::Solve:
        case Experiment::Picard:
        case Experiment::ScatterDiag: {
            parse_method(c.method);
            if (!(c.delta > 0.0)) throw config_error("delta must be positive");
            if (c.kg_sign != 1 && c.kg_sign != -1) throw config_error("kg_sign must be +1 or -1");
            if (c.save_every < 1 || c.dump_every < 1) throw config_error("save_every and dump_every must be >= 1");
            const double steps = c.T / c.dt;
            if (std::abs(steps - std::round(steps)) > 1e-9 * steps) throw config_error("T must be a multiple of dt");
            if (*c.experiment == Experiment::Picard) {
                if (!has(c, "T")) c.T = 4.0;
                if (!has(c, "save_every")) c.save_every = std::max(1, static_cast<int>(std::lround(0.125 / c.dt)));
                if (c.iterations < 2) throw config_error("iterations must be >= 2");
            }
            if (*c.experiment == Experiment::ScatterDiag) {
                if (c.deltas.empty()) c.deltas = {0.02, 0.01, 0.005};
                const double per = 1.0 / c.dt;
                if (std::abs(per - std::round(per)) > 1e-9) throw config_error("scatter-diag needs 1/dt to be an integer");
                if (c.T < 8.0) throw config_error("scatter-diag needs T >= 8 for three dyadic pairs");
            }
            break;
        }
        case Experiment::VnormSelftest:
            if (c.sequences < 1) throw config_error("sequences must be >= 1");
            if (c.max_length < 1 || c.max_length > 24) throw config_error("max_length must lie in [1, 24]");
            break;
    }
}

std::string ExperimentConfig::canonical() const {
    std::map<std::string, std::string> m;
    m["experiment"] = experiment ? experiment_name(*experiment) : "";
    m["r_max"] = num(r_max);
    m["n_points"] = std::to_string(n_points);
    m["T"] = num(T);
    m["dt"] = num(dt);
    m["window"] = window;
    m["t_max"] = num(t_max);
    m["trials"] = std::to_string(trials);
    m["seed"] = seed ? std::to_string(*seed) : "";
    m["epsilon"] = num(epsilon);
    m["k"] = join_ints(k);
    m["k1"] = join_ints(k1);
    m["k2"] = join_ints(k2);
    auto trip = [](const std::vector<Triple>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + ("(" + std::to_string(v[i].k) + "," + std::to_string(v[i].k1) + "," + std::to_string(v[i].k2) + ")");
        return s + "]";
    };
    m["triples"] = trip(triples);
    m["instances"] = trip(instances);
    std::string ps = "[";
    for (std::size_t i = 0; i < pairs.size(); ++i) ps += (i ? "," : "") + ("(" + num(pairs[i].first) + "," + num(pairs[i].second) + ")");
    m["pairs"] = ps + "]";
    m["case"] = which;
    m["flow"] = flow;
    m["weight"] = weight;
    m["kind"] = kind;
    m["atom_mode"] = atom_mode ? "true" : "false";
    m["conj_u2"] = conj_u2 ? "true" : "false";
    m["conj_N"] = conj_N ? "true" : "false";
    m["gap"] = std::to_string(gap);
    m["resolution"] = std::to_string(resolution);
    m["refinements"] = std::to_string(refinements);
    m["stability"] = num(stability);
    m["ratio_bound"] = num(ratio_bound);
    m["slope_band"] = num(slope_band);
    m["lengths"] = join_ints(lengths);
    m["delta"] = num(delta);
    std::string ds = "[";
    for (std::size_t i = 0; i < deltas.size(); ++i) ds += (i ? "," : "") + num(deltas[i]);
    m["deltas"] = ds + "]";
    m["method"] = method;
    m["iterations"] = std::to_string(iterations);
    m["save_every"] = std::to_string(save_every);
    m["dump_every"] = std::to_string(dump_every);
    m["coupling"] = num(coupling);
    m["kg_sign"] = std::to_string(kg_sign);
    m["width"] = num(width);
    m["mass_tol"] = num(mass_tol);
    m["residual_tol"] = num(residual_tol);
    m["regime_tol"] = num(regime_tol);
    m["contraction"] = num(contraction);
    m["summation_bound"] = num(summation_bound);
    m["sequences"] = std::to_string(sequences);
    m["max_length"] = std::to_string(max_length);
    std::string s;
    for (const auto& [key, v] : m) s += key + " = " + v + "\n";
    return s;
}

std::uint64_t ExperimentConfig::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : canonical()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---- thread pool ----------------------------------------------------------------------------

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    // lowest failing cell wins so the reported error does not depend on scheduling
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---- artifacts ------------------------------------------------------------------------------

namespace {

struct Table {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write(const fs::path& dir) const {
        std::ofstream f(dir / file, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / file).string());
        auto line = [&](const std::vector<std::string>& v) {
            for (std::size_t i = 0; i < v.size(); ++i) f << (i ? "," : "") << v[i];
            f << "\n";
        };
        line(header);
        for (const auto& r : rows) line(r);
    }
};

struct Report {
    std::vector<Table> tables;
    json summary = json::object();
    std::size_t rows = 0, failed = 0;
    std::vector<std::string> extra_files;

    void count(const std::string& status) {
        ++rows;
        if (status == "fail" || status == "abort") ++failed;
    }
};

const char* verdict(bool ok) { return ok ? "pass" : "fail"; }

double max_over_min(const std::vector<double>& v) {
    if (v.empty()) return 1.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0.0 ? *hi / *lo : INFINITY;
}

WindowConfig window_of(const ExperimentConfig& c) {
    WindowConfig w;
    w.mode = c.window == "adaptive" ? GridMode::Adaptive : GridMode::Fixed;
    w.T = c.T;
    w.r_max = c.r_max;
    w.n = c.n_points;
    if (c.t_max > 0.0) w.t_max = c.t_max;
    return w;
}

std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

// ---- resonance ----

void run_resonance(const ExperimentConfig& c, Report& rep) {
    LemmaSweep sw;
    sw.which = parse_lemma_case(c.which);
    switch (sw.which) {
        case LemmaCase::Sch_i: sw.first = c.k; sw.second = c.k1; break;
        case LemmaCase::Sch_ii:
        case LemmaCase::Sch_iii: sw.first = c.k; break;
        case LemmaCase::KG_i: sw.first = c.k1; sw.second = c.k2; break;
        default: sw.first = c.k1; break;
    }
    sw.gap = c.gap;
    sw.resolution = c.resolution;
    sw.refinements = c.refinements;
    sw.stability = c.stability;
    const auto rows = verify_lemma(sw);
    Table t{"resonance.csv",
            {"anchor", "case", "sign", "k", "k1", "k2", "min_abs", "bound", "margin", "argmin_a", "argmin_b", "argmin_c", "c0", "pass"},
            {}};
    double worst_margin = INFINITY;
    for (const auto& r : rows) {
        const std::string sign = r.sign > 0 ? "+" : (r.sign < 0 ? "-" : "");
        t.rows.push_back({"resonance-" + r.tag, lemma_case_name(sw.which), sign, opt_int(r.k), opt_int(r.k1), opt_int(r.k2),
                          num(r.min_abs), num(r.bound), num(r.margin), num(r.arg.a), num(r.arg.b), num(r.arg.c), num(r.c0), r.status});
        rep.count(r.status);
        if (r.feasible && r.status != "info") worst_margin = std::min(worst_margin, r.margin);
    }
    rep.tables.push_back(std::move(t));
    rep.summary["min_margin"] = worst_margin;
}

// ---- strichartz ----

void run_strichartz(const ExperimentConfig& c, Report& rep, int threads) {
    const Flow flow = parse_flow(c.flow);
    const Weight w = c.weight == "sigma-w" ? Weight::SigmaW : Weight::SigmaS;
    const Family fam = w == Weight::SigmaW ? Family::Wave : Family::Schrodinger;
    std::vector<StrichartzProbe> probes;
    if (c.pairs.empty()) {
        for (const auto& row : reference_table())
            if (row.pair.family == fam) probes.push_back({row.pair, w});
    } else {
        // reference rows are swept as printed; user pairs must be admissible
        for (auto [p, q] : c.pairs) {
            probes.push_back({LebesguePair{p, q, fam}, w});
            const auto a = admissible(probes.back().pair);
            if (!a.ok && !a.excluded_endpoint)
                throw config_error("pair " + probes.back().pair.label() + " is not admissible: " + a.reason);
        }
    }
    const WindowConfig wc = window_of(c);
    std::vector<std::vector<StrichartzRow>> cells(c.k.size());
    std::vector<std::string> aborted(c.k.size());
    parallel_for(c.k.size(), threads, [&](std::size_t i) {
        try {
            cells[i] = strichartz_ratio(flow, c.k[i], probes, c.trials, *c.seed, wc);
        } catch (const reflectivity_error& e) {
            aborted[i] = e.what();
        }
    });
    Table t{"strichartz.csv",
            {"anchor", "flow", "weight", "pair", "p", "q", "sigma", "k", "ratio", "trials", "seed", "t_half", "r_max", "n", "boundary",
             "sweep_max_over_min", "pass"},
            {}};
    json per_pair = json::array();
    double worst = 0.0;
    for (std::size_t j = 0; j < probes.size(); ++j) {
        std::vector<double> ratios;
        bool any_abort = false;
        for (std::size_t i = 0; i < c.k.size(); ++i) {
            if (aborted[i].empty())
                ratios.push_back(cells[i][j].ratio);
            else
                any_abort = true;
        }
        const double mm = max_over_min(ratios);
        const bool asserted = !admissible(probes[j].pair).excluded_endpoint;
        const std::string status = !asserted ? "not-asserted" : (any_abort ? "fail" : verdict(mm <= c.ratio_bound));
        if (asserted) worst = std::max(worst, mm);
        const std::string anchor = std::string("strichartz-") + family_name(fam) + "-" + weight_name(w);
        for (std::size_t i = 0; i < c.k.size(); ++i) {
            if (!aborted[i].empty()) {
                t.rows.push_back({anchor, flow_name(flow), weight_name(w), "\"" + probes[j].pair.label() + "\"", num(probes[j].pair.p),
                                  num(probes[j].pair.q), num(sigma(probes[j].pair)), std::to_string(c.k[i]), "", std::to_string(c.trials),
                                  std::to_string(*c.seed), "", "", "", "", num(mm), asserted ? "abort" : "not-asserted"});
                rep.count(asserted ? "abort" : "not-asserted");
                continue;
            }
            const auto& r = cells[i][j];
            t.rows.push_back({anchor, flow_name(flow), weight_name(w), "\"" + r.probe.pair.label() + "\"", num(r.probe.pair.p),
                              num(r.probe.pair.q), num(r.sigma), std::to_string(r.k), num(r.ratio), std::to_string(r.trials),
                              std::to_string(r.seed), num(r.t_half), num(r.r_max), std::to_string(r.n), num(r.boundary), num(mm), status});
            rep.count(status);
        }
        per_pair.push_back({{"pair", probes[j].pair.label()}, {"max_over_min", mm}, {"asserted", asserted}, {"pass", status != "fail"}});
    }
    rep.tables.push_back(std::move(t));
    rep.summary["pairs"] = per_pair;
    rep.summary["max_over_min"] = worst;
}

// ---- bilinear ----

void run_bilinear(const ExperimentConfig& c, Report& rep, int threads) {
    const BilinearCase bc = parse_bilinear_case(c.which);
    const bool iii = bc == BilinearCase::III;
    const int fixed = iii ? c.k1[0] : c.k[0];
    const std::vector<int>& sweep = iii ? c.k2 : c.k1;
    const WindowConfig wc = window_of(c);
    std::vector<BilinearRow> rows(sweep.size());
    parallel_for(sweep.size(), threads, [&](std::size_t i) { rows[i] = bilinear_ratio(bc, fixed, sweep[i], c.trials, *c.seed, wc); });
    std::vector<double> x, norm, ctrl;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        x.push_back(sweep[i]);
        norm.push_back(rows[i].normalized);
        ctrl.push_back(rows[i].control);
    }
    const double slope = log2_slope(x, norm), cslope = log2_slope(x, ctrl);
    const bool ok = std::abs(slope) <= c.slope_band;
    Table t{"bilinear.csv",
            {"anchor", "case", "k", "k1", "k2", "raw", "coefficient", "normalized", "control_coefficient", "control", "trials", "seed",
             "t_half", "r_max", "n", "boundary", "slope", "control_slope", "pass"},
            {}};
    for (const auto& r : rows) {
        t.rows.push_back({std::string("bilinear-") + bilinear_case_name(bc), bilinear_case_name(bc), r.has_k ? std::to_string(r.k) : "",
                          std::to_string(r.k1), r.has_k2 ? std::to_string(r.k2) : "", num(r.raw), num(r.coefficient), num(r.normalized),
                          num(r.control_coefficient), num(r.control), std::to_string(r.trials), std::to_string(r.seed), num(r.t_half),
                          num(r.r_max), std::to_string(r.n), num(r.boundary), num(slope), num(cslope), verdict(ok)});
        rep.count(verdict(ok));
    }
    rep.tables.push_back(std::move(t));
    rep.summary["max_normalized_ratio"] = *std::max_element(norm.begin(), norm.end());
    rep.summary["slope"] = slope;
    rep.summary["control_slope"] = cslope;
    rep.summary["control_outside_band"] = std::abs(cslope) > c.slope_band;
}

// ---- trilinear ----

void run_trilinear(const ExperimentConfig& c, Report& rep, int threads) {
    const TrilinearKind kind = c.kind == "kg" ? TrilinearKind::KleinGordon : TrilinearKind::Schrodinger;
    TrilinearOptions opt;
    opt.eps = c.epsilon;
    opt.conj_u2 = c.conj_u2;
    opt.conj_N = c.conj_N;
    opt.atom_mode = c.atom_mode;
    std::vector<Triple> all = c.triples;
    all.insert(all.end(), c.instances.begin(), c.instances.end());
    const WindowConfig wc = window_of(c);
    std::vector<TrilinearRow> rows(all.size());
    parallel_for(all.size(), threads, [&](std::size_t i) {
        rows[i] = trilinear(kind, all[i].k, all[i].k1, all[i].k2, c.trials, *c.seed, wc, opt);
    });
    std::vector<double> sweep_vals;
    for (std::size_t i = 0; i < c.triples.size(); ++i)
        if (rows[i].compatible) sweep_vals.push_back(rows[i].normalized);
    const double mm = max_over_min(sweep_vals);
    const double smax = sweep_vals.empty() ? 0.0 : *std::max_element(sweep_vals.begin(), sweep_vals.end());
    const bool sweep_ok = mm <= c.ratio_bound;
    Table t{"trilinear.csv",
            {"anchor", "kind", "role", "k", "k1", "k2", "compatible", "raw", "coefficient", "normalized", "v2_normalized", "relative", "trials",
             "seed", "t_half", "dt", "r_max", "n", "pass"},
            {}};
    const std::string prefix = kind == TrilinearKind::KleinGordon ? "trilinear-kg" : "trilinear-schrodinger";
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const bool instance = i >= c.triples.size();
        bool ok;
        std::string anchor;
        if (!r.compatible) {
            ok = r.relative <= 1e-8;
            anchor = prefix + "-support-incompatible";
            worst_rel = std::max(worst_rel, r.relative);
        } else if (instance) {
            ok = r.normalized <= c.ratio_bound * smax;
            anchor = prefix + "-instance";
        } else {
            ok = sweep_ok;
            anchor = prefix + (r.k == r.k1 && r.k1 == r.k2 ? "-diagonal" : "-sweep");
        }
        t.rows.push_back({anchor, kind == TrilinearKind::KleinGordon ? "kg" : "schrodinger", instance ? "instance" : "sweep",
                          std::to_string(r.k), std::to_string(r.k1), std::to_string(r.k2), r.compatible ? "true" : "false", num(r.raw),
                          num(r.coefficient), num(r.normalized), num(r.v2_normalized), num(r.relative), std::to_string(r.trials),
                          std::to_string(r.seed), num(r.t_half), num(r.dt), num(r.r_max), std::to_string(r.n), verdict(ok)});
        rep.count(verdict(ok));
    }
    rep.tables.push_back(std::move(t));
    rep.summary["sweep_max_over_min"] = mm;
    rep.summary["max_normalized_ratio"] = smax;
    rep.summary["max_incompatible_relative"] = worst_rel;
}

// ---- transversality ----

void run_transversality(const ExperimentConfig& c, Report& rep, int threads) {
    const BilinearCase bc = parse_bilinear_case(c.which);
    int high;
    const std::vector<int>* low;
    switch (bc) {
        case BilinearCase::I: high = c.k[0]; low = &c.k1; break;
        case BilinearCase::II: high = c.k1[0]; low = &c.k; break;
        default: high = c.k1[0]; low = &c.k2; break;
    }
    std::vector<TransversalityData> rows(low->size());
    parallel_for(low->size(), threads, [&](std::size_t i) { rows[i] = transversality(bc, high, (*low)[i]); });
    std::vector<double> vr, h1, h2;
    for (const auto& r : rows) {
        vr.push_back(r.V_max / r.V_scale);
        h1.push_back(r.H1);
        h2.push_back(r.H2);
    }
    const double spread = std::max({max_over_min(vr), max_over_min(h1), max_over_min(h2)});
    const bool scaling_ok = spread <= 4.0;
    Table t{"transversality.csv",
            {"anchor", "case", "k", "k1", "k2", "V_max", "V_scale", "V_ratio", "H1", "H2", "d0", "a1_ratio", "a2_curv", "a2_ratio", "a1_pass",
             "a2_pass", "h_order", "scaling_spread", "pass"},
            {}};
    for (const auto& r : rows) {
        const bool ok = scaling_ok && r.a1_pass && r.a2_pass;
        t.rows.push_back({std::string("transversality-") + bilinear_case_name(bc), bilinear_case_name(bc), std::to_string(r.k),
                          std::to_string(r.k1), std::to_string(r.k2), num(r.V_max), num(r.V_scale), num(r.V_max / r.V_scale), num(r.H1),
                          num(r.H2), num(r.d0), num(r.a1_ratio), num(r.a2_curv), num(r.a2_ratio), r.a1_pass ? "true" : "false",
                          r.a2_pass ? "true" : "false", r.h_order ? "true" : "false", num(spread), verdict(ok)});
        rep.count(verdict(ok));
    }
    rep.tables.push_back(std::move(t));
    rep.summary["scaling_spread"] = spread;
}

// ---- summation ----

void run_summation(const ExperimentConfig& c, Report& rep, int threads) {
    const std::size_t n = c.lengths.size();
    std::vector<SummationResult> res(n), ctrl(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const int L = c.lengths[i];
        res[i] = summation_check(c.delta, L, c.trials, derive_seed(*c.seed, {L}), c.gap);
        ctrl[i] = summation_check(0.0, L, 1, derive_seed(*c.seed, {L, 0}), c.gap);
    });
    // growth exponent of the delta = 0 control over lengths past the gap, where it should be linear
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < n; ++i)
        if (c.lengths[i] >= 8) {
            lx.push_back(std::log2(static_cast<double>(c.lengths[i])));
            ly.push_back(ctrl[i].constant_seq);
        }
    const double growth = lx.size() >= 2 ? log2_slope(lx, ly) : NAN;
    const bool growth_ok = std::abs(growth - 1.0) <= c.ratio_bound;
    Table t{"summation.csv", {"anchor", "role", "delta", "length", "trials", "triples", "value", "bound", "pass"}, {}};
    double C = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool ok = res[i].C <= c.summation_bound;
        C = std::max(C, res[i].C);
        t.rows.push_back({"summation", "random", num(c.delta), std::to_string(c.lengths[i]), std::to_string(c.trials),
                          std::to_string(res[i].triples), num(res[i].C), num(c.summation_bound), verdict(ok)});
        rep.count(verdict(ok));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::string st = c.lengths[i] >= 8 ? verdict(growth_ok) : "info";
        t.rows.push_back({"summation-no-gain-control", "constant", "0", std::to_string(c.lengths[i]), "1", std::to_string(ctrl[i].triples),
                          num(ctrl[i].constant_seq), "", st});
        rep.count(st);
    }
    rep.tables.push_back(std::move(t));
    rep.summary["C"] = C;
    rep.summary["control_growth_exponent"] = growth;
}

// ---- solver ----

SolverOptions solver_options(const ExperimentConfig& c) {
    SolverOptions o;
    o.coupling = c.coupling;
    o.kg_sign = c.kg_sign;
    o.save_every = c.save_every;
    return o;
}

void dump_trajectory(const Trajectory& tr, const ExperimentConfig& c, const fs::path& dir, Report& rep) {
    const RadialGrid& g = *tr.grid;
    std::ofstream bin(dir / "trajectory.bin", std::ios::binary);
    json times = json::array();
    for (std::size_t l = 0; l < tr.states.size(); l += static_cast<std::size_t>(c.dump_every)) {
        const auto& s = tr.states[l];
        bin.write(reinterpret_cast<const char*>(&s.t), sizeof(double));
        bin.write(reinterpret_cast<const char*>(s.u.values.data()), static_cast<std::streamsize>(g.n * sizeof(cplx)));
        bin.write(reinterpret_cast<const char*>(s.N.values.data()), static_cast<std::streamsize>(g.n * sizeof(cplx)));
        times.push_back(s.t);
    }
    json meta = {{"schema_version", 1},
                 {"layout", "per snapshot: t (float64), u[n] then N[n] as interleaved (re, im) float64, native byte order"},
                 {"r_max", g.r_max},
                 {"n", g.n},
                 {"r_nodes", "r_i = i * r_max / (n + 1), i = 1..n"},
                 {"method", method_name(tr.method)},
                 {"dt", tr.dt},
                 {"snapshot_dt", tr.snapshot_dt() * c.dump_every},
                 {"snapshots", times.size()},
                 {"times", times}};
    std::ofstream(dir / "trajectory.json") << meta.dump(2) << "\n";
    rep.extra_files.push_back("trajectory.bin");
    rep.extra_files.push_back("trajectory.json");
}

void run_solve(const ExperimentConfig& c, Report& rep, const fs::path& dir) {
    const auto grid = make_grid(c.r_max, c.n_points);
    const auto d = gaussian_data(grid, c.delta, c.width);
    const auto opt = solver_options(c);
    const Method m = parse_method(c.method);
    const auto tr = solve(d.u, d.N, c.T, c.dt, m, opt);
    const double res = tr.states.size() >= 3 ? residual(tr, opt) : NAN;
    const auto sc = scattering_diagnostic(tr, c.epsilon);
    const double rel = sc.correction / lq_norm(d.u, 2.0);

    Table diag{"diagnostics.csv", {"anchor", "t", "mass", "N_l2", "boundary"}, {}};
    for (std::size_t l = 0; l < tr.states.size(); ++l) {
        const auto& s = tr.states[l];
        const std::size_t step = l * static_cast<std::size_t>(tr.save_every);
        diag.rows.push_back({"solve-snapshot", num(s.t), num(tr.mass[std::min(step, tr.mass.size() - 1)]), num(lq_norm(s.N, 2.0)),
                             num(std::max(boundary_fraction(*grid, s.u.values), boundary_fraction(*grid, s.N.values)))});
    }
    const bool ok_status = tr.ok();
    const bool ok_mass = tr.mass_drift <= c.mass_tol;
    const bool ok_res = std::isfinite(res) && res <= c.residual_tol;
    const bool ok_regime = rel <= c.regime_tol;
    Table t{"solve.csv",
            {"anchor", "method", "delta", "T", "dt", "t_end", "status", "mass_drift", "residual", "relative_correction", "max_boundary", "pass"},
            {}};
    const std::string st = verdict(ok_status && ok_mass && ok_res && ok_regime);
    t.rows.push_back({"solve", method_name(m), num(c.delta), num(c.T), num(c.dt), num(tr.final_state.t), tr.status, num(tr.mass_drift),
                      num(res), num(rel), num(tr.max_boundary), st});
    rep.count(st);
    rep.tables.push_back(std::move(t));
    rep.tables.push_back(std::move(diag));
    rep.summary["status"] = tr.status;
    rep.summary["mass_drift"] = tr.mass_drift;
    rep.summary["residual"] = res;
    rep.summary["relative_correction"] = rel;
    rep.summary["flags"] = {{"aborted", !ok_status}, {"mass", !ok_mass}, {"residual", !ok_res}, {"large_data", !ok_regime}};
    dump_trajectory(tr, c, dir, rep);
}

void run_picard(const ExperimentConfig& c, Report& rep) {
    const auto grid = make_grid(c.r_max, c.n_points);
    const auto d = gaussian_data(grid, c.delta, c.width);
    const auto opt = solver_options(c);
    const auto pr = picard_iterate(d.u, d.N, c.T, c.dt, c.iterations, opt);
    SolverOptions so = opt;
    so.save_every = 1 << 30;
    const auto tr = solve(d.u, d.N, c.T, c.dt, parse_method(c.method), so);
    const auto& a = pr.iterates.back().final_state;
    CVec du(grid->n), dn(grid->n);
    for (std::size_t i = 0; i < grid->n; ++i) {
        du[i] = a.u.values[i] - tr.final_state.u.values[i];
        dn[i] = a.N.values[i] - tr.final_state.N.values[i];
    }
    const double gap = lq_norm_raw(*grid, du, 2.0) + lq_norm_raw(*grid, dn, 2.0);
    Table t{"picard.csv", {"anchor", "iteration", "difference", "ratio", "bound", "pass"}, {}};
    double worst = 0.0;
    for (std::size_t i = 0; i < pr.differences.size(); ++i) {
        std::string ratio, st = "info";
        if (i >= 1) {
            const double r = pr.ratios[i - 1];
            ratio = num(r);
            worst = std::max(worst, r);
            st = verdict(r <= c.contraction);
        }
        t.rows.push_back({"picard-contraction", std::to_string(i + 1), num(pr.differences[i]), ratio, num(c.contraction), st});
        rep.count(st);
    }
    rep.tables.push_back(std::move(t));
    rep.summary["max_ratio"] = worst;
    rep.summary["contractive"] = pr.contractive;
    rep.summary["distance_to_stepping"] = gap;
    rep.summary["stepping_status"] = tr.status;
}

void run_scatter(const ExperimentConfig& c, Report& rep, int threads) {
    const auto grid = make_grid(c.r_max, c.n_points);
    const std::size_t n = c.deltas.size();
    std::vector<ScatterReport> reps(n);
    std::vector<std::string> status(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto d = gaussian_data(grid, c.deltas[i], c.width);
        auto opt = solver_options(c);
        opt.save_every = static_cast<int>(std::lround(1.0 / c.dt));
        const auto tr = solve(d.u, d.N, c.T, c.dt, parse_method(c.method), opt);
        status[i] = tr.status;
        reps[i] = scattering_diagnostic(tr, c.epsilon);
    });
    Table inc{"scatter_increments.csv", {"anchor", "delta", "t1", "t2", "du", "dN", "trend_pairs", "status", "pass"}, {}};
    bool all_ok = true;
    for (std::size_t i = 0; i < n; ++i) {
        const bool ok = status[i] == "ok" && reps[i].decreasing;
        all_ok = all_ok && ok;
        for (const auto& p : reps[i].pairs) {
            inc.rows.push_back({"scattering-cauchy", num(c.deltas[i]), num(p.t1), num(p.t2), num(p.du), num(p.dN),
                                std::to_string(reps[i].trend_pairs), status[i], verdict(ok)});
            rep.count(verdict(ok));
        }
        if (reps[i].pairs.empty()) {
            inc.rows.push_back({"scattering-cauchy", num(c.deltas[i]), "", "", "", "", "0", status[i], "fail"});
            rep.count("fail");
        }
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < n; ++i) {
        lx.push_back(std::log2(c.deltas[i]));
        ly.push_back(reps[i].correction);
    }
    const double alpha = n >= 2 ? log2_slope(lx, ly) : NAN;
    const bool alpha_ok = n < 2 || (alpha >= 1.8 && alpha <= 2.2);
    Table sc{"scatter_scaling.csv", {"anchor", "delta", "T", "correction", "alpha", "pass"}, {}};
    for (std::size_t i = 0; i < n; ++i) {
        sc.rows.push_back({"scattering-delta-scaling", num(c.deltas[i]), num(c.T), num(reps[i].correction), num(alpha), verdict(alpha_ok)});
        rep.count(verdict(alpha_ok));
    }
    rep.tables.push_back(std::move(inc));
    rep.tables.push_back(std::move(sc));
    rep.summary["alpha"] = alpha;
    rep.summary["decreasing"] = all_ok;
}

// ---- V^2 self test ----

void run_vnorm(const ExperimentConfig& c, Report& rep, int threads) {
    const auto g = make_grid(4.0, 16);
    const std::size_t n = static_cast<std::size_t>(c.sequences);
    struct Seq {
        int length = 0;
        double p = 2.0, dp = 0.0, bf = 0.0;
    };
    std::vector<Seq> seqs(n);
    parallel_for(n, threads, [&](std::size_t i) {
        std::mt19937_64 rng(derive_seed(*c.seed, {static_cast<std::int64_t>(i)}));
        std::normal_distribution<double> nd;
        const int len = std::uniform_int_distribution<int>(1, c.max_length)(rng);
        std::vector<CVec> x(len, CVec(g->n));
        for (auto& v : x)
            for (auto& z : v) z = {nd(rng), nd(rng)};
        std::vector<std::vector<double>> d(len, std::vector<double>(len, 0.0));
        CVec diff(g->n);
        for (int a = 0; a < len; ++a)
            for (int b = 0; b < len; ++b) {
                for (std::size_t m = 0; m < g->n; ++m) diff[m] = x[b][m] - x[a][m];
                d[a][b] = lq_norm_raw(*g, diff, 2.0);
            }
        const double p = i % 3 == 0 ? 1.0 : (i % 3 == 1 ? 2.0 : 3.0);
        seqs[i] = {len, p, p_variation_from_distances(d, p), p_variation_bruteforce(d, p)};
    });
    Table t{"vnorm.csv", {"anchor", "index", "length", "p", "value", "reference", "pass"}, {}};
    double worst_dp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double err = std::abs(seqs[i].dp - seqs[i].bf) / std::max(1.0, seqs[i].bf);
        worst_dp = std::max(worst_dp, err);
        const std::string st = verdict(err <= 1e-12);
        t.rows.push_back({"pvariation-dp-vs-enumeration", std::to_string(i), std::to_string(seqs[i].length), num(seqs[i].p), num(seqs[i].dp),
                          num(seqs[i].bf), st});
        rep.count(st);
    }

    // atoms on a small grid: single jumps have V^2 = 1, general atoms V^2 <= 2
    const auto ag = make_grid(16.0, 128);
    const TimeGrid tg{0.0, 0.125, 32};
    const std::size_t atoms = static_cast<std::size_t>(c.trials);
    std::vector<double> single(atoms), general(atoms);
    std::vector<int> steps(atoms);
    parallel_for(atoms, threads, [&](std::size_t i) {
        std::mt19937_64 rng(derive_seed(*c.seed, {1, static_cast<std::int64_t>(i)}));
        std::normal_distribution<double> nd;
        auto field = [&] {
            RadialField f(ag);
            for (std::size_t m = 0; m < ag->n; ++m) f.values[m] = cplx(nd(rng), nd(rng)) * std::exp(-ag->r(m) * ag->r(m) / 8.0);
            return f;
        };
        const Flow fl = i % 2 ? Flow::KGPlus : Flow::Schrodinger;
        const double jump = tg.dt * static_cast<double>(std::uniform_int_distribution<int>(1, static_cast<int>(tg.n_t) - 1)(rng));
        single[i] = v2_norm(build_atom({jump}, {RadialField(ag), field()}, fl, tg).field, fl);
        const int K = std::uniform_int_distribution<int>(2, 12)(rng);
        std::vector<int> nodes(tg.n_t - 1);
        for (std::size_t l = 0; l < nodes.size(); ++l) nodes[l] = static_cast<int>(l) + 1;
        std::shuffle(nodes.begin(), nodes.end(), rng);
        nodes.resize(static_cast<std::size_t>(K - 1));
        std::sort(nodes.begin(), nodes.end());
        std::vector<double> part;
        for (int l : nodes) part.push_back(tg.dt * l);
        std::vector<RadialField> pieces{RadialField(ag)};
        for (int k = 1; k < K; ++k) pieces.push_back(field());
        general[i] = v2_norm(build_atom(part, std::move(pieces), fl, tg).field, fl);
        steps[i] = K;
    });
    for (std::size_t i = 0; i < atoms; ++i) {
        const std::string s1 = verdict(std::abs(single[i] - 1.0) <= 1e-10);
        t.rows.push_back({"v2-single-jump", std::to_string(i), "2", "2", num(single[i]), "1", s1});
        rep.count(s1);
        const std::string s2 = verdict(general[i] <= 2.0);
        t.rows.push_back({"v2-atom-bound", std::to_string(i), std::to_string(steps[i]), "2", num(general[i]), "2", s2});
        rep.count(s2);
    }
    rep.tables.push_back(std::move(t));
    rep.summary["max_dp_error"] = worst_dp;
    rep.summary["max_atom_v2"] = atoms ? *std::max_element(general.begin(), general.end()) : 0.0;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

RunOutcome run(const ExperimentConfig& cfg_in, const std::string& out_dir, int threads) {
    ExperimentConfig c = cfg_in;
    validate(c);
    const fs::path dir(out_dir.empty() ? c.out : out_dir);
    fs::create_directories(dir);
    const std::string started = utc_now();

    Report rep;
    RunOutcome out;
    std::string error;
    try {
        switch (*c.experiment) {
            case Experiment::ResonanceVerify: run_resonance(c, rep); break;
            case Experiment::StrichartzSweep: run_strichartz(c, rep, threads); break;
            case Experiment::BilinearSweep: run_bilinear(c, rep, threads); break;
            case Experiment::TrilinearSweep: run_trilinear(c, rep, threads); break;
            case Experiment::Transversality: run_transversality(c, rep, threads); break;
            case Experiment::SummationCheck: run_summation(c, rep, threads); break;
            case Experiment::Solve: run_solve(c, rep, dir); break;
            case Experiment::Picard: run_picard(c, rep); break;
            case Experiment::ScatterDiag: run_scatter(c, rep, threads); break;
            case Experiment::VnormSelftest: run_vnorm(c, rep, threads); break;
        }
    } catch (const config_error&) {
        throw;
    } catch (const std::exception& e) {
        error = e.what();
    }

    for (const auto& t : rep.tables) {
        t.write(dir);
        out.artifacts.push_back(t.file);
    }
    out.artifacts.insert(out.artifacts.end(), rep.extra_files.begin(), rep.extra_files.end());
    out.rows = rep.rows;
    out.failed = rep.failed;
    const bool pass = error.empty() && rep.failed == 0 && rep.rows > 0;
    out.exit_status = pass ? 0 : 1;
    out.message = error.empty() ? std::to_string(rep.failed) + " of " + std::to_string(rep.rows) + " rows failed" : "aborted: " + error;

    json params = json::object();
    for (const auto& [k, v] : c.explicit_keys) params[k] = v;
    json summary = {{"schema_version", 1}, {"experiment", experiment_name(*c.experiment)}, {"params", params}};
    for (auto it = rep.summary.begin(); it != rep.summary.end(); ++it) summary[it.key()] = it.value();
    summary["rows"] = rep.rows;
    summary["failed"] = rep.failed;
    if (!error.empty()) summary["error"] = error;
    summary["pass"] = pass;
    std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";
    out.artifacts.push_back("summary.json");

    json manifest = {{"schema_version", 1},
                     {"experiment", experiment_name(*c.experiment)},
                     {"config_hash", hex64(c.hash())},
                     {"config", c.canonical()},
                     {"code_version", KGS_VERSION},
                     {"seed", c.seed ? json(*c.seed) : json(nullptr)},
                     {"threads", threads},
                     {"started_utc", started},
                     {"finished_utc", utc_now()},
                     {"exit_status", out.exit_status},
                     {"artifacts", out.artifacts}};
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
    out.artifacts.push_back("manifest.json");
    return out;
}

}  // namespace kgs
