#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kgs/cli_runner.hpp"

using namespace kgs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kgslab_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string config_error_of(const std::string& text) {
    try {
        auto c = parse_config(text);
        validate(c);
    } catch (const config_error& e) {
        return e.what();
    }
    return "";
}

// Column values of one CSV column, header excluded.
std::vector<std::string> column(const std::string& csv, const std::string& name) {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> head;
    {
        std::istringstream h(line);
        std::string cell;
        while (std::getline(h, cell, ',')) head.push_back(cell);
    }
    const auto idx = std::find(head.begin(), head.end(), name) - head.begin();
    std::vector<std::string> out;
    while (std::getline(in, line)) {
        // quoted pair labels contain commas
        std::vector<std::string> cells;
        std::string cur;
        bool quoted = false;
        for (char ch : line) {
            if (ch == '"') quoted = !quoted;
            if (ch == ',' && !quoted) {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        cells.push_back(cur);
        out.push_back(cells.at(static_cast<std::size_t>(idx)));
    }
    return out;
}

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("empty file") { CHECK(config_error_of("# nothing here\n\n") == "experiment required"); }

    SUBCASE("lists, ranges, tuples and fractions") {
        const auto c = parse_config(
            "experiment: trilinear-sweep   # comment\n"
            "k: [-2..1, 5]\n"
            "triples: [(2,2,2), (3, 3, 4)]\n"
            "pairs: [(2, 10/3), (inf, 2)]\n"
            "dt: 1/64\n"
            "seed: 7\n");
        CHECK(c.k == std::vector<int>{-2, -1, 0, 1, 5});
        REQUIRE(c.triples.size() == 2);
        CHECK(c.triples[1].k2 == 4);
        CHECK(c.pairs[0].second == doctest::Approx(10.0 / 3));
        CHECK(std::isinf(c.pairs[1].first));
        CHECK(c.dt == 1.0 / 64);
        CHECK(*c.seed == 7);
        CHECK(c.explicit_keys.size() == 6);
    }

    SUBCASE("unknown and duplicate keys carry the line number") {
        CHECK(config_error_of("experiment: solve\nbogus: 1\n") == "line 2: unknown key 'bogus'");
        CHECK(config_error_of("experiment: solve\ndt: 0.1\ndt: 0.2\n") == "line 3: duplicate key 'dt'");
        CHECK(config_error_of("experiment: solve\ndt: abc\n").find("line 2: dt:") == 0);
        CHECK(config_error_of("experiment: nope\n").find("unknown experiment 'nope'") != std::string::npos);
    }

    SUBCASE("octave limits of a fixed grid") {
        const std::string msg = config_error_of("experiment: strichartz-sweep\nseed: 1\nk: [-20, 20]\n");
        CHECK(msg.find("k = 20 exceeds the Nyquist octave limit") == 0);
        CHECK(msg.find("r_max = 64, n_points = 4096") != std::string::npos);
        CHECK(config_error_of("experiment: strichartz-sweep\nseed: 1\nk: [-20, 0]\n").find("k = -20 is below the lowest") == 0);
        CHECK(config_error_of("experiment: strichartz-sweep\nseed: 1\nk: [-20]\nwindow: adaptive\n").find("outside the adaptive") != std::string::npos);
        CHECK(config_error_of("experiment: strichartz-sweep\nseed: 1\nk: [-10, 10]\nwindow: adaptive\n").empty());
    }

    SUBCASE("randomized experiments need a seed") {
        CHECK(config_error_of("experiment: bilinear-sweep\n") == "seed required for experiment bilinear-sweep");
        CHECK(config_error_of("experiment: resonance-verify\n").empty());
    }

    SUBCASE("hash follows the effective parameters") {
        auto a = parse_config("experiment: solve\ndelta: 0.01\n");
        auto b = parse_config("delta: 1/100\nexperiment: solve\n");
        auto d = parse_config("experiment: solve\ndelta: 0.02\n");
        CHECK(a.hash() == b.hash());
        CHECK(a.hash() != d.hash());
    }
}

TEST_CASE("parallel_for fills every slot and reports the first failure") {
    std::vector<int> v(100, 0);
    parallel_for(v.size(), 4, [&](std::size_t i) { v[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<int>(i * i));
    try {
        parallel_for(50, 3, [](std::size_t i) {
            if (i == 7 || i == 30) throw std::runtime_error("cell " + std::to_string(i));
        });
        FAIL("no exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "cell 7");
    }
}

TEST_CASE("resonance-verify defaults pass with non-negative margins") {
    const auto dir = scratch("resonance");
    auto c = parse_config("experiment: resonance-verify\ncase: sch-i\nresolution: 60\n");
    const auto out = run(c, dir.string(), 1);
    CHECK(out.exit_status == 0);
    CHECK(out.rows > 0);
    const std::string csv = slurp(dir / "resonance.csv");
    for (const auto& m : column(csv, "margin")) CHECK(std::stod(m) >= 0.0);
    for (const auto& p : column(csv, "pass")) CHECK(p == "pass");
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["schema_version"] == 1);
    CHECK(summary["pass"] == true);
    CHECK(summary["params"]["resolution"] == "60");
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
    CHECK(manifest["exit_status"] == 0);
}

TEST_CASE("the excluded endpoint is reported but not asserted") {
    const auto dir = scratch("strichartz");
    auto c = parse_config("experiment: strichartz-sweep\nseed: 3\ntrials: 2\nk: [0, 1]\nT: 8\npairs: [(2, 10/3), (inf, 2)]\n");
    const auto out = run(c, dir.string(), 1);
    CHECK(out.exit_status == 0);
    const std::string csv = slurp(dir / "strichartz.csv");
    const auto pairs = column(csv, "pair");
    const auto status = column(csv, "pass");
    REQUIRE(pairs.size() == 4);
    for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(status[i] == (pairs[i] == "\"(2,10/3)\"" ? "not-asserted" : "pass"));
}

TEST_CASE("large data trips the regime flags") {
    const auto dir = scratch("solve_large");
    auto c = parse_config("experiment: solve\nn_points: 4095\nT: 8\ndelta: 10\ndump_every: 64\n");
    const auto out = run(c, dir.string(), 1);
    CHECK(out.exit_status != 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["pass"] == false);
    const bool flagged = summary["flags"]["aborted"] == true || summary["flags"]["large_data"] == true;
    CHECK(flagged);
    CHECK(fs::exists(dir / "trajectory.bin"));
    CHECK(fs::exists(dir / "diagnostics.csv"));
}

TEST_CASE("small data solve passes and dumps a readable trajectory") {
    const auto dir = scratch("solve_small");
    auto c = parse_config("experiment: solve\nn_points: 1023\nr_max: 32\nT: 2\ndt: 1/128\ndump_every: 64\n");
    const auto out = run(c, dir.string(), 1);
    CHECK(out.exit_status == 0);
    const auto meta = nlohmann::json::parse(slurp(dir / "trajectory.json"));
    const std::size_t snaps = meta["snapshots"].get<std::size_t>();
    CHECK(snaps == 5);  // t = 0, 0.5, 1, 1.5, 2
    CHECK(fs::file_size(dir / "trajectory.bin") == snaps * (8 + 2 * 1023 * 16));
}

TEST_CASE("artifacts are byte-identical across reruns and thread counts") {
    const std::string text = "experiment: trilinear-sweep\nseed: 11\ntrials: 2\ntriples: [(1,1,1), (2,2,2), (1,1,5)]\nwindow: adaptive\nT: 4\n";
    std::string first, first_summary;
    for (int threads : {1, 1, 3}) {
        const auto dir = scratch("det" + std::to_string(threads));
        auto c = parse_config(text);
        const auto out = run(c, dir.string(), threads);
        const std::string csv = slurp(dir / "trilinear.csv");
        const std::string sum = slurp(dir / "summary.json");
        CHECK(out.rows == 3);
        if (first.empty()) {
            first = csv;
            first_summary = sum;
        } else {
            CHECK(csv == first);
            CHECK(sum == first_summary);
        }
    }
}
