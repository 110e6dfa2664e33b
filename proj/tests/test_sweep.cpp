#include <qmem/metrics.hpp>
#include <qmem/sweep.hpp>

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qmem;
namespace fs = std::filesystem;

namespace {

sweep_plan reduced_plan(std::vector<sweep_axis> axes, std::initializer_list<int> terms = {})
{
    sweep_plan p;
    p.base = to_json(preset_config("nv4-adiabatic"));
    p.model = sweep_model::reduced;
    p.mask = terms.size() ? term_mask::only(terms) : term_mask::all();
    p.axes = std::move(axes);
    return p;
}

std::string csv_text(const sweep_result& r)
{
    std::ostringstream os;
    write_csv(r, os);
    return os.str();
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p);
    return {std::istreambuf_iterator<char>(f), {}};
}

} // namespace

TEST_SUITE("sweep")
{
    TEST_CASE("2x3 grid gives six rows in lexicographic order")
    {
        const auto p = reduced_plan({{"couplings.G.3.8.scale", {0.0, 1.0}},
                                     {"couplings.Omega.2.8.scale", {0.0, 0.5, 1.0}}});
        CHECK(p.size() == 6);
        const auto r = sweep(p, 3);
        REQUIRE(r.rows.size() == 6);
        int i = 0;
        for (double a : {0.0, 1.0})
            for (double b : {0.0, 0.5, 1.0}) {
                CHECK(r.rows[i].axis_values == std::vector<double>{a, b});
                CHECK(r.rows[i].status == "ok");
                ++i;
            }
        CHECK(r.axis_names ==
              std::vector<std::string>{"couplings.G.3.8.scale", "couplings.Omega.2.8.scale"});
        CHECK(csv_text(r).rfind("couplings.G.3.8.scale,couplings.Omega.2.8.scale,efficiency,"
                                "fidelity,status\n",
                                0) == 0);
    }

    TEST_CASE("determinism and parallel-serial equivalence")
    {
        const auto p = reduced_plan({{"couplings.G.3.8.scale", {0.0, 0.3, 0.6, 1.0}},
                                     {"control2.amp", {1.0, 1.5}}});
        const auto a = sweep(p, 1);
        const auto b = sweep(p, 4);
        const auto c = sweep(p, 1);
        CHECK(a == b);
        CHECK(csv_text(a) == csv_text(b));
        CHECK(csv_text(a) == csv_text(c));
    }

    TEST_CASE("full numeric points agree with a direct run")
    {
        sweep_plan p;
        p.base = to_json(preset_config("nv4"));
        p.base["schedule"]["storage_time_s"] = 100e-9;
        p.axes = {{"couplings.G.3.8.scale", {0.5}}};
        const auto row = sweep(p).rows.at(0);
        REQUIRE(row.status == "ok");
        const run_config c = config_from_json(p.base);
        const auto spec = scale_coupling(c.system, 3, 8, 0.5);
        const double e = efficiency(run_protocol(spec, c.schedule, c.integrator), c.window);
        CHECK(row.efficiency == doctest::Approx(e).epsilon(1e-12));
        CHECK(row.fidelity == 1.0);
    }

    TEST_CASE("product symmetry of the {1,8} and {1,3,8} reduced sweeps")
    {
        const std::vector<double> x = {0.1, 0.5, 2.0};
        for (auto terms : {std::vector<int>{8}, std::vector<int>{3, 8}}) {
            sweep_plan pg = reduced_plan({{"couplings.G.3.8.scale", x}});
            pg.mask = term_mask::only(terms);
            sweep_plan po = pg;
            po.axes = {{"couplings.Omega.2.8.scale", x}};
            const auto rg = sweep(pg);
            const auto ro = sweep(po);
            for (std::size_t i = 0; i < x.size(); ++i)
                CHECK(rg.rows[i].efficiency ==
                      doctest::Approx(ro.rows[i].efficiency).epsilon(1e-6));
        }
    }

    TEST_CASE("a failing point is recorded and the sweep continues")
    {
        auto p = reduced_plan({{"cavity.Q", {7100.0, -1.0, 3550.0}}});
        const auto r = sweep(p, 2);
        REQUIRE(r.rows.size() == 3);
        CHECK(r.rows[0].status == "ok");
        CHECK(r.rows[1].status == "invalid_input");
        CHECK(r.rows[1].message.find("cavity.Q") != std::string::npos);
        CHECK(std::isnan(r.rows[1].efficiency));
        CHECK(r.rows[2].status == "ok");

        // alpha = 0 cannot be reached through validated configs, but a
        // numerical blow-up can
        sweep_plan f;
        f.base = to_json(preset_config("nv4"));
        f.axes = {{"couplings.G.3.8.scale", {1.0, 1e200}}};
        const auto rf = sweep(f);
        CHECK(rf.rows[0].status == "ok");
        CHECK((rf.rows[1].status == "divergence" || rf.rows[1].status == "stiffness"));
    }

    TEST_CASE("plan validation")
    {
        CHECK_THROWS_AS(reduced_plan({}).validate(), invalid_input);
        CHECK_THROWS_AS(reduced_plan({{"cavity.Q", {}}}).validate(), invalid_input);
        CHECK_THROWS_WITH_AS(reduced_plan({{"cavity.QQ", {1.0}}}).validate(),
                             doctest::Contains("cavity.QQ"), invalid_input);
        CHECK_THROWS_AS(reduced_plan({{"a", {1}}, {"b", {1}}, {"c", {1}}}).validate(),
                        invalid_input);
        CHECK_THROWS_AS(reduced_plan({{"system.name", {1.0}}}).validate(), invalid_input);
        CHECK_THROWS_AS(reduced_plan({{"terms.1", {1.0}}}).validate(), invalid_input);
        auto full = reduced_plan({{"terms.8", {1.0}}});
        CHECK_NOTHROW(full.validate());
        full.model = sweep_model::full_numeric;
        CHECK_THROWS_AS(full.validate(), invalid_input);
    }

    TEST_CASE("plan documents: JSON round trip and term weights")
    {
        const json doc = json::parse(R"({
            "schema_version": 1, "kind": "sweep", "base": "nv4-adiabatic",
            "set": ["control2.amp=1.2"], "model": "reduced", "terms": [3, 8],
            "term_weights": {"8": 0.5}, "outputs": ["E"],
            "axes": [{"path": "couplings.G.3.8.scale", "values": {"linspace": [0, 1, 3]}}]})");
        const auto p = plan_from_json(doc);
        CHECK(p.model == sweep_model::reduced);
        CHECK(p.mask.enabled_terms() == std::vector<int>{1, 3, 8});
        CHECK(p.mask.weight[8] == 0.5);
        CHECK(p.want_efficiency);
        CHECK_FALSE(p.want_fidelity);
        CHECK(p.axes.at(0).values == std::vector<double>{0, 0.5, 1});
        CHECK(value_at(p.base, "control2.amp").get<double>() == 1.2);

        const auto q = plan_from_json(to_json(p));
        CHECK(to_json(q) == to_json(p));
        const auto r = sweep(q);
        CHECK(std::isnan(r.rows[0].fidelity));
        CHECK_FALSE(std::isnan(r.rows[0].efficiency));

        CHECK_THROWS_AS(plan_from_json(json::parse(R"({"base": "nv", "model": "exact",
            "axes": [{"path": "cavity.Q", "values": [1]}]})")),
                        invalid_input);
    }

    TEST_CASE("persist / load round trip and schema checks")
    {
        const fs::path d = fs::temp_directory_path() / "qmem_test_sweep";
        fs::remove_all(d);
        fs::create_directories(d);
        const auto p = reduced_plan({{"couplings.G.3.8.scale", {0.0, 1.0 / 3.0, 1.0}},
                                     {"cavity.Q", {7100.0, -5.0}}});
        const auto r = sweep(p);
        const fs::path csv = d / "results.csv";
        persist(r, csv);
        CHECK(sidecar_path(csv) == d / "results.plan.json");
        CHECK(fs::exists(d / "results.plan.json"));
        const auto back = load(csv);
        CHECK(back == r);
        CHECK(back.rows[1].message == r.rows[1].message);

        // same plan, same bytes
        persist(sweep(p), d / "again.csv");
        CHECK(slurp(csv) == slurp(d / "again.csv"));

        json side = json::parse(slurp(sidecar_path(csv)));
        side["schema_version"] = 99;
        std::ofstream(sidecar_path(csv)) << side.dump();
        CHECK_THROWS_AS(load(csv), schema_version_error);
        CHECK_THROWS_AS(load(d / "absent.csv"), io_error);
        fs::remove_all(d);
    }

    TEST_CASE("625-row grid persists with a header")
    {
        const fs::path d = fs::temp_directory_path() / "qmem_test_sweep625";
        fs::remove_all(d);
        fs::create_directories(d);
        std::vector<double> v;
        for (int i = 0; i < 25; ++i) v.push_back(i / 24.0);
        auto p = reduced_plan({{"couplings.G.3.8.scale", v}, {"couplings.Omega.2.8.scale", v}},
                              {3, 8});
        p.want_fidelity = false;
        persist(sweep(p, 0), d / "grid.csv");
        std::ifstream f(d / "grid.csv");
        int lines = 0;
        for (std::string l; std::getline(f, l);) ++lines;
        CHECK(lines == 626);
        fs::remove_all(d);
    }

    TEST_CASE("scale_coupling")
    {
        const auto s = nv_preset();
        CHECK(scale_coupling(s, 3, 8, 1.0) == s);
        CHECK(scale_coupling(s, 3, 8, 0.0).G(3, 8) == 0.0);
        const auto h = scale_coupling(s, 2, 9, 0.5);
        CHECK(std::abs(h.G(2, 9)) == 0.5 * std::abs(s.G(2, 9)));
        CHECK(std::arg(h.G(2, 9)) == std::arg(s.G(2, 9)));
        CHECK(scale_coupling(s, 2, 8, 2.0, true).Omega(2, 8) == 2.0 * s.Omega(2, 8));
        CHECK(scale_coupling(s, 2, 8, 2.0, true).G(2, 8) == s.G(2, 8));
        CHECK_THROWS_AS(scale_coupling(s, 4, 8, 1.0), invalid_input);
        CHECK_THROWS_AS(scale_coupling(s, 2, 3, 1.0), invalid_input);
        CHECK_THROWS_AS(scale_coupling(s, 2, 8, -1.0), invalid_input);
    }
}
