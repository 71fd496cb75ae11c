#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "membrane_pme/errors.hpp"
#include "membrane_pme/mesh.hpp"

using namespace membrane_pme;

namespace {

bool has_face(const Mesh& m, double x) {
    return std::any_of(m.faces().begin(), m.faces().end(), [x](double f) { return std::abs(f - x) <= 1e-14; });
}

void check_common_invariants(const Mesh& m) {
    const auto f = m.faces();
    CHECK(f.front() == doctest::Approx(-m.length() / 2).epsilon(1e-15));
    CHECK(f.back() == doctest::Approx(m.length() / 2).epsilon(1e-15));
    for (std::size_t i = 1; i < f.size(); ++i) CHECK(f[i] > f[i - 1]);
    const auto w = m.widths();
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    CHECK(std::abs(total - m.length()) <= 1e-12 * m.length());
    CHECK(m.regions().size() == m.num_cells());
}

}  // namespace

TEST_CASE("thin mesh layout") {
    const auto m = build_thin_mesh(2.0, 0.2, 4, 9);
    check_common_invariants(*m);
    CHECK(m->num_cells() == 2 * 9 + 4);
    CHECK(m->kind() == MeshKind::ThinLayer);
    CHECK(has_face(*m, -0.1));
    CHECK(has_face(*m, 0.1));
    REQUIRE(m->interface_faces().size() == 2);
    CHECK(m->faces()[m->interface_faces()[0]] == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(m->faces()[m->interface_faces()[1]] == doctest::Approx(0.1).epsilon(1e-15));

    std::size_t n_mem = 0;
    for (std::size_t j = 0; j < m->num_cells(); ++j) {
        const double lo = m->faces()[j], hi = m->faces()[j + 1];
        switch (m->regions()[j]) {
            case Region::Membrane:
                ++n_mem;
                CHECK(m->widths()[j] == doctest::Approx(0.05).epsilon(1e-13));
                CHECK(lo >= -0.1 - 1e-14);
                CHECK(hi <= 0.1 + 1e-14);
                break;
            case Region::Left:
                CHECK(hi <= -0.1 + 1e-14);
                CHECK(m->widths()[j] == doctest::Approx(0.1).epsilon(1e-13));
                break;
            case Region::Right:
                CHECK(lo >= 0.1 - 1e-14);
                break;
        }
    }
    CHECK(n_mem == 4);
}

TEST_CASE("thin mesh: halving epsilon halves the membrane cells") {
    const auto a = build_thin_mesh(2.0, 0.2, 6, 10);
    const auto b = build_thin_mesh(2.0, 0.1, 6, 10);
    const std::size_t ja = a->interface_faces()[0], jb = b->interface_faces()[0];
    CHECK(b->widths()[jb] == doctest::Approx(a->widths()[ja] / 2).epsilon(1e-13));
    CHECK(b->epsilon().value() == 0.1);
}

TEST_CASE("thin mesh errors") {
    CHECK_THROWS_AS(build_thin_mesh(2.0, 2.0, 4, 9), GeometryError);
    CHECK_THROWS_AS(build_thin_mesh(2.0, 3.0, 4, 9), GeometryError);
    CHECK_THROWS_AS(build_thin_mesh(2.0, 0.2, 3, 9), ConfigError);
    CHECK_THROWS_AS(build_thin_mesh(2.0, 0.2, 4, 7), ConfigError);
}

TEST_CASE("effective mesh layout") {
    const auto m = build_effective_mesh(2.0, 10);
    check_common_invariants(*m);
    CHECK(m->num_cells() == 20);
    CHECK(has_face(*m, 0.0));
    REQUIRE(m->interface_faces().size() == 1);
    CHECK(m->faces()[m->interface_faces()[0]] == 0.0);
    const auto c = m->centers();
    for (std::size_t j = 0; j < c.size(); ++j) {
        CHECK(c[j] == doctest::Approx(-c[c.size() - 1 - j]).epsilon(1e-14));
        CHECK(m->regions()[j] == (c[j] < 0 ? Region::Left : Region::Right));
    }
    CHECK_THROWS_AS(build_effective_mesh(2.0, 1), ConfigError);
}

TEST_CASE("find_face and cell_containing") {
    const auto m = build_effective_mesh(2.0, 10);
    CHECK(m->find_face(0.0).value() == 10);
    CHECK_FALSE(m->find_face(0.05).has_value());
    CHECK(m->cell_containing(0.0) == 10);
    CHECK(m->cell_containing(-1.0) == 0);
    CHECK(m->cell_containing(1.0) == 19);
    CHECK(m->cell_containing(-0.05) == 9);
}

TEST_CASE("mobility_per_cell") {
    const auto m = build_thin_mesh(2.0, 0.1, 4, 9);
    ModelParams p;
    const auto real = realize_mobilities(p, 0.1);
    const auto mob = mobility_per_cell(*m, real);
    REQUIRE(mob.size() == m->num_cells());
    int jumps = 0;
    for (std::size_t j = 0; j < mob.size(); ++j) {
        if (m->regions()[j] == Region::Membrane) CHECK(mob[j] == doctest::Approx(0.1).epsilon(1e-15));
        else CHECK(mob[j] == 1.0);
        if (j > 0 && mob[j] != mob[j - 1]) ++jumps;
    }
    CHECK(jumps == 2);

    ModelParams q;
    q.mu13 = 3.0;
    const auto r2 = realize_mobilities(q, 0.2);
    for (double v : mobility_per_cell(*build_thin_mesh(2.0, 0.2, 4, 9), r2))
        CHECK((v == 1.0 || v == doctest::Approx(0.2 * 3.0).epsilon(1e-15)));

    CHECK_THROWS_AS(mobility_per_cell(*build_effective_mesh(2.0, 10), real), UsageError);

    q.mu1 = 2.0;
    q.mu3 = 0.5;
    const auto em = build_effective_mesh(2.0, 10);
    const auto eff = effective_mobility_per_cell(*em, q);
    for (std::size_t j = 0; j < eff.size(); ++j) CHECK(eff[j] == (j < 10 ? 2.0 : 0.5));
}

TEST_CASE("Field helpers") {
    const auto m = build_effective_mesh(2.0, 10);
    Field f{m, std::vector<double>(20, 0.5), 0.0};
    CHECK(f.mass() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.max_value() == 0.5);
    CHECK_NOTHROW(f.validate());
    f.u[3] = -1e-3;
    CHECK_THROWS_AS(f.validate(), NumericError);
    f.u[3] = std::nan("");
    CHECK_THROWS_AS(f.validate(), NumericError);
}
