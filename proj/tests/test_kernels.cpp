#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ckl/kernels.hpp"
#include "ckl/linalg.hpp"
#include "ckl/rand.hpp"

using namespace ckl;

namespace {

DrugCombination combo(std::vector<int> v) { return canonicalize(std::move(v)); }

SymmetricMatrix unit_diag_sds(std::mt19937_64& rng, int n) {
    SymmetricMatrix s(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) s.set(i, j, next_uniform(rng));
    for (int i = 0; i < n; ++i) s.set(i, i, 1.0);
    return s;
}

std::vector<DrugCombination> random_combos(std::mt19937_64& rng, int count, int n_drugs,
                                           int max_order) {
    std::vector<DrugCombination> out;
    while (static_cast<int>(out.size()) < count) {
        std::vector<int> v;
        int k = 1 + static_cast<int>(next_uniform(rng) * max_order);
        for (int i = 0; i < k; ++i) v.push_back(static_cast<int>(next_uniform(rng) * n_drugs));
        out.push_back(combo(v));
    }
    return out;
}

} // namespace

TEST_CASE("match cost") {
    CHECK(match_cost(1.0) == 0.0);
    CHECK(match_cost(0.0) == 1.0);
    CHECK(match_cost(0.25) == 0.75);
    CHECK_THROWS_AS(match_cost(1.5), OutOfRange);
    CHECK_THROWS_AS(match_cost(-0.1), OutOfRange);
}

TEST_CASE("s_gm self similarity equals order") {
    std::mt19937_64 rng(8);
    SymmetricMatrix sds = unit_diag_sds(rng, 12);
    for (int trial = 0; trial < 100; ++trial) {
        DrugCombination d = random_combos(rng, 1, 12, 6)[0];
        CHECK(s_gm(d, d, sds) == static_cast<double>(d.order()));
    }
}

TEST_CASE("s_gm hand examples") {
    SymmetricMatrix sds(4);
    for (int i = 0; i < 4; ++i) sds.set(i, i, 1.0);
    sds.set(0, 1, 0.4);
    CHECK(s_gm(combo({0}), combo({1}), sds) == doctest::Approx(0.4).epsilon(1e-15));

    // block [[0.9,0.1],[0.2,0.8]] between {0,1} and {2,3}
    sds.set(0, 2, 0.9);
    sds.set(0, 3, 0.1);
    sds.set(1, 2, 0.2);
    sds.set(1, 3, 0.8);
    CHECK(s_gm(combo({0, 1}), combo({2, 3}), sds) == doctest::Approx(1.7).epsilon(1e-12));

    CHECK_THROWS_AS(s_gm(combo({0, 9}), combo({1}), sds), IndexOutOfRange);
}

TEST_CASE("s_gm symmetry and bound") {
    std::mt19937_64 rng(9);
    SymmetricMatrix sds = unit_diag_sds(rng, 10);
    auto combos = random_combos(rng, 30, 10, 5);
    for (std::size_t a = 0; a < combos.size(); ++a) {
        for (std::size_t b = a; b < combos.size(); ++b) {
            double ab = s_gm(combos[a], combos[b], sds);
            double ba = s_gm(combos[b], combos[a], sds);
            CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
            CHECK(ab >= 0.0);
            CHECK(ab <= std::min(combos[a].order(), combos[b].order()) + 1e-12);
        }
    }
}

TEST_CASE("s_gm monotone in a matched similarity") {
    SymmetricMatrix sds(4);
    for (int i = 0; i < 4; ++i) sds.set(i, i, 1.0);
    sds.set(0, 2, 0.9);
    sds.set(0, 3, 0.1);
    sds.set(1, 2, 0.2);
    sds.set(1, 3, 0.8);
    double base = s_gm(combo({0, 1}), combo({2, 3}), sds);
    sds.set(1, 3, 0.95); // entry used by the optimal matching
    CHECK(s_gm(combo({0, 1}), combo({2, 3}), sds) >= base);
}

TEST_CASE("k_cd1 examples") {
    CHECK(k_cd1(combo({1, 2}), combo({1, 2})) == 1.0);
    CHECK(k_cd1(combo({1, 2}), combo({3, 4})) == 0.0);
    CHECK(k_cd1(combo({1, 2}), combo({2, 3})) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("expand_order2 sizes") {
    CHECK(expand_order2(combo({5})).size() == 1);
    CHECK(expand_order2(combo({1, 2})).size() == 3);
    CHECK(expand_order2(combo({1, 2, 3})).size() == 6);
    auto f = expand_order2(combo({1, 2}));
    CHECK(std::is_sorted(f.begin(), f.end()));
}

TEST_CASE("k_cd2 examples") {
    CHECK(k_cd2(combo({1, 2, 3}), combo({1, 2, 3})) == 1.0);
    CHECK(k_cd2(combo({1, 2}), combo({2, 3})) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(k_cd2(combo({1}), combo({2})) == 0.0);
}

TEST_CASE("k_ds examples") {
    SymmetricMatrix sds(4);
    for (int i = 0; i < 4; ++i) sds.set(i, i, 1.0);
    sds.set(0, 1, 0.4);
    CHECK(k_ds(combo({0}), combo({0}), sds) == 1.0);
    CHECK(k_ds(combo({0}), combo({1}), sds) == doctest::Approx(0.4).epsilon(1e-15));
    sds.set(0, 2, 0.9);
    sds.set(0, 3, 0.1);
    sds.set(1, 2, 0.2);
    sds.set(1, 3, 0.8);
    CHECK(k_ds(combo({0, 1}), combo({2, 3}), sds) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("psd repair hand examples") {
    SymmetricMatrix s(2);
    s.set(0, 0, 1);
    s.set(1, 1, 1);
    s.set(0, 1, 2);
    KernelMatrix k = psd_repair(s, 1e-8);
    CHECK(k.shift == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(k.values(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(k.values(0, 1) == 2.0); // off-diagonal untouched

    SymmetricMatrix id(3);
    for (int i = 0; i < 3; ++i) id.set(i, i, 1.0);
    KernelMatrix kid = psd_repair(id, 1e-8);
    CHECK(kid.shift == 0.0);
    CHECK(kid.values == id);

    SymmetricMatrix flip(2);
    flip.set(0, 1, 1.0);
    KernelMatrix kf = psd_repair(flip, 1e-8);
    CHECK(kf.shift == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(kf.values(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(kf.values(0, 1) == 1.0);
}

TEST_CASE("psd repair: off-diagonals bit-exact, uniform diagonal shift, psd output") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 25; ++trial) {
        int n = 2 + static_cast<int>(next_uniform(rng) * 30);
        SymmetricMatrix s(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) s.set(i, j, next_uniform(rng) * 2.0 - 1.0);
        KernelMatrix k = psd_repair(s, 1e-8);
        CHECK(k.shift >= 0.0);
        for (int i = 0; i < n; ++i) {
            CHECK(k.values(i, i) == s(i, i) + k.shift);
            for (int j = i + 1; j < n; ++j) CHECK(k.values(i, j) == s(i, j));
        }
        CHECK(smallest_eigenvalue(k.values) >= -1e-8);
    }
}

TEST_CASE("cd and ds grams are PSD without repair") {
    std::mt19937_64 rng(23);
    auto combos = random_combos(rng, 40, 15, 6);

    KernelSpec cd1{KernelFamily::CD1, SdsKind::NONE};
    CHECK(smallest_eigenvalue(similarity_matrix(combos, cd1, nullptr)) >= -1e-8);

    KernelSpec cd2{KernelFamily::CD2, SdsKind::NONE};
    CHECK(smallest_eigenvalue(similarity_matrix(combos, cd2, nullptr)) >= -1e-8);

    SymmetricMatrix sds = psd_repair(unit_diag_sds(rng, 15), 1e-8).values;
    KernelSpec ds{KernelFamily::DS, SdsKind::SDS_CM};
    CHECK(smallest_eigenvalue(similarity_matrix(combos, ds, &sds)) >= -1e-8);
}

TEST_CASE("similarity matrix dispatch and serial equivalence") {
    std::mt19937_64 rng(29);
    SymmetricMatrix sds = unit_diag_sds(rng, 10);
    auto combos = random_combos(rng, 12, 10, 4);

    KernelSpec gm{KernelFamily::GM, SdsKind::SDS_CM};
    SymmetricMatrix g = similarity_matrix(combos, gm, &sds);
    CHECK(g == similarity_matrix_serial(combos, gm, &sds));
    for (std::size_t p = 0; p < combos.size(); ++p)
        CHECK(g(p, p) == static_cast<double>(combos[p].order()));

    // single instance: 1x1 gram holds the self value
    std::vector<DrugCombination> one{combo({1, 2, 3})};
    SymmetricMatrix g1 = similarity_matrix(one, gm, &sds);
    CHECK(g1.size() == 1);
    CHECK(g1(0, 0) == 3.0);

    // two identical instances under cd1: all ones
    std::vector<DrugCombination> twins{combo({1, 2}), combo({1, 2})};
    KernelSpec cd1{KernelFamily::CD1, SdsKind::NONE};
    SymmetricMatrix gt = similarity_matrix(twins, cd1, nullptr);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(gt(i, j) == 1.0);

    // ds matches a direct double loop
    KernelSpec ds{KernelFamily::DS, SdsKind::SDS_CM};
    SymmetricMatrix gds = similarity_matrix(combos, ds, &sds);
    CHECK(gds == similarity_matrix_serial(combos, ds, &sds));
    for (std::size_t p = 0; p < combos.size(); ++p) {
        for (std::size_t q = 0; q < combos.size(); ++q) {
            double acc = 0;
            for (int a : combos[p].drugs)
                for (int b : combos[q].drugs) acc += sds(a, b);
            acc /= static_cast<double>(combos[p].order()) * combos[q].order();
            CHECK(gds(p, q) == doctest::Approx(acc).epsilon(1e-14));
        }
    }

    KernelSpec bad{KernelFamily::GM, SdsKind::NONE};
    CHECK_THROWS_AS(similarity_matrix(combos, bad, &sds), ValidationError);
    KernelSpec bad2{KernelFamily::CD1, SdsKind::SDS_CM};
    CHECK_THROWS_AS(similarity_matrix(combos, bad2, nullptr), ValidationError);
}

TEST_CASE("k_pb: identical combinations give exactly 1") {
    std::mt19937_64 rng(31);
    SymmetricMatrix sds = psd_repair(unit_diag_sds(rng, 8), 1e-8).values;
    for (int trial = 0; trial < 20; ++trial) {
        DrugCombination d = random_combos(rng, 1, 8, 5)[0];
        CHECK(k_pb(d, d, sds, 1e-6, 1e-3) == 1.0);
    }
}

TEST_CASE("k_pb: values in (0,1] and monotone in similarity") {
    SymmetricMatrix low(2);
    low.set(0, 0, 1.0);
    low.set(1, 1, 1.0);
    low.set(0, 1, 0.0);
    SymmetricMatrix high = low;
    high.set(0, 1, 0.9);

    double v_low = k_pb(combo({0}), combo({1}), low, 1e-6, 1e-3);
    double v_high = k_pb(combo({0}), combo({1}), high, 1e-6, 1e-3);
    CHECK(v_low > 0.0);
    CHECK(v_low <= 1.0);
    CHECK(v_high <= 1.0);
    CHECK(v_low < v_high);

    std::mt19937_64 rng(33);
    SymmetricMatrix sds = psd_repair(unit_diag_sds(rng, 10), 1e-8).values;
    auto combos = random_combos(rng, 15, 10, 4);
    for (std::size_t a = 0; a < combos.size(); ++a) {
        for (std::size_t b = a; b < combos.size(); ++b) {
            double v = k_pb(combos[a], combos[b], sds, 1e-6, 1e-3);
            CHECK(v > 0.0);
            CHECK(v <= 1.0 + 1e-12);
            CHECK(v == doctest::Approx(k_pb(combos[b], combos[a], sds, 1e-6, 1e-3)).epsilon(1e-10));
        }
    }
}

TEST_CASE("k_pb gram assembles and repairs") {
    std::mt19937_64 rng(35);
    SymmetricMatrix sds = psd_repair(unit_diag_sds(rng, 9), 1e-8).values;
    auto combos = random_combos(rng, 10, 9, 4);
    SymmetricMatrix raw = k_pb_matrix(combos, sds, 1e-6, 1e-3);
    for (int i = 0; i < raw.size(); ++i) CHECK(raw(i, i) == 1.0);
    KernelMatrix repaired = psd_repair(raw, 1e-8);
    CHECK(smallest_eigenvalue(repaired.values) >= -1e-8);
}
