#include <doctest.h>

#include <cmath>
#include <set>

#include "blochere/rng.hpp"

using namespace blochere;

TEST_CASE("philox4x32-10 known answers") {
    const auto zero = philox4x32_10({0, 0, 0, 0}, {0, 0});
    CHECK(zero[0] == 0x6627e8d5u);
    CHECK(zero[1] == 0xe169c58du);
    CHECK(zero[2] == 0xbc57ac4cu);
    CHECK(zero[3] == 0x9b00dbd8u);

    const auto ones = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                    {0xffffffffu, 0xffffffffu});
    CHECK(ones[0] == 0x408f276du);
    CHECK(ones[1] == 0x41c83b0eu);
    CHECK(ones[2] == 0xa20bc7c6u);
    CHECK(ones[3] == 0x6d5451fdu);

    const auto pi = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                  {0xa4093822u, 0x299f31d0u});
    CHECK(pi[0] == 0xd16cfe09u);
    CHECK(pi[1] == 0x94fdccebu);
    CHECK(pi[2] == 0x5001e420u);
    CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("substreams are reproducible and distinct") {
    CounterRng a({7, 3, StreamTag::FieldPhases});
    CounterRng b({7, 3, StreamTag::FieldPhases});
    CounterRng c({7, 4, StreamTag::FieldPhases});
    CounterRng d({7, 3, StreamTag::ColoredNoise});
    std::set<std::uint64_t> firsts;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        firsts.insert(x);
    }
    CHECK(c.next_u64() != CounterRng({7, 3, StreamTag::FieldPhases}).next_u64());
    CHECK(d.next_u64() != CounterRng({7, 3, StreamTag::FieldPhases}).next_u64());
    CHECK(firsts.size() == 100);
}

TEST_CASE("uniform and normal moments") {
    CounterRng rng({11, 0, StreamTag::FieldPhases});
    const int n = 200000;
    double su = 0.0, sn = 0.0, sn2 = 0.0, sc2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        su += u;
        const double g = rng.normal();
        sn += g;
        sn2 += g * g;
        sc2 += std::norm(rng.complex_normal());
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(sc2 / n == doctest::Approx(1.0).epsilon(0.01));
}
