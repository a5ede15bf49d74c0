#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "oracles/ltlf_random.hpp"
#include "swsynth/errors.hpp"

using namespace swsynth;
using namespace swsynth::ltlf;

TEST_CASE("parser shapes and precedence") {
    const auto phi1 = parse("G !obs & F des", {"des", "obs"});
    CHECK(equal(phi1, make_and({make_globally(make_not(make_atom("obs"))), make_eventually(make_atom("des"))})));

    const auto phi3 = parse("F d1 & F d2 & G !o");
    REQUIRE(phi3->op == Op::conj);
    CHECK(phi3->args.size() == 3);

    CHECK(equal(parse("a U (b U c)"), make_until(make_atom("a"), make_until(make_atom("b"), make_atom("c")))));
    CHECK(equal(parse("a U b U c"), parse("a U (b U c)")));
    CHECK(equal(parse("a & b | c"), make_or({make_and({make_atom("a"), make_atom("b")}), make_atom("c")})));
    CHECK(equal(parse("!X a U b"), make_until(make_not(make_next(make_atom("a"))), make_atom("b"))));
    CHECK(equal(parse("a U b & c"), make_and({make_until(make_atom("a"), make_atom("b")), make_atom("c")})));
}

TEST_CASE("printing round-trips through the parser") {
    std::mt19937_64 rng(5);
    const std::vector<std::string> ap{"a", "b", "c"};
    for (int i = 0; i < 300; ++i) {
        const auto f = test::random_formula(rng, ap, 4);
        CHECK(equal(parse(to_string(f)), f));
    }
}

TEST_CASE("parse errors carry the column") {
    auto message = [](std::string_view text, std::vector<std::string> ap = {}) {
        try {
            parse(text, ap);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("a & $").find("column 5") != std::string::npos);
    CHECK(message("(a | b").find("unbalanced") != std::string::npos);
    CHECK(message("a )").find("column 3") != std::string::npos);
    CHECK(message("F zz", {"a"}).find("undeclared atom 'zz'") != std::string::npos);
    CHECK(message("U a").find("column 1") != std::string::npos);
    CHECK(message("").find("end of input") != std::string::npos);
}

TEST_CASE("finite-trace semantics") {
    const std::vector<std::string> ap{"a", "b"};
    CHECK(evaluate(parse("X a"), {0, 1}, 0, ap));
    CHECK_FALSE(evaluate(parse("X a"), {1}, 0, ap));
    CHECK(evaluate(parse("a U b"), {1, 1, 2}, 0, ap));
    CHECK_FALSE(evaluate(parse("a U b"), {1, 1, 1}, 0, ap));
    CHECK(evaluate(parse("G a"), {}, 0, ap));
    CHECK_FALSE(evaluate(parse("F a"), {}, 0, ap));
    CHECK_FALSE(evaluate(parse("a"), {}, 0, ap));
    CHECK(evaluate(parse("!a"), {}, 0, ap));
    CHECK_THROWS_AS(evaluate(parse("a"), {1}, 2, ap), std::invalid_argument);
}

TEST_CASE("canonical small automata") {
    const Dfa fa = to_dfa(parse("F a"), {"a"});
    REQUIRE(fa.num_states == 2);
    CHECK_FALSE(fa.accepting[0]);
    CHECK(fa.next(0, 0) == 0);
    CHECK(fa.next(0, 1) == 1);
    CHECK(fa.is_accepting_sink(1));

    const Dfa t = to_dfa(make_true(), {"a"});
    CHECK(t.num_states == 1);
    CHECK(t.is_accepting_sink(0));

    const Dfa f = to_dfa(make_false(), {"a", "b"});
    CHECK(f.num_states == 1);
    CHECK(f.is_dead(0));

    // init, still waiting for des, accepting sink, dead
    const Dfa phi1 = to_dfa(parse("G !obs & F des"), {"des", "obs"});
    CHECK(phi1.num_states == 3);
    CHECK_FALSE(phi1.accepting[phi1.initial]);
    CHECK(phi1.is_dead(phi1.next(0, 2)));
    CHECK(phi1.accepting[phi1.next(0, 1)]);
    CHECK_FALSE(phi1.is_accepting_sink(phi1.next(0, 1)));

    CHECK_THROWS_AS(phi1.next(0, 4), std::invalid_argument);
    CHECK_THROWS_AS(to_dfa(parse("F c"), {"a"}), ConfigError);
}

TEST_CASE("strong next needs a successor") {
    const Dfa d = to_dfa(parse("X true"), {"a"});
    CHECK_FALSE(d.accepts({}));
    CHECK_FALSE(d.accepts({0}));
    CHECK(d.accepts({0, 1}));
    CHECK(d.accepts({0, 1, 0}));
}

TEST_CASE("state budget") {
    CHECK_THROWS_AS(to_dfa(parse("X X X X a"), {"a"}, 3), ConfigError);
    CHECK_NOTHROW(to_dfa(parse("X X X X a"), {"a"}, 100));
}

TEST_CASE("automaton language matches the recursive semantics") {
    std::mt19937_64 rng(2024);
    long checks = 0, mismatches = 0;
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 1 + i % 3;
        std::vector<std::string> ap;
        for (std::size_t j = 0; j < n; ++j) ap.push_back(std::string(1, static_cast<char>('a' + j)));
        const auto f = test::random_formula(rng, ap, 4);
        const Dfa d = to_dfa(f, ap);
        const Dfa nd = to_dfa(make_not(f), ap);
        for (int t = 0; t < 100; ++t) {
            const auto rho = test::random_trace(rng, n, 8);
            const bool truth = evaluate(f, rho, 0, ap);
            mismatches += d.accepts(rho) != truth;
            mismatches += nd.accepts(rho) == truth;
            ++checks;
        }
    }
    CHECK(checks == 20000);
    CHECK(mismatches == 0);
}

TEST_CASE("normal form gives the same minimal automaton") {
    std::mt19937_64 rng(99);
    const std::vector<std::string> ap{"a", "b"};
    for (int i = 0; i < 200; ++i) {
        const auto f = test::random_formula(rng, ap, 4);
        const Dfa d = to_dfa(f, ap), dn = to_dfa(normalize(f), ap);
        CHECK(d.num_states == dn.num_states);
        CHECK(d.delta == dn.delta);
        CHECK(d.accepting == dn.accepting);
    }
    CHECK(equal(normalize(parse("b & (a & true) & b")), parse("a & b")));
    CHECK(equal(normalize(parse("a & !a | c")), parse("c")));
    CHECK(equal(normalize(parse("!(a | !b)")), normalize(parse("b & !a"))));
    CHECK(equal(normalize(parse("X (b | a)")), parse("X (a | b)")));
}

TEST_CASE("minimize is idempotent and merges equivalent states") {
    Dfa d;
    d.ap = {"a"};
    d.num_states = 4;
    // 0 -a-> 1, 0 -!a-> 2, 1 and 2 are both accepting sinks into 3, 3 accepting loop
    d.delta = {2, 1, 3, 3, 3, 3, 3, 3};
    d.accepting = {false, true, true, true};
    const Dfa m = minimize(d);
    CHECK(m.num_states == 2);
    const Dfa mm = minimize(m);
    CHECK(mm.delta == m.delta);
    CHECK(mm.accepting == m.accepting);
}

TEST_CASE("dfa text export") {
    std::ostringstream out;
    write_dfa(out, to_dfa(parse("F a"), {"a"}));
    CHECK(out.str() ==
          "swsynth-dfa 1\nap a\nstates 2\ninitial 0\n"
          "# state accepting | successor for each symbol bitmask 0..1\n0 0 | 0 1\n1 1 | 1 1\n");
}
