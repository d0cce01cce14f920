#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "testutil.hpp"
#include "wslln/checkpoint.hpp"

using namespace wslln;
using testutil::TempDir;

TEST_CASE("checkpoint round trip is bit-exact") {
    TempDir tmp;
    ModelParams p = init_params(1234, 8, 6, 16, 8);
    fs::path path = tmp.path / "m.wscp";
    save_checkpoint(p, 5, path);

    Checkpoint back = load_checkpoint(path);
    CHECK(back.k == 5);
    CHECK(back.params.Dv == 8);
    CHECK(back.params.Dq == 6);
    CHECK(back.params.d == 16);
    CHECK(back.params.h == 8);

    auto ta = p.tensors(), tb = back.params.tensors();
    REQUIRE(ta.size() == tb.size());
    for (size_t i = 0; i < ta.size(); ++i) {
        CHECK(ta[i].first == tb[i].first);
        REQUIRE(ta[i].second->same_shape(*tb[i].second));
        CHECK(std::memcmp(ta[i].second->a.data(), tb[i].second->a.data(),
                          ta[i].second->size() * sizeof(double)) == 0);
    }

    // saving the loaded params reproduces the file byte for byte
    fs::path path2 = tmp.path / "m2.wscp";
    save_checkpoint(back.params, back.k, path2);
    CHECK(testutil::slurp(path) == testutil::slurp(path2));
}

TEST_CASE("checkpoint loader validates the container") {
    TempDir tmp;
    ModelParams p = init_params(9, 4, 4, 8, 4);
    fs::path path = tmp.path / "m.wscp";
    save_checkpoint(p, 3, path);
    std::string good = testutil::slurp(path);

    SECTION("wrong magic") {
        std::string bad = good;
        bad[1] = 'X';
        detail::write_file(path, bad);
        CHECK_THROWS(load_checkpoint(path));
    }
    SECTION("wrong version") {
        std::string bad = good;
        bad[4] = 42;
        detail::write_file(path, bad);
        CHECK_THROWS(load_checkpoint(path));
    }
    SECTION("truncated tensor data") {
        detail::write_file(path, good.substr(0, good.size() - 17));
        CHECK_THROWS(load_checkpoint(path));
    }
    SECTION("missing file") {
        CHECK_THROWS(load_checkpoint(tmp.path / "absent.wscp"));
    }
}
