#include <doctest.h>

#include <cstdio>
#include <string>

#include "phi4lsi/errors.hpp"
#include "phi4lsi/io.hpp"

using namespace phi4;

TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1e300, 0.0, 17.0 / 45.0}) {
        const std::string s = io::format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(io::format_double(1.0) == "1");
}

TEST_CASE("join_row") {
    CHECK(io::join_row({"a", "b", "c"}) == "a,b,c");
    CHECK(io::join_row({}) == "");
    CHECK(io::join_row({"x"}) == "x");
}

TEST_CASE("atomic write and read round trip") {
    const std::string path = "io_test_file.txt";
    io::write_text_atomic(path, "first\n");
    CHECK(io::read_text(path) == "first\n");
    io::write_text_atomic(path, "second\n");  // overwrite via rename
    CHECK(io::read_text(path) == "second\n");
    std::remove(path.c_str());
    CHECK_THROWS_AS(io::read_text(path), IoError);
    CHECK_THROWS_AS(io::write_text_atomic("no_such_dir/x.txt", "y"), IoError);
}

TEST_CASE("fnv1a digest is stable") {
    // fnv-1a 64-bit reference: empty -> offset basis, "a" -> af63dc4c8601ec8c
    CHECK(io::fnv1a(nullptr, 0) == 0xcbf29ce484222325ULL);
    CHECK(io::fnv1a("a", 1) == 0xaf63dc4c8601ec8cULL);
    CHECK(io::content_digest("") == "fnv1a:cbf29ce484222325");
    CHECK(io::content_digest("abc") == io::content_digest("abc"));
    CHECK(io::content_digest("abc") != io::content_digest("abd"));
}
