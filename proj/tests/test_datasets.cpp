#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "rbmcal/datasets.hpp"
#include "rbmcal/io_util.hpp"

using namespace rbmcal;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    auto path = fs::temp_directory_path() / name;
    write_text_file(path.string(), content);
    return path;
}

bool row_or_column_constant(const Bits& p, int rows, int cols) {
    bool rows_ok = true, cols_ok = true;
    for (int r = 0; r < rows && rows_ok; ++r)
        for (int c = 1; c < cols; ++c)
            if (p[std::size_t(r) * std::size_t(cols) + std::size_t(c)] !=
                p[std::size_t(r) * std::size_t(cols)])
                rows_ok = false;
    for (int c = 0; c < cols && cols_ok; ++c)
        for (int r = 1; r < rows; ++r)
            if (p[std::size_t(r) * std::size_t(cols) + std::size_t(c)] != p[std::size_t(c)])
                cols_ok = false;
    return rows_ok || cols_ok;
}

}  // namespace

TEST_CASE("bars and stripes: distinct pattern counts") {
    CHECK(generate_bars_and_stripes(2, 2).size() == 6);
    CHECK(generate_bars_and_stripes(3, 3).size() == 14);
    CHECK(generate_bars_and_stripes(3, 4).size() == 22);  // 2^3 + 2^4 - 2
}

TEST_CASE("bars and stripes: every pattern is row- or column-constant and unique") {
    auto data = generate_bars_and_stripes(3, 4);
    std::set<Bits> seen;
    for (const auto& p : data) {
        CHECK(p.size() == 12);
        CHECK(row_or_column_constant(p, 3, 4));
        CHECK(seen.insert(p).second);
    }
}

TEST_CASE("ingest: single line, round trip, empty file") {
    auto path = temp_file("rbmcal_ds1.txt", "0101\n");
    auto data = ingest_binary_vectors(path.string());
    REQUIRE(data.size() == 1);
    CHECK(data[0] == Bits{0, 1, 0, 1});
    fs::remove(path);

    auto generated = generate_bars_and_stripes(3, 4);
    auto rt = fs::temp_directory_path() / "rbmcal_ds_rt.txt";
    write_binary_vectors(generated, rt.string());
    CHECK(ingest_binary_vectors(rt.string()) == generated);
    fs::remove(rt);

    auto empty = temp_file("rbmcal_ds_empty.txt", "");
    CHECK(ingest_binary_vectors(empty.string()).empty());
    fs::remove(empty);
}

TEST_CASE("ingest: malformed input names the line") {
    auto bad_char = temp_file("rbmcal_ds_bad.txt", "0101\n0121\n");
    try {
        ingest_binary_vectors(bad_char.string());
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    fs::remove(bad_char);

    auto ragged = temp_file("rbmcal_ds_rag.txt", "0101\n011\n");
    try {
        ingest_binary_vectors(ragged.string());
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(std::string(e.what()).find("ragged") != std::string::npos);
    }
    fs::remove(ragged);
}

TEST_CASE("coarse grain: pooling, normalization and thresholding") {
    // two 8-pixel rows pooled to 4 bits
    auto path = temp_file("rbmcal_img.txt",
                          "1.0 1.0 0.0 0.0 0.9 0.1 0.2 0.1\n"
                          "255 255 0 0 255 255 128 0\n");
    auto data = coarse_grain_images(path.string(), 4, 0.5);
    REQUIRE(data.size() == 2);
    CHECK(data[0] == Bits{1, 0, 0, 0});  // means 1.0, 0.0, 0.5, 0.15
    CHECK(data[1] == Bits{1, 0, 1, 0});  // 255-scale: 1.0, 0.0, 1.0, 0.25
    fs::remove(path);

    auto tiny = temp_file("rbmcal_img2.txt", "0.3 0.4\n");
    CHECK_THROWS_AS(coarse_grain_images(tiny.string(), 4), std::runtime_error);
    fs::remove(tiny);
}
