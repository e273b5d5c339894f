#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "mobench/util/clock.hpp"
#include "mobench/util/encoding.hpp"
#include "mobench/util/fs.hpp"
#include "mobench/util/image.hpp"
#include "mobench/util/json_scan.hpp"
#include "mobench/util/subprocess.hpp"
#include "mobench/util/text.hpp"

using namespace mobench;

TEST_CASE("utf8 round trip and whitespace stripping") {
    const std::string s = "Ab 中文\t　x Y";
    CHECK(text::encode_utf8(text::decode_utf8(s)) == s);
    CHECK(text::strip_whitespace(s) == "Ab中文xY");
    CHECK(text::to_lower("ÉCOLE Straße ΣΑ Привет 订单") == "école straße σα привет 订单");
    CHECK(text::decode_utf8("\xff") == std::u32string(1, U'�'));
}

TEST_CASE("trim, substitute, split_lines") {
    CHECK(text::trim("  a b \n") == "a b");
    CHECK(text::substitute("{a} and {b} {c}", {{"a", "1"}, {"b", "{a}"}}) == "1 and {a} {c}");
    CHECK(text::split_lines("a\nb\r\n\nc") == std::vector<std::string>{"a", "b", "", "c"});
}

TEST_CASE("shell_quote survives the shell") {
    for (const std::string s : {"plain", "it's", "a b", "$(rm -rf x)", "", "\"q\"\\"}) {
        const auto r = run_command({"/bin/sh", "-c", "printf %s " + text::shell_quote(s)});
        CHECK(r.out == s);
    }
}

TEST_CASE("sha256 and base64 known vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
    CHECK(base64_encode("fo") == "Zm8=");
    std::mt19937 rng(1);
    for (int i = 0; i < 200; ++i) {
        std::string bytes(testing::uniform(rng, 0, 40), '\0');
        for (auto& c : bytes) c = static_cast<char>(testing::uniform(rng, 0, 255));
        CHECK(base64_decode(base64_encode(bytes)) == bytes);
    }
}

TEST_CASE("png round trip and dimensions") {
    Image img(7, 5, Rgb{1, 2, 3});
    img.set(6, 4, kRed);
    const auto png = encode_png(img);
    CHECK(png_dimensions(png) == std::pair{7, 5});
    CHECK(decode_png(png) == img);
    CHECK_THROWS_AS(decode_png("not a png"), ParseError);
}

TEST_CASE("fill_disc matches the squared-distance rule") {
    std::mt19937 rng(7);
    for (int iter = 0; iter < 50; ++iter) {
        Image img(40, 30);
        const int cx = testing::uniform(rng, -5, 45), cy = testing::uniform(rng, -5, 35);
        const int r = testing::uniform(rng, 0, 12);
        fill_disc(img, cx, cy, r, kRed);
        for (int y = 0; y < 30; ++y) {
            for (int x = 0; x < 40; ++x) {
                const bool inside = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
                REQUIRE((img.at(x, y) == kRed) == inside);
            }
        }
    }
}

TEST_CASE("downscale keeps aspect and bounds the long edge") {
    const Image img(2000, 1000, kBlue);
    const auto small = downscale_to_max_edge(img, 1024);
    CHECK(small.width() == 1024);
    CHECK(small.height() == 512);
    CHECK(small.at(10, 10) == kBlue);
    CHECK(downscale_to_max_edge(Image(100, 50), 1024).width() == 100);
}

TEST_CASE("wrap_text fits every line") {
    const auto lines = wrap_text("Tap at (540, 960) then type a rather long string of words", 200, 0.5, 1);
    CHECK(lines.size() > 1);
    for (const auto& l : lines) CHECK(text_width(l, 0.5, 1) <= 200);
}

TEST_CASE("json candidates run from last to first") {
    const auto c = json_object_candidates(R"(a {"x": "}"} b {"y": {"z": 1}})");
    REQUIRE(c.size() == 3);
    CHECK(c[0] == R"({"z": 1})");
    CHECK(c[1] == R"({"y": {"z": 1}})");
    CHECK(c[2] == R"({"x": "}"})");
    CHECK(pythonic_to_json(R"({"a": True, "b": None, "c": "True"})") == R"({"a": true, "b": null, "c": "True"})");
    CHECK(pythonic_to_json(R"({'a': 'it\'s', 'b': 'say "hi"', "c": 'x\ny'})") ==
          R"({"a": "it's", "b": "say \"hi\"", "c": "x\ny"})");
}

TEST_CASE("simulated clock ticks deterministically") {
    SimulatedClock a(0.5, 10.0), b(0.5, 10.0);
    for (int i = 0; i < 5; ++i) CHECK(a.now() == b.now());
    CHECK(a.now() > 10.0);
}

TEST_CASE("run_command captures output, exit code and timeouts") {
    auto r = run_command({"/bin/sh", "-c", "cat; echo err >&2; exit 3"}, "in");
    CHECK(r.out == "in");
    CHECK(r.err == "err\n");
    CHECK(r.exit_code == 3);
    r = run_command({"/bin/sh", "-c", "sleep 5"}, {}, std::chrono::milliseconds(100));
    CHECK(r.timed_out);
}

TEST_CASE("process line exchange") {
    Process p({"/bin/sh", "-c", "read x; echo got:$x"}, {});
    CHECK(p.write_line("hi"));
    CHECK(p.read_line(std::chrono::seconds(5)) == "got:hi");
    CHECK(p.wait(std::chrono::seconds(5)) == 0);
}

TEST_CASE("atomic write replaces the file") {
    testing::TempDir tmp;
    const auto path = tmp / "f.txt";
    fs::write_file_atomic(path, "one");
    fs::write_file_atomic(path, "two");
    CHECK(fs::read_file(path) == "two");
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    CHECK_THROWS_AS(fs::read_file(tmp / "missing"), Error);
}
