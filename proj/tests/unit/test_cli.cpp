#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "it2near/image_io.hpp"
#include "it2near/index_io.hpp"

#ifndef IT2NEAR_CLI_PATH
#error "IT2NEAR_CLI_PATH must point at the command-line binary"
#endif

using namespace it2near;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
};

/// Runs the CLI with a shell-quoted argument string; captures stdout only.
Run cli(const std::string& args) {
    const std::string cmd = std::string("'") + IT2NEAR_CLI_PATH + "' " + args + " 2>/dev/null";
    FILE* p = ::popen(cmd.c_str(), "r");
    std::string out;
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
    const int status = ::pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

class CliTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / ("it2near-cli-" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        ASSERT_EQ(cli("gen-synthetic --out " + (dir_ / "ds").string() + " --count 3 --width 65 --height 57").code, 0);
        ASSERT_EQ(cli("index --dataset " + (dir_ / "ds").string() + " --out " + idx()).code, 0);
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }

    static std::string idx() { return (dir_ / "index.txt").string(); }
    static std::string path(const std::string& name) { return (dir_ / name).string(); }

    static inline fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GeneratedDataset) {
    const auto labels = lines(slurp(dir_ / "ds" / "labels.csv"));
    ASSERT_EQ(labels.size(), 10u);
    EXPECT_EQ(labels[0], "filename,category");
    EXPECT_EQ(labels[9], "8.png,2");
    EXPECT_EQ(decode_image_file(dir_ / "ds" / "0.png").width, 65);
}

TEST_F(CliTest, IndexRoundTripIsBitExact) {
    const auto from_file = load_index(idx());
    const auto fresh = build_index(dir_ / "ds", DescriptionConfig{}, decode_image_file);
    EXPECT_EQ(from_file.images, fresh.images);
    EXPECT_EQ(from_file.fingerprint, fresh.fingerprint);
}

TEST_F(CliTest, QueryByImageFile) {
    const auto r = cli("query --index " + idx() + " --image " + (dir_ / "ds" / "0.png").string() +
                       " --measure it2bfnm --top 40");
    ASSERT_EQ(r.code, 0);
    const auto rows = lines(r.out);
    ASSERT_EQ(rows.size(), 10u);  // header + every indexed image
    EXPECT_EQ(rows[0], "query_id,candidate_id,measure,value,upper,lower,classes,budget_flag");
    EXPECT_EQ(rows[1].substr(0, 17), "0,0,it2bfnm,0,0,0");
    EXPECT_NE(rows[1].find(",complete"), std::string::npos);
}

TEST_F(CliTest, QueryByIdToFile) {
    ASSERT_EQ(cli("query --index " + idx() + " --id 5 --measure tnm --top 2 --out " + path("q.csv")).code, 0);
    const auto rows = lines(slurp(path("q.csv")));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1].substr(0, 12), "5,5,tnm,0,,,");
}

TEST_F(CliTest, JobsDoNotChangeOutput) {
    for (const char* m : {"tnm", "tfnm", "it2bfnm"}) {
        const auto a = cli("--jobs 1 query --index " + idx() + " --id 3 --measure " + m);
        const auto b = cli("--jobs 8 query --index " + idx() + " --id 3 --measure " + m);
        EXPECT_EQ(a.code, 0);
        EXPECT_EQ(a.out, b.out);
    }
    const auto a = cli("--jobs 1 eval --index " + idx() + " --measure tfnm --depth 3");
    const auto b = cli("--jobs 8 eval --index " + idx() + " --measure tfnm --depth 3");
    EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, Eval) {
    ASSERT_EQ(cli("eval --index " + idx() + " --measure tnm --depth 3 --out " + path("t.csv") + " --pr-out " +
                  path("pr.csv") + " --pr-depth 5")
                  .code,
              0);
    EXPECT_EQ(slurp(path("t.csv")), "category,avg_precision\n0,1\n1,1\n2,1\n");
    const auto pr = lines(slurp(path("pr.csv")));
    ASSERT_EQ(pr.size(), 6u);
    EXPECT_EQ(pr[0], "k,precision,recall");
    EXPECT_EQ(pr[3], "3,1,1");

    const auto excl = cli("eval --index " + idx() + " --measure tnm --depth 2 --exclude-category 1 --exclude-self");
    EXPECT_EQ(excl.out, "category,avg_precision\n0,1\n2,1\n");
}

TEST_F(CliTest, DumpClasses) {
    ASSERT_EQ(cli("query --index " + idx() + " --id 0 --measure tfnm --top 3 --out " + path("d.csv") +
                  " --dump-classes " + path("classes.csv") + " --dump-candidate 1")
                  .code,
              0);
    const auto rows = lines(slurp(path("classes.csv")));
    ASSERT_GT(rows.size(), 1u);
    EXPECT_EQ(rows[0], "envelope,class_id,side,image_id,row,col,mu");
    EXPECT_EQ(rows[1].substr(0, 8), "lower,0,");
}

TEST_F(CliTest, FingerprintMismatch) {
    const auto r = cli("query --index " + idx() + " --image " + (dir_ / "ds" / "0.png").string() + " --block-width 10");
    EXPECT_EQ(r.code, 8);
    EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, SpreadOverrideRefuzzifies) {
    const auto r = cli("query --index " + idx() + " --id 0 --spread 0 --top 9");
    ASSERT_EQ(r.code, 0);
    for (std::size_t i = 1; i < lines(r.out).size(); ++i) {
        std::istringstream row(lines(r.out)[i]);
        std::vector<std::string> f;
        for (std::string c; std::getline(row, c, ',');) f.push_back(c);
        EXPECT_EQ(f[4], f[5]);
    }
}

TEST_F(CliTest, ErrorCodes) {
    EXPECT_EQ(cli("").code, 2);
    EXPECT_EQ(cli("frobnicate").code, 2);
    EXPECT_EQ(cli("query --index " + idx()).code, 2);
    EXPECT_EQ(cli("query --index " + idx() + " --id 1 --epsilon 0.5 --epsilon-prime 0.4").code, 3);
    EXPECT_EQ(cli("query --index " + idx() + " --id 1 --measure cosine").code, 3);
    EXPECT_EQ(cli("query --index " + idx() + " --id 4242").code, 3);
    EXPECT_EQ(cli("index --dataset " + path("ds") + " --out " + path("x.txt") + " --probes hue").code, 5);
    EXPECT_EQ(cli("index --dataset " + path("nothing") + " --out " + path("x.txt")).code, 10);
    std::ofstream(path("bad.txt")) << "garbage\n";
    EXPECT_EQ(cli("query --index " + path("bad.txt") + " --id 1").code, 11);
    EXPECT_EQ(cli("query --index " + idx() + " --image " + path("bad.txt")).code, 12);
    EXPECT_EQ(cli("query --index " + idx() + " --image " + path("ds/0.png") + " --id 3").code, 2);
}

TEST_F(CliTest, TinyImageQuery) {
    write_image_file(path("tiny.png"), Image(5, 5));
    EXPECT_EQ(cli("query --index " + idx() + " --image " + path("tiny.png")).code, 4);
}

TEST_F(CliTest, HelpListsDefaults) {
    const auto r = cli("query --help");
    EXPECT_EQ(r.code, 0);
    for (const char* s : {"--epsilon FLOAT [0.3]", "--epsilon-prime FLOAT [0.45]", "--block-width INT [13]",
                          "--block-height INT [19]", "--top UINT [40]", "--measure TEXT [it2bfnm]"})
        EXPECT_NE(r.out.find(s), std::string::npos) << s;
    EXPECT_NE(cli("eval --help").out.find("--depth UINT [100]"), std::string::npos);
    EXPECT_NE(cli("--help").out.find("--seed UINT [0]"), std::string::npos);
}

TEST_F(CliTest, MfPlot) {
    const auto r = cli("mf-plot --family beta --params 1,1,0,1 --samples 5");
    EXPECT_EQ(r.out, "x,grade\n0,0\n0.25,0.75\n0.5,1\n0.75,0.75\n1,0\n");
    const auto it2 = lines(cli("mf-plot --family it2beta --params 2,2,0,1,0.1 --samples 11").out);
    ASSERT_EQ(it2.size(), 12u);
    EXPECT_EQ(it2[0], "x,lower,upper");
    const auto centered = cli("mf-plot --family beta-centered --params 0.5,1,1,1 --samples 5").out;
    EXPECT_EQ(centered, r.out);
    EXPECT_EQ(cli("mf-plot --family beta --params 1,1,0").code, 3);
    EXPECT_EQ(cli("mf-plot --family beta --params 0,1,0,1").code, 3);
    ASSERT_EQ(cli("mf-plot --family gaussian --params 0.5,0.1 --samples 3 --out " + path("g.csv")).code, 0);
    EXPECT_EQ(slurp(path("g.csv")), "x,grade\n0,3.72665317e-06\n0.5,1\n1,3.72665317e-06\n");
}
