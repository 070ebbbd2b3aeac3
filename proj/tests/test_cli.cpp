// End-to-end checks of the coalsort binary: spawn COALSORT_BIN, capture its
// streams, and pin exit codes, output formats, and on-disk artifacts.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kBin = COALSORT_BIN;

struct TempDir {
    fs::path path;

    TempDir() {
        char tmpl[] = "/tmp/coalsort_cli_XXXXXX";
        path = mkdtemp(tmpl);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

struct RunResult {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args) {
    static TempDir capture;
    static int n = 0;
    fs::path out = capture.path / ("out" + std::to_string(n));
    fs::path err = capture.path / ("err" + std::to_string(n));
    ++n;
    std::string cmd =
        "'" + kBin + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    int status = std::system(cmd.c_str());
    RunResult r;
    if (status != -1 && WIFEXITED(status)) r.code = WEXITSTATUS(status);
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

std::vector<std::string> fields_of(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(part);
    return out;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// the verify table pads the oracle name to a fixed-width first column
std::string oracle_row(const std::string& out, const std::string& name) {
    for (const auto& line : lines_of(out))
        if (line.rfind(name + " ", 0) == 0) return line;
    return "";
}

std::vector<fs::path> rel_files(const fs::path& root) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
    std::sort(out.begin(), out.end());
    return out;
}

void patch_byte(const fs::path& p, std::streamoff off, char value) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(f.good());
    f.seekp(off);
    f.write(&value, 1);
}

// 12 images, 16x16, deterministic; the workhorse fixture for dataset commands
std::string make_dataset(const TempDir& td, const std::string& name, uint64_t seed,
                         const std::string& extra = "") {
    std::string dir = td.sub(name);
    RunResult r = run_cli("synth --out " + dir + " --seed " + std::to_string(seed) +
                          " --per-class 6 --image-size 16 " + extra);
    REQUIRE(r.code == 0);
    return dir;
}

std::string tiny_train_config(const TempDir& td) {
    std::string path = td.sub("tiny.cfg");
    std::ofstream f(path);
    f << "# smoke-test network, one layer in one block\n"
      << "train.epochs = 1   # the --epochs flag must win over this\n"
      << "train.batch_size=8\n"
      << "train.seed = 5\n"
      << "network.input_size = 16\n"
      << "network.stem_channels = 2\n"
      << "network.growth_rate = 2\n"
      << "network.block_sizes = 1\n"
      << "network.compression = 0.5\n"
      << "gp.latent_noise = 0.1\n";
    return path;
}

}  // namespace

TEST_CASE("cli: usage errors exit 2") {
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("synth").code == 2);           // missing required --out
    CHECK(run_cli("predict --data x").code == 2);  // missing required --model

    TempDir td;
    RunResult flip = run_cli("synth --out " + td.sub("ds") + " --label-flip 1.5");
    CHECK(flip.code == 2);

    RunResult help = run_cli("--help");
    CHECK(help.code == 0);
    for (const char* sub : {"synth", "extract", "train", "predict", "evaluate", "verify"})
        CHECK(contains(help.out, sub));
}

TEST_CASE("cli: synth writes a labeled image tree and reports counts") {
    TempDir td;
    std::string dir = td.sub("ds");
    RunResult r = run_cli("synth --out " + dir + " --seed 7 --per-class 6 --image-size 16");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "wrote 12 images (8 train, 4 test, 0 flipped labels) under " + dir));

    CHECK(fs::exists(fs::path(dir) / "manifest.json"));
    CHECK(fs::exists(fs::path(dir) / "train" / "coal" / "coal_0002.png"));
    CHECK(fs::exists(fs::path(dir) / "test" / "waste" / "waste_0000.png"));

    // refuses to clobber a non-empty directory unless forced
    RunResult again = run_cli("synth --out " + dir + " --seed 7 --per-class 6 --image-size 16");
    CHECK(again.code == 3);
    CHECK(contains(again.err, "exists and is not empty"));
    CHECK(run_cli("synth --out " + dir +
                  " --seed 7 --per-class 6 --image-size 16 --force").code == 0);

    // a full flip renames every training image into the opposite class dir
    RunResult flipped = run_cli("synth --out " + td.sub("flip") +
                                " --seed 7 --per-class 6 --image-size 16 --label-flip 1");
    REQUIRE(flipped.code == 0);
    CHECK(contains(flipped.out, "8 flipped labels"));
    CHECK(fs::exists(fs::path(td.sub("flip")) / "train" / "waste" / "coal_0002.png"));
}

TEST_CASE("cli: synth output is byte-identical for a fixed seed") {
    TempDir td;
    fs::path a = make_dataset(td, "a", 11), b = make_dataset(td, "b", 11);
    fs::path c = make_dataset(td, "c", 12);

    auto fa = rel_files(a), fb = rel_files(b), fc = rel_files(c);
    REQUIRE(fa == fb);
    for (const auto& rel : fa) CHECK(slurp(a / rel) == slurp(b / rel));

    REQUIRE(fa == fc);  // same names, different pixels
    bool any_differs = false;
    for (const auto& rel : fa) any_differs = any_differs || slurp(a / rel) != slurp(c / rel);
    CHECK(any_differs);
}

TEST_CASE("cli: extract prints per-method feature tables") {
    TempDir td;
    std::string ds = make_dataset(td, "ds", 3);

    const std::pair<const char*, size_t> widths[] = {{"lbp", 80}, {"glcm", 24}, {"msws", 54}};
    for (auto [method, dim] : widths) {
        RunResult r = run_cli("extract --data " + ds + " --method " + method +
                              " --input-size 16");
        REQUIRE(r.code == 0);
        auto rows = lines_of(r.out);
        REQUIRE(rows.size() == 13);  // header + 12 images
        auto header = fields_of(rows[0]);
        REQUIRE(header.size() == 3 + dim);
        CHECK(header[0] == "image_id");
        CHECK(header[1] == "label");
        CHECK(header[2] == "split");
        CHECK(header[3] == "f0");
        CHECK(header.back() == "f" + std::to_string(dim - 1));
        for (size_t i = 1; i < rows.size(); ++i)
            CHECK(fields_of(rows[i]).size() == 3 + dim);
    }

    // --out writes exactly what stdout would have carried
    std::string csv = td.sub("f.csv");
    RunResult to_file = run_cli("extract --data " + ds + " --method glcm --input-size 16 --out " +
                                csv);
    REQUIRE(to_file.code == 0);
    CHECK(to_file.out.empty());
    CHECK(slurp(csv) ==
          run_cli("extract --data " + ds + " --method glcm --input-size 16").out);

    RunResult bad = run_cli("extract --data " + ds + " --method sift");
    CHECK(bad.code == 2);
    CHECK(contains(bad.err, "valid methods"));

    CHECK(run_cli("extract --data " + td.sub("nowhere") + " --method lbp").code == 3);
}

TEST_CASE("cli: train writes model, metrics, and curve files; flags beat config") {
    TempDir td;
    std::string ds = make_dataset(td, "ds", 3);
    std::string cfg = tiny_train_config(td);
    std::string out = td.sub("model");

    RunResult r = run_cli("train --data " + ds + " --out " + out + " --config " + cfg +
                          " --epochs 2");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "model=densenet-gp"));
    CHECK(contains(r.out, "skipped_batches=0"));
    CHECK(contains(r.out, "out=" + out));

    for (const char* f : {"model.json", "checkpoint.bin", "gp.bin", "metrics.json", "curve.csv"})
        CHECK(fs::exists(fs::path(out) / f));

    auto curve = lines_of(slurp(fs::path(out) / "curve.csv"));
    REQUIRE(curve.size() == 3);  // --epochs 2 overrode the config's 1
    CHECK(curve[0] == "epoch,loss,train_acc,test_acc");
    CHECK(curve[1].rfind("1,", 0) == 0);
    CHECK(curve[2].rfind("2,", 0) == 0);
    CHECK(contains(slurp(fs::path(out) / "metrics.json"), "densenet-gp"));
}

TEST_CASE("cli: train rejects unknown models, config keys, and malformed config") {
    TempDir td;
    std::string ds = make_dataset(td, "ds", 3);

    RunResult model = run_cli("train --data " + ds + " --out " + td.sub("m") +
                              " --model resnet");
    CHECK(model.code == 2);
    CHECK(contains(model.err, "densenet-gp"));
    CHECK(contains(model.err, "msws-gp"));

    auto write_cfg = [&](const std::string& name, const std::string& body) {
        std::ofstream(td.sub(name)) << body;
        return td.sub(name);
    };
    RunResult key = run_cli("train --data " + ds + " --out " + td.sub("m") + " --config " +
                            write_cfg("k.cfg", "bogus.key = 1\n"));
    CHECK(key.code == 2);
    CHECK(contains(key.err, "unknown config key 'bogus.key'"));

    RunResult eq = run_cli("train --data " + ds + " --out " + td.sub("m") + " --config " +
                           write_cfg("e.cfg", "train.epochs\n"));
    CHECK(eq.code == 2);
    CHECK(contains(eq.err, "expected key = value"));

    RunResult num = run_cli("train --data " + ds + " --out " + td.sub("m") + " --config " +
                            write_cfg("n.cfg", "train.epochs = soon\n"));
    CHECK(num.code == 2);
    CHECK(contains(num.err, "not an integer"));

    RunResult missing = run_cli("train --data " + ds + " --out " + td.sub("m") +
                                " --config " + td.sub("ghost.cfg"));
    CHECK(missing.code == 3);
    CHECK(contains(missing.err, "cannot open config file"));
}

TEST_CASE("cli: predict emits probabilities and honors --ids") {
    TempDir td;
    std::string ds = make_dataset(td, "ds", 9);
    std::string model = td.sub("model");
    REQUIRE(run_cli("train --data " + ds + " --out " + model +
                    " --model msws-gp --input-size 16 --epochs 1").code == 0);

    RunResult all = run_cli("predict --model " + model + " --data " + ds);
    REQUIRE(all.code == 0);
    auto rows = lines_of(all.out);
    REQUIRE(rows.size() == 13);
    CHECK(rows[0] == "image_id,probability,label_if_known");
    for (size_t i = 1; i < rows.size(); ++i) {
        auto f = fields_of(rows[i]);
        REQUIRE(f.size() == 3);
        double p = std::strtod(f[1].c_str(), nullptr);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK((f[2] == "0" || f[2] == "1"));
    }

    // a repeated run is byte-identical
    CHECK(run_cli("predict --model " + model + " --data " + ds).out == all.out);

    // --ids selects rows in the order given
    std::string id_a = fields_of(rows[4])[0], id_b = fields_of(rows[1])[0];
    RunResult picked = run_cli("predict --model " + model + " --data " + ds + " --ids " +
                               id_a + "," + id_b);
    REQUIRE(picked.code == 0);
    auto picked_rows = lines_of(picked.out);
    REQUIRE(picked_rows.size() == 3);
    CHECK(picked_rows[1] == rows[4]);
    CHECK(picked_rows[2] == rows[1]);

    RunResult unknown = run_cli("predict --model " + model + " --data " + ds +
                                " --ids no/such/image.png");
    CHECK(unknown.code == 3);
    CHECK(contains(unknown.err, "unknown image id"));
}

TEST_CASE("cli: evaluate reports split accuracy and writes json") {
    TempDir td;
    std::string ds = make_dataset(td, "ds", 9);
    std::string model = td.sub("model");
    REQUIRE(run_cli("train --data " + ds + " --out " + model +
                    " --model msws-gp --input-size 16 --epochs 1").code == 0);

    RunResult test = run_cli("evaluate --model " + model + " --data " + ds);
    REQUIRE(test.code == 0);
    CHECK(contains(test.out, "split=test n=4 accuracy="));

    std::string json = td.sub("metrics.json");
    RunResult all = run_cli("evaluate --model " + model + " --data " + ds +
                            " --split all --out " + json);
    REQUIRE(all.code == 0);
    CHECK(contains(all.out, "split=all n=12 accuracy="));
    CHECK(contains(slurp(json), "\"accuracy\""));
    CHECK(contains(slurp(json), "\"n\": 12"));

    RunResult bad = run_cli("evaluate --model " + model + " --data " + ds + " --split half");
    CHECK(bad.code == 2);
    CHECK(contains(bad.err, "--split must be train, test, or all"));

    // untagged images carry no split, so asking for one is a usage error
    fs::create_directories(td.path / "flat" / "coal");
    fs::create_directories(td.path / "flat" / "waste");
    fs::copy_file(fs::path(ds) / "train" / "coal" / "coal_0002.png",
                  td.path / "flat" / "coal" / "a.png");
    fs::copy_file(fs::path(ds) / "train" / "waste" / "waste_0002.png",
                  td.path / "flat" / "waste" / "b.png");
    RunResult none = run_cli("evaluate --model " + model + " --data " + td.sub("flat"));
    CHECK(none.code == 2);
    CHECK(contains(none.err, "no samples in split 'test'"));
}

TEST_CASE("cli: corrupted or missing model files are refused") {
    TempDir td;
    std::string ds = make_dataset(td, "ds", 9);
    std::string model = td.sub("model");
    REQUIRE(run_cli("train --data " + ds + " --out " + model +
                    " --model msws-gp --input-size 16 --epochs 1").code == 0);

    RunResult gone = run_cli("predict --model " + td.sub("nowhere") + " --data " + ds);
    CHECK(gone.code == 3);
    CHECK(contains(gone.err, "error:"));

    patch_byte(fs::path(model) / "gp.bin", 4, '\x7f');  // version byte
    RunResult bad = run_cli("predict --model " + model + " --data " + ds);
    CHECK(bad.code == 3);
    CHECK(contains(bad.err, "error:"));
}

TEST_CASE("cli: verify prints one line per oracle and gates the exit code") {
    RunResult optim = run_cli("verify --only optim");
    CHECK(optim.code == 0);
    CHECK(contains(lines_of(optim.out)[0], "oracle"));
    CHECK(contains(oracle_row(optim.out, "adam-recurrence"), "PASS"));

    RunResult nn = run_cli("verify --only nn");
    CHECK(nn.code == 0);
    CHECK(contains(oracle_row(nn.out, "gradient-check"), "PASS"));
    CHECK(contains(oracle_row(nn.out, "dense-connectivity"), "PASS"));

    RunResult feats = run_cli("verify --only features");
    CHECK(feats.code == 0);
    CHECK(contains(oracle_row(feats.out, "texture-features"), "PASS"));

    RunResult bogus = run_cli("verify --only bogus");
    CHECK(bogus.code == 2);
    CHECK(contains(bogus.err, "no oracles in family"));

    // the probit approximation misses its gate by a hair, and the suite says so
    RunResult full = run_cli("verify");
    CHECK(full.code == 4);
    CHECK(contains(full.err, "verification failed"));
    int pass = 0, fail = 0;
    for (const auto& line : lines_of(full.out)) {
        if (contains(line, " PASS ")) ++pass;
        if (contains(line, " FAIL ")) ++fail;
    }
    CHECK(pass == 6);
    CHECK(fail == 1);
    CHECK(contains(oracle_row(full.out, "probit-quadrature"), "FAIL"));
    CHECK(contains(oracle_row(full.out, "gp-regression"), "PASS"));
    CHECK(contains(oracle_row(full.out, "laplace-mode"), "PASS"));
}

TEST_CASE("cli: an injected fault makes its oracle fail") {
    const std::pair<const char*, const char*> cases[] = {
        {"optim", "adam-recurrence"},
        {"nn", "gradient-check"},
        {"nn", "dense-connectivity"},
        {"features", "texture-features"},
        {"gp", "gp-regression"},
        {"gp", "laplace-mode"},
    };
    for (auto [family, name] : cases) {
        RunResult r = run_cli(std::string("verify --only ") + family + " --inject-fault " + name);
        INFO(name);
        CHECK(r.code == 4);
        CHECK(contains(oracle_row(r.out, name), "FAIL"));
    }
}
