// test_config_io.cpp — Config parsing and emission, output documents, CSV series and comparison

#include "catch2/catch_amalgamated.hpp"

#include "esln/config.hpp"
#include "esln/io.hpp"
#include "test_util.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace esln;
using Catch::Approx;
using nlohmann::json;

namespace {

json minimal_doc() {
    return json::parse(R"({
      "system": {
        "dim": 2, "hbar": 1.0, "beta": 1.0,
        "h0": [[0.0, 0.5], [0.5, 0.0]],
        "couplings": [ [[0.3, 0.0], [0.0, -0.3]] ]
      },
      "bath": { "masses": [1.0], "lambda": [[2.0]] },
      "grids": { "t_f": 1.0, "n_t": 11, "n_tau": 6 },
      "ensemble": { "n_traj": 64, "master_seed": 5 }
    })");
}

std::string field_of(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ValidationError& e) {
        return e.field();
    }
    return "";
}

std::filesystem::path scratch_dir() {
    const auto p = std::filesystem::temp_directory_path() / "esln_test_config_io";
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("minimal document parses with defaults", "[config]") {
    const RunConfig c = parse_config(minimal_doc());
    CHECK(c.system.dim == 2);
    CHECK(c.system.n_sites() == 1);
    CHECK(c.system.h0(0, 1) == cplx(0.5, 0.0));
    CHECK(c.grids.n_t == 11);
    CHECK(c.ensemble.master_seed == 5);
    CHECK(c.ensemble.normalize == NormalizeMode::Ensemble);
    CHECK(c.noise.factorization == FactorMethod::Takagi);
    CHECK(c.noise.dim_cap == 6000);
    CHECK(c.noise.cross_kernel == CrossKernel::Contour);
    CHECK(c.oracle.n_levels == 8);
    CHECK(c.oracle.cap == 4096);
}

TEST_CASE("matrices accept [re, im] pairs", "[config]") {
    json doc = minimal_doc();
    doc["system"]["h0"] = json::parse("[[[1.0, 0.0], [0.0, -0.5]], [[0.0, 0.5], [2.0, 0.0]]]");
    const RunConfig c = parse_config(doc);
    CHECK(c.system.h0(0, 1) == cplx(0.0, -0.5));
    CHECK(c.system.h0(1, 0) == cplx(0.0, 0.5));
    doc["system"]["h0"] = json::parse("[[[1.0, 0.0], [0.0, 0.5]], [[0.0, 0.5], [2.0, 0.0]]]");
    CHECK(field_of(doc) == "system.h0");
}

TEST_CASE("validation errors name the field", "[config]") {
    json doc = minimal_doc();
    doc["bath"]["masses"] = {1.0, 1.0};
    doc["bath"]["lambda"] = json::parse("[[2.0, -1.0], [-0.9, 2.0]]");
    doc["system"]["couplings"].push_back(json::parse("[[0.1, 0.0], [0.0, 0.1]]"));
    CHECK(field_of(doc) == "bath.lambda");

    doc = minimal_doc();
    doc["grids"]["n_t"] = 1;
    CHECK(field_of(doc) == "grids.n_t");

    doc = minimal_doc();
    doc["grids"]["extra"] = 3;
    CHECK(field_of(doc) == "grids.extra");

    doc = minimal_doc();
    doc["colour"] = "blue";
    CHECK(field_of(doc) == "colour");

    doc = minimal_doc();
    doc["system"].erase("beta");
    CHECK(field_of(doc) == "system.beta");

    doc = minimal_doc();
    doc["ensemble"]["normalize"] = "sometimes";
    CHECK_THROWS_AS(parse_config(doc), ValidationError);

    doc = minimal_doc();
    doc["bath"]["masses"] = {1.0, 1.0};
    doc["bath"]["lambda"] = json::parse("[[2.0, -1.0], [-1.0, 2.0]]");
    CHECK(field_of(doc) == "system.couplings");

    doc = minimal_doc();
    doc["system"]["drives"] = json::parse(R"([{"op": [[1.0, 0.0], [0.0, -1.0]], "amplitude": [0.0, 1.0]}])");
    CHECK(field_of(doc) == "system.drives[0].amplitude");
}

TEST_CASE("syntax errors report line and column", "[config]") {
    const std::string text = "{\n  \"system\": {\n    \"dim\": 2,,\n  }\n}\n";
    try {
        parse_config_text(text);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        const std::string what = e.what();
        CHECK(what.find("line 3") != std::string::npos);
        CHECK(what.find("column") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config("/nonexistent/esln.json"), ParseError);
}

TEST_CASE("emit then parse is the identity", "[config]") {
    json doc = minimal_doc();
    doc["system"]["drives"] =
        json::parse(R"([{"op": [[0.5, 0.0], [0.0, -0.5]], "amplitude": [0.0, 1.0, -1.0], "dt": 0.5}])");
    doc["system"]["h0"] = json::parse("[[[1.0, 0.0], [0.1, -0.5]], [[0.1, 0.5], [2.0, 0.0]]]");
    doc["ensemble"]["normalize"] = "per-trajectory";
    doc["ensemble"]["checkpoint_interval"] = 128;
    doc["noise"] = {{"factorization", "cholesky"}, {"dim_cap", 100}, {"cross_kernel", "printed"}};
    doc["oracle"] = {{"n_levels", 5}, {"cap", 999}, {"n_substeps", 3}};
    doc["output"] = {{"document", "a.json"}, {"csv", "a.csv"}, {"checkpoint", "a.ckpt"}};
    const RunConfig c = parse_config(doc);
    const json emitted = emit_config(c);
    const RunConfig again = parse_config(emitted);
    CHECK(again == c);
    CHECK(emit_config(again).dump() == emitted.dump());
    CHECK(parse_config_text(emitted.dump(2)) == c);

    RunConfig changed = c;
    changed.ensemble.master_seed += 1;
    CHECK_FALSE(changed == c);
}

TEST_CASE("shipped configurations parse", "[config]") {
    for (const char* name : {"acceptance.json", "small.json", "driven.json"}) {
        const RunConfig c = load_config(std::string(ESLN_CONFIG_DIR) + "/" + name);
        CHECK(parse_config(emit_config(c)) == c);
    }
    const RunConfig acc = load_config(std::string(ESLN_CONFIG_DIR) + "/acceptance.json");
    CHECK(acc.grids.n_t == 401);
    CHECK(acc.grids.n_tau == 101);
    CHECK(acc.ensemble.n_traj == 10000);
    CHECK(acc.bath.lambda(0, 1) == -0.5);
}

TEST_CASE("format_double round-trips", "[io]") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> n(0.0, 1e3);
    for (int k = 0; k < 1000; ++k) {
        const double x = n(gen) * std::pow(10.0, k % 40 - 20);
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(2.0) == "2");
}

TEST_CASE("series CSV round-trips and compares", "[io]") {
    std::mt19937_64 gen(4);
    const std::vector<double> times = {0.0, 0.25, 0.5};
    std::vector<CMatrix> mean;
    std::vector<Matrix> sr, si;
    for (int k = 0; k < 3; ++k) {
        mean.push_back(test::random_cmatrix(gen, 2, 2));
        sr.push_back(Matrix::Constant(2, 2, 0.1));
        si.push_back(Matrix::Constant(2, 2, 0.2));
    }
    const std::string text = series_csv(times, mean, &sr, &si);
    CHECK(text.substr(0, text.find('\n')) == "t,row,col,re,im,se_re,se_im");
    const auto rows = parse_csv(text);
    REQUIRE(rows.size() == 12);
    CHECK(rows[5].t == 0.25);
    CHECK(rows[5].row == 0);
    CHECK(rows[5].col == 1);
    CHECK(rows[5].re == mean[1](0, 1).real());
    CHECK(rows[5].se_im == 0.2);

    const CompareReport self = compare_series(rows, rows);
    CHECK(self.max_z == 0.0);
    CHECK(self.n_compared == 12);
    CHECK(self.pass());

    std::vector<CMatrix> shifted = mean;
    shifted[2](1, 0) += cplx(0.0, 3.0);
    const auto other = parse_csv(series_csv(times, shifted, nullptr, nullptr));
    const CompareReport rep = compare_series(rows, other);
    // |diff| = 3, combined SE = 0.2.
    CHECK(rep.max_z == Approx(15.0).epsilon(1e-9));
    CHECK(rep.worst.t == 0.5);
    CHECK(rep.worst.row == 1);
    CHECK(rep.worst.col == 0);
    CHECK(rep.n_over == 1);
    CHECK_FALSE(rep.pass());

    const auto truncated = std::vector<CsvRow>(rows.begin(), rows.begin() + 4);
    CHECK_THROWS(compare_series(rows, truncated));
    CHECK_THROWS_AS(parse_csv("a,b,c\n1,2,3\n"), ParseError);
}

TEST_CASE("atomic text files", "[io]") {
    const auto dir = scratch_dir();
    const std::string path = (dir / "doc.json").string();
    write_text(path, "{\"a\": 1}\n");
    write_text(path, "{\"a\": 2}\n");
    CHECK(read_json_file(path)["a"] == 2);
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
    CHECK_THROWS(read_json_file((dir / "missing.json").string()));
}

TEST_CASE("result documents, checkpoints and kernel tables", "[io]") {
    json doc = minimal_doc();
    doc["ensemble"]["block_size"] = 16;
    doc["ensemble"]["checkpoint_interval"] = 32;
    const RunConfig cfg = parse_config(doc);
    const Pipeline p = cfg.prepare();

    std::vector<EnsembleCheckpoint> saved;
    EnsembleOptions o = cfg.ensemble_options();
    o.on_checkpoint = [&](const EnsembleCheckpoint& c) { saved.push_back(c); };
    const EnsembleResult r = run_ensemble(p, o);
    REQUIRE(saved.size() == 2);

    const json out = result_document(cfg, p, r);
    CHECK(out["master_seed"] == 5);
    CHECK(out["mean_rho"].size() == 11);
    CHECK(out["mean_rho"][0][0][1].size() == 2);
    CHECK(out["stderr"].size() == 11);
    CHECK(out.contains("config"));
    CHECK_FALSE(out["config"].contains("output"));
    CHECK(parse_config(out["config"]) == cfg);
    const std::string bytes = dump_document(out);
    CHECK(bytes.back() == '\n');
    CHECK(dump_document(result_document(cfg, p, r)) == bytes);

    // Checkpoint round trip through the document format, then resume.
    const json ck = checkpoint_document(cfg, saved[0]);
    const EnsembleCheckpoint back = checkpoint_from_document(json::parse(dump_document(ck)), cfg);
    CHECK(back.next_block == saved[0].next_block);
    CHECK(back.n_ok == saved[0].n_ok);
    o.on_checkpoint = nullptr;
    const EnsembleResult resumed = run_ensemble(p, o, &back);
    CHECK(dump_document(result_document(cfg, p, resumed)) == bytes);

    RunConfig other = cfg;
    other.ensemble.master_seed = 6;
    CHECK_THROWS_AS(checkpoint_from_document(ck, other), ValidationError);

    const std::string real_table = kernel_table_real(p.kernels, p.grids);
    const std::string imag_table = kernel_table_imag(p.kernels, p.grids);
    CHECK(real_table.substr(0, real_table.find('\n')) == "t,i,j,L_R,L_I");
    CHECK(imag_table.substr(0, imag_table.find('\n')) == "tau,i,j,L_e,L_o");
    CHECK(std::count(real_table.begin(), real_table.end(), '\n') == 1 + 11);
    CHECK(std::count(imag_table.begin(), imag_table.end(), '\n') == 1 + 6);
    // First data row: t = 0, L_R(0) = coth(hbar beta w / 2) / (2 w), L_I(0) = 0.
    std::istringstream in(real_table);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    const double w = std::sqrt(2.0);
    std::vector<std::string> cells;
    std::stringstream ss(first);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 5);
    CHECK(std::stod(cells[3]) == Approx(1.0 / std::tanh(w / 2.0) / (2.0 * w)).epsilon(1e-14));
    CHECK(std::stod(cells[4]) == 0.0);
}
