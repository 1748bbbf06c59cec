#include "patchsr/cli.hpp"
#include "patchsr/dictionary.hpp"
#include "patchsr/image_io.hpp"
#include "patchsr/metrics.hpp"
#include "patchsr/pipeline.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

using namespace patchsr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "patchsr");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "patchsr_cli";
  fs::create_directories(dir);
  return dir / name;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> read_report(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv.emplace(line.substr(0, eq), line.substr(eq + 1));
  }
  return kv;
}

Image random_image(std::uint64_t seed, Eigen::Index r, Eigen::Index c) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen);
  return Image(m);
}

}  // namespace

TEST_CASE("cli usage errors") {
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"degrade", "only-one"}).code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
  CHECK(run({"sr", "a", "b", "c", "--q", "notanumber"}).code == cli::kExitUsage);
}

TEST_CASE("cli degrade") {
  const auto hr = temp_path("hr.imgf");
  const auto lr = temp_path("lr.imgf");
  write_imgf(random_image(1, 32, 16), hr);

  Outcome o = run({"degrade", hr.string(), lr.string(), "--q", "4", "--noise-sigma", "0.01", "--seed", "9"});
  CHECK(o.code == 0);
  CHECK(o.out.find("q=4") != std::string::npos);
  CHECK(o.out.find("seed=9") != std::string::npos);
  const Image y = read_imgf(lr);
  CHECK(y.rows() == 8);
  CHECK(y.cols() == 4);
  const std::string first = read_bytes(lr);
  CHECK(run({"degrade", hr.string(), lr.string(), "--q", "4", "--noise-sigma", "0.01", "--seed", "9"}).code == 0);
  CHECK(read_bytes(lr) == first);

  // Identity chain is a lossless round trip in IMGF.
  CHECK(run({"degrade", hr.string(), lr.string(), "--psf-size", "1", "--q", "1"}).code == 0);
  CHECK(read_bytes(lr) == read_bytes(hr));

  o = run({"degrade", temp_path("nope.imgf").string(), lr.string()});
  CHECK(o.code == cli::kExitUsage);
  CHECK(o.err.find("nope.imgf") != std::string::npos);

  CHECK(run({"degrade", hr.string(), lr.string(), "--q", "5"}).code == cli::kExitUsage);
}

TEST_CASE("cli degrade turns 1024x512 into 256x128") {
  const auto hr = temp_path("big.pgm");
  const auto lr = temp_path("big_lr.imgf");
  write_pgm(Image(1024, 512, 0.5), hr);
  CHECK(run({"degrade", hr.string(), lr.string(), "--q", "4"}).code == 0);
  const Image y = read_image(lr);
  CHECK(y.rows() == 256);
  CHECK(y.cols() == 128);
}

TEST_CASE("cli gendict") {
  const auto d = temp_path("d.dict");
  CHECK(run({"gendict", d.string(), "--np", "64", "--nd", "256"}).code == 0);
  CHECK(load_dictionary(d) == overcomplete_dct(64, 256));
  CHECK(run({"gendict", d.string(), "--np", "64", "--nd", "256", "--text"}).code == 0);
  CHECK(load_dictionary(d) == overcomplete_dct(64, 256));

  CHECK(run({"gendict", d.string(), "--np", "63"}).code == cli::kExitUsage);
  const Outcome o = run({"gendict", d.string(), "--np", "64", "--nd", "300"});
  CHECK(o.code == cli::kExitUsage);
  CHECK(o.err.find("289") != std::string::npos);
}

TEST_CASE("cli sr defaults, report and extreme lambda") {
  const auto dict = temp_path("sr.dict");
  const auto lr = temp_path("sr_lr.imgf");
  const auto out = temp_path("sr_out.imgf");
  const auto rep = temp_path("sr.report");
  REQUIRE(run({"gendict", dict.string(), "--np", "64", "--nd", "100"}).code == 0);
  write_imgf(random_image(2, 6, 5), lr);

  Outcome o = run({"sr", lr.string(), dict.string(), out.string(), "--report", rep.string()});
  CHECK(o.code == 0);
  const Image x = read_imgf(out);
  CHECK(x.rows() == 24);
  CHECK(x.cols() == 20);

  const auto kv = read_report(rep);
  CHECK(kv.at("tau") == "1.01");
  CHECK(kv.at("tol") == "1e-05");
  CHECK(kv.at("max_iters") == "300");
  CHECK(kv.at("q") == "4");
  CHECK(kv.at("penalty") == "cauchy");
  CHECK(kv.at("input_shape") == "6x5");
  CHECK(kv.at("output_shape") == "24x20");
  CHECK(kv.at("patches") == "20");
  CHECK(kv.count("wall_time_s") == 1);
  const double gamma = std::stod(kv.at("gamma"));
  const double gamma_bar = std::stod(kv.at("gamma_bar"));
  CHECK(gamma == 1.01 * gamma_bar);
  CHECK(std::stod(kv.at("mu")) * std::stod(kv.at("L")) == doctest::Approx(1.0).epsilon(1e-15));

  o = run({"sr", lr.string(), dict.string(), out.string(), "--penalty", "l1", "--lambda", "1e9"});
  CHECK(o.code == 0);
  CHECK(read_imgf(out).pixels().isZero(0.0));

  CHECK(run({"sr", lr.string(), dict.string(), out.string(), "--penalty", "huber"}).code ==
        cli::kExitUsage);
  CHECK(run({"sr", lr.string(), dict.string(), out.string(), "--q", "3"}).code == cli::kExitUsage);
  CHECK(run({"sr", lr.string(), dict.string(), out.string(), "--tau", "1"}).code == cli::kExitUsage);
  CHECK(run({"sr", lr.string(), dict.string(), out.string(), "--lambda", "0.1,0.01"}).code ==
        cli::kExitUsage);
}

TEST_CASE("cli sr lambda sweep picks the best psnr") {
  const auto dict = temp_path("sw.dict");
  const auto hr = temp_path("sw_hr.imgf");
  const auto lr = temp_path("sw_lr.imgf");
  const auto out = temp_path("sw_out.imgf");
  const auto rep = temp_path("sw.report");
  REQUIRE(run({"gendict", dict.string(), "--np", "16", "--nd", "25"}).code == 0);
  write_imgf(random_image(3, 12, 12), hr);
  REQUIRE(run({"degrade", hr.string(), lr.string(), "--q", "2"}).code == 0);
  const Outcome o = run({"sr", lr.string(), dict.string(), out.string(), "--q", "2", "--lambda",
                         "1,1e-3", "--reference", hr.string(), "--report", rep.string()});
  CHECK(o.code == 0);
  CHECK(o.out.find("lambda=1 psnr=") != std::string::npos);
  CHECK(o.out.find("lambda=0.001 psnr=") != std::string::npos);
  const auto kv = read_report(rep);
  const double p0 = std::stod(kv.at("sweep.0.psnr"));
  const double p1 = std::stod(kv.at("sweep.1.psnr"));
  CHECK(std::stod(kv.at("psnr")) == std::max(p0, p1));
  CHECK(kv.at("lambda") == (p1 > p0 ? "0.001" : "1"));
  CHECK(kv.at("ssim_window") == "11");
  CHECK(psnr(read_imgf(out), read_imgf(hr)) == doctest::Approx(std::max(p0, p1)).epsilon(1e-6));
}

TEST_CASE("cli eval") {
  const auto a = temp_path("ea.imgf");
  const auto b = temp_path("eb.imgf");
  const Image ref = random_image(4, 16, 16);
  write_imgf(ref, a);
  Outcome o = run({"eval", a.string(), a.string()});
  CHECK(o.code == 0);
  CHECK(o.out == "psnr=inf ssim=1.000000\n");

  write_imgf(Image(Matrix(ref.pixels().array() + 0.1)), b);
  o = run({"eval", b.string(), a.string()});
  CHECK(o.out.rfind("psnr=20.000000 ", 0) == 0);

  write_imgf(random_image(5, 16, 12), b);
  CHECK(run({"eval", b.string(), a.string()}).code == cli::kExitUsage);
}

TEST_CASE("cli segment") {
  const auto in = temp_path("seg_in.imgf");
  const auto out = temp_path("seg_out.imgf");
  Matrix m(6, 9);
  for (Eigen::Index j = 0; j < 9; ++j) m.col(j).setConstant(0.2 + 0.3 * double(j / 3));
  write_imgf(Image(m), in);

  CHECK(run({"segment", in.string(), out.string(), "--k", "1"}).code == 0);
  CHECK(read_imgf(out).pixels().isZero(0.0));

  CHECK(run({"segment", in.string(), out.string(), "--k", "3"}).code == 0);
  const Matrix labels = read_imgf(out).pixels();
  for (Eigen::Index j = 0; j < 9; ++j) {
    CHECK(labels.col(j).isApproxToConstant(0.5 * double(j / 3), 0.0));
  }
  CHECK(run({"segment", in.string(), out.string(), "--k", "0"}).code == cli::kExitUsage);
}

TEST_CASE("cli binary reports exit codes to the shell") {
  const std::string exe = PATCHSR_CLI_PATH;
  const auto d = temp_path("bin.dict");
  CHECK(std::system((exe + " gendict " + d.string() + " --np 16 --nd 16 > /dev/null").c_str()) == 0);
  const int bad = std::system((exe + " eval /nonexistent/a /nonexistent/b 2> /dev/null").c_str());
  CHECK(WEXITSTATUS(bad) == 2);
}

TEST_CASE("cli sr reproduces the planted-signal run of the library") {
  const Dictionary dict = overcomplete_dct(256, 256);
  Matrix x0(32, 32);
  for (Eigen::Index c = 0; c < 32; ++c) {
    for (Eigen::Index r = 0; r < 32; ++r) {
      x0(r, c) = 1.0 + 0.6 * std::cos(M_PI * double(2 * r + 1) / 32.0) +
                 0.3 * std::cos(M_PI * double(2 * (2 * c + 1)) / 32.0);
    }
  }
  const auto hr = temp_path("pl_hr.imgf");
  const auto lr = temp_path("pl_lr.imgf");
  const auto d = temp_path("pl.dict");
  const auto out = temp_path("pl_out.imgf");
  write_imgf(Image(x0), hr);
  save_dictionary(dict, d);
  REQUIRE(run({"degrade", hr.string(), lr.string()}).code == 0);
  REQUIRE(run({"sr", lr.string(), d.string(), out.string(), "--penalty", "mcp", "--lambda", "0.03",
               "--stride", "4"})
              .code == 0);

  SrConfig cfg(dict, gaussian_psf(3, 0.85));
  cfg.penalty = PenaltyKind::MCP;
  cfg.lr_stride = 4;
  cfg.solver.lambda = 0.03;
  const SrResult lib = super_resolve(degrade(Image(x0), cfg.psf, 4, 0.0, 0), cfg);
  const Image cli_img = read_imgf(out);
  CHECK(cli_img == lib.image);
  CHECK((cli_img.pixels() - x0).norm() / x0.norm() <= 0.05);
}
